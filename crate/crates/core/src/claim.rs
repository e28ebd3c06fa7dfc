//! Claims, claim vectors, claim sets, and the un-ordering map.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A question identifier drawn from a declared finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Question(pub String);

/// An answer identifier drawn from a declared finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Answer(pub String);

impl Question {
    pub fn new(id: impl Into<String>) -> Self {
        Question(id.into())
    }
}

impl Answer {
    pub fn new(id: impl Into<String>) -> Self {
        Answer(id.into())
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A (question, answer) pair.
///
/// Ordering is lexicographic by question then answer, which fixes the
/// canonical serialization order of claim sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Claim {
    pub question: Question,
    pub answer: Answer,
}

impl Claim {
    pub fn new(question: impl Into<String>, answer: impl Into<String>) -> Self {
        Claim {
            question: Question::new(question),
            answer: Answer::new(answer),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.question, self.answer)
    }
}

/// An ordered, non-empty sequence of claims with no duplicate identical
/// claims. Two claims may share a question (a "repeating" vector) as long as
/// their answers differ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClaimVector(Vec<Claim>);

/// Violations detected when constructing a claim vector.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("claim vector must be non-empty")]
    Empty,
    #[error("claim vector contains duplicate claim {0}")]
    Duplicate(Claim),
}

impl ClaimVector {
    /// Builds a vector without invariant checks. Parsed scenario data flows
    /// through here so that `SmsSpec::validate` can report the violations.
    pub fn from_raw(claims: Vec<Claim>) -> Self {
        ClaimVector(claims)
    }

    pub fn new(claims: Vec<Claim>) -> Result<Self, VectorError> {
        if claims.is_empty() {
            return Err(VectorError::Empty);
        }
        let mut seen = BTreeSet::new();
        for c in &claims {
            if !seen.insert(c.clone()) {
                return Err(VectorError::Duplicate(c.clone()));
            }
        }
        Ok(ClaimVector(claims))
    }

    pub fn claims(&self) -> &[Claim] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when no two claims share a question.
    pub fn is_nonrepeating(&self) -> bool {
        let mut qs = BTreeSet::new();
        self.0.iter().all(|c| qs.insert(&c.question))
    }

    /// The un-ordering map: forgets sequence order, keeping the set of
    /// component claims.
    pub fn unorder(&self) -> ClaimSet {
        ClaimSet(self.0.iter().cloned().collect())
    }
}

impl fmt::Display for ClaimVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// An unordered finite set of claims. The empty set is legal and acts as the
/// trivial conditioning event.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClaimSet(BTreeSet<Claim>);

impl ClaimSet {
    pub fn empty() -> Self {
        ClaimSet(BTreeSet::new())
    }

    pub fn from_claims(claims: impl IntoIterator<Item = Claim>) -> Self {
        ClaimSet(claims.into_iter().collect())
    }

    pub fn insert(&mut self, claim: Claim) {
        self.0.insert(claim);
    }

    pub fn with(&self, claim: Claim) -> Self {
        let mut s = self.clone();
        s.insert(claim);
        s
    }

    /// Union of `self` and `other`.
    pub fn union(&self, other: &ClaimSet) -> Self {
        ClaimSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn contains(&self, claim: &Claim) -> bool {
        self.0.contains(claim)
    }

    pub fn is_subset(&self, other: &ClaimSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Claims in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = &Claim> {
        self.0.iter()
    }

    /// True when some claim asks `q`.
    pub fn asks(&self, q: &Question) -> bool {
        self.0.iter().any(|c| &c.question == q)
    }

    /// All answers given to `q` within this set.
    pub fn answers_to(&self, q: &Question) -> Vec<&Answer> {
        self.0
            .iter()
            .filter(|c| &c.question == q)
            .map(|c| &c.answer)
            .collect()
    }

    /// Every subset of this set, including the empty set.
    pub fn subsets(&self) -> Vec<ClaimSet> {
        let claims: Vec<&Claim> = self.0.iter().collect();
        let n = claims.len();
        assert!(n < 24, "subset enumeration of oversized claim set");
        (0u32..(1 << n))
            .map(|mask| {
                ClaimSet(
                    claims
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, c)| (*c).clone())
                        .collect(),
                )
            })
            .collect()
    }

    /// Canonical vector listing of this set; fails on the empty set.
    pub fn to_vector(&self) -> Result<ClaimVector, VectorError> {
        ClaimVector::new(self.0.iter().cloned().collect())
    }
}

impl FromIterator<Claim> for ClaimSet {
    fn from_iter<T: IntoIterator<Item = Claim>>(iter: T) -> Self {
        ClaimSet(iter.into_iter().collect())
    }
}

impl fmt::Display for ClaimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Convenience constructor for a claim set literal.
pub fn claim_set(pairs: &[(&str, &str)]) -> ClaimSet {
    ClaimSet::from_claims(pairs.iter().map(|(q, a)| Claim::new(*q, *a)))
}

/// Convenience constructor for a claim vector literal.
pub fn claim_vector(pairs: &[(&str, &str)]) -> ClaimVector {
    ClaimVector::new(pairs.iter().map(|(q, a)| Claim::new(*q, *a)).collect())
        .expect("invalid claim vector literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unorder_erases_order_and_keeps_components() {
        let v = claim_vector(&[("qa", "0"), ("qb", "1")]);
        let s = v.unorder();
        assert_eq!(s, claim_set(&[("qa", "0"), ("qb", "1")]));
        assert_eq!(s.len(), v.len());

        let singleton = claim_vector(&[("qa", "0")]);
        assert_eq!(singleton.unorder(), claim_set(&[("qa", "0")]));

        let swapped = claim_vector(&[("qb", "1"), ("qa", "0")]);
        assert_eq!(swapped.unorder(), s);
    }

    #[test]
    fn vector_invariants() {
        assert_eq!(ClaimVector::new(vec![]), Err(VectorError::Empty));
        let dup = ClaimVector::new(vec![Claim::new("qa", "0"), Claim::new("qa", "0")]);
        assert!(matches!(dup, Err(VectorError::Duplicate(_))));
        // Repeating a question with a different answer is allowed.
        let rep = claim_vector(&[("qa", "0"), ("qa", "1")]);
        assert!(!rep.is_nonrepeating());
        assert_eq!(rep.unorder().len(), 2);
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let s = claim_set(&[("qa", "0"), ("qb", "1")]);
        let subs = s.subsets();
        assert_eq!(subs.len(), 4);
        assert!(subs.contains(&ClaimSet::empty()));
        assert!(subs.contains(&s));
    }
}
