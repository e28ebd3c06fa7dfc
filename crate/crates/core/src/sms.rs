//! Finite SMS representation and structural checks.
//!
//! An SMS is specified either by one probability table over claim vectors
//! per step ("per-step" mode) or by an initial table plus a homogeneous
//! transition kernel over claim vectors ("kernel" mode). Kernel mode is
//! required for anything trajectory-dependent: backward-consistency, limit
//! distributions, and trajectory-conditioned responses.

use crate::claim::{Answer, ClaimVector, Question};
use crate::error::Error;
use crate::report::{CheckReport, Condition};
use crate::scalar::Prob;
use crate::Result;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A probability table over claim vectors: the declared support with
/// positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<P> {
    rows: Vec<(ClaimVector, P)>,
}

impl<P: Prob> Table<P> {
    pub fn new(rows: Vec<(ClaimVector, P)>) -> Self {
        Table { rows }
    }

    pub fn rows(&self) -> &[(ClaimVector, P)] {
        &self.rows
    }

    pub fn total(&self) -> P {
        self.rows.iter().map(|(_, p)| p.clone()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.total() == P::one()
    }
}

/// How the process law is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum Law<P> {
    /// One table per step, `steps[n-1]` for step `n`.
    PerStep { steps: Vec<Table<P>> },
    /// Initial table plus a homogeneous transition kernel.
    Kernel {
        init: Table<P>,
        kernel: BTreeMap<ClaimVector, Table<P>>,
    },
}

/// A finite SMS: alphabets, horizon, law, and an optional declared
/// backward-consistency threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct SmsSpec<P> {
    pub questions: BTreeSet<Question>,
    pub answers: BTreeSet<Answer>,
    pub horizon: u32,
    pub law: Law<P>,
    pub kappa: Option<u32>,
}

/// A single structural violation found by [`SmsSpec::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    TableNotNormalized { table: String, total: String },
    NonPositiveProbability { table: String, vector: String },
    DuplicateClaim { table: String, vector: String },
    UnknownQuestion { table: String, question: String },
    UnknownAnswer { table: String, answer: String },
    MissingKernelRow { vector: String },
    WrongStepCount { expected: u32, found: usize },
    ZeroHorizon,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TableNotNormalized { table, total } => {
                write!(f, "table {table} sums to {total}")
            }
            Violation::NonPositiveProbability { table, vector } => {
                write!(f, "table {table} assigns non-positive probability to {vector}")
            }
            Violation::DuplicateClaim { table, vector } => {
                write!(f, "table {table} contains duplicate claim in {vector}")
            }
            Violation::UnknownQuestion { table, question } => {
                write!(f, "table {table} references question {question} outside the alphabet")
            }
            Violation::UnknownAnswer { table, answer } => {
                write!(f, "table {table} references answer {answer} outside the alphabet")
            }
            Violation::MissingKernelRow { vector } => {
                write!(f, "kernel has no row for reachable vector {vector}")
            }
            Violation::WrongStepCount { expected, found } => {
                write!(f, "per-step law declares {found} tables for horizon {expected}")
            }
            Violation::ZeroHorizon => write!(f, "horizon must be positive"),
        }
    }
}

/// Result of structural validation; valid iff no violations.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<P: Prob> SmsSpec<P> {
    pub fn is_kernel(&self) -> bool {
        matches!(self.law, Law::Kernel { .. })
    }

    fn check_table(&self, name: &str, table: &Table<P>, out: &mut Vec<Violation>) {
        let total = table.total();
        if total != P::one() {
            out.push(Violation::TableNotNormalized {
                table: name.to_string(),
                total: total.to_string(),
            });
        }
        for (v, p) in table.rows() {
            if *p <= P::zero() {
                out.push(Violation::NonPositiveProbability {
                    table: name.to_string(),
                    vector: v.to_string(),
                });
            }
            let mut seen = BTreeSet::new();
            for c in v.claims() {
                if !seen.insert(c.clone()) {
                    out.push(Violation::DuplicateClaim {
                        table: name.to_string(),
                        vector: v.to_string(),
                    });
                }
                if !self.questions.contains(&c.question) {
                    out.push(Violation::UnknownQuestion {
                        table: name.to_string(),
                        question: c.question.to_string(),
                    });
                }
                if !self.answers.contains(&c.answer) {
                    out.push(Violation::UnknownAnswer {
                        table: name.to_string(),
                        answer: c.answer.to_string(),
                    });
                }
            }
        }
    }

    /// Lists every violated structural invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.horizon == 0 {
            violations.push(Violation::ZeroHorizon);
        }
        match &self.law {
            Law::PerStep { steps } => {
                if steps.len() != self.horizon as usize {
                    violations.push(Violation::WrongStepCount {
                        expected: self.horizon,
                        found: steps.len(),
                    });
                }
                for (i, t) in steps.iter().enumerate() {
                    self.check_table(&format!("step {}", i + 1), t, &mut violations);
                }
            }
            Law::Kernel { init, kernel } => {
                self.check_table("init", init, &mut violations);
                for (from, row) in kernel {
                    self.check_table(&format!("kernel[{from}]"), row, &mut violations);
                }
                // Every vector reachable from init or any row needs its own row.
                let mut reachable: BTreeSet<&ClaimVector> =
                    init.rows().iter().map(|(v, _)| v).collect();
                for row in kernel.values() {
                    reachable.extend(row.rows().iter().map(|(v, _)| v));
                }
                for v in reachable {
                    if !kernel.contains_key(v) {
                        violations.push(Violation::MissingKernelRow {
                            vector: v.to_string(),
                        });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    fn require_step(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.horizon {
            Err(Error::Horizon {
                step: n,
                horizon: self.horizon,
            })
        } else {
            Ok(())
        }
    }

    /// Marginal distribution over claim vectors at step `n` (1-based).
    pub fn marginal(&self, n: u32) -> Result<BTreeMap<ClaimVector, P>> {
        self.require_step(n)?;
        match &self.law {
            Law::PerStep { steps } => Ok(steps[(n - 1) as usize]
                .rows()
                .iter()
                .cloned()
                .collect()),
            Law::Kernel { init, kernel } => {
                let mut m: BTreeMap<ClaimVector, P> =
                    init.rows().iter().cloned().collect();
                for _ in 1..n {
                    m = push_forward(&m, kernel)?;
                }
                Ok(m)
            }
        }
    }

    /// Marginals for steps `1..=n` in one pass.
    pub fn marginals_through(&self, n: u32) -> Result<Vec<BTreeMap<ClaimVector, P>>> {
        self.require_step(n)?;
        match &self.law {
            Law::PerStep { steps } => Ok(steps[..n as usize]
                .iter()
                .map(|t| t.rows().iter().cloned().collect())
                .collect()),
            Law::Kernel { init, kernel } => {
                let mut out = Vec::with_capacity(n as usize);
                let mut m: BTreeMap<ClaimVector, P> =
                    init.rows().iter().cloned().collect();
                out.push(m.clone());
                for _ in 1..n {
                    m = push_forward(&m, kernel)?;
                    out.push(m.clone());
                }
                Ok(out)
            }
        }
    }

    /// True iff, at every step strictly greater than `k`, every vector with
    /// positive probability repeats no question.
    pub fn check_nonrepeating(&self, k: u32) -> Result<CheckReport> {
        if k > self.horizon {
            return Err(Error::Horizon {
                step: k,
                horizon: self.horizon,
            });
        }
        let mut conditions = Vec::new();
        if k == self.horizon {
            conditions.push(Condition::ok_with(
                "no steps after k",
                format!("k = horizon = {k}; vacuously non-repeating"),
            ));
        }
        let marginals = self.marginals_through(self.horizon)?;
        for (idx, m) in marginals.iter().enumerate() {
            let step = idx as u32 + 1;
            if step <= k {
                continue;
            }
            match m.keys().find(|v| !v.is_nonrepeating()) {
                Some(v) => {
                    conditions.push(Condition::fail(
                        format!("step {step} non-repeating"),
                        format!("vector {v} repeats a question"),
                    ));
                }
                None => conditions.push(Condition::ok(format!("step {step} non-repeating"))),
            }
        }
        Ok(CheckReport::assemble("non-repeating", conditions, None))
    }

    /// Backward-consistency after step `kappa`, decided over all
    /// positive-probability trajectories up to the horizon.
    ///
    /// Subset inclusion is transitive, so the trajectory condition holds iff
    /// every positive-probability transition leaving a step `> kappa`
    /// preserves the unordered claim set. On failure the report carries a
    /// full positive-probability witness trajectory.
    pub fn check_backward_consistent(&self, kappa: u32) -> Result<CheckReport> {
        let Law::Kernel { init, kernel } = &self.law else {
            return Err(Error::UnsupportedMode { needed: "kernel" });
        };
        if kappa >= self.horizon {
            return Err(Error::Horizon {
                step: kappa,
                horizon: self.horizon,
            });
        }

        // parents[step][vector] = a predecessor at the previous step, for
        // witness reconstruction. Step index is 1-based.
        let mut reachable: Vec<BTreeMap<ClaimVector, Option<ClaimVector>>> = Vec::new();
        let mut first: BTreeMap<ClaimVector, Option<ClaimVector>> = BTreeMap::new();
        for (v, _) in init.rows() {
            first.insert(v.clone(), None);
        }
        reachable.push(first);
        for _ in 1..self.horizon {
            let prev = reachable.last().unwrap();
            let mut next: BTreeMap<ClaimVector, Option<ClaimVector>> = BTreeMap::new();
            for from in prev.keys() {
                let row = kernel.get(from).ok_or_else(|| {
                    Error::Structural(format!("kernel has no row for {from}"))
                })?;
                for (to, _) in row.rows() {
                    next.entry(to.clone()).or_insert_with(|| Some(from.clone()));
                }
            }
            reachable.push(next);
        }

        let mut conditions = Vec::new();
        let mut witness: Option<String> = None;
        'scan: for step in (kappa + 1)..self.horizon {
            let here = &reachable[(step - 1) as usize];
            for from in here.keys() {
                let row = kernel
                    .get(from)
                    .expect("reachable vector checked above");
                for (to, _) in row.rows() {
                    if !from.unorder().is_subset(&to.unorder()) {
                        let mut path = vec![to.clone(), from.clone()];
                        let mut cursor = (step, from.clone());
                        while cursor.0 > 1 {
                            let parent = reachable[(cursor.0 - 1) as usize]
                                .get(&cursor.1)
                                .cloned()
                                .flatten()
                                .expect("non-initial reachable vector has a parent");
                            path.push(parent.clone());
                            cursor = (cursor.0 - 1, parent);
                        }
                        path.reverse();
                        let rendered: Vec<String> =
                            path.iter().map(|v| v.to_string()).collect();
                        witness = Some(format!(
                            "trajectory ({}) drops a claim at step {}",
                            rendered.join(" -> "),
                            step + 1
                        ));
                        break 'scan;
                    }
                }
            }
        }

        match witness {
            Some(w) => conditions.push(Condition::fail("claim sets non-decreasing", w)),
            None => conditions.push(Condition::ok_with(
                "claim sets non-decreasing",
                format!("verified up to horizon {}", self.horizon),
            )),
        }
        Ok(CheckReport::assemble("backward-consistent", conditions, None))
    }

    /// Backward-consistency threshold used by limit computations: the
    /// declared kappa, defaulting to 0.
    pub fn effective_kappa(&self) -> u32 {
        self.kappa.unwrap_or(0)
    }
}

fn push_forward<P: Prob>(
    m: &BTreeMap<ClaimVector, P>,
    kernel: &BTreeMap<ClaimVector, Table<P>>,
) -> Result<BTreeMap<ClaimVector, P>> {
    let mut next: BTreeMap<ClaimVector, P> = BTreeMap::new();
    for (from, w) in m {
        let row = kernel
            .get(from)
            .ok_or_else(|| Error::Structural(format!("kernel has no row for {from}")))?;
        for (to, p) in row.rows() {
            let add = w.clone() * p.clone();
            next.entry(to.clone())
                .and_modify(|acc| *acc = acc.clone() + add.clone())
                .or_insert(add);
        }
    }
    Ok(next)
}

/// Builder for kernel-mode specs in tests and fixtures.
pub fn kernel_spec<P: Prob>(
    questions: &[&str],
    answers: &[&str],
    horizon: u32,
    init: Vec<(ClaimVector, P)>,
    kernel_rows: Vec<(ClaimVector, Vec<(ClaimVector, P)>)>,
    kappa: Option<u32>,
) -> SmsSpec<P> {
    SmsSpec {
        questions: questions.iter().map(|q| Question::new(*q)).collect(),
        answers: answers.iter().map(|a| Answer::new(*a)).collect(),
        horizon,
        law: Law::Kernel {
            init: Table::new(init),
            kernel: kernel_rows
                .into_iter()
                .map(|(from, rows)| (from, Table::new(rows)))
                .collect(),
        },
        kappa,
    }
}

/// Builder for per-step specs in tests and fixtures.
pub fn per_step_spec<P: Prob>(
    questions: &[&str],
    answers: &[&str],
    steps: Vec<Vec<(ClaimVector, P)>>,
    kappa: Option<u32>,
) -> SmsSpec<P> {
    SmsSpec {
        questions: questions.iter().map(|q| Question::new(*q)).collect(),
        answers: answers.iter().map(|a| Answer::new(*a)).collect(),
        horizon: steps.len() as u32,
        law: Law::PerStep {
            steps: steps.into_iter().map(Table::new).collect(),
        },
        kappa,
    }
}

/// A trajectory prefix `(C^1, ..., C^{n-1})` for trajectory-conditioned
/// queries. May be empty, in which case queries address step 1.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrajectoryPrefix(pub Vec<ClaimVector>);

impl TrajectoryPrefix {
    pub fn validate_against<P: Prob>(&self, spec: &SmsSpec<P>) -> Result<()> {
        if self.0.len() as u32 >= spec.horizon {
            return Err(Error::Horizon {
                step: self.0.len() as u32 + 1,
                horizon: spec.horizon,
            });
        }
        Ok(())
    }
}

/// Fully enumerates positive-probability trajectories of a kernel spec up
/// to `to_step`, with their probabilities. Exponential; intended for small
/// fixtures and as an independent oracle in tests.
pub fn enumerate_trajectories<P: Prob>(
    spec: &SmsSpec<P>,
    to_step: u32,
) -> Result<Vec<(Vec<ClaimVector>, P)>> {
    let Law::Kernel { init, kernel } = &spec.law else {
        return Err(Error::UnsupportedMode { needed: "kernel" });
    };
    let mut paths: Vec<(Vec<ClaimVector>, P)> = init
        .rows()
        .iter()
        .map(|(v, p)| (vec![v.clone()], p.clone()))
        .collect();
    for _ in 1..to_step {
        let mut next = Vec::new();
        for (path, w) in &paths {
            let last = path.last().unwrap();
            let row = kernel
                .get(last)
                .ok_or_else(|| Error::Structural(format!("kernel has no row for {last}")))?;
            for (to, p) in row.rows() {
                let mut extended = path.clone();
                extended.push(to.clone());
                next.push((extended, w.clone() * p.clone()));
            }
        }
        paths = next;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claim::{claim_vector, Claim, ClaimSet};
    use crate::fixtures;
    use crate::Exact;
    use num_traits::{One, Zero};

    #[test]
    fn validate_accepts_normalized_fixture() {
        assert!(fixtures::fix_b().validate().is_valid());
        assert!(fixtures::fix_a().validate().is_valid());
    }

    #[test]
    fn validate_reports_bad_total() {
        let spec = per_step_spec::<Exact>(
            &["qa"],
            &["0", "1"],
            vec![vec![
                (claim_vector(&[("qa", "0")]), Exact::ratio(1, 2)),
                (claim_vector(&[("qa", "1")]), Exact::ratio(1, 3)),
            ]],
            None,
        );
        let report = spec.validate();
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.to_string().contains("sums to 5/6")));
    }

    #[test]
    fn validate_reports_duplicate_claim() {
        let illegal =
            ClaimVector::from_raw(vec![Claim::new("qa", "0"), Claim::new("qa", "0")]);
        let spec = per_step_spec::<Exact>(
            &["qa"],
            &["0", "1"],
            vec![vec![(illegal, Exact::one())]],
            None,
        );
        let report = spec.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DuplicateClaim { .. })));
    }

    #[test]
    fn nonrepeating_detects_explicit_repeat() {
        let spec = per_step_spec::<Exact>(
            &["qa"],
            &["0", "1"],
            vec![
                vec![(claim_vector(&[("qa", "0"), ("qa", "1")]), Exact::one())],
                vec![(claim_vector(&[("qa", "0")]), Exact::one())],
            ],
            None,
        );
        let r0 = spec.check_nonrepeating(0).unwrap();
        assert_eq!(r0.verdict, crate::Verdict::PreconditionFailed);
        // Repeats only at step 1: k = 1 passes.
        let r1 = spec.check_nonrepeating(1).unwrap();
        assert!(r1.is_verified());
        assert!(spec.check_nonrepeating(3).is_err());
    }

    #[test]
    fn fix_a_is_nonrepeating_and_backward_consistent() {
        let spec = fixtures::fix_a();
        assert!(spec.check_nonrepeating(0).unwrap().is_verified());
        assert!(spec.check_backward_consistent(0).unwrap().is_verified());
    }

    #[test]
    fn dropping_kernel_fails_with_witness_trajectory() {
        // Grows for two steps, then drops back to its start vector.
        let a = claim_vector(&[("qa", "0")]);
        let b = claim_vector(&[("qa", "0"), ("qb", "0")]);
        let spec = kernel_spec::<Exact>(
            &["qa", "qb"],
            &["0"],
            4,
            vec![(a.clone(), Exact::one())],
            vec![
                (a.clone(), vec![(b.clone(), Exact::one())]),
                (b.clone(), vec![(a.clone(), Exact::one())]),
            ],
            None,
        );
        let report = spec.check_backward_consistent(0).unwrap();
        assert_eq!(report.verdict, crate::Verdict::PreconditionFailed);
        let witness = report.preconditions[0].witness.clone().unwrap();
        assert!(witness.contains("->"), "witness should be a trajectory: {witness}");

        // Oscillation a -> b -> a: drops happen leaving even steps. With
        // kappa = 1 the step-2 drop is still in scope; with kappa = 2 only
        // the growing step-3 transition remains, so the check passes.
        let r1 = spec.check_backward_consistent(1).unwrap();
        assert_eq!(r1.verdict, crate::Verdict::PreconditionFailed);
        let r2 = spec.check_backward_consistent(2).unwrap();
        assert!(r2.is_verified());
    }

    #[test]
    fn kappa_masks_early_drops() {
        // Drops a claim when leaving step 1, then holds forever.
        let big = claim_vector(&[("qa", "0"), ("qb", "0")]);
        let small = claim_vector(&[("qa", "0")]);
        let spec = kernel_spec::<Exact>(
            &["qa", "qb"],
            &["0"],
            5,
            vec![(big.clone(), Exact::one())],
            vec![
                (big.clone(), vec![(small.clone(), Exact::one())]),
                (small.clone(), vec![(small.clone(), Exact::one())]),
            ],
            None,
        );
        assert_eq!(
            spec.check_backward_consistent(0).unwrap().verdict,
            crate::Verdict::PreconditionFailed
        );
        assert!(spec.check_backward_consistent(1).unwrap().is_verified());
    }

    /// Independent oracle: decide backward-consistency by enumerating every
    /// positive-probability trajectory and testing the subset condition
    /// pairwise, then compare with the transition-local check.
    #[test]
    fn transition_check_matches_trajectory_oracle() {
        let specs = vec![
            fixtures::fix_a(),
            fixtures::fix_absorbing(),
            dropping_spec(),
        ];
        for spec in specs {
            for kappa in 0..spec.horizon.saturating_sub(1) {
                let fast = spec.check_backward_consistent(kappa).unwrap().is_verified();
                let slow = oracle_backward_consistent(&spec, kappa);
                assert_eq!(fast, slow, "kappa={kappa}");
            }
        }
    }

    fn dropping_spec() -> SmsSpec<Exact> {
        let a = claim_vector(&[("qa", "0")]);
        let b = claim_vector(&[("qa", "0"), ("qb", "0")]);
        kernel_spec(
            &["qa", "qb"],
            &["0"],
            4,
            vec![(a.clone(), Exact::ratio(1, 2)), (b.clone(), Exact::ratio(1, 2))],
            vec![
                (a.clone(), vec![(b.clone(), Exact::one())]),
                (
                    b.clone(),
                    vec![(a.clone(), Exact::ratio(1, 3)), (b.clone(), Exact::ratio(2, 3))],
                ),
            ],
            None,
        )
    }

    fn oracle_backward_consistent(spec: &SmsSpec<Exact>, kappa: u32) -> bool {
        let trajectories = enumerate_trajectories(spec, spec.horizon).unwrap();
        for (path, p) in trajectories {
            if p == Exact::zero() {
                continue;
            }
            let sets: Vec<ClaimSet> = path.iter().map(|v| v.unorder()).collect();
            for j in 0..sets.len() {
                for i in 0..=j {
                    let step_i = i as u32 + 1;
                    if step_i > kappa && !sets[i].is_subset(&sets[j]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn marginals_match_trajectory_enumeration() {
        let spec = fixtures::fix_absorbing();
        for n in 1..=spec.horizon {
            let direct = spec.marginal(n).unwrap();
            let mut from_paths: BTreeMap<ClaimVector, Exact> = BTreeMap::new();
            for (path, p) in enumerate_trajectories(&spec, n).unwrap() {
                let last = path.last().unwrap().clone();
                from_paths
                    .entry(last)
                    .and_modify(|acc| *acc = acc.clone() + p.clone())
                    .or_insert(p);
            }
            assert_eq!(direct, from_paths, "step {n}");
        }
    }
}
