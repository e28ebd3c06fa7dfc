//! Structured verdicts for definition and proposition checks.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Outcome of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every precondition held and the conclusion held.
    Verified,
    /// Some precondition failed; the conclusion is not asserted.
    PreconditionFailed,
    /// Every precondition held and the conclusion definitely failed.
    Refuted,
    /// A limit bracket was too loose to decide the conclusion (or a
    /// precondition) either way at the declared horizon.
    IndeterminateAtHorizon,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Verified => "verified",
            Verdict::PreconditionFailed => "precondition-failed",
            Verdict::Refuted => "refuted",
            Verdict::IndeterminateAtHorizon => "indeterminate-at-horizon",
        };
        f.write_str(s)
    }
}

/// One tested hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    /// `None` means the bracket arithmetic could not decide the condition.
    pub holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Condition {
    pub fn ok(label: impl Into<String>) -> Self {
        Condition {
            label: label.into(),
            holds: Some(true),
            witness: None,
        }
    }

    pub fn ok_with(label: impl Into<String>, witness: impl Into<String>) -> Self {
        Condition {
            label: label.into(),
            holds: Some(true),
            witness: Some(witness.into()),
        }
    }

    pub fn fail(label: impl Into<String>, witness: impl Into<String>) -> Self {
        Condition {
            label: label.into(),
            holds: Some(false),
            witness: Some(witness.into()),
        }
    }

    pub fn undecided(label: impl Into<String>, witness: impl Into<String>) -> Self {
        Condition {
            label: label.into(),
            holds: None,
            witness: Some(witness.into()),
        }
    }

    pub fn from_bool(label: impl Into<String>, holds: bool, witness: impl Into<String>) -> Self {
        Condition {
            label: label.into(),
            holds: Some(holds),
            witness: Some(witness.into()),
        }
    }
}

/// The conclusion of a proposition-style check, with both compared sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    /// `None` when brackets were too loose to decide.
    pub holds: Option<bool>,
    pub lhs: String,
    pub rhs: String,
    pub margin: String,
}

/// Structured verdict for a definition or proposition check.
///
/// `verdict` is `Refuted` only when every precondition holds and the
/// conclusion fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub preconditions: Vec<Condition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<Conclusion>,
    pub verdict: Verdict,
}

impl CheckReport {
    /// Assembles a report, deriving the verdict from preconditions and the
    /// optional conclusion.
    pub fn assemble(
        name: impl Into<String>,
        preconditions: Vec<Condition>,
        conclusion: Option<Conclusion>,
    ) -> Self {
        let any_failed = preconditions.iter().any(|c| c.holds == Some(false));
        let any_undecided = preconditions.iter().any(|c| c.holds.is_none());
        let verdict = if any_failed {
            Verdict::PreconditionFailed
        } else if any_undecided {
            Verdict::IndeterminateAtHorizon
        } else {
            match &conclusion {
                None => Verdict::Verified,
                Some(c) => match c.holds {
                    Some(true) => Verdict::Verified,
                    Some(false) => Verdict::Refuted,
                    None => Verdict::IndeterminateAtHorizon,
                },
            }
        };
        CheckReport {
            name: name.into(),
            preconditions,
            conclusion,
            verdict,
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }

    /// One-line textual rendering: verdict plus failing labels.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}", self.name, self.verdict);
        let failing: Vec<&str> = self
            .preconditions
            .iter()
            .filter(|c| c.holds != Some(true))
            .map(|c| c.label.as_str())
            .collect();
        if !failing.is_empty() {
            s.push_str(&format!(" [{}]", failing.join(", ")));
        }
        s
    }
}
