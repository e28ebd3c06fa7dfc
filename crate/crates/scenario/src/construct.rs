//! Seeded constructors for scenarios whose hypothesis checks all pass at
//! epsilon = 0, one per supported proposition check.
//!
//! Every constructor builds the interpretation maps from the exact oracle
//! or universe conditionals, injects strict evidence or lift structure, and
//! uses absorbing kernels so every limit quantity is exact. The returned
//! metadata records the injected lift factor where one exists, so the
//! acceptance suite can compare it against the verifier's reported lift.

use crate::schema::{CheckRequest, Scenario};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smslab_core::calibration::{PsiInterp, PsiMap};
use smslab_core::claim::{Answer, Claim, ClaimSet, ClaimVector, Question};
use smslab_core::dist::Dist;
use smslab_core::divergence::DivergenceKind;
use smslab_core::embedding::EmbeddingMap;
use smslab_core::sms::{Law, SmsSpec, Table};
use smslab_core::{Exact, Prob, Sms};
use std::collections::BTreeMap;
use std::fmt;

/// Supported proposition identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropId {
    P73,
    P74,
    P75,
    P81,
    P82,
    P83,
    Projection,
}

impl PropId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "p73" => Some(PropId::P73),
            "p74" => Some(PropId::P74),
            "p75" => Some(PropId::P75),
            "p81" => Some(PropId::P81),
            "p82" => Some(PropId::P82),
            "p83" => Some(PropId::P83),
            "projection" => Some(PropId::Projection),
            _ => None,
        }
    }

    pub fn all() -> [PropId; 7] {
        [
            PropId::P73,
            PropId::P74,
            PropId::P75,
            PropId::P81,
            PropId::P82,
            PropId::P83,
            PropId::Projection,
        ]
    }
}

impl fmt::Display for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PropId::P73 => "p73",
            PropId::P74 => "p74",
            PropId::P75 => "p75",
            PropId::P81 => "p81",
            PropId::P82 => "p82",
            PropId::P83 => "p83",
            PropId::Projection => "projection",
        };
        f.write_str(s)
    }
}

/// A constructed scenario plus the quantities injected into it.
#[derive(Clone, Debug)]
pub struct Constructed {
    pub scenario: Scenario,
    /// Lift factor built into the joint table, for the abduction variants.
    pub injected_alpha: Option<Exact>,
}

/// Builds a scenario for `prop` whose hypothesis checks all pass with
/// epsilon = 0, deterministically from `seed`.
pub fn construct_eps0(prop: PropId, seed: u64) -> Constructed {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x5eed_0000 + prop_tag(prop)));
    match prop {
        PropId::P73 => construct_p73(&mut rng),
        PropId::P74 => construct_p74(&mut rng),
        PropId::P75 => construct_p75(&mut rng),
        PropId::P81 => construct_abduction(&mut rng, AbductionVariant::Oracle),
        PropId::P82 => construct_abduction(&mut rng, AbductionVariant::Expect),
        PropId::P83 => construct_abduction(&mut rng, AbductionVariant::Project),
        PropId::Projection => construct_projection(&mut rng),
    }
}

fn prop_tag(prop: PropId) -> u64 {
    match prop {
        PropId::P73 => 1,
        PropId::P74 => 2,
        PropId::P75 => 3,
        PropId::P81 => 4,
        PropId::P82 => 5,
        PropId::P83 => 6,
        PropId::Projection => 7,
    }
}

pub(crate) fn rat(n: i64, d: i64) -> Exact {
    Exact::ratio(n, d)
}

pub(crate) fn pick(rng: &mut ChaCha8Rng, options: &[(i64, i64)]) -> Exact {
    let (n, d) = options[rng.gen_range(0..options.len())];
    rat(n, d)
}

pub(crate) fn bern(p: &Exact) -> Dist<Vec<Answer>, Exact> {
    let mut entries = BTreeMap::new();
    entries.insert(vec![Answer::new("1")], p.clone());
    entries.insert(vec![Answer::new("0")], Exact::ratio(1, 1) - p.clone());
    Dist::new(entries, true)
}

/// Kernel spec that emits `rows` at step 1 and holds every vector forever.
pub(crate) fn hold_kernel(questions: &[&str], answers: &[String], rows: Vec<(ClaimVector, Exact)>) -> Sms {
    let kernel: BTreeMap<ClaimVector, Table<Exact>> = rows
        .iter()
        .map(|(v, _)| {
            (
                v.clone(),
                Table::new(vec![(v.clone(), Exact::ratio(1, 1))]),
            )
        })
        .collect();
    SmsSpec {
        questions: questions.iter().map(|q| Question::new(*q)).collect(),
        answers: answers.iter().map(|a| Answer::new(a.clone())).collect(),
        horizon: 3,
        law: Law::Kernel {
            init: Table::new(rows),
            kernel,
        },
        kappa: Some(0),
    }
}

pub(crate) fn per_step(questions: &[&str], answers: &[String], rows: Vec<(ClaimVector, Exact)>) -> Sms {
    SmsSpec {
        questions: questions.iter().map(|q| Question::new(*q)).collect(),
        answers: answers.iter().map(|a| Answer::new(a.clone())).collect(),
        horizon: 1,
        law: Law::PerStep {
            steps: vec![Table::new(rows)],
        },
        kappa: None,
    }
}

pub(crate) fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub(crate) fn vector(claims: Vec<Claim>) -> ClaimVector {
    ClaimVector::new(claims).expect("constructor vectors are valid")
}

// ---------------------------------------------------------------------------
// Evidence tables over (target answer, path pattern)
// ---------------------------------------------------------------------------

/// Joint weights over (a, pattern) with two paths, conditionally
/// independent given the target answer and with strict per-path lifts.
pub(crate) struct PathTable {
    /// `rho[a][s1][s2]`
    rho: [[[Exact; 2]; 2]; 2],
}

impl PathTable {
    pub(crate) fn random(rng: &mut ChaCha8Rng) -> Self {
        let mu1 = pick(rng, &[(1, 3), (2, 5), (1, 2), (3, 5), (2, 3)]);
        let mu0 = Exact::ratio(1, 1) - mu1.clone();
        let mut g = [[Exact::ratio(0, 1), Exact::ratio(0, 1)], [Exact::ratio(0, 1), Exact::ratio(0, 1)]];
        for i in 0..2 {
            let hi = pick(rng, &[(3, 5), (2, 3), (7, 10), (3, 4)]);
            let lo = pick(rng, &[(1, 4), (3, 10), (1, 3), (2, 5)]);
            g[i] = [lo, hi]; // g[i][a] = P(path i present | a)
        }
        let mut rho: [[[Exact; 2]; 2]; 2] = Default::default();
        for a in 0..2 {
            let mu = if a == 1 { mu1.clone() } else { mu0.clone() };
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let p1 = if s1 == 1 {
                        g[0][a].clone()
                    } else {
                        Exact::ratio(1, 1) - g[0][a].clone()
                    };
                    let p2 = if s2 == 1 {
                        g[1][a].clone()
                    } else {
                        Exact::ratio(1, 1) - g[1][a].clone()
                    };
                    rho[a][s1][s2] = mu.clone() * p1 * p2;
                }
            }
        }
        PathTable { rho }
    }

    /// Fully random variant: no lift structure is guaranteed.
    pub(crate) fn random_unconstrained(rng: &mut ChaCha8Rng) -> Self {
        let mut rho: [[[Exact; 2]; 2]; 2] = Default::default();
        let mut total = 0i64;
        let mut weights = [[[0i64; 2]; 2]; 2];
        for a in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let w = rng.gen_range(1..=12i64);
                    weights[a][s1][s2] = w;
                    total += w;
                }
            }
        }
        for a in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    rho[a][s1][s2] = rat(weights[a][s1][s2], total);
                }
            }
        }
        PathTable { rho }
    }

    /// Oracle target conditional given that the pattern covers `need`
    /// (indexed by path).
    pub(crate) fn target_given(&self, need: [bool; 2]) -> Exact {
        let mut num = Exact::ratio(0, 1);
        let mut den = Exact::ratio(0, 1);
        for a in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    if (need[0] && s1 == 0) || (need[1] && s2 == 0) {
                        continue;
                    }
                    let p = self.rho[a][s1][s2].clone();
                    if a == 1 {
                        num += p.clone();
                    }
                    den += p;
                }
            }
        }
        num / den
    }

    /// Marginal pattern probability.
    pub(crate) fn pattern_prob(&self, s1: usize, s2: usize) -> Exact {
        self.rho[0][s1][s2].clone() + self.rho[1][s1][s2].clone()
    }

    /// Target conditional given the exact pattern.
    pub(crate) fn target_exact(&self, s1: usize, s2: usize) -> Exact {
        self.rho[1][s1][s2].clone() / self.pattern_prob(s1, s2)
    }

    /// Universe rows: `[(qf,1)] + pattern claims + [(qt,a)]`.
    pub(crate) fn universe_rows(&self) -> Vec<(ClaimVector, Exact)> {
        let mut rows = Vec::new();
        for a in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let mut claims = vec![Claim::new("qf", "1")];
                    if s1 == 1 {
                        claims.push(Claim::new("qb1", "1"));
                    }
                    if s2 == 1 {
                        claims.push(Claim::new("qb2", "1"));
                    }
                    claims.push(Claim::new("qt", if a == 1 { "1" } else { "0" }));
                    rows.push((vector(claims), self.rho[a][s1][s2].clone()));
                }
            }
        }
        rows
    }

    /// The oracle chain values `t(empty), t({1}), t({2}), t({1,2})`.
    pub(crate) fn chain_values(&self) -> [Exact; 4] {
        [
            self.target_given([false, false]),
            self.target_given([true, false]),
            self.target_given([false, true]),
            self.target_given([true, true]),
        ]
    }

}

pub(crate) const P7X_QUESTIONS: [&str; 5] = ["qf", "qb1", "qb2", "qp", "qt"];

pub(crate) fn p73_check() -> CheckRequest {
    CheckRequest::P73 {
        question: "qp".into(),
        beta: vec![("qf".into(), "1".into())],
        paths: vec![
            vec![("qb1".into(), "1".into())],
            vec![("qb2".into(), "1".into())],
        ],
        target: "1".into(),
    }
}

/// Scientist over evidence patterns answering the prediction question with
/// a two-point code whose mixture reproduces the targets exactly via the
/// tower property.
pub(crate) fn tower_scientist(
    table: &PathTable,
    targets: &dyn Fn(usize, usize) -> Exact, // tau for the full pattern (s1, s2)
) -> Vec<(ClaimVector, Exact)> {
    let mut rows = Vec::new();
    for s1 in 0..2 {
        for s2 in 0..2 {
            let lambda = table.pattern_prob(s1, s2);
            let tau = targets(s1, s2);
            for (code, w) in [
                ("1", tau.clone()),
                ("0", Exact::ratio(1, 1) - tau.clone()),
            ] {
                if w == Exact::ratio(0, 1) {
                    continue;
                }
                let mut claims = vec![Claim::new("qf", "1")];
                if s1 == 1 {
                    claims.push(Claim::new("qb1", "1"));
                }
                if s2 == 1 {
                    claims.push(Claim::new("qb2", "1"));
                }
                claims.push(Claim::new("qp", code));
                rows.push((vector(claims), lambda.clone() * w));
            }
        }
    }
    rows
}

fn construct_p73(rng: &mut ChaCha8Rng) -> Constructed {
    let table = PathTable::random(rng);
    let universe = hold_kernel(&P7X_QUESTIONS, &strings(&["0", "1"]), table.universe_rows());

    // Interpretation anchors strictly below and above every exact-pattern
    // target value; the mixture weights then reproduce every superset
    // conditional by the tower property.
    let mut exact_values = Vec::new();
    for s1 in 0..2 {
        for s2 in 0..2 {
            exact_values.push(table.target_exact(s1, s2));
        }
    }
    let t_min = exact_values.iter().min().unwrap().clone();
    let t_max = exact_values.iter().max().unwrap().clone();
    let lambda_low = t_min.clone() * rat(1, 2);
    let lambda_high = (t_max.clone() + rat(1, 1)) * rat(1, 2);

    let span = lambda_high.clone() - lambda_low.clone();
    let tau = |s1: usize, s2: usize| -> Exact {
        (table.target_exact(s1, s2) - lambda_low.clone()) / span.clone()
    };
    let scientist = per_step(
        &P7X_QUESTIONS,
        &strings(&["0", "1"]),
        tower_scientist(&table, &tau),
    );

    let psi = PsiMap::from_pairs(&[("qp", &["qt"])]);
    let mut interp = PsiInterp::default();
    interp.insert(
        vec![Question::new("qt")],
        Answer::new("1"),
        bern(&lambda_high),
    );
    interp.insert(
        vec![Question::new("qt")],
        Answer::new("0"),
        bern(&lambda_low),
    );

    Constructed {
        scenario: Scenario {
            sms1: universe,
            sms2: Some(scientist),
            psi,
            interp,
            embedding: None,
            divergence: DivergenceKind::Kl,
            epsilon: 0.0,
            step: 1,
            checks: vec![p73_check()],
        },
        injected_alpha: None,
    }
}

fn construct_p74(rng: &mut ChaCha8Rng) -> Constructed {
    // Independent pattern probabilities and coordinate-increasing answer
    // weights.
    let p1 = pick(rng, &[(1, 3), (2, 5), (1, 2), (3, 5)]);
    let p2 = pick(rng, &[(1, 3), (2, 5), (1, 2), (3, 5)]);
    let base = pick(rng, &[(1, 5), (1, 4), (3, 10), (1, 3)]);
    let d1 = pick(rng, &[(1, 10), (1, 8), (1, 6), (1, 5)]);
    let d2 = pick(rng, &[(1, 10), (1, 8), (1, 6), (1, 5)]);
    let lambda_low = pick(rng, &[(1, 5), (1, 4), (3, 10)]);
    let lambda_high = pick(rng, &[(3, 5), (2, 3), (7, 10), (3, 4)]);

    let w = |s1: usize, s2: usize| -> Exact {
        let mut v = base.clone();
        if s1 == 1 {
            v += d1.clone();
        }
        if s2 == 1 {
            v += d2.clone();
        }
        v
    };
    let lambda = |s1: usize, s2: usize| -> Exact {
        let f = |on: usize, p: &Exact| {
            if on == 1 {
                p.clone()
            } else {
                Exact::ratio(1, 1) - p.clone()
            }
        };
        f(s1, &p1) * f(s2, &p2)
    };

    let mut universe_rows = Vec::new();
    let mut scientist_rows = Vec::new();
    for s1 in 0..2 {
        for s2 in 0..2 {
            for (code, wv) in [
                ("1", w(s1, s2)),
                ("0", Exact::ratio(1, 1) - w(s1, s2)),
            ] {
                let mut claims = vec![Claim::new("qf", "1")];
                if s1 == 1 {
                    claims.push(Claim::new("qb1", "1"));
                }
                if s2 == 1 {
                    claims.push(Claim::new("qb2", "1"));
                }
                claims.push(Claim::new("qp", code));
                scientist_rows.push((
                    vector(claims.clone()),
                    lambda(s1, s2) * wv.clone(),
                ));
                let a_one = if code == "1" {
                    lambda_high.clone()
                } else {
                    lambda_low.clone()
                };
                for (a, pa) in [("1", a_one.clone()), ("0", Exact::ratio(1, 1) - a_one)] {
                    let mut u_claims = claims.clone();
                    u_claims.push(Claim::new("qt", a));
                    universe_rows.push((
                        vector(u_claims),
                        lambda(s1, s2) * wv.clone() * pa,
                    ));
                }
            }
        }
    }
    let universe = hold_kernel(&P7X_QUESTIONS, &strings(&["0", "1"]), universe_rows);
    let scientist = per_step(&P7X_QUESTIONS, &strings(&["0", "1"]), scientist_rows);

    // Projection dropping the experiment claims.
    let reachable: Vec<ClaimSet> = universe
        .marginal(1)
        .expect("step 1")
        .keys()
        .map(|v| v.unorder())
        .collect();
    let map = EmbeddingMap::projection(reachable, |c| {
        if c.question.0 == "qt" {
            None
        } else {
            Some(c.clone())
        }
    });

    let psi = PsiMap::from_pairs(&[("qp", &["qt"])]);
    let mut interp = PsiInterp::default();
    interp.insert(vec![Question::new("qt")], Answer::new("1"), bern(&lambda_high));
    interp.insert(vec![Question::new("qt")], Answer::new("0"), bern(&lambda_low));

    Constructed {
        scenario: Scenario {
            sms1: universe,
            sms2: Some(scientist),
            psi,
            interp,
            embedding: Some(map),
            divergence: DivergenceKind::Kl,
            epsilon: 0.0,
            step: 1,
            checks: vec![CheckRequest::P74 {
                question: "qp".into(),
                beta: vec![("qf".into(), "1".into())],
                paths: vec![
                    vec![("qb1".into(), "1".into())],
                    vec![("qb2".into(), "1".into())],
                ],
                target: "1".into(),
                no_embed_check: false,
            }],
        },
        injected_alpha: None,
    }
}

/// Depth-coded construction shared by the p75 constructor and the
/// condition-(5) search generator.
pub(crate) struct DepthModel {
    pub lambda: Vec<Exact>,
    /// Per-depth, per-code target-answer probabilities `h[d][code]`.
    pub h: Vec<[Exact; 2]>,
    /// Per-depth probability of answer code 1.
    pub u: Vec<Exact>,
}

impl DepthModel {
    /// Universe rows: chain claims to depth `d`, a state claim, an answer
    /// code claim, and the experiment claim.
    pub fn universe(&self) -> Sms {
        let n = self.lambda.len();
        let mut rows = Vec::new();
        for d in 0..n {
            for code in 0..2 {
                let pu = if code == 1 {
                    self.u[d].clone()
                } else {
                    Exact::ratio(1, 1) - self.u[d].clone()
                };
                if pu == Exact::ratio(0, 1) {
                    continue;
                }
                for a in 0..2 {
                    let pa = if a == 1 {
                        self.h[d][code].clone()
                    } else {
                        Exact::ratio(1, 1) - self.h[d][code].clone()
                    };
                    if pa == Exact::ratio(0, 1) {
                        continue;
                    }
                    let mut claims = vec![Claim::new("qf", "1")];
                    for i in 1..=d {
                        claims.push(Claim::new(format!("qb{i}"), "1"));
                    }
                    claims.push(Claim::new("qs", format!("s{d}")));
                    claims.push(Claim::new("qp", format!("c{d}x{code}")));
                    claims.push(Claim::new("qt", if a == 1 { "1" } else { "0" }));
                    rows.push((
                        vector(claims),
                        self.lambda[d].clone() * pu.clone() * pa,
                    ));
                }
            }
        }
        let mut answers = strings(&["0", "1"]);
        for d in 0..n {
            answers.push(format!("s{d}"));
            answers.push(format!("c{d}x0"));
            answers.push(format!("c{d}x1"));
        }
        let questions: Vec<&str> = vec!["qf", "qb1", "qb2", "qs", "qp", "qt"];
        hold_kernel(&questions, &answers, rows)
    }

    pub fn scientist(&self) -> Sms {
        let n = self.lambda.len();
        let mut rows = Vec::new();
        for d in 0..n {
            for code in 0..2 {
                let pu = if code == 1 {
                    self.u[d].clone()
                } else {
                    Exact::ratio(1, 1) - self.u[d].clone()
                };
                if pu == Exact::ratio(0, 1) {
                    continue;
                }
                rows.push((
                    vector(vec![
                        Claim::new("qs", format!("s{d}")),
                        Claim::new("qp", format!("c{d}x{code}")),
                    ]),
                    self.lambda[d].clone() * pu,
                ));
            }
        }
        let mut answers = Vec::new();
        for d in 0..n {
            answers.push(format!("s{d}"));
            answers.push(format!("c{d}x0"));
            answers.push(format!("c{d}x1"));
        }
        per_step(&["qs", "qp"], &answers, rows)
    }

    /// Projection keeping the scientist claims, with the evidence chain
    /// sets mapped onto the state claims.
    pub fn map(&self, universe: &Sms) -> EmbeddingMap {
        let reachable: Vec<ClaimSet> = universe
            .marginal(1)
            .expect("step 1")
            .keys()
            .map(|v| v.unorder())
            .collect();
        let mut rows: BTreeMap<ClaimSet, ClaimSet> = BTreeMap::new();
        for set in reachable {
            for sub in set.subsets() {
                let image = ClaimSet::from_claims(
                    sub.iter()
                        .filter(|c| c.question.0 == "qs" || c.question.0 == "qp")
                        .cloned(),
                );
                rows.entry(sub).or_insert(image);
            }
        }
        // Chain sets map onto the exact-state claims.
        let n = self.lambda.len();
        for d in 0..n {
            let mut chain = ClaimSet::from_claims([Claim::new("qf", "1")]);
            for i in 1..=d {
                chain.insert(Claim::new(format!("qb{i}"), "1"));
            }
            rows.insert(
                chain,
                ClaimSet::from_claims([Claim::new("qs", format!("s{d}"))]),
            );
        }
        EmbeddingMap::new(rows)
    }

    pub fn interp(&self) -> (PsiMap, PsiInterp<Exact>) {
        let psi = PsiMap::from_pairs(&[("qp", &["qt"])]);
        let mut interp = PsiInterp::default();
        for (d, h) in self.h.iter().enumerate() {
            for code in 0..2 {
                interp.insert(
                    vec![Question::new("qt")],
                    Answer::new(format!("c{d}x{code}")),
                    bern(&h[code]),
                );
            }
        }
        (psi, interp)
    }

    /// Universe chain values `P(target | depth >= i)`.
    pub fn tail_values(&self) -> Vec<Exact> {
        let n = self.lambda.len();
        let hbar: Vec<Exact> = (0..n)
            .map(|d| {
                self.u[d].clone() * self.h[d][1].clone()
                    + (Exact::ratio(1, 1) - self.u[d].clone()) * self.h[d][0].clone()
            })
            .collect();
        (0..n)
            .map(|i| {
                let mut num = Exact::ratio(0, 1);
                let mut den = Exact::ratio(0, 1);
                for d in i..n {
                    num += self.lambda[d].clone() * hbar[d].clone();
                    den += self.lambda[d].clone();
                }
                num / den
            })
            .collect()
    }

    /// Prediction chain values at the exact states: the per-depth expected
    /// interpreted target probability.
    pub fn state_values(&self) -> Vec<Exact> {
        (0..self.lambda.len())
            .map(|d| {
                self.u[d].clone() * self.h[d][1].clone()
                    + (Exact::ratio(1, 1) - self.u[d].clone()) * self.h[d][0].clone()
            })
            .collect()
    }

    pub fn scenario(&self, no_embed_check: bool) -> Scenario {
        let universe = self.universe();
        let scientist = self.scientist();
        let map = self.map(&universe);
        let (psi, interp) = self.interp();
        Scenario {
            sms1: universe,
            sms2: Some(scientist),
            psi,
            interp,
            embedding: Some(map),
            divergence: DivergenceKind::Kl,
            epsilon: 0.0,
            step: 1,
            checks: vec![CheckRequest::P75 {
                question: "qp".into(),
                beta: vec![("qf".into(), "1".into())],
                paths: vec![
                    vec![("qb1".into(), "1".into())],
                    vec![("qb2".into(), "1".into())],
                ],
                target: "1".into(),
                no_embed_check,
            }],
        }
    }
}

/// Random positive simplex over `n` entries with small denominators.
pub(crate) fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Exact> {
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=6i64)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| rat(w, total)).collect()
}

fn construct_p75(rng: &mut ChaCha8Rng) -> Constructed {
    // Strictly increasing per-depth targets; the per-state answer code is
    // uninformative about the experiment, so the proportionality condition
    // holds with a per-index constant.
    let lambda = random_simplex(rng, 3);
    let mut nums: Vec<i64> = Vec::new();
    while nums.len() < 3 {
        let c = rng.gen_range(1..=15i64);
        if !nums.contains(&c) {
            nums.push(c);
        }
    }
    nums.sort_unstable();
    let h: Vec<[Exact; 2]> = nums
        .iter()
        .map(|n| [rat(*n, 16), rat(*n, 16)])
        .collect();
    let u = (0..3)
        .map(|_| pick(rng, &[(1, 3), (2, 5), (1, 2), (3, 5), (2, 3)]))
        .collect();
    let model = DepthModel { lambda, h, u };
    Constructed {
        scenario: model.scenario(true),
        injected_alpha: None,
    }
}

// ---------------------------------------------------------------------------
// Abduction constructors
// ---------------------------------------------------------------------------

enum AbductionVariant {
    Oracle,
    Expect,
    Project,
}

/// Always-asked joint table with a strict injected lift factor.
pub(crate) struct LiftTable {
    pub cells: [[Exact; 2]; 2],
    pub alpha: Exact,
}

impl LiftTable {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let p = pick(rng, &[(2, 5), (1, 2), (3, 5)]);
        let q = pick(rng, &[(2, 5), (1, 2), (3, 5)]);
        let cap1 = p.clone() * (Exact::ratio(1, 1) - q.clone());
        let cap2 = (Exact::ratio(1, 1) - p.clone()) * q.clone();
        let cap = if cap1 < cap2 { cap1 } else { cap2 };
        let frac = pick(rng, &[(1, 4), (1, 3), (1, 2)]);
        let delta = cap * frac;
        let c11 = p.clone() * q.clone() + delta.clone();
        let c10 = p.clone() * (Exact::ratio(1, 1) - q.clone()) - delta.clone();
        let c01 = (Exact::ratio(1, 1) - p.clone()) * q.clone() - delta.clone();
        let c00 = (Exact::ratio(1, 1) - p.clone()) * (Exact::ratio(1, 1) - q.clone())
            + delta.clone();
        let alpha = c11.clone() / (p * q);
        LiftTable {
            cells: [[c00, c01], [c10, c11]],
            alpha,
        }
    }

    /// Fully random cells; the lift factor can land on either side of 1.
    pub fn random_unconstrained(rng: &mut ChaCha8Rng) -> Self {
        let w: Vec<i64> = (0..4).map(|_| rng.gen_range(1..=12i64)).collect();
        let total: i64 = w.iter().sum();
        let cells = [
            [rat(w[0], total), rat(w[1], total)],
            [rat(w[2], total), rat(w[3], total)],
        ];
        let ma = cells[1][0].clone() + cells[1][1].clone();
        let mb = cells[0][1].clone() + cells[1][1].clone();
        let alpha = cells[1][1].clone() / (ma * mb);
        LiftTable { cells, alpha }
    }

    fn marg_a(&self) -> Exact {
        self.cells[1][0].clone() + self.cells[1][1].clone()
    }

    fn marg_b(&self) -> Exact {
        self.cells[0][1].clone() + self.cells[1][1].clone()
    }
}

fn construct_abduction(rng: &mut ChaCha8Rng, variant: AbductionVariant) -> Constructed {
    let table = LiftTable::random(rng);
    let questions = ["q1", "q2", "qs", "qd", "qj"];
    let answers = strings(&["0", "1"]);

    let mut universe_rows = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let claims = vec![
                Claim::new("q1", if a == 1 { "1" } else { "0" }),
                Claim::new("q2", if b == 1 { "1" } else { "0" }),
                Claim::new("qs", "1"),
                Claim::new("qd", "1"),
                Claim::new("qj", "1"),
            ];
            universe_rows.push((vector(claims), table.cells[a][b].clone()));
        }
    }
    let universe = hold_kernel(&questions, &answers, universe_rows);

    let psi = PsiMap::from_pairs(&[("qs", &["q1"]), ("qd", &["q2"]), ("qj", &["q1", "q2"])]);
    let mut interp = PsiInterp::default();
    interp.insert(vec![Question::new("q1")], Answer::new("1"), bern(&table.marg_a()));
    interp.insert(vec![Question::new("q2")], Answer::new("1"), bern(&table.marg_b()));
    let mut joint = BTreeMap::new();
    for a in 0..2 {
        for b in 0..2 {
            joint.insert(
                vec![
                    Answer::new(if a == 1 { "1" } else { "0" }),
                    Answer::new(if b == 1 { "1" } else { "0" }),
                ],
                table.cells[a][b].clone(),
            );
        }
    }
    interp.insert(
        vec![Question::new("q1"), Question::new("q2")],
        Answer::new("1"),
        Dist::new(joint, true),
    );

    let alpha = table.alpha.clone();
    match variant {
        AbductionVariant::Oracle => {
            // The reasoner only asks the prediction questions.
            let scientist = per_step(
                &questions,
                &answers,
                vec![(
                    vector(vec![
                        Claim::new("qs", "1"),
                        Claim::new("qd", "1"),
                        Claim::new("qj", "1"),
                    ]),
                    Exact::ratio(1, 1),
                )],
            );
            Constructed {
                scenario: Scenario {
                    sms1: universe,
                    sms2: Some(scientist),
                    psi,
                    interp,
                    embedding: None,
                    divergence: DivergenceKind::Kl,
                    epsilon: 0.0,
                    step: 1,
                    checks: vec![CheckRequest::P81 {
                        qstar: "q1".into(),
                        vstar: "1".into(),
                        qdagger: "q2".into(),
                        vdagger: "1".into(),
                        cset: vec![],
                    }],
                },
                injected_alpha: Some(alpha),
            }
        }
        AbductionVariant::Expect | AbductionVariant::Project => {
            // Scientist = image of the universe under a projection that
            // drops the unobserved experiment.
            let mut sci_rows = Vec::new();
            for a in 0..2 {
                let p = if a == 1 {
                    table.marg_a()
                } else {
                    Exact::ratio(1, 1) - table.marg_a()
                };
                sci_rows.push((
                    vector(vec![
                        Claim::new("q1", if a == 1 { "1" } else { "0" }),
                        Claim::new("qs", "1"),
                        Claim::new("qd", "1"),
                        Claim::new("qj", "1"),
                    ]),
                    p,
                ));
            }
            let scientist = per_step(&["q1", "qs", "qd", "qj"], &answers, sci_rows);
            let reachable: Vec<ClaimSet> = universe
                .marginal(1)
                .expect("step 1")
                .keys()
                .map(|v| v.unorder())
                .collect();
            let map = EmbeddingMap::projection(reachable, |c| {
                if c.question.0 == "q2" {
                    None
                } else {
                    Some(c.clone())
                }
            });
            let check = match variant {
                AbductionVariant::Expect => CheckRequest::P82 {
                    qstar: "q1".into(),
                    vstar: "1".into(),
                    qdagger: "q2".into(),
                    vdagger: "1".into(),
                    cset: vec![],
                    no_embed_check: false,
                },
                _ => CheckRequest::P83 {
                    qstar: "q1".into(),
                    vstar: "1".into(),
                    qdagger: "q2".into(),
                    vdagger: "1".into(),
                    cset: vec![],
                    no_embed_check: false,
                },
            };
            Constructed {
                scenario: Scenario {
                    sms1: universe,
                    sms2: Some(scientist),
                    psi,
                    interp,
                    embedding: Some(map),
                    divergence: DivergenceKind::Kl,
                    epsilon: 0.0,
                    step: 1,
                    checks: vec![check],
                },
                injected_alpha: Some(alpha),
            }
        }
    }
}

fn construct_projection(rng: &mut ChaCha8Rng) -> Constructed {
    // Full-support joint over (experiment answer, prediction code), with
    // the scientist a claim-wise renamed copy.
    let w: Vec<i64> = (0..4).map(|_| rng.gen_range(2..=8i64)).collect();
    let total: i64 = w.iter().sum();
    let cell = |a: usize, u: usize| rat(w[a * 2 + u], total);

    let mut u_rows = Vec::new();
    let mut s_rows = Vec::new();
    for a in 0..2 {
        for u in 0..2 {
            let av = if a == 1 { "1" } else { "0" };
            let uv = if u == 1 { "1" } else { "0" };
            u_rows.push((
                vector(vec![Claim::new("qt", av), Claim::new("qp", uv)]),
                cell(a, u),
            ));
            s_rows.push((
                vector(vec![Claim::new("st", av), Claim::new("sp", uv)]),
                cell(a, u),
            ));
        }
    }
    let universe = hold_kernel(&["qt", "qp"], &strings(&["0", "1"]), u_rows);
    let scientist = per_step(&["st", "sp"], &strings(&["0", "1"]), s_rows);

    let reachable: Vec<ClaimSet> = universe
        .marginal(1)
        .expect("step 1")
        .keys()
        .map(|v| v.unorder())
        .collect();
    let map = EmbeddingMap::projection(reachable, |c| {
        let q = match c.question.0.as_str() {
            "qt" => "st",
            "qp" => "sp",
            other => other,
        };
        Some(Claim::new(q, c.answer.0.clone()))
    });

    let psi = PsiMap::from_pairs(&[("sp", &["qt"])]);
    let mut interp = PsiInterp::default();
    for u in 0..2 {
        let uv = if u == 1 { "1" } else { "0" };
        let marg = cell(0, u) + cell(1, u);
        let p1 = cell(1, u) / marg;
        interp.insert(vec![Question::new("qt")], Answer::new(uv), bern(&p1));
    }

    Constructed {
        scenario: Scenario {
            sms1: universe,
            sms2: Some(scientist),
            psi,
            interp,
            embedding: Some(map),
            divergence: DivergenceKind::Kl,
            epsilon: 0.0,
            step: 1,
            checks: vec![CheckRequest::Projection {
                question: "sp".into(),
                set: vec![],
            }],
        },
        injected_alpha: None,
    }
}

