//! Randomized counterexample search.
//!
//! Each trial draws an instance in which every hypothesis of the chosen
//! proposition is forced true by construction except the ablated one, then
//! evaluates the proposition's conclusion directly. A hit is the first
//! trial whose conclusion fails; trials are sequential from the seed, so
//! results are deterministic and selected at the lowest trial index.

use crate::construct::{
    construct_eps0, pick, random_simplex, rat, tower_scientist, DepthModel, LiftTable, PathTable,
    PropId,
};
use crate::schema::Scenario;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smslab_core::{Error, Exact};

/// Which hypothesis the generator stops forcing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    None,
    /// Calibration with the oracle/universe (p73).
    Calibration,
    /// The abductive premise (p81).
    Premise,
    /// The state-uninformativeness proportionality (p75).
    Condition5,
    /// The evidence-collection hypothesis (p73).
    Evidence,
}

impl Ablation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Ablation::None),
            "calibration" => Some(Ablation::Calibration),
            "premise" => Some(Ablation::Premise),
            "condition5" | "condition-5" => Some(Ablation::Condition5),
            "evidence" => Some(Ablation::Evidence),
            _ => None,
        }
    }
}

/// Search outcome. `scenario` carries the first failing instance.
pub struct SearchResult {
    pub found: bool,
    pub trial: Option<u32>,
    pub trials_run: u32,
    pub scenario: Option<Scenario>,
    pub witness: Option<String>,
}

/// Runs up to `trials` seeded instances.
pub fn counterexample_search(
    prop: PropId,
    ablation: Ablation,
    trials: u32,
    seed: u64,
) -> Result<SearchResult, Error> {
    match (prop, ablation) {
        (_, Ablation::None) => Ok(search_none(prop, trials, seed)),
        (PropId::P73, Ablation::Calibration) => Ok(search_p73_calibration(trials, seed)),
        (PropId::P73, Ablation::Evidence) => Ok(search_p73_evidence(trials, seed)),
        (PropId::P81, Ablation::Premise) => Ok(search_p81_premise(trials, seed)),
        (PropId::P75, Ablation::Condition5) => Ok(search_p75_condition5(trials, seed)),
        _ => Err(Error::Domain(format!(
            "unsupported ablation {ablation:?} for {prop}"
        ))),
    }
}

/// With nothing ablated, every constructor instance satisfies its
/// proposition; the search confirms the conclusion never fails.
fn search_none(prop: PropId, trials: u32, seed: u64) -> SearchResult {
    for trial in 0..trials {
        let built = construct_eps0(prop, seed.wrapping_add(trial as u64));
        let report = crate::run::run_scenario(&built.scenario, seed);
        let failed = report.checks.iter().any(|c| match &c.outcome {
            crate::run::Outcome::Report { report } => {
                report.verdict != smslab_core::Verdict::Verified
            }
            _ => true,
        });
        if failed {
            return SearchResult {
                found: true,
                trial: Some(trial),
                trials_run: trial + 1,
                scenario: Some(built.scenario),
                witness: Some("constructor instance failed its own check".into()),
            };
        }
    }
    SearchResult {
        found: false,
        trial: None,
        trials_run: trials,
        scenario: None,
        witness: None,
    }
}

/// p73 with calibration ablated: the universe's evidence structure is left
/// fully random while the reasoner keeps a strict prediction-side chain, so
/// the oracle conclusion fails whenever the random universe chain is not
/// strictly increasing.
fn search_p73_calibration(trials: u32, seed: u64) -> SearchResult {
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64) ^ 0x73ca);
        let table = PathTable::random_unconstrained(&mut rng);
        let [t0, t1, _t2, t12] = table.chain_values();
        let conclusion_holds = t1 > t0 && t12 > t1;
        if conclusion_holds {
            continue;
        }
        // Build the full scenario for the witness: reasoner weights follow
        // a fabricated strictly increasing chain, so the prediction-side
        // evidence hypothesis holds while calibration does not.
        let low = rat(1, 8);
        let high = rat(7, 8);
        let span = high.clone() - low.clone();
        let fake = fake_increasing_target(&mut rng);
        let tau = |s1: usize, s2: usize| -> Exact {
            (fake[s1 + 2 * s2].clone() - low.clone()) / span.clone()
        };
        let scientist = crate::construct::per_step(
            &crate::construct::P7X_QUESTIONS,
            &crate::construct::strings(&["0", "1"]),
            tower_scientist(&table, &tau),
        );
        let universe = crate::construct::hold_kernel(
            &crate::construct::P7X_QUESTIONS,
            &crate::construct::strings(&["0", "1"]),
            table.universe_rows(),
        );
        let psi = smslab_core::calibration::PsiMap::from_pairs(&[("qp", &["qt"])]);
        let mut interp = smslab_core::calibration::PsiInterp::default();
        interp.insert(
            vec![smslab_core::Question::new("qt")],
            smslab_core::Answer::new("1"),
            crate::construct::bern(&high),
        );
        interp.insert(
            vec![smslab_core::Question::new("qt")],
            smslab_core::Answer::new("0"),
            crate::construct::bern(&low),
        );
        let scenario = Scenario {
            sms1: universe,
            sms2: Some(scientist),
            psi,
            interp,
            embedding: None,
            divergence: smslab_core::divergence::DivergenceKind::Kl,
            epsilon: 0.0,
            step: 1,
            checks: vec![crate::construct::p73_check()],
        };
        return SearchResult {
            found: true,
            trial: Some(trial),
            trials_run: trial + 1,
            scenario: Some(scenario),
            witness: Some(format!(
                "oracle chain not strictly increasing: {t0} -> {t1} -> {t12}"
            )),
        };
    }
    SearchResult {
        found: false,
        trial: None,
        trials_run: trials,
        scenario: None,
        witness: None,
    }
}

/// Strictly increasing fabricated chain targets, indexed by pattern
/// `(s1, s2)`, monotone in the number of present paths.
fn fake_increasing_target(rng: &mut ChaCha8Rng) -> [Exact; 4] {
    let base = pick(rng, &[(1, 4), (3, 10), (1, 3)]);
    let d1 = pick(rng, &[(1, 10), (1, 8)]);
    let d2 = pick(rng, &[(1, 10), (1, 8)]);
    [
        base.clone(),
        base.clone() + d1.clone(),
        base.clone() + d2.clone(),
        base + d1 + d2,
    ]
}

/// p73 with the evidence hypothesis ablated: the interpretation is read off
/// the true universe conditionals (calibration forced to zero), while the
/// universe itself is unconstrained.
fn search_p73_evidence(trials: u32, seed: u64) -> SearchResult {
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64) ^ 0x73e7);
        let table = PathTable::random_unconstrained(&mut rng);
        let [t0, t1, _t2, t12] = table.chain_values();
        let conclusion_holds = t1 > t0 && t12 > t1;
        if !conclusion_holds {
            return SearchResult {
                found: true,
                trial: Some(trial),
                trials_run: trial + 1,
                scenario: None,
                witness: Some(format!(
                    "oracle chain not strictly increasing: {t0} -> {t1} -> {t12}"
                )),
            };
        }
    }
    SearchResult {
        found: false,
        trial: None,
        trials_run: trials,
        scenario: None,
        witness: None,
    }
}

/// p81 with the abductive premise ablated: cells fully random, everything
/// else read off, so the conclusion fails exactly when the random lift
/// lands at or below one.
fn search_p81_premise(trials: u32, seed: u64) -> SearchResult {
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64) ^ 0x81ab);
        let table = LiftTable::random_unconstrained(&mut rng);
        if table.alpha > rat(1, 1) {
            continue;
        }
        let scenario = lift_table_scenario(&table);
        return SearchResult {
            found: true,
            trial: Some(trial),
            trials_run: trial + 1,
            scenario: Some(scenario),
            witness: Some(format!("lift factor {} <= 1", table.alpha)),
        };
    }
    SearchResult {
        found: false,
        trial: None,
        trials_run: trials,
        scenario: None,
        witness: None,
    }
}

fn lift_table_scenario(table: &LiftTable) -> Scenario {
    // Rebuild the p81 wiring around the given table.
    let mut built = construct_eps0(PropId::P81, 0);
    let cells = &table.cells;
    let mut rows = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            rows.push((
                crate::construct::vector(vec![
                    smslab_core::Claim::new("q1", if a == 1 { "1" } else { "0" }),
                    smslab_core::Claim::new("q2", if b == 1 { "1" } else { "0" }),
                    smslab_core::Claim::new("qs", "1"),
                    smslab_core::Claim::new("qd", "1"),
                    smslab_core::Claim::new("qj", "1"),
                ]),
                cells[a][b].clone(),
            ));
        }
    }
    built.scenario.sms1 = crate::construct::hold_kernel(
        &["q1", "q2", "qs", "qd", "qj"],
        &crate::construct::strings(&["0", "1"]),
        rows,
    );
    let marg_a = cells[1][0].clone() + cells[1][1].clone();
    let marg_b = cells[0][1].clone() + cells[1][1].clone();
    let mut interp = smslab_core::calibration::PsiInterp::default();
    interp.insert(
        vec![smslab_core::Question::new("q1")],
        smslab_core::Answer::new("1"),
        crate::construct::bern(&marg_a),
    );
    interp.insert(
        vec![smslab_core::Question::new("q2")],
        smslab_core::Answer::new("1"),
        crate::construct::bern(&marg_b),
    );
    let mut joint = std::collections::BTreeMap::new();
    for a in 0..2 {
        for b in 0..2 {
            joint.insert(
                vec![
                    smslab_core::Answer::new(if a == 1 { "1" } else { "0" }),
                    smslab_core::Answer::new(if b == 1 { "1" } else { "0" }),
                ],
                cells[a][b].clone(),
            );
        }
    }
    interp.insert(
        vec![
            smslab_core::Question::new("q1"),
            smslab_core::Question::new("q2"),
        ],
        smslab_core::Answer::new("1"),
        smslab_core::dist::Dist::new(joint, true),
    );
    built.scenario.interp = interp;
    built.scenario
}

/// p75 with the proportionality condition ablated: answer codes leak
/// information about the experiment, and per-state targets are sampled so
/// the universe tail chain stays strictly increasing while the per-state
/// prediction chain need not be.
fn search_p75_condition5(trials: u32, seed: u64) -> SearchResult {
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64) ^ 0x75c5);
        let lambda = random_simplex(&mut rng, 3);
        // Per-state mean targets and a leak spread.
        let hbar: Vec<Exact> = (0..3)
            .map(|_| pick(&mut rng, &[(3, 16), (5, 16), (7, 16), (9, 16), (11, 16), (13, 16)]))
            .collect();
        let u: Vec<Exact> = (0..3)
            .map(|_| pick(&mut rng, &[(1, 3), (2, 5), (1, 2), (3, 5)]))
            .collect();
        let spread = pick(&mut rng, &[(1, 16), (1, 12), (1, 10)]);
        // h[d][1] - h[d][0] = spread/u-mix keeps the mean at hbar.
        let h: Vec<[Exact; 2]> = (0..3)
            .map(|d| {
                let up = hbar[d].clone() + spread.clone() * (rat(1, 1) - u[d].clone());
                let down = hbar[d].clone() - spread.clone() * u[d].clone();
                [down, up]
            })
            .collect();
        if h.iter().any(|pair| {
            pair[0] <= rat(0, 1) || pair[1] >= rat(1, 1)
        }) {
            continue;
        }
        let model = DepthModel {
            lambda,
            h,
            u,
        };
        // Hypothesis: universe tail chain strictly increasing.
        let tails = model.tail_values();
        let tails_strict = tails.windows(2).all(|w| w[1] > w[0]);
        if !tails_strict {
            continue;
        }
        // Conclusion: per-state prediction chain strictly increasing.
        let states = model.state_values();
        let conclusion = states.windows(2).all(|w| w[1] > w[0]);
        if conclusion {
            continue;
        }
        return SearchResult {
            found: true,
            trial: Some(trial),
            trials_run: trial + 1,
            scenario: Some(model.scenario(true)),
            witness: Some(format!(
                "universe tails increase but state chain does not: {:?}",
                states.iter().map(|s| s.to_string()).collect::<Vec<_>>()
            )),
        };
    }
    SearchResult {
        found: false,
        trial: None,
        trials_run: trials,
        scenario: None,
        witness: None,
    }
}
