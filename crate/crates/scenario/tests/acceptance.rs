//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers. Tolerances and runtime budgets are pinned in the
//! assertions.

use smslab_core::claim::ClaimSet;
use smslab_core::dist::{Budget, Event};
use smslab_core::evidence::{is_evidence_collection, is_nonthwarting, EvidenceScenario, StepSource};
use smslab_core::{Answer, Exact, Prob, Question};
use smslab_scenario::generate::{embedding_pair, random_bc_kernel, random_instance, random_joint_sms, random_path_table_sms, Profile};
use smslab_scenario::search::{counterexample_search, Ablation};
use smslab_scenario::{construct_eps0, run_scenario, Outcome, PropId};
use std::collections::BTreeSet;
use std::time::Instant;

fn support_closure(spec: &smslab_core::Sms) -> Vec<ClaimSet> {
    let mut sets: BTreeSet<ClaimSet> = BTreeSet::new();
    for n in 1..=spec.horizon {
        for vector in spec.marginal(n).unwrap().keys() {
            for sub in vector.unorder().subsets() {
                sets.insert(sub);
            }
        }
    }
    sets.into_iter().collect()
}

/// Criterion 1: step probabilities of upward-closed events never decrease
/// past the consistency threshold, on 200 random backward-consistent
/// kernels, exactly.
#[test]
fn c01_limit_monotonicity() {
    let started = Instant::now();
    let mut checked_sets = 0usize;
    for seed in 0..200u64 {
        let spec = random_bc_kernel(seed, false);
        assert!(spec.validate().is_valid(), "seed {seed}");
        assert!(spec.check_backward_consistent(0).unwrap().is_verified());
        let dists: Vec<_> = (1..=spec.horizon)
            .map(|n| spec.step_dist(n).unwrap())
            .collect();
        for dist in &dists {
            let mut budget = Budget::standard();
            let total = dist.event_prob(&Event::default(), &mut budget).unwrap();
            assert_eq!(total, Exact::ratio(1, 1), "seed {seed}: marginal not normalized");
        }
        for cset in support_closure(&spec) {
            checked_sets += 1;
            let ev = Event::superset(cset.clone());
            let mut prev: Option<Exact> = None;
            for dist in &dists {
                let mut budget = Budget::standard();
                let p = dist.event_prob(&ev, &mut budget).unwrap();
                if let Some(prev) = &prev {
                    assert!(
                        p >= *prev,
                        "seed {seed}: P({cset}) decreased from {prev} to {p}"
                    );
                }
                prev = Some(p);
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 overran: {elapsed:?}");
    println!(
        "PASS criterion 1: monotone step probabilities on 200 kernels ({checked_sets} claim sets, {elapsed:?})"
    );
}

/// Criterion 2: exact-set probabilities never exceed superset
/// probabilities, and superset probabilities decompose as sums of exact
/// probabilities over support unorderings, on the same 200 kernels.
#[test]
fn c02_dominance_and_decomposition() {
    let started = Instant::now();
    let mut checks = 0usize;
    for seed in 0..200u64 {
        let spec = random_bc_kernel(seed, false);
        for n in 1..=spec.horizon {
            let dist = spec.step_dist(n).unwrap();
            let unorderings: Vec<ClaimSet> = {
                let mut u: BTreeSet<ClaimSet> = BTreeSet::new();
                for (_, set, _) in dist.rows() {
                    u.insert(set.clone());
                }
                u.into_iter().collect()
            };
            for cset in support_closure(&spec) {
                let mut budget = Budget::standard();
                let superset = dist
                    .event_prob(&Event::superset(cset.clone()), &mut budget)
                    .unwrap();
                let exact = dist.exact_prob(&cset, &mut budget).unwrap();
                assert!(exact <= superset, "seed {seed} step {n}: dominance failed");
                let mut total = Exact::ratio(0, 1);
                for u in &unorderings {
                    if cset.is_subset(u) {
                        total += dist.exact_prob(u, &mut budget).unwrap();
                    }
                }
                assert_eq!(total, superset, "seed {seed} step {n}: decomposition failed");
                checks += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 2: dominance and decomposition on 200 kernels ({checks} checks, {elapsed:?})");
}

/// Criterion 3: the two abduction lift factors agree exactly on 1000
/// random always-asked joint tables.
#[test]
fn c03_abduction_algebra() {
    use smslab_core::abduction::{abduction_alpha, StepJoint};
    let started = Instant::now();
    for seed in 0..1000u64 {
        let spec = random_joint_sms(seed);
        let src = StepJoint { spec: &spec, step: 1 };
        let alpha = abduction_alpha(
            &src,
            &Question::new("q1"),
            &Answer::new("1"),
            &Question::new("q2"),
            &Answer::new("1"),
            &ClaimSet::empty(),
        )
        .unwrap();
        assert_eq!(alpha.both_questions_sure, Some(true), "seed {seed}");
        assert_eq!(
            alpha.premise, alpha.implication,
            "seed {seed}: lift factors disagree"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "criterion 3 overran: {elapsed:?}");
    println!("PASS criterion 3: premise = implication on 1000 tables ({elapsed:?})");
}

/// Criterion 4: 50 constructor scenarios per proposition all verify with
/// strict conclusions; the abduction variants report the injected lift
/// exactly.
#[test]
fn c04_eps0_soundness() {
    let started = Instant::now();
    for prop in PropId::all() {
        for seed in 0..50u64 {
            let built = construct_eps0(prop, seed);
            let report = run_scenario(&built.scenario, seed);
            for result in &report.checks {
                let report = match &result.outcome {
                    Outcome::Report { report } => report,
                    other => panic!("{prop} seed {seed}: unexpected outcome {other:?}"),
                };
                assert!(
                    report.is_verified(),
                    "{prop} seed {seed}: {}",
                    report.summary()
                );
                let conclusion = report.conclusion.as_ref().expect("conclusion present");
                assert_eq!(
                    conclusion.holds,
                    Some(true),
                    "{prop} seed {seed}: conclusion not strict"
                );
                if matches!(prop, PropId::P81 | PropId::P83) {
                    let alpha = built.injected_alpha.as_ref().expect("injected lift");
                    assert_eq!(
                        conclusion.margin,
                        format!("lift {alpha}"),
                        "{prop} seed {seed}: lift differs from injected value"
                    );
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "criterion 4 overran: {elapsed:?}");
    println!("PASS criterion 4: 350 constructor scenarios verified ({elapsed:?})");
}

/// Criterion 5: each ablated hypothesis yields a counterexample within
/// ten thousand trials, in under two minutes per search.
#[test]
fn c05_non_vacuity() {
    for (prop, ablation, label) in [
        (PropId::P73, Ablation::Calibration, "p73/calibration"),
        (PropId::P81, Ablation::Premise, "p81/premise"),
        (PropId::P75, Ablation::Condition5, "p75/condition5"),
    ] {
        let started = Instant::now();
        let result = counterexample_search(prop, ablation, 10_000, 3).unwrap();
        let elapsed = started.elapsed();
        assert!(result.found, "{label}: no counterexample in 10^4 trials");
        assert!(elapsed.as_secs() < 120, "{label} overran: {elapsed:?}");
        println!(
            "PASS criterion 5 ({label}): counterexample at trial {} ({elapsed:?})",
            result.trial.unwrap()
        );
    }
}

/// Criterion 6: the embedding identity holds exactly for 100 generated
/// image processes and fails with the injected residual recovered for 100
/// perturbed ones.
#[test]
fn c06_embedding_identity() {
    use smslab_core::embedding::verify_embedding;
    let started = Instant::now();
    for seed in 0..100u64 {
        let pair = embedding_pair(seed);
        let ok = verify_embedding(&pair.universe, &pair.scientist, &pair.map, 1).unwrap();
        // Exact stationary limits make the bracket width zero, so residuals
        // must vanish.
        assert!(
            ok.report.is_verified(),
            "seed {seed}: {}",
            ok.report.summary()
        );
        assert_eq!(ok.max_residual, Exact::ratio(0, 1), "seed {seed}");

        let bad = verify_embedding(&pair.universe, &pair.perturbed, &pair.map, 1).unwrap();
        assert!(!bad.report.is_verified(), "seed {seed}: perturbation missed");
        let recovered = bad.max_residual.to_f64();
        let injected = pair.injected.to_f64();
        assert!(
            (recovered - injected).abs() <= 1e-9,
            "seed {seed}: residual {recovered} vs injected {injected}"
        );
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 6: embedding identity on 100 + 100 scenarios ({elapsed:?})");
}

/// Criterion 7: the projection identity holds on 25 discriminating
/// constructor scenarios, with both sides computed by independent paths.
#[test]
fn c07_projection() {
    let started = Instant::now();
    for seed in 0..25u64 {
        let built = construct_eps0(PropId::Projection, seed);
        let report = run_scenario(&built.scenario, seed);
        for result in &report.checks {
            match &result.outcome {
                Outcome::Report { report } => {
                    assert!(report.is_verified(), "seed {seed}: {}", report.summary());
                    assert_eq!(report.conclusion.as_ref().unwrap().holds, Some(true));
                }
                other => panic!("seed {seed}: unexpected outcome {other:?}"),
            }
        }
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 7: projection identity on 25 scenarios ({elapsed:?})");
}

/// Criterion 8: the exact value sits inside the Monte Carlo estimate plus
/// or minus four standard errors in at least 99 of 100 seeded runs, for the
/// three-vector fixture and 20 random scenarios.
#[test]
fn c08_monte_carlo() {
    let started = Instant::now();
    let mut scenarios: Vec<(smslab_core::Sms, ClaimSet)> = Vec::new();
    scenarios.push((
        smslab_core::fixtures::fix_b(),
        smslab_core::claim::claim_set(&[("qa", "0")]),
    ));
    for seed in 0..20u64 {
        let scenario = random_instance(&Profile::default(), seed);
        let spec = scenario.sms1;
        // Query the first claim of the first support vector.
        let claim = spec
            .step_dist(1)
            .unwrap()
            .rows()
            .next()
            .map(|(v, _, _)| v.claims()[0].clone())
            .unwrap();
        let set = ClaimSet::from_claims([claim]);
        scenarios.push((spec, set));
    }
    for (idx, (spec, set)) in scenarios.iter().enumerate() {
        let exact = spec.prob_superset(1, set).unwrap().to_f64();
        let mut inside = 0;
        for run in 0..100u64 {
            let est = spec.mc_estimate(1, set, 100_000, run).unwrap();
            let covered = if est.std_error == 0.0 {
                est.estimate == exact
            } else {
                (est.estimate - exact).abs() <= 4.0 * est.std_error
            };
            if covered {
                inside += 1;
            }
        }
        assert!(inside >= 99, "scenario {idx}: only {inside}/100 runs covered");
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 8: Monte Carlo coverage on 21 scenarios ({elapsed:?})");
}

/// Criterion 9: on 500 random tables where per-path lift and the
/// non-thwarting ratio both hold, the cumulative chain holds exactly.
#[test]
fn c09_appendix_derivation() {
    let started = Instant::now();
    let beta = ClaimSet::empty();
    let paths = vec![
        smslab_core::claim::claim_set(&[("qb1", "1")]),
        smslab_core::claim::claim_set(&[("qb2", "1")]),
    ];
    let mut qualifying = 0usize;
    let mut seed = 0u64;
    while qualifying < 500 {
        assert!(seed < 50_000, "generator starved at {qualifying} qualifying tables");
        let spec = random_path_table_sms(seed);
        seed += 1;
        let src = StepSource {
            spec: &spec,
            step: 1,
            question: Question::new("qt"),
            target: Answer::new("1"),
        };
        let scn = EvidenceScenario {
            source: &src,
            beta: &beta,
            paths: &paths,
        };
        let collection = is_evidence_collection(&scn);
        let per_path_ok = collection
            .preconditions
            .iter()
            .filter(|c| c.label.starts_with("per-path"))
            .all(|c| c.holds == Some(true));
        let nonthwarting = is_nonthwarting(&scn);
        if !(per_path_ok && nonthwarting.is_verified()) {
            continue;
        }
        qualifying += 1;
        let chain_ok = collection
            .preconditions
            .iter()
            .filter(|c| c.label.starts_with("cumulative"))
            .all(|c| c.holds == Some(true));
        assert!(chain_ok, "seed {}: chain failed under both hypotheses", seed - 1);
    }
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 9: cumulative chain on 500 qualifying tables (drew {seed} candidates, {elapsed:?})"
    );
}

/// Criterion 10: reports are byte-identical across runs with a fixed seed,
/// and parse then serialize is the identity on every shipped fixture.
#[test]
fn c10_determinism_and_round_trip() {
    let started = Instant::now();
    for (name, scenario) in smslab_scenario::fixtures::all() {
        let a = run_scenario(&scenario, 11).to_json();
        let b = run_scenario(&scenario, 11).to_json();
        assert_eq!(a, b, "{name}: reports drifted");
        let json = scenario.to_json();
        let reparsed = smslab_scenario::parse_scenario(&json).unwrap();
        assert_eq!(json, reparsed.to_json(), "{name}: round trip drifted");
    }
    for prop in PropId::all() {
        let built = construct_eps0(prop, 2);
        let a = run_scenario(&built.scenario, 2).to_json();
        let b = run_scenario(&built.scenario, 2).to_json();
        assert_eq!(a, b, "{prop}: reports drifted");
        let json = built.scenario.to_json();
        let reparsed = smslab_scenario::parse_scenario(&json).unwrap();
        assert_eq!(json, reparsed.to_json(), "{prop}: round trip drifted");
    }
    let elapsed = started.elapsed();
    println!("PASS criterion 10: determinism and round trips ({elapsed:?})");
}
