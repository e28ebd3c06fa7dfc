//! Search behavior: ablated hypotheses must be load-bearing, and with
//! nothing ablated the constructors never produce a failing conclusion.

use smslab_scenario::{counterexample_search, run_scenario, Ablation, Outcome, PropId};

#[test]
fn ablating_calibration_breaks_the_oracle_lift() {
    let result = counterexample_search(PropId::P73, Ablation::Calibration, 10_000, 3).unwrap();
    assert!(result.found, "no counterexample in {} trials", result.trials_run);
    // The witness scenario really does fail its check.
    let scenario = result.scenario.expect("witness scenario");
    let report = run_scenario(&scenario, 3);
    let failing = report.checks.iter().any(|c| match &c.outcome {
        Outcome::Report { report } => !report.is_verified(),
        _ => true,
    });
    assert!(failing, "witness scenario unexpectedly verifies");
}

#[test]
fn ablating_the_premise_breaks_the_abduction_lift() {
    let result = counterexample_search(PropId::P81, Ablation::Premise, 10_000, 3).unwrap();
    assert!(result.found);
    let scenario = result.scenario.expect("witness scenario");
    let report = run_scenario(&scenario, 3);
    let failing = report.checks.iter().any(|c| match &c.outcome {
        Outcome::Report { report } => !report.is_verified(),
        _ => true,
    });
    assert!(failing, "witness scenario unexpectedly verifies");
}

#[test]
fn ablating_the_proportionality_breaks_the_prediction_lift() {
    let result = counterexample_search(PropId::P75, Ablation::Condition5, 10_000, 3).unwrap();
    assert!(result.found);
    let scenario = result.scenario.expect("witness scenario");
    let report = run_scenario(&scenario, 3);
    let failing = report.checks.iter().any(|c| match &c.outcome {
        Outcome::Report { report } => !report.is_verified(),
        _ => true,
    });
    assert!(failing, "witness scenario unexpectedly verifies");
}

#[test]
fn nothing_ablated_never_fails() {
    for prop in [PropId::P73, PropId::P81, PropId::P75] {
        let result = counterexample_search(prop, Ablation::None, 100, 3).unwrap();
        assert!(!result.found, "{prop}: spurious counterexample");
        assert_eq!(result.trials_run, 100);
    }
}

#[test]
fn searches_are_deterministic() {
    let a = counterexample_search(PropId::P73, Ablation::Calibration, 1000, 9).unwrap();
    let b = counterexample_search(PropId::P73, Ablation::Calibration, 1000, 9).unwrap();
    assert_eq!(a.trial, b.trial);
    assert_eq!(a.witness, b.witness);
}
