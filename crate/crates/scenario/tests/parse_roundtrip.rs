//! Parse/serialize identity, fixture sync, parse errors, determinism, and
//! generator sanity.

use smslab_scenario::generate::{random_instance, Profile};
use smslab_scenario::{parse_scenario, parse_scenario_lenient, run_scenario, ParseError};
use std::path::Path;

fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/{name}.json"))
}

#[test]
fn shipped_fixtures_parse_and_round_trip() {
    for (name, built) in smslab_scenario::fixtures::all() {
        let text = std::fs::read_to_string(fixture_path(name)).expect("fixture file");
        let parsed = parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        // Round trip: parse(serialize(x)) reproduces the serialization.
        let json = parsed.to_json();
        let reparsed = parse_scenario(&json).expect("reparse");
        assert_eq!(json, reparsed.to_json(), "{name}: round trip drifted");
        // And the file matches the in-code definition byte for byte.
        assert_eq!(text, built.to_json(), "{name}: regenerate fixtures");
    }
}

#[test]
fn non_normalized_table_is_a_parse_error_naming_the_table() {
    let text = std::fs::read_to_string(fixture_path("fix_b")).unwrap();
    let broken = text.replacen("\"p\": \"1/3\"", "\"p\": \"1/6\"", 1);
    let err = parse_scenario(&broken).unwrap_err();
    match err {
        ParseError::Semantic { path, message } => {
            assert_eq!(path, "sms1");
            assert!(message.contains("sums to 5/6"), "{message}");
        }
        other => panic!("unexpected error {other}"),
    }
    // The lenient parser accepts it so `validate` can report it.
    let scenario = parse_scenario_lenient(&broken).expect("lenient parse");
    let report = run_scenario(&scenario, 0);
    assert!(!report.all_passed());
}

#[test]
fn unresolved_psi_question_is_a_resolution_error() {
    let text = std::fs::read_to_string(fixture_path("sc_id")).unwrap();
    let broken = text.replace("\"from\": \"qa\"", "\"from\": \"nope\"");
    let err = parse_scenario(&broken).unwrap_err();
    match err {
        ParseError::Semantic { path, message } => {
            assert!(path.starts_with("psi"), "{path}");
            assert!(message.contains("nope"));
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse_scenario("{ not json").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (_, scenario) in smslab_scenario::fixtures::all() {
        let a = run_scenario(&scenario, 7).to_json();
        let b = run_scenario(&scenario, 7).to_json();
        assert_eq!(a, b);
    }
}

#[test]
fn run_reports_round_trip_through_serde() {
    let scenario = smslab_scenario::fixtures::fix_b();
    let report = run_scenario(&scenario, 1);
    let json = report.to_json();
    let back: smslab_scenario::RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report, back);
}

#[test]
fn random_instances_validate() {
    let profile = Profile::default();
    for seed in 0..200 {
        let scenario = random_instance(&profile, seed);
        let report = scenario.sms1.validate();
        assert!(report.is_valid(), "seed {seed}: {:?}", report.violations);
        // And they survive the serialize/parse cycle.
        let parsed = parse_scenario(&scenario.to_json()).expect("parse");
        assert_eq!(parsed.to_json(), scenario.to_json());
    }
}

#[test]
fn degenerate_profile_yields_a_sure_sms() {
    let profile = Profile {
        max_questions: 1,
        max_answers: 1,
        max_support: 1,
        sparse: false,
    };
    let scenario = random_instance(&profile, 5);
    let dist = scenario.sms1.step_dist(1).unwrap();
    assert_eq!(dist.support_len(), 1);
}
