//! End-to-end binary tests: exit codes, output shapes, determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn smslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join(format!("../scenario/fixtures/{name}.json"))
        .to_string_lossy()
        .into_owned()
}

#[test]
fn dist_prints_the_bare_rational() {
    let out = smslab(&[
        "dist",
        "--scenario",
        &fixture("fix_b"),
        "--step",
        "1",
        "--set",
        r#"[["qa","0"]]"#,
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2/3");
}

#[test]
fn constructor_scenarios_verify_with_exit_zero() {
    let dir = std::env::temp_dir();
    for prop in ["p73", "p81", "projection"] {
        let path = dir.join(format!("smslab_cli_{prop}.json"));
        let out = smslab(&[
            "construct",
            "--prop",
            prop,
            "--seed",
            "1",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let out = smslab(&[
            "verify",
            "--prop",
            prop,
            "--scenario",
            path.to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert!(out.status.success(), "{prop}: {}", String::from_utf8_lossy(&out.stdout));
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("\"verdict\": \"verified\""), "{prop}");
    }
}

#[test]
fn broken_scenario_exits_one() {
    // Perturbing the interpretation breaks the premise and calibration.
    let dir = std::env::temp_dir();
    let path = dir.join("smslab_cli_broken.json");
    let out = smslab(&[
        "construct",
        "--prop",
        "p81",
        "--seed",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    // Corrupt the first probability entry so a table stops normalizing,
    // which strict parsing rejects.
    let marker = "\"p\": \"";
    let start = text.find(marker).unwrap() + marker.len();
    let end = start + text[start..].find('"').unwrap();
    let corrupted = format!("{}1/999{}", &text[..start], &text[end..]);
    assert_ne!(text, corrupted);
    std::fs::write(&path, corrupted).unwrap();
    let out = smslab(&[
        "verify",
        "--scenario",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "parse errors exit 2");

    // A scenario whose check fails exits 1: thwarting fixture's ratio
    // condition fails.
    let out = smslab(&["verify", "--scenario", &fixture("fix_thwart")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let out = smslab(&["verify"]);
    assert_eq!(out.status.code(), Some(2));
    let out = smslab(&["construct", "--prop", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let args = [
        "verify",
        "--scenario",
        &fixture("sc_id"),
        "--format",
        "json",
        "--seed",
        "9",
    ];
    let a = smslab(&args);
    let b = smslab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn search_reports_found_and_not_found() {
    let out = smslab(&[
        "search", "--prop", "p81", "--ablate", "premise", "--trials", "10000", "--seed", "3",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("found counterexample"));

    let out = smslab(&[
        "search", "--prop", "p81", "--ablate", "none", "--trials", "50", "--seed", "3",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("no counterexample in 50 trials"));

    let out = smslab(&[
        "search", "--prop", "p81", "--ablate", "bogus", "--trials", "10", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_env_variable_caps_enumeration() {
    let out = Command::new(env!("CARGO_BIN_EXE_smslab"))
        .args([
            "dist",
            "--scenario",
            &fixture("fix_b"),
            "--step",
            "1",
            "--set",
            r#"[["qa","0"]]"#,
        ])
        .env("SMSLAB_BUDGET", "1")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("budget"));
}

#[test]
fn epsilon_override_flips_the_verdict_to_failed() {
    let dir = std::env::temp_dir();
    let path = dir.join("smslab_cli_eps.json");
    let out = smslab(&[
        "construct", "--prop", "p81", "--seed", "4", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // An unreachable threshold breaks the calibration hypothesis.
    let out = smslab(&[
        "verify",
        "--prop",
        "p81",
        "--scenario",
        path.to_str().unwrap(),
        "--epsilon=-1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("precondition-failed"));
}
