//! Scenario-file wrappers around the core fixtures, with the checks each
//! fixture anchors. The JSON files under `fixtures/` are generated from
//! these definitions (see `examples/dump_fixtures.rs`) and must stay in
//! sync; a test enforces the round trip.

use crate::schema::{CheckRequest, Scenario};
use smslab_core::calibration::{PsiInterp, PsiMap};
use smslab_core::divergence::DivergenceKind;
use smslab_core::fixtures as core_fixtures;
use smslab_core::{Exact, Prob};

fn base(sms1: smslab_core::Sms, checks: Vec<CheckRequest>) -> Scenario {
    Scenario {
        sms1,
        sms2: None,
        psi: PsiMap::default(),
        interp: PsiInterp::default(),
        embedding: None,
        divergence: DivergenceKind::Kl,
        epsilon: 0.0,
        step: 1,
        checks,
    }
}

/// FIX-A with its backward-consistency and limit checks.
pub fn fix_a() -> Scenario {
    base(
        core_fixtures::fix_a(),
        vec![
            CheckRequest::Validate,
            CheckRequest::BackwardConsistent { kappa: 0 },
            CheckRequest::Limit {
                set: vec![("qa".into(), "0".into())],
                tol: Exact::ratio(1, 1000),
            },
        ],
    )
}

/// FIX-B with its superset and response checks.
pub fn fix_b() -> Scenario {
    base(
        core_fixtures::fix_b(),
        vec![
            CheckRequest::Validate,
            CheckRequest::Superset {
                step: Some(1),
                set: vec![("qa".into(), "0".into())],
            },
            CheckRequest::Respond {
                step: Some(1),
                questions: vec!["qb".into()],
                set: vec![],
            },
        ],
    )
}

fn evidence_check() -> CheckRequest {
    CheckRequest::Evidence {
        dist: "step".into(),
        question: "qt".into(),
        beta: vec![],
        paths: vec![
            vec![("qb".into(), "0".into())],
            vec![("qb".into(), "1".into())],
        ],
        target: "1".into(),
        permutations: true,
    }
}

/// FIX-EV: strict per-path lift, clustering, and chain.
pub fn fix_ev() -> Scenario {
    base(core_fixtures::fix_ev(), vec![evidence_check()])
}

/// FIX-THWART: per-path lift with a failing ratio condition.
pub fn fix_thwart() -> Scenario {
    base(core_fixtures::fix_thwart(), vec![evidence_check()])
}

/// FIX-AB: always-asked joint table with lift factor 3/2.
pub fn fix_ab() -> Scenario {
    base(
        core_fixtures::fix_ab(),
        vec![CheckRequest::AbductionAlpha {
            dist: "step".into(),
            qstar: "q1".into(),
            vstar: "1".into(),
            qdagger: "q2".into(),
            vdagger: "1".into(),
            cset: vec![],
        }],
    )
}

/// SC-ID: point-mass interpretations over FIX-A; calibration costs ln 2 and
/// honesty holds.
pub fn sc_id() -> Scenario {
    let (psi, interp) = core_fixtures::sc_id();
    Scenario {
        sms1: core_fixtures::fix_a(),
        sms2: Some(core_fixtures::fix_a()),
        psi,
        interp,
        embedding: None,
        divergence: DivergenceKind::Kl,
        epsilon: std::f64::consts::LN_2,
        step: 1,
        checks: vec![
            CheckRequest::Calibrate {
                question: "qa".into(),
                set: vec![],
            },
            CheckRequest::Honest {
                question: "qa".into(),
                answer: "0".into(),
                set: vec![],
                at_limit: false,
            },
        ],
    }
}

/// SC-HON: flat interpretations over FIX-A; calibration is exactly zero.
pub fn sc_hon() -> Scenario {
    let (psi, interp) = core_fixtures::sc_hon();
    Scenario {
        sms1: core_fixtures::fix_a(),
        sms2: Some(core_fixtures::fix_a()),
        psi,
        interp,
        embedding: None,
        divergence: DivergenceKind::Kl,
        epsilon: 0.0,
        step: 1,
        checks: vec![CheckRequest::Calibrate {
            question: "qa".into(),
            set: vec![],
        }],
    }
}

/// FIX-EMB: universe, image scientist, and restriction map with the
/// embedding-identity check.
pub fn fix_emb() -> Scenario {
    Scenario {
        sms1: core_fixtures::fix_emb_universe(),
        sms2: Some(core_fixtures::fix_emb_scientist()),
        psi: PsiMap::default(),
        interp: PsiInterp::default(),
        embedding: Some(core_fixtures::fix_emb_map()),
        divergence: DivergenceKind::Kl,
        epsilon: 0.0,
        step: 1,
        checks: vec![CheckRequest::Embedding],
    }
}

/// Every shipped fixture with its file stem.
pub fn all() -> Vec<(&'static str, Scenario)> {
    vec![
        ("fix_a", fix_a()),
        ("fix_b", fix_b()),
        ("fix_ev", fix_ev()),
        ("fix_thwart", fix_thwart()),
        ("fix_ab", fix_ab()),
        ("sc_id", sc_id()),
        ("sc_hon", sc_hon()),
        ("fix_emb", fix_emb()),
    ]
}
