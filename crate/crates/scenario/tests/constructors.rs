//! Constructor soundness: every seeded construction passes its own check.

use smslab_scenario::{construct_eps0, run_scenario, Outcome, PropId};

fn check_verified(prop: PropId, seeds: std::ops::Range<u64>) {
    for seed in seeds {
        let built = construct_eps0(prop, seed);
        let report = run_scenario(&built.scenario, seed);
        for result in &report.checks {
            match &result.outcome {
                Outcome::Report { report } => {
                    assert!(
                        report.is_verified(),
                        "{prop} seed {seed}: {}\n{:#?}",
                        report.summary(),
                        report
                    );
                }
                other => panic!("{prop} seed {seed}: unexpected outcome {other:?}"),
            }
        }
    }
}

#[test]
fn p73_constructions_verify() {
    check_verified(PropId::P73, 0..5);
}

#[test]
fn p74_constructions_verify() {
    check_verified(PropId::P74, 0..5);
}

#[test]
fn p75_constructions_verify() {
    check_verified(PropId::P75, 0..5);
}

#[test]
fn p81_constructions_verify() {
    check_verified(PropId::P81, 0..5);
}

#[test]
fn p82_constructions_verify() {
    check_verified(PropId::P82, 0..5);
}

#[test]
fn p83_constructions_verify() {
    check_verified(PropId::P83, 0..5);
}

#[test]
fn projection_constructions_verify() {
    check_verified(PropId::Projection, 0..5);
}

/// The per-answer calibration score dominates the mixture-level divergence
/// (convexity), on identity fixtures and on constructor scenarios.
#[test]
fn per_answer_score_dominates_the_mixture_divergence() {
    use smslab_core::calibration::{
        calibration_score, oracle_conditional, CalibrationCtx, PairGate, PredictionDist,
    };
    use smslab_core::divergence::{divergence, DivergenceKind};
    use smslab_core::{ClaimSet, Question};

    for seed in 0..5u64 {
        let built = construct_eps0(PropId::P73, seed);
        let scenario = &built.scenario;
        let ctx = CalibrationCtx {
            phi1: &scenario.sms1,
            phi2: scenario.sms2.as_ref().unwrap(),
            psi: &scenario.psi,
            interp: &scenario.interp,
        };
        let q = Question::new("qp");
        let cset = ClaimSet::from_claims([smslab_core::Claim::new("qf", "1")]);
        let score = calibration_score(&ctx, 1, &q, &cset, DivergenceKind::Kl).unwrap();

        let pd = PredictionDist::new(
            ctx.phi1,
            ctx.phi2,
            ctx.psi,
            ctx.interp,
            1,
            PairGate::Plain,
        )
        .unwrap();
        let q1s = ctx.psi.get(&q).unwrap().clone();
        let mixture = pd.mixture(&q1s, &cset).unwrap();
        let (oracle, exact) = oracle_conditional(ctx.phi1, &q1s, &cset).unwrap();
        assert!(exact);
        let pivot = divergence(&mixture, &oracle.to_exact().unwrap(), DivergenceKind::Kl).unwrap();
        assert!(
            score.lo + 1e-12 >= pivot,
            "seed {seed}: score [{}, {}] below pivot {pivot}",
            score.lo,
            score.hi
        );
        // At epsilon 0 the constructor pins the mixture to the oracle.
        assert_eq!(pivot, 0.0);
        assert!(score.lo > 0.0, "per-answer score is strictly positive here");
    }
}

/// Prediction-distribution conditionals are normalized wherever defined.
#[test]
fn prediction_values_are_normalized() {
    use smslab_core::calibration::{CalibrationCtx, PairGate, PredictionDist};
    use smslab_core::{ClaimSet, Prob, Question};

    let built = construct_eps0(PropId::P73, 3);
    let scenario = &built.scenario;
    let ctx = CalibrationCtx {
        phi1: &scenario.sms1,
        phi2: scenario.sms2.as_ref().unwrap(),
        psi: &scenario.psi,
        interp: &scenario.interp,
    };
    let pd =
        PredictionDist::new(ctx.phi1, ctx.phi2, ctx.psi, ctx.interp, 1, PairGate::Plain).unwrap();
    let q1s = ctx.psi.get(&Question::new("qp")).unwrap().clone();
    for cset in [
        ClaimSet::empty(),
        ClaimSet::from_claims([smslab_core::Claim::new("qb1", "1")]),
    ] {
        let f = pd.mixture(&q1s, &cset).unwrap();
        assert_eq!(f.total(), smslab_core::Exact::ratio(1, 1));
    }
}
