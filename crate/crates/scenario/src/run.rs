//! Check dispatch and machine-readable run reports.

use crate::rational::render_rational;
use crate::schema::{text_to_claims, CheckRequest, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smslab_core::abduction::{
    abduction_alpha, verify_abduction_math, verify_abduction_sci_expect,
    verify_abduction_sci_project, AbductionArgs, FnJoint, LimitJoint, StepJoint,
};
use smslab_core::calibration::{
    calibration_score, is_honest, single_sms_reduction, CalibrationCtx, PairGate, PredictionDist,
};
use smslab_core::claim::{Answer, Question};
use smslab_core::dist::At;
use smslab_core::divergence::check_convexity;
use smslab_core::embedding::{check_projection, embed_calibration_score, is_discriminating, verify_embedding};
use smslab_core::evidence::{
    derive_monotone, is_evidence_collection, is_nonthwarting, verify_evidence_math,
    verify_evidence_sci, verify_evidence_sci_flipped, CondSource, EvidenceArgs, EvidenceScenario,
    FnSource, LimitSource, StepSource,
};
use smslab_core::report::{CheckReport, Verdict};
use smslab_core::{ClaimSet, Error, Exact};

/// Outcome of a single check request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Report { report: CheckReport },
    Value { value: String },
    Estimate { estimate: f64, std_error: f64 },
    Distribution { entries: Vec<(String, String)>, sure: bool },
    Alpha {
        premise: String,
        implication: String,
        both_questions_sure: Option<bool>,
    },
    Error { error: String },
}

impl Outcome {
    /// Whether this outcome counts as a pass for the exit code.
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Report { report } => report.verdict == Verdict::Verified,
            Outcome::Error { .. } => false,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: CheckRequest,
    pub outcome: Outcome,
}

/// Deterministic report for one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub scenario_digest: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    /// Populated only on request; excluded by default so reports stay
    /// byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn scenario_digest(scn: &Scenario) -> String {
    let mut hasher = Sha256::new();
    hasher.update(scn.to_json().as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn questions(ids: &[String]) -> Vec<Question> {
    ids.iter().map(|q| Question::new(q.clone())).collect()
}

/// Runs every check in file order.
pub fn run_scenario(scn: &Scenario, seed: u64) -> RunReport {
    let digest = scenario_digest(scn);
    let checks = scn
        .checks
        .iter()
        .map(|check| CheckResult {
            check: check.clone(),
            outcome: run_check(scn, check, seed),
        })
        .collect();
    RunReport {
        schema: 1,
        scenario_digest: digest,
        seed,
        checks,
        timing_ms: None,
    }
}

fn report_outcome(r: Result<CheckReport, Error>) -> Outcome {
    match r {
        Ok(report) => Outcome::Report { report },
        Err(e) => Outcome::Error { error: e.to_string() },
    }
}

fn ctx<'a>(scn: &'a Scenario) -> CalibrationCtx<'a, Exact> {
    CalibrationCtx {
        phi1: &scn.sms1,
        phi2: scn.reasoner(),
        psi: &scn.psi,
        interp: &scn.interp,
    }
}

fn score_report(
    name: &str,
    score: Result<smslab_core::calibration::CalibrationScore, Error>,
    epsilon: f64,
) -> Outcome {
    use smslab_core::report::{Conclusion, Condition};
    match score {
        Ok(score) => {
            let conclusion = Conclusion {
                holds: score.verdict_at(epsilon),
                lhs: format!("score [{}, {}]", score.lo, score.hi),
                rhs: format!("epsilon {epsilon}"),
                margin: format!("{}", epsilon - score.hi),
            };
            let conditions = score
                .per_answer
                .iter()
                .map(|(v, lo, hi)| {
                    Condition::ok_with(format!("answer {v}"), format!("divergence [{lo}, {hi}]"))
                })
                .collect();
            Outcome::Report {
                report: CheckReport::assemble(name, conditions, Some(conclusion)),
            }
        }
        Err(e) => Outcome::Error { error: e.to_string() },
    }
}

fn run_check(scn: &Scenario, check: &CheckRequest, seed: u64) -> Outcome {
    let step_or = |s: Option<u32>| s.unwrap_or(scn.step);
    match check {
        CheckRequest::Validate => {
            let mut conditions = Vec::new();
            let mut targets = vec![("sms1", &scn.sms1)];
            if let Some(sms2) = &scn.sms2 {
                targets.push(("sms2", sms2));
            }
            for (label, spec) in targets {
                let report = spec.validate();
                if report.is_valid() {
                    conditions.push(smslab_core::Condition::ok(format!("{label} valid")));
                } else {
                    for v in &report.violations {
                        conditions
                            .push(smslab_core::Condition::fail(label.to_string(), v.to_string()));
                    }
                }
            }
            Outcome::Report {
                report: CheckReport::assemble("validate", conditions, None),
            }
        }
        CheckRequest::NonRepeating { k } => report_outcome(scn.sms1.check_nonrepeating(*k)),
        CheckRequest::BackwardConsistent { kappa } => {
            report_outcome(scn.sms1.check_backward_consistent(*kappa))
        }
        CheckRequest::Superset { step, set } => {
            match scn.sms1.prob_superset(step_or(*step), &text_to_claims(set)) {
                Ok(v) => Outcome::Value {
                    value: render_rational(&v),
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::ExactSet { step, set } => {
            match scn.sms1.prob_exact(step_or(*step), &text_to_claims(set)) {
                Ok(v) => Outcome::Value {
                    value: render_rational(&v),
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Limit { set, tol } => {
            match scn.sms1.limit_prob(&text_to_claims(set), tol) {
                Ok(v) => Outcome::Value {
                    value: format!(
                        "{} in [{}, {}]",
                        render_rational(&v.value),
                        render_rational(&v.lower),
                        render_rational(&v.upper)
                    ),
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Respond {
            step,
            questions: qs,
            set,
        } => {
            match scn
                .sms1
                .response_dist(step_or(*step), &questions(qs), &text_to_claims(set))
            {
                Ok((d, sure)) => Outcome::Distribution {
                    entries: d
                        .iter()
                        .map(|(t, p)| {
                            (
                                t.iter().map(|a| a.0.clone()).collect::<Vec<_>>().join(","),
                                render_rational(p),
                            )
                        })
                        .collect(),
                    sure,
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Collection {
            limit,
            collection,
            extra,
            questions: qs,
        } => {
            let coll: Vec<ClaimSet> = collection.iter().map(|c| text_to_claims(c)).collect();
            let at = if *limit { At::Limit } else { At::Step(scn.step) };
            let qv = qs.as_ref().map(|q| questions(q));
            match scn
                .sms1
                .prob_collection(at, &coll, &text_to_claims(extra), qv.as_deref())
            {
                Ok(b) => Outcome::Value {
                    value: b.to_string(),
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Mc { step, set, samples } => {
            match scn
                .sms1
                .mc_estimate(step_or(*step), &text_to_claims(set), *samples, seed)
            {
                Ok(est) => Outcome::Estimate {
                    estimate: est.estimate,
                    std_error: est.std_error,
                },
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Convexity { trials } => Outcome::Report {
            report: check_convexity(scn.divergence, *trials, seed),
        },
        CheckRequest::Calibrate { question, set } => score_report(
            "calibration",
            calibration_score(
                &ctx(scn),
                scn.step,
                &Question::new(question.clone()),
                &text_to_claims(set),
                scn.divergence,
            ),
            scn.epsilon,
        ),
        CheckRequest::Reduction { question, set } => {
            match single_sms_reduction(
                &scn.sms1,
                scn.step,
                &Question::new(question.clone()),
                &text_to_claims(set),
                scn.divergence,
            ) {
                Ok(out) => {
                    use smslab_core::report::{Conclusion, Condition};
                    let conditions = vec![Condition::from_bool(
                        "reduction bounded by the point-mass score",
                        out.bound_respected,
                        format!(
                            "reduction [{}, {}] vs score [{}, {}]",
                            out.reduction_lo, out.reduction_hi, out.delta_score.lo, out.delta_score.hi
                        ),
                    )];
                    let conclusion = Conclusion {
                        holds: Some(out.bound_respected),
                        lhs: format!("[{}, {}]", out.reduction_lo, out.reduction_hi),
                        rhs: format!("[{}, {}]", out.delta_score.lo, out.delta_score.hi),
                        margin: format!("{}", out.delta_score.hi - out.reduction_hi),
                    };
                    Outcome::Report {
                        report: CheckReport::assemble("reduction", conditions, Some(conclusion)),
                    }
                }
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        CheckRequest::Honest {
            question,
            answer,
            set,
            at_limit,
        } => {
            let at = if *at_limit { At::Limit } else { At::Step(scn.step) };
            report_outcome(is_honest(
                &scn.sms1,
                &scn.psi,
                &scn.interp,
                at,
                &Question::new(question.clone()),
                &Answer::new(answer.clone()),
                &text_to_claims(set),
            ))
        }
        CheckRequest::Embedding => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => match (scn.sms2.as_ref(), ()) {
                (None, _) => Outcome::Error {
                    error: "embedding check needs sms2".into(),
                },
                (Some(sms2), _) => {
                    match verify_embedding(&scn.sms1, sms2, map, scn.step) {
                        Ok(v) => Outcome::Report { report: v.report },
                        Err(e) => Outcome::Error { error: e.to_string() },
                    }
                }
            },
        },
        CheckRequest::EmbedCalibrate { question, set } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => match embed_calibration_score(
                &ctx(scn),
                map,
                scn.step,
                &Question::new(question.clone()),
                &text_to_claims(set),
                scn.divergence,
            ) {
                Ok(score) => score_report(
                    "embed-calibration",
                    Ok(smslab_core::calibration::CalibrationScore {
                        lo: score.lo,
                        hi: score.hi,
                        per_answer: score.per_answer,
                    }),
                    scn.epsilon,
                ),
                Err(e) => Outcome::Error { error: e.to_string() },
            },
        },
        CheckRequest::Discriminating { question, set } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(is_discriminating(
                &ctx(scn),
                map,
                scn.step,
                &Question::new(question.clone()),
                &text_to_claims(set),
            )),
        },
        CheckRequest::Projection { question, set } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(check_projection(
                &ctx(scn),
                map,
                scn.step,
                &Question::new(question.clone()),
                &text_to_claims(set),
                scn.divergence,
            )),
        },
        CheckRequest::Evidence {
            dist,
            question,
            beta,
            paths,
            target,
            permutations,
        } => run_evidence_triple(scn, dist, question, beta, paths, target, *permutations),
        CheckRequest::P73 {
            question,
            beta,
            paths,
            target,
        } => report_outcome(verify_evidence_math(
            &ctx(scn),
            scn.step,
            &EvidenceArgs {
                question: Question::new(question.clone()),
                beta: text_to_claims(beta),
                paths: paths.iter().map(|p| text_to_claims(p)).collect(),
                target: Answer::new(target.clone()),
                epsilon: scn.epsilon,
                divergence: scn.divergence,
                check_embedding: false,
                sweep: true,
            },
        )),
        CheckRequest::P74 {
            question,
            beta,
            paths,
            target,
            no_embed_check,
        } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(verify_evidence_sci(
                &ctx(scn),
                map,
                scn.step,
                &EvidenceArgs {
                    question: Question::new(question.clone()),
                    beta: text_to_claims(beta),
                    paths: paths.iter().map(|p| text_to_claims(p)).collect(),
                    target: Answer::new(target.clone()),
                    epsilon: scn.epsilon,
                    divergence: scn.divergence,
                    check_embedding: !no_embed_check,
                    sweep: true,
                },
            )),
        },
        CheckRequest::P75 {
            question,
            beta,
            paths,
            target,
            no_embed_check,
        } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(verify_evidence_sci_flipped(
                &ctx(scn),
                map,
                scn.step,
                &EvidenceArgs {
                    question: Question::new(question.clone()),
                    beta: text_to_claims(beta),
                    paths: paths.iter().map(|p| text_to_claims(p)).collect(),
                    target: Answer::new(target.clone()),
                    epsilon: scn.epsilon,
                    divergence: scn.divergence,
                    check_embedding: !no_embed_check,
                    sweep: true,
                },
            )),
        },
        CheckRequest::P81 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
        } => report_outcome(verify_abduction_math(
            &ctx(scn),
            scn.step,
            &AbductionArgs {
                qstar: Question::new(qstar.clone()),
                vstar: Answer::new(vstar.clone()),
                qdagger: Question::new(qdagger.clone()),
                vdagger: Answer::new(vdagger.clone()),
                cset: text_to_claims(cset),
                epsilon: scn.epsilon,
                divergence: scn.divergence,
                check_embedding: false,
                sweep: true,
            },
        )),
        CheckRequest::P82 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            no_embed_check,
        } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(verify_abduction_sci_expect(
                &ctx(scn),
                map,
                scn.step,
                &AbductionArgs {
                    qstar: Question::new(qstar.clone()),
                    vstar: Answer::new(vstar.clone()),
                    qdagger: Question::new(qdagger.clone()),
                    vdagger: Answer::new(vdagger.clone()),
                    cset: text_to_claims(cset),
                    epsilon: scn.epsilon,
                    divergence: scn.divergence,
                    check_embedding: !no_embed_check,
                    sweep: true,
                },
            )),
        },
        CheckRequest::P83 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            no_embed_check,
        } => match scn.embedding.as_ref() {
            None => Outcome::Error {
                error: "scenario has no embedding map".into(),
            },
            Some(map) => report_outcome(verify_abduction_sci_project(
                &ctx(scn),
                map,
                scn.step,
                &AbductionArgs {
                    qstar: Question::new(qstar.clone()),
                    vstar: Answer::new(vstar.clone()),
                    qdagger: Question::new(qdagger.clone()),
                    vdagger: Answer::new(vdagger.clone()),
                    cset: text_to_claims(cset),
                    epsilon: scn.epsilon,
                    divergence: scn.divergence,
                    check_embedding: !no_embed_check,
                    sweep: true,
                },
            )),
        },
        CheckRequest::AbductionAlpha {
            dist,
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
        } => run_alpha(scn, dist, qstar, vstar, qdagger, vdagger, cset),
    }
}

fn run_evidence_triple(
    scn: &Scenario,
    dist: &str,
    question: &str,
    beta: &[(String, String)],
    paths: &[Vec<(String, String)>],
    target: &str,
    permutations: bool,
) -> Outcome {
    let beta = text_to_claims(beta);
    let paths: Vec<ClaimSet> = paths.iter().map(|p| text_to_claims(p)).collect();
    let q = Question::new(question.to_string());
    let v = Answer::new(target.to_string());

    let run = |src: &dyn CondSource<Exact>| -> Outcome {
        let scenario = EvidenceScenario {
            source: src,
            beta: &beta,
            paths: &paths,
        };
        let collection = is_evidence_collection(&scenario);
        let nonthwart = is_nonthwarting(&scenario);
        let derived = derive_monotone(&scenario);
        let mut reports = vec![&collection, &nonthwart, &derived];
        let orders;
        if permutations {
            orders = smslab_core::evidence::is_evidence_collection_all_orders(&scenario);
            reports.push(&orders);
        }
        let mut conditions = Vec::new();
        for r in reports {
            conditions.push(smslab_core::Condition::from_bool(
                r.name.clone(),
                r.is_verified(),
                r.summary(),
            ));
            for c in &r.preconditions {
                let mut c = c.clone();
                c.label = format!("{}: {}", r.name, c.label);
                conditions.push(c);
            }
        }
        Outcome::Report {
            report: CheckReport::assemble("evidence", conditions, None),
        }
    };

    match dist {
        "step" => run(&StepSource {
            spec: &scn.sms1,
            step: scn.step,
            question: q,
            target: v,
        }),
        "limit" => match scn.sms1.limit_view() {
            Ok(view) => run(&LimitSource {
                view: &view,
                question: q,
                target: v,
            }),
            Err(e) => Outcome::Error { error: e.to_string() },
        },
        "fn" => {
            let c = ctx(scn);
            let q1s = match c.psi.get(&q) {
                Some(qs) => qs.clone(),
                None => {
                    return Outcome::Error {
                        error: format!("psi undefined at {q}"),
                    }
                }
            };
            match PredictionDist::new(c.phi1, c.phi2, c.psi, c.interp, scn.step, PairGate::Plain) {
                Ok(pd) => run(&FnSource {
                    pd: &pd,
                    question_vec: q1s,
                    target: v,
                }),
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        other => Outcome::Error {
            error: format!("unknown evidence distribution {other}"),
        },
    }
}

fn run_alpha(
    scn: &Scenario,
    dist: &str,
    qstar: &str,
    vstar: &str,
    qdagger: &str,
    vdagger: &str,
    cset: &[(String, String)],
) -> Outcome {
    let qs = Question::new(qstar.to_string());
    let vs = Answer::new(vstar.to_string());
    let qd = Question::new(qdagger.to_string());
    let vd = Answer::new(vdagger.to_string());
    let cset = text_to_claims(cset);

    let outcome = |r: Result<smslab_core::abduction::AbductionAlpha<Exact>, Error>| match r {
        Ok(alpha) => Outcome::Alpha {
            premise: alpha.premise.to_string(),
            implication: alpha.implication.to_string(),
            both_questions_sure: alpha.both_questions_sure,
        },
        Err(e) => Outcome::Error { error: e.to_string() },
    };

    match dist {
        "step" => outcome(abduction_alpha(
            &StepJoint {
                spec: &scn.sms1,
                step: scn.step,
            },
            &qs,
            &vs,
            &qd,
            &vd,
            &cset,
        )),
        "limit" => match scn.sms1.limit_view() {
            Ok(view) => outcome(abduction_alpha(&LimitJoint { view: &view }, &qs, &vs, &qd, &vd, &cset)),
            Err(e) => Outcome::Error { error: e.to_string() },
        },
        "fn" => {
            let c = ctx(scn);
            match PredictionDist::new(c.phi1, c.phi2, c.psi, c.interp, scn.step, PairGate::Plain) {
                Ok(pd) => outcome(abduction_alpha(
                    &FnJoint { pd: &pd, psi: c.psi },
                    &qs,
                    &vs,
                    &qd,
                    &vd,
                    &cset,
                )),
                Err(e) => Outcome::Error { error: e.to_string() },
            }
        }
        other => Outcome::Error {
            error: format!("unknown distribution {other}"),
        },
    }
}
