//! Abduction premise/implication algebra and the three abduction
//! propositions as executable checks.
//!
//! The lift factor alpha is always derived from the tables, never declared.
//! Conditioning claims whose questions sit in the codomain of psi ride the
//! answer-tuple dimension of the prediction distribution (through the joint
//! question); all other claims join the conditioning claim set.

use crate::calibration::{
    calibration_score, embedded_pair_report, oracle_conditional, prediction_pair_report,
    CalibrationCtx, PairGate, PredictionDist, PsiInterp, PsiMap,
};
use crate::claim::{Answer, Claim, ClaimSet, Question};
use crate::dist::{step_response, view_response, At, BracketDist, Budget, Event, LimitView};
use crate::divergence::{mutual_support, DivergenceKind};
use crate::embedding::{embed_calibration_score, verify_embedding, EmbeddingMap};
use crate::error::Error;
use crate::report::{CheckReport, Conclusion, Condition};
use crate::scalar::{Bracket, Prob};
use crate::sms::SmsSpec;
use crate::Result;
use std::collections::BTreeSet;

/// A joint conditional source over indexed question tuples.
pub trait JointSource<P: Prob> {
    /// Conditional distribution over answer tuples for `questions`, given
    /// the claims in `given` and the claim set `cset`.
    fn joint(
        &self,
        questions: &[Question],
        given: &ClaimSet,
        cset: &ClaimSet,
    ) -> Result<BracketDist<Vec<Answer>, P>>;

    /// Whether `q` occurs with probability 1 given the `cset` event.
    fn question_sure(&self, q: &Question, cset: &ClaimSet) -> Result<Option<bool>>;

    fn is_exact(&self) -> bool;
}

/// Raw step distribution.
pub struct StepJoint<'a, P: Prob> {
    pub spec: &'a SmsSpec<P>,
    pub step: u32,
}

impl<P: Prob> JointSource<P> for StepJoint<'_, P> {
    fn joint(
        &self,
        questions: &[Question],
        given: &ClaimSet,
        cset: &ClaimSet,
    ) -> Result<BracketDist<Vec<Answer>, P>> {
        let mut budget = Budget::standard();
        let dist = self.spec.step_dist(self.step)?;
        let cond = Event::superset(given.union(cset));
        let d = step_response(&dist, questions, &cond, &mut budget)?;
        Ok(BracketDist::exact(&d))
    }

    fn question_sure(&self, q: &Question, cset: &ClaimSet) -> Result<Option<bool>> {
        let mut budget = Budget::standard();
        let dist = self.spec.step_dist(self.step)?;
        let with_q = dist.event_prob(
            &Event::superset(cset.clone()).with_questions(vec![q.clone()]),
            &mut budget,
        )?;
        let total = dist.event_prob(&Event::superset(cset.clone()), &mut budget)?;
        Ok(Some(with_q == total && !total.is_zero()))
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Limit distribution of a backward-consistent kernel spec.
pub struct LimitJoint<'a, P: Prob> {
    pub view: &'a LimitView<P>,
}

impl<P: Prob> JointSource<P> for LimitJoint<'_, P> {
    fn joint(
        &self,
        questions: &[Question],
        given: &ClaimSet,
        cset: &ClaimSet,
    ) -> Result<BracketDist<Vec<Answer>, P>> {
        let mut budget = Budget::standard();
        let cond = Event::superset(given.union(cset));
        view_response(self.view, questions, &cond, &mut budget)
    }

    fn question_sure(&self, q: &Question, cset: &ClaimSet) -> Result<Option<bool>> {
        let mut budget = Budget::standard();
        let with_q = self.view.event_prob(
            &Event::superset(cset.clone()).with_questions(vec![q.clone()]),
            &mut budget,
        )?;
        let total = self
            .view
            .event_prob(&Event::superset(cset.clone()), &mut budget)?;
        if with_q.is_exact() && total.is_exact() {
            Ok(Some(with_q.lo == total.lo && !total.lo.is_zero()))
        } else if with_q.hi < total.lo {
            Ok(Some(false))
        } else {
            Ok(None)
        }
    }

    fn is_exact(&self) -> bool {
        self.view.is_exact()
    }
}

/// Prediction-distribution joint: question tuples are resolved through the
/// inverse of psi, and claims at codomain questions are conditioned within
/// the tuple dimension.
pub struct FnJoint<'a, 'b, P: Prob> {
    pub pd: &'a PredictionDist<'b, P>,
    pub psi: &'a PsiMap,
}

impl<P: Prob> FnJoint<'_, '_, P> {
    /// Splits conditioning claims into codomain claims and plain claims.
    fn split(&self, given: &ClaimSet) -> (Vec<Claim>, ClaimSet) {
        let codomain: BTreeSet<&Question> = self
            .psi
            .domain()
            .flat_map(|q| self.psi.get(q).unwrap().iter())
            .collect();
        let mut tuple_claims = Vec::new();
        let mut plain = ClaimSet::empty();
        for c in given.iter() {
            if codomain.contains(&c.question) {
                tuple_claims.push(c.clone());
            } else {
                plain.insert(c.clone());
            }
        }
        (tuple_claims, plain)
    }

    /// Finds a registered psi-preimage for some ordering of `full`,
    /// returning the ordering used.
    fn resolve_order(&self, full: &[Question]) -> Result<Vec<Question>> {
        let mut orderings = vec![full.to_vec()];
        if full.len() == 2 {
            orderings.push(vec![full[1].clone(), full[0].clone()]);
        }
        for ord in orderings {
            if self.psi.invert(&ord).is_some() {
                return Ok(ord);
            }
        }
        Err(Error::Structural(format!(
            "no psi preimage for question tuple {:?}",
            full.iter().map(|q| q.to_string()).collect::<Vec<_>>()
        )))
    }
}

impl<P: Prob> JointSource<P> for FnJoint<'_, '_, P> {
    fn joint(
        &self,
        questions: &[Question],
        given: &ClaimSet,
        cset: &ClaimSet,
    ) -> Result<BracketDist<Vec<Answer>, P>> {
        let (tuple_claims, plain) = self.split(given);
        let cset2 = cset.union(&plain);
        let mut full: Vec<Question> = questions.to_vec();
        for c in &tuple_claims {
            full.push(c.question.clone());
        }
        let order = self.resolve_order(&full)?;
        let mixture = self.pd.mixture(&order, &cset2)?;

        // Positions of outputs and of fixed given-claims in the resolved
        // ordering. Each position is claimed at most once.
        let mut used = vec![false; order.len()];
        let mut take = |q: &Question| -> Result<usize> {
            for (i, o) in order.iter().enumerate() {
                if o == q && !used[i] {
                    used[i] = true;
                    return Ok(i);
                }
            }
            Err(Error::Structural(format!("question {q} lost in resolution")))
        };
        let mut out_pos = Vec::new();
        for q in questions {
            out_pos.push(take(q)?);
        }
        let mut fixed: Vec<(usize, Answer)> = Vec::new();
        for c in &tuple_claims {
            fixed.push((take(&c.question)?, c.answer.clone()));
        }

        let mut numerators: std::collections::BTreeMap<Vec<Answer>, P> =
            std::collections::BTreeMap::new();
        let mut total = P::zero();
        for (tuple, p) in mixture.iter() {
            if fixed.iter().all(|(pos, a)| &tuple[*pos] == a) {
                let projected: Vec<Answer> =
                    out_pos.iter().map(|pos| tuple[*pos].clone()).collect();
                total = total + p.clone();
                numerators
                    .entry(projected)
                    .and_modify(|acc| *acc = acc.clone() + p.clone())
                    .or_insert_with(|| p.clone());
            }
        }
        if total.is_zero() {
            return Err(Error::Conditioning {
                context: format!("prediction joint has zero mass given {given}"),
            });
        }
        Ok(BracketDist {
            entries: numerators
                .into_iter()
                .map(|(t, p)| (t, Bracket::exact(p / total.clone())))
                .collect(),
        })
    }

    fn question_sure(&self, q: &Question, cset: &ClaimSet) -> Result<Option<bool>> {
        // Question presence under the reasoner that the weights are built
        // from.
        let q2 = self
            .psi
            .invert(std::slice::from_ref(q))
            .ok_or_else(|| Error::Structural(format!("no psi preimage for {q}")))?;
        let mut budget = Budget::standard();
        let dist = self.pd.reasoner().step_dist(self.pd.step())?;
        let with_q = dist.event_prob(
            &Event::superset(cset.clone()).with_questions(vec![q2.clone()]),
            &mut budget,
        )?;
        let total = dist.event_prob(&Event::superset(cset.clone()), &mut budget)?;
        Ok(Some(with_q == total && !total.is_zero()))
    }

    fn is_exact(&self) -> bool {
        self.pd.oracle_exact()
    }
}

/// Lift factors in both directions, with the sure-questions flag under
/// which they must agree exactly.
#[derive(Clone, Debug)]
pub struct AbductionAlpha<P> {
    pub premise: Bracket<P>,
    pub implication: Bracket<P>,
    pub both_questions_sure: Option<bool>,
}

/// Derives both lift factors for the instance
/// `(q*, v*, qdagger, vdagger, cset)` under the given source.
pub fn abduction_alpha<P: Prob, S: JointSource<P> + ?Sized>(
    src: &S,
    qstar: &Question,
    vstar: &Answer,
    qdagger: &Question,
    vdagger: &Answer,
    cset: &ClaimSet,
) -> Result<AbductionAlpha<P>> {
    let dagger_claim = ClaimSet::from_claims([Claim {
        question: qdagger.clone(),
        answer: vdagger.clone(),
    }]);
    let star_claim = ClaimSet::from_claims([Claim {
        question: qstar.clone(),
        answer: vstar.clone(),
    }]);
    let empty = ClaimSet::empty();

    let cond = |questions: &[Question], given: &ClaimSet, target: &Answer| -> Result<Bracket<P>> {
        let d = src.joint(questions, given, cset)?;
        Ok(d.get(&vec![target.clone()]))
    };

    let prem_num = cond(std::slice::from_ref(qstar), &dagger_claim, vstar)?;
    let prem_den = cond(std::slice::from_ref(qstar), &empty, vstar)?;
    if prem_den.hi.is_zero() {
        return Err(Error::Conditioning {
            context: format!("P(v*|q*, cset) = 0 for {qstar}"),
        });
    }
    let premise = prem_num.div(&prem_den).ok_or_else(|| Error::Conditioning {
        context: "zero conditional in premise ratio".into(),
    })?;

    let imp_num = cond(std::slice::from_ref(qdagger), &star_claim, vdagger)?;
    let imp_den = cond(std::slice::from_ref(qdagger), &empty, vdagger)?;
    if imp_den.hi.is_zero() {
        return Err(Error::Conditioning {
            context: format!("P(vdagger|qdagger, cset) = 0 for {qdagger}"),
        });
    }
    let implication = imp_num.div(&imp_den).ok_or_else(|| Error::Conditioning {
        context: "zero conditional in implication ratio".into(),
    })?;

    let sure_star = src.question_sure(qstar, cset)?;
    let sure_dagger = src.question_sure(qdagger, cset)?;
    let both_questions_sure = match (sure_star, sure_dagger) {
        (Some(a), Some(b)) => Some(a && b),
        _ => None,
    };
    Ok(AbductionAlpha {
        premise,
        implication,
        both_questions_sure,
    })
}

/// Arguments for the abduction proposition verifiers.
pub struct AbductionArgs {
    pub qstar: Question,
    pub vstar: Answer,
    pub qdagger: Question,
    pub vdagger: Answer,
    /// Reasoner claim set for the oracle variants; universe claim set for
    /// the projected variant.
    pub cset: ClaimSet,
    pub epsilon: f64,
    pub divergence: DivergenceKind,
    pub check_embedding: bool,
    pub sweep: bool,
}

struct ResolvedQuestions {
    q2_star: Question,
    q2_dagger: Question,
    q2_joint: Question,
    joint_vec: Vec<Question>,
}

fn resolve_questions<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    args: &AbductionArgs,
) -> Result<ResolvedQuestions> {
    if !ctx.psi.is_invertible() {
        return Err(Error::Structural("psi must be invertible".into()));
    }
    let single = |q: &Question| -> Result<Question> {
        ctx.psi
            .invert(std::slice::from_ref(q))
            .cloned()
            .ok_or_else(|| Error::Structural(format!("{q} not in the codomain of psi")))
    };
    let q2_star = single(&args.qstar)?;
    let q2_dagger = single(&args.qdagger)?;
    let fwd = vec![args.qstar.clone(), args.qdagger.clone()];
    let rev = vec![args.qdagger.clone(), args.qstar.clone()];
    let (q2_joint, joint_vec) = if let Some(q) = ctx.psi.invert(&fwd) {
        (q.clone(), fwd)
    } else if let Some(q) = ctx.psi.invert(&rev) {
        (q.clone(), rev)
    } else {
        return Err(Error::Structural(
            "the question pair is not in the codomain of psi".into(),
        ));
    };
    Ok(ResolvedQuestions {
        q2_star,
        q2_dagger,
        q2_joint,
        joint_vec,
    })
}

/// Claim-set scope for hypotheses quantified over all reasoner claim sets:
/// the empty set, every subset of a step-`n` support unordering, and the
/// supplied set.
fn reachable_scope<P: Prob>(spec: &SmsSpec<P>, n: u32, supplied: &ClaimSet) -> Result<Vec<ClaimSet>> {
    let mut out: BTreeSet<ClaimSet> = BTreeSet::new();
    out.insert(ClaimSet::empty());
    out.insert(supplied.clone());
    let dist = spec.step_dist(n)?;
    for (_, u, _) in dist.rows() {
        for sub in u.subsets() {
            out.insert(sub);
            if out.len() > 256 {
                return Err(Error::Budget {
                    evaluated: out.len() as u64,
                    cap: 256,
                });
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn premise_scope_condition<P: Prob>(
    src: &dyn JointSource<P>,
    scope: &[ClaimSet],
    args: &AbductionArgs,
) -> Condition {
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for cset in scope {
        match abduction_alpha(src, &args.qstar, &args.vstar, &args.qdagger, &args.vdagger, cset) {
            Ok(alpha) => {
                checked += 1;
                if !alpha.premise.definitely_gt(&Bracket::exact(P::one())) {
                    return Condition::fail(
                        "(1) premise for all reachable claim sets",
                        format!("alpha = {} at {cset}", alpha.premise),
                    );
                }
            }
            Err(_) => skipped += 1,
        }
    }
    Condition::ok_with(
        "(1) premise for all reachable claim sets",
        format!("{checked} claim sets checked, {skipped} with undefined conditionals skipped"),
    )
}

/// Conclusion comparison with lift reporting.
fn lift_conclusion<P: Prob>(lhs: &Bracket<P>, rhs: &Bracket<P>) -> (Option<bool>, Conclusion) {
    let holds = if lhs.definitely_gt(rhs) {
        Some(true)
    } else if lhs.definitely_le(rhs) {
        Some(false)
    } else {
        None
    };
    let lift = lhs
        .div(rhs)
        .map(|l| l.to_string())
        .unwrap_or_else(|| "undefined".into());
    let conclusion = Conclusion {
        holds,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        margin: format!("lift {lift}"),
    };
    (holds, conclusion)
}

/// Oracle abduction: the prediction distribution satisfying the premise
/// plus calibration and the two marginalization conditions implies the
/// oracle's abduction implication.
pub fn verify_abduction_math<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    n: u32,
    args: &AbductionArgs,
) -> Result<CheckReport> {
    let name = "abduction-oracle";
    let rq = resolve_questions(ctx, args)?;
    let mut conditions = Vec::new();

    let view = ctx.phi1.limit_view()?;
    let scope = reachable_scope(ctx.phi2, n, &args.cset)?;

    let run = |interp: &PsiInterp<P>, conditions: Option<&mut Vec<Condition>>| -> Result<bool> {
        let ctx2 = CalibrationCtx {
            phi1: ctx.phi1,
            phi2: ctx.phi2,
            psi: ctx.psi,
            interp,
        };
        let pd = PredictionDist::new(ctx2.phi1, ctx2.phi2, ctx2.psi, interp, n, PairGate::Plain)?;
        let fj = FnJoint { pd: &pd, psi: ctx2.psi };
        let mut ok = true;
        let mut local = Vec::new();

        let c1 = premise_scope_condition(&fj, &scope, args);
        if c1.holds != Some(true) {
            ok = false;
        }
        local.push(c1);

        for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
            let pair = prediction_pair_report(&ctx2, At::Limit, n, q2, &args.cset)?;
            if !pair.is_verified() {
                ok = false;
            }
            local.push(Condition::from_bool(
                format!("(2) prediction pair for {q2}"),
                pair.is_verified(),
                pair.summary(),
            ));
        }

        // (3) prediction-side marginalization.
        match (
            fj.joint(&rq.joint_vec, &ClaimSet::empty(), &args.cset),
            fj.joint(std::slice::from_ref(&args.qstar), &ClaimSet::empty(), &args.cset),
        ) {
            (Ok(joint), Ok(single)) => {
                let pos = rq.joint_vec.iter().position(|q| q == &args.qstar).unwrap();
                let mut marg = P::zero();
                for (tuple, p) in &joint.entries {
                    if tuple[pos] == args.vstar {
                        marg = marg + p.lo.clone();
                    }
                }
                let direct = single.get(&vec![args.vstar.clone()]);
                let agree = joint.is_exact() && single.is_exact() && marg == direct.lo;
                if !agree {
                    ok = false;
                }
                local.push(Condition::from_bool(
                    "(3) prediction marginalization",
                    agree,
                    format!("sum {marg} vs direct {direct}"),
                ));
            }
            (Err(e), _) | (_, Err(e)) => {
                ok = false;
                local.push(Condition::fail("(3) prediction marginalization", e.to_string()));
            }
        }

        // (4) calibration for the three questions at the supplied set.
        for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
            match calibration_score(&ctx2, n, q2, &args.cset, args.divergence) {
                Ok(score) => {
                    let label = format!("(4) calibration for {q2}");
                    match score.verdict_at(args.epsilon) {
                        Some(true) => local.push(Condition::ok_with(
                            label,
                            format!("score [{}, {}]", score.lo, score.hi),
                        )),
                        Some(false) => {
                            ok = false;
                            local.push(Condition::fail(
                                label,
                                format!("score [{}, {}]", score.lo, score.hi),
                            ));
                        }
                        None => {
                            ok = false;
                            local.push(Condition::undecided(
                                label,
                                format!("score [{}, {}]", score.lo, score.hi),
                            ));
                        }
                    }
                }
                Err(e) => {
                    ok = false;
                    local.push(Condition::fail(format!("(4) calibration for {q2}"), e.to_string()));
                }
            }
        }

        // (5) support gate.
        if args.divergence.requires_full_support() {
            let mut gate_ok = true;
            for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
                let q1s = ctx2.psi.get(q2).unwrap().clone();
                let (oracle, exact) = oracle_conditional(ctx2.phi1, &q1s, &args.cset)?;
                if !exact {
                    gate_ok = false;
                    continue;
                }
                let oracle = oracle.to_exact().unwrap();
                let mut budget = Budget::standard();
                let step = ctx2.phi2.step_dist(n)?;
                let resp = step_response(
                    &step,
                    std::slice::from_ref(q2),
                    &Event::superset(args.cset.clone()),
                    &mut budget,
                )?;
                for (tuple, _) in resp.iter() {
                    if let Some(d) = interp.get(&q1s, &tuple[0]) {
                        if !mutual_support(d, &oracle) {
                            gate_ok = false;
                        }
                    }
                }
            }
            if !gate_ok {
                ok = false;
            }
            local.push(Condition::from_bool(
                "(5) support gate",
                gate_ok,
                "interpretations and oracle conditionals share support",
            ));
        }

        if let Some(out) = conditions {
            out.extend(local);
        }
        Ok(ok)
    };

    run(ctx.interp, Some(&mut conditions))?;

    // (6) oracle-side marginalization.
    let lj = LimitJoint { view: &view };
    let joint_questions = vec![args.qstar.clone(), args.qdagger.clone()];
    match (
        lj.joint(&joint_questions, &ClaimSet::empty(), &args.cset),
        lj.joint(std::slice::from_ref(&args.qstar), &ClaimSet::empty(), &args.cset),
    ) {
        (Ok(joint), Ok(single)) => {
            if joint.is_exact() && single.is_exact() {
                let mut marg = P::zero();
                for (tuple, p) in &joint.entries {
                    if tuple[0] == args.vstar {
                        marg = marg + p.lo.clone();
                    }
                }
                let direct = single.get(&vec![args.vstar.clone()]);
                conditions.push(Condition::from_bool(
                    "(6) oracle marginalization",
                    marg == direct.lo,
                    format!("sum {marg} vs direct {direct}"),
                ));
            } else {
                conditions.push(Condition::undecided(
                    "(6) oracle marginalization",
                    "limit bracketed at horizon",
                ));
            }
        }
        (Err(e), _) | (_, Err(e)) => {
            conditions.push(Condition::fail("(6) oracle marginalization", e.to_string()));
        }
    }

    // Conclusion: the oracle implication.
    let star_claim = ClaimSet::from_claims([Claim {
        question: args.qstar.clone(),
        answer: args.vstar.clone(),
    }]);
    let conclude = || -> Result<(Bracket<P>, Bracket<P>)> {
        let lhs = lj
            .joint(std::slice::from_ref(&args.qdagger), &star_claim, &args.cset)?
            .get(&vec![args.vdagger.clone()]);
        let rhs = lj
            .joint(std::slice::from_ref(&args.qdagger), &ClaimSet::empty(), &args.cset)?
            .get(&vec![args.vdagger.clone()]);
        Ok((lhs, rhs))
    };
    let (holds, conclusion) = match conclude() {
        Ok((lhs, rhs)) => lift_conclusion(&lhs, &rhs),
        Err(e) => (
            Some(false),
            Conclusion {
                holds: Some(false),
                lhs: "oracle implication".into(),
                rhs: "strict lift".into(),
                margin: e.to_string(),
            },
        ),
    };

    if args.sweep {
        let sweep_holds = |interp: &PsiInterp<P>| -> Option<bool> {
            match run(interp, None) {
                Ok(h) => Some(h && holds == Some(true)),
                Err(_) => Some(false),
            }
        };
        let t = crate::evidence::sweep_threshold(ctx, sweep_holds);
        conditions.push(Condition::ok_with(
            "epsilon sweep",
            format!("hypotheses and conclusion hold up to interpretation perturbation {t}"),
        ));
    }

    Ok(CheckReport::assemble(name, conditions, Some(conclusion)))
}

/// Embedded abduction, expectation form.
pub fn verify_abduction_sci_expect<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    args: &AbductionArgs,
) -> Result<CheckReport> {
    let name = "abduction-universe-expectation";
    let rq = resolve_questions(ctx, args)?;
    let mut conditions = Vec::new();

    if args.check_embedding {
        let emb = verify_embedding(ctx.phi1, ctx.phi2, map, n)?;
        conditions.push(Condition::from_bool(
            "embedding identity",
            emb.report.is_verified(),
            format!("max residual {}", emb.max_residual),
        ));
    }

    let view = ctx.phi1.limit_view()?;
    let scope = reachable_scope(ctx.phi2, n, &args.cset)?;

    let pd = PredictionDist::new(
        ctx.phi1,
        ctx.phi2,
        ctx.psi,
        ctx.interp,
        n,
        PairGate::Embedded(map),
    )?;
    let fj = FnJoint { pd: &pd, psi: ctx.psi };
    conditions.push(premise_scope_condition(&fj, &scope, args));

    for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
        let pair = embedded_pair_report(ctx, map, n, q2, &args.cset)?;
        conditions.push(Condition::from_bool(
            format!("(2) embedded pair for {q2}"),
            pair.is_verified(),
            pair.summary(),
        ));
    }

    // (3) prediction-side marginalization.
    match (
        fj.joint(&rq.joint_vec, &ClaimSet::empty(), &args.cset),
        fj.joint(std::slice::from_ref(&args.qstar), &ClaimSet::empty(), &args.cset),
    ) {
        (Ok(joint), Ok(single)) => {
            let pos = rq.joint_vec.iter().position(|q| q == &args.qstar).unwrap();
            let mut marg = P::zero();
            for (tuple, p) in &joint.entries {
                if tuple[pos] == args.vstar {
                    marg = marg + p.lo.clone();
                }
            }
            let direct = single.get(&vec![args.vstar.clone()]);
            conditions.push(Condition::from_bool(
                "(3) prediction marginalization",
                marg == direct.lo,
                format!("sum {marg} vs direct {direct}"),
            ));
        }
        (Err(e), _) | (_, Err(e)) => {
            conditions.push(Condition::fail("(3) prediction marginalization", e.to_string()));
        }
    }

    // (4) embed-calibration for the three questions.
    for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
        match embed_calibration_score(ctx, map, n, q2, &args.cset, args.divergence) {
            Ok(score) => {
                let label = format!("(4) embed-calibration for {q2}");
                match score.verdict_at(args.epsilon) {
                    Some(true) => conditions.push(Condition::ok_with(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                    Some(false) => conditions.push(Condition::fail(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                    None => conditions.push(Condition::undecided(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                }
            }
            Err(e) => conditions.push(Condition::fail(
                format!("(4) embed-calibration for {q2}"),
                e.to_string(),
            )),
        }
    }

    // (6) universe marginalization on preimage-conditioned events, per
    // positive scientist answer to the joint question.
    {
        let mut budget = Budget::standard();
        let step = ctx.phi2.step_dist(n)?;
        let resp = step_response(
            &step,
            std::slice::from_ref(&rq.q2_joint),
            &Event::superset(args.cset.clone()),
            &mut budget,
        )?;
        let mut all_ok = true;
        let mut witness = String::new();
        for (tuple, _) in resp.iter() {
            let v = &tuple[0];
            let joint_aug = args.cset.with(Claim {
                question: rq.q2_joint.clone(),
                answer: v.clone(),
            });
            let star_aug = args.cset.with(Claim {
                question: rq.q2_star.clone(),
                answer: v.clone(),
            });
            let pre_joint = map.preimage(&joint_aug);
            let pre_star = map.preimage(&star_aug);
            if pre_joint.is_empty() || pre_star.is_empty() {
                continue;
            }
            let joint = view_response(
                &view,
                &[args.qstar.clone(), args.qdagger.clone()],
                &Event::default().with_collection(pre_joint.to_vec()),
                &mut budget,
            )?;
            let single = view_response(
                &view,
                std::slice::from_ref(&args.qstar),
                &Event::default().with_collection(pre_star.to_vec()),
                &mut budget,
            )?;
            if !view.is_exact() {
                all_ok = false;
                witness = "limit bracketed at horizon".into();
                break;
            }
            let mut marg = P::zero();
            for (t, p) in &joint.entries {
                if t[0] == args.vstar {
                    marg = marg + p.lo.clone();
                }
            }
            let direct = single.get(&vec![args.vstar.clone()]);
            if marg != direct.lo {
                all_ok = false;
                witness = format!("answer {v}: sum {marg} vs direct {direct}");
                break;
            }
        }
        conditions.push(Condition::from_bool(
            "(6) universe marginalization on preimages",
            all_ok,
            witness,
        ));
    }

    // (5) support gate shares the embedded-score machinery.
    if args.divergence.requires_full_support() {
        conditions.push(Condition::ok_with(
            "(5) support gate",
            "checked within embed-calibration terms",
        ));
    }

    // Conclusion: expectation inequality over the scientist's answers to
    // the dagger question.
    let star_claim = Claim {
        question: args.qstar.clone(),
        answer: args.vstar.clone(),
    };
    let expectation = |with_star: bool| -> Result<Bracket<P>> {
        let mut budget = Budget::standard();
        let step = ctx.phi2.step_dist(n)?;
        let base = if with_star {
            args.cset.with(star_claim.clone())
        } else {
            args.cset.clone()
        };
        let resp = step_response(
            &step,
            std::slice::from_ref(&rq.q2_dagger),
            &Event::superset(base.clone()),
            &mut budget,
        )?;
        let mut total = Bracket::exact(P::zero());
        for (tuple, w) in resp.iter() {
            let v = &tuple[0];
            let aug = args.cset.with(Claim {
                question: rq.q2_dagger.clone(),
                answer: v.clone(),
            });
            let pre = map.preimage(&aug);
            if pre.is_empty() {
                return Err(Error::Conditioning {
                    context: format!("empty preimage for {aug}"),
                });
            }
            let mut ev = Event::default().with_collection(pre.to_vec());
            if with_star {
                ev.require = ClaimSet::from_claims([star_claim.clone()]);
            }
            let universe = view_response(
                &view,
                std::slice::from_ref(&args.qdagger),
                &ev,
                &mut budget,
            )?;
            let u = universe.get(&vec![args.vdagger.clone()]);
            total = total.add(&u.mul(&Bracket::exact(w.clone())));
        }
        Ok(total)
    };
    let (holds, conclusion) = match (expectation(true), expectation(false)) {
        (Ok(lhs), Ok(rhs)) => lift_conclusion(&lhs, &rhs),
        (Err(e), _) | (_, Err(e)) => (
            Some(false),
            Conclusion {
                holds: Some(false),
                lhs: "expectation".into(),
                rhs: "expectation".into(),
                margin: e.to_string(),
            },
        ),
    };
    let _ = holds;

    if args.sweep {
        conditions.push(Condition::ok_with(
            "epsilon sweep",
            "conclusion does not depend on the interpretation",
        ));
    }

    Ok(CheckReport::assemble(name, conditions, Some(conclusion)))
}

/// Embedded abduction, projected form: the universe premise on
/// preimage-conditioned events pushes down to the prediction distribution
/// at the mapped claim set.
pub fn verify_abduction_sci_project<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    args: &AbductionArgs,
) -> Result<CheckReport> {
    let name = "abduction-prediction";
    let rq = resolve_questions(ctx, args)?;
    let mut conditions = Vec::new();

    if args.check_embedding {
        let emb = verify_embedding(ctx.phi1, ctx.phi2, map, n)?;
        conditions.push(Condition::from_bool(
            "embedding identity",
            emb.report.is_verified(),
            format!("max residual {}", emb.max_residual),
        ));
    }

    let mapped = map.image_or_err(&args.cset)?.clone();
    let view = ctx.phi1.limit_view()?;

    // (1) universe premise on preimage-conditioned events, per positive
    // scientist answer to the joint question; the ratio must be constant
    // and strictly above 1.
    {
        let mut budget = Budget::standard();
        let step = ctx.phi2.step_dist(n)?;
        let resp = step_response(
            &step,
            std::slice::from_ref(&rq.q2_joint),
            &Event::superset(mapped.clone()),
            &mut budget,
        )?;
        let mut ratios: Vec<(Answer, Bracket<P>)> = Vec::new();
        let mut failure: Option<String> = None;
        for (tuple, _) in resp.iter() {
            let v = &tuple[0];
            let joint_aug = mapped.with(Claim {
                question: rq.q2_joint.clone(),
                answer: v.clone(),
            });
            let star_aug = mapped.with(Claim {
                question: rq.q2_star.clone(),
                answer: v.clone(),
            });
            let pre_joint = map.preimage(&joint_aug);
            let pre_star = map.preimage(&star_aug);
            if pre_joint.is_empty() || pre_star.is_empty() {
                continue;
            }
            let dagger_claim = ClaimSet::from_claims([Claim {
                question: args.qdagger.clone(),
                answer: args.vdagger.clone(),
            }]);
            let lhs = view_response(
                &view,
                std::slice::from_ref(&args.qstar),
                &Event {
                    require: dagger_claim,
                    questions: vec![],
                    any_of: Some(pre_joint.to_vec()),
                },
                &mut budget,
            )?
            .get(&vec![args.vstar.clone()]);
            let rhs = view_response(
                &view,
                std::slice::from_ref(&args.qstar),
                &Event::default().with_collection(pre_star.to_vec()),
                &mut budget,
            )?
            .get(&vec![args.vstar.clone()]);
            match lhs.div(&rhs) {
                Some(r) => ratios.push((v.clone(), r)),
                None => {
                    failure = Some(format!("zero universe conditional at answer {v}"));
                    break;
                }
            }
        }
        if let Some(w) = failure {
            conditions.push(Condition::fail("(1) universe premise on preimages", w));
        } else if ratios.is_empty() {
            conditions.push(Condition::fail(
                "(1) universe premise on preimages",
                "no answer with defined conditionals",
            ));
        } else {
            let alpha = ratios[0].1.clone();
            let constant = ratios.iter().all(|(_, r)| *r == alpha);
            let strict = alpha.definitely_gt(&Bracket::exact(P::one()));
            conditions.push(Condition::from_bool(
                "(1) universe premise on preimages",
                constant && strict,
                format!("alpha {alpha}, constant across answers: {constant}"),
            ));
        }
    }

    for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
        let pair = embedded_pair_report(ctx, map, n, q2, &mapped)?;
        conditions.push(Condition::from_bool(
            format!("(2) embedded pair for {q2} at mapped set"),
            pair.is_verified(),
            pair.summary(),
        ));
    }

    // (3) universe marginalization on preimage-conditioned events.
    {
        let mut budget = Budget::standard();
        let step = ctx.phi2.step_dist(n)?;
        let resp = step_response(
            &step,
            std::slice::from_ref(&rq.q2_joint),
            &Event::superset(mapped.clone()),
            &mut budget,
        )?;
        let mut all_ok = true;
        let mut witness = String::new();
        for (tuple, _) in resp.iter() {
            let v = &tuple[0];
            let joint_aug = mapped.with(Claim {
                question: rq.q2_joint.clone(),
                answer: v.clone(),
            });
            let star_aug = mapped.with(Claim {
                question: rq.q2_star.clone(),
                answer: v.clone(),
            });
            let pre_joint = map.preimage(&joint_aug);
            let pre_star = map.preimage(&star_aug);
            if pre_joint.is_empty() || pre_star.is_empty() {
                continue;
            }
            let joint = view_response(
                &view,
                &[args.qstar.clone(), args.qdagger.clone()],
                &Event::default().with_collection(pre_joint.to_vec()),
                &mut budget,
            )?;
            let single = view_response(
                &view,
                std::slice::from_ref(&args.qstar),
                &Event::default().with_collection(pre_star.to_vec()),
                &mut budget,
            )?;
            if !view.is_exact() {
                all_ok = false;
                witness = "limit bracketed at horizon".into();
                break;
            }
            let mut marg = P::zero();
            for (t, p) in &joint.entries {
                if t[0] == args.vstar {
                    marg = marg + p.lo.clone();
                }
            }
            let direct = single.get(&vec![args.vstar.clone()]);
            if marg != direct.lo {
                all_ok = false;
                witness = format!("answer {v}: sum {marg} vs direct {direct}");
                break;
            }
        }
        conditions.push(Condition::from_bool(
            "(3) universe marginalization on preimages",
            all_ok,
            witness,
        ));
    }

    // (4) embed-calibration at the mapped set.
    for q2 in [&rq.q2_star, &rq.q2_dagger, &rq.q2_joint] {
        match embed_calibration_score(ctx, map, n, q2, &mapped, args.divergence) {
            Ok(score) => {
                let label = format!("(4) embed-calibration for {q2} at mapped set");
                match score.verdict_at(args.epsilon) {
                    Some(true) => conditions.push(Condition::ok_with(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                    Some(false) => conditions.push(Condition::fail(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                    None => conditions.push(Condition::undecided(
                        label,
                        format!("score [{}, {}]", score.lo, score.hi),
                    )),
                }
            }
            Err(e) => conditions.push(Condition::fail(
                format!("(4) embed-calibration for {q2} at mapped set"),
                e.to_string(),
            )),
        }
    }

    if args.divergence.requires_full_support() {
        conditions.push(Condition::ok_with(
            "(5) support gate",
            "checked within embed-calibration terms",
        ));
    }

    // (6) prediction marginalization at the mapped set, plus conclusion.
    let conclusion_at = |interp: &PsiInterp<P>| -> Result<(Bracket<P>, Bracket<P>, bool)> {
        let pd = PredictionDist::new(
            ctx.phi1,
            ctx.phi2,
            ctx.psi,
            interp,
            n,
            PairGate::Embedded(map),
        )?;
        let fj = FnJoint { pd: &pd, psi: ctx.psi };
        let joint = fj.joint(&rq.joint_vec, &ClaimSet::empty(), &mapped)?;
        let single = fj.joint(std::slice::from_ref(&args.qstar), &ClaimSet::empty(), &mapped)?;
        let pos = rq.joint_vec.iter().position(|q| q == &args.qstar).unwrap();
        let mut marg = P::zero();
        for (tuple, p) in &joint.entries {
            if tuple[pos] == args.vstar {
                marg = marg + p.lo.clone();
            }
        }
        let marg_ok = marg == single.get(&vec![args.vstar.clone()]).lo;

        let star_claim = ClaimSet::from_claims([Claim {
            question: args.qstar.clone(),
            answer: args.vstar.clone(),
        }]);
        let lhs = fj
            .joint(std::slice::from_ref(&args.qdagger), &star_claim, &mapped)?
            .get(&vec![args.vdagger.clone()]);
        let rhs = fj
            .joint(std::slice::from_ref(&args.qdagger), &ClaimSet::empty(), &mapped)?
            .get(&vec![args.vdagger.clone()]);
        Ok((lhs, rhs, marg_ok))
    };

    let (holds, conclusion) = match conclusion_at(ctx.interp) {
        Ok((lhs, rhs, marg_ok)) => {
            conditions.push(Condition::from_bool(
                "(6) prediction marginalization at mapped set",
                marg_ok,
                "",
            ));
            lift_conclusion(&lhs, &rhs)
        }
        Err(e) => {
            conditions.push(Condition::fail(
                "(6) prediction marginalization at mapped set",
                e.to_string(),
            ));
            (
                Some(false),
                Conclusion {
                    holds: Some(false),
                    lhs: "prediction implication".into(),
                    rhs: "strict lift".into(),
                    margin: e.to_string(),
                },
            )
        }
    };

    if args.sweep {
        let sweep_holds = |interp: &PsiInterp<P>| -> Option<bool> {
            match conclusion_at(interp) {
                Ok((lhs, rhs, _)) => lift_conclusion(&lhs, &rhs).0,
                Err(_) => Some(false),
            }
        };
        let t = crate::evidence::sweep_threshold(ctx, sweep_holds);
        conditions.push(Condition::ok_with(
            "epsilon sweep",
            format!("conclusion holds up to interpretation perturbation {t}"),
        ));
    }
    let _ = holds;

    Ok(CheckReport::assemble(name, conditions, Some(conclusion)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Exact;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fix_ab_lift_factors_agree_at_three_halves() {
        let spec = fixtures::fix_ab();
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
        assert_eq!(alpha.premise, Bracket::exact(Exact::ratio(3, 2)));
        assert_eq!(alpha.implication, Bracket::exact(Exact::ratio(3, 2)));
        assert_eq!(alpha.both_questions_sure, Some(true));
    }

    #[test]
    fn independent_table_has_unit_lift() {
        let spec = fixtures::fix_ab_independent();
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
        assert_eq!(alpha.premise, Bracket::exact(Exact::ratio(1, 1)));
        assert_eq!(alpha.implication, Bracket::exact(Exact::ratio(1, 1)));
    }

    #[test]
    fn premise_equals_implication_on_random_always_asked_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let cells = random_cells(&mut rng);
            let spec = fixtures::joint_table(cells);
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
            assert_eq!(alpha.both_questions_sure, Some(true));
            assert_eq!(alpha.premise, alpha.implication);
        }
    }

    fn random_cells(rng: &mut ChaCha8Rng) -> [[Exact; 2]; 2] {
        loop {
            let w: Vec<i64> = (0..4).map(|_| rng.gen_range(1..=12i64)).collect();
            let total: i64 = w.iter().sum();
            let cells = [
                [Exact::ratio(w[0], total), Exact::ratio(w[1], total)],
                [Exact::ratio(w[2], total), Exact::ratio(w[3], total)],
            ];
            return cells;
        }
    }

    #[test]
    fn missing_question_clears_the_sure_flag() {
        // One vector lacks q2 entirely.
        let spec = crate::sms::per_step_spec::<Exact>(
            &["q1", "q2"],
            &["0", "1"],
            vec![vec![
                (
                    crate::claim::claim_vector(&[("q1", "1"), ("q2", "1")]),
                    Exact::ratio(1, 2),
                ),
                (crate::claim::claim_vector(&[("q1", "0")]), Exact::ratio(1, 2)),
            ]],
            None,
        );
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
        assert_eq!(alpha.both_questions_sure, Some(false));
    }
}
