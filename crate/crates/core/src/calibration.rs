//! Calibration of one SMS against another: interpretation maps, prediction
//! pairs, calibration scores, honesty, and the prediction distribution.
//!
//! The reasoner side is always evaluated at a finite step; the oracle side
//! always at the limit, through exact-or-bracketed views. Scores are
//! reported as intervals; threshold verdicts require the whole interval on
//! one side.

use crate::claim::{Answer, Claim, ClaimSet, Question};
use crate::dist::{step_response, view_response, Budget, Dist, Event, LimitView, StepDist};
use crate::divergence::{divergence_bounds, DivergenceKind};
use crate::embedding::EmbeddingMap;
use crate::error::Error;
use crate::report::{CheckReport, Condition};
use crate::scalar::Prob;
use crate::sms::SmsSpec;
use crate::Result;
use std::collections::{BTreeMap, BTreeSet};

/// The partial map psi from reasoner questions to question vectors of the
/// oracle, with a derived inverse.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PsiMap {
    map: BTreeMap<Question, Vec<Question>>,
    inverse: BTreeMap<Vec<Question>, Vec<Question>>,
}

impl PsiMap {
    pub fn new(map: BTreeMap<Question, Vec<Question>>) -> Self {
        let mut inverse: BTreeMap<Vec<Question>, Vec<Question>> = BTreeMap::new();
        for (q, qs) in &map {
            inverse.entry(qs.clone()).or_default().push(q.clone());
        }
        PsiMap { map, inverse }
    }

    pub fn from_pairs(pairs: &[(&str, &[&str])]) -> Self {
        PsiMap::new(
            pairs
                .iter()
                .map(|(q, qs)| {
                    (
                        Question::new(*q),
                        qs.iter().map(|t| Question::new(*t)).collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn get(&self, q: &Question) -> Option<&Vec<Question>> {
        self.map.get(q)
    }

    pub fn contains(&self, q: &Question) -> bool {
        self.map.contains_key(q)
    }

    /// Injective on its domain.
    pub fn is_invertible(&self) -> bool {
        self.inverse.values().all(|v| v.len() == 1)
    }

    /// Unique preimage of a question vector, when it exists.
    pub fn invert(&self, qs: &[Question]) -> Option<&Question> {
        match self.inverse.get(qs) {
            Some(v) if v.len() == 1 => Some(&v[0]),
            _ => None,
        }
    }

    pub fn domain(&self) -> impl Iterator<Item = &Question> {
        self.map.keys()
    }
}

/// The partial map Psi from (oracle question vector, reasoner answer) to
/// distributions over oracle answer vectors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PsiInterp<P: Prob> {
    map: BTreeMap<(Vec<Question>, Answer), Dist<Vec<Answer>, P>>,
}

impl<P: Prob> PsiInterp<P> {
    pub fn new(map: BTreeMap<(Vec<Question>, Answer), Dist<Vec<Answer>, P>>) -> Self {
        PsiInterp { map }
    }

    pub fn insert(&mut self, qs: Vec<Question>, v: Answer, dist: Dist<Vec<Answer>, P>) {
        self.map.insert((qs, v), dist);
    }

    pub fn get(&self, qs: &[Question], v: &Answer) -> Option<&Dist<Vec<Answer>, P>> {
        self.map.get(&(qs.to_vec(), v.clone()))
    }

    pub fn contains(&self, qs: &[Question], v: &Answer) -> bool {
        self.get(qs, v).is_some()
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&(Vec<Question>, Answer), &Dist<Vec<Answer>, P>)> {
        self.map.iter()
    }

    /// Every stored distribution must be normalized.
    pub fn validate(&self) -> Result<()> {
        for ((qs, v), d) in &self.map {
            if !d.is_normalized() || d.total() != P::one() {
                return Err(Error::Structural(format!(
                    "Psi({qs:?}, {v}) is not a normalized distribution"
                )));
            }
            for tuple in d.outcomes() {
                if tuple.len() != qs.len() {
                    return Err(Error::Structural(format!(
                        "Psi({qs:?}, {v}) outcome arity mismatch"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mixes every stored distribution toward the uniform distribution over
    /// the outcomes of the target alphabet; used by perturbation sweeps.
    pub fn mixed_toward_uniform(&self, answers: &BTreeSet<Answer>, t: &P) -> Self {
        let mut map = BTreeMap::new();
        for ((qs, v), d) in &self.map {
            let m = qs.len();
            let tuples = cartesian_tuples(answers, m);
            let count = tuples.len() as i64;
            let uniform = Dist::new(
                tuples
                    .into_iter()
                    .map(|tu| (tu, P::ratio(1, count)))
                    .collect(),
                true,
            );
            map.insert((qs.clone(), v.clone()), d.mix(&uniform, t));
        }
        PsiInterp { map }
    }
}

/// All `m`-tuples over an answer alphabet, in canonical order.
pub fn cartesian_tuples(answers: &BTreeSet<Answer>, m: usize) -> Vec<Vec<Answer>> {
    let mut tuples: Vec<Vec<Answer>> = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(tuples.len() * answers.len());
        for t in &tuples {
            for a in answers {
                let mut t2 = t.clone();
                t2.push(a.clone());
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples
}

/// Shared wiring for two-SMS checks: the oracle/universe `phi1`, the
/// reasoner/scientist `phi2`, and the interpretation maps.
#[derive(Clone, Copy)]
pub struct CalibrationCtx<'a, P: Prob> {
    pub phi1: &'a SmsSpec<P>,
    pub phi2: &'a SmsSpec<P>,
    pub psi: &'a PsiMap,
    pub interp: &'a PsiInterp<P>,
}

impl<'a, P: Prob> CalibrationCtx<'a, P> {
    /// Claim-space containment required by the two-SMS definitions:
    /// questions and answers of `phi2` embed in those of `phi1`.
    pub fn check_claim_space(&self) -> Result<()> {
        if !self.phi2.questions.is_subset(&self.phi1.questions) {
            return Err(Error::Structural(
                "phi2 questions are not contained in phi1 questions".into(),
            ));
        }
        if !self.phi2.answers.is_subset(&self.phi1.answers) {
            return Err(Error::Structural(
                "phi2 answers are not contained in phi1 answers".into(),
            ));
        }
        Ok(())
    }
}

/// Step selector for the oracle side of a pair check.
pub use crate::dist::At;

/// Prediction pair conditions for `(q, cset)`:
/// 1. the reasoner's response at step `n2` given `(q, cset)` is defined;
/// 2. `q` is in the domain of psi;
/// 3. every answer with positive response probability is interpretable;
/// 4. the oracle's conditional over answer vectors at `n1` is defined.
pub fn prediction_pair_report<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    n1: At,
    n2: u32,
    q: &Question,
    cset: &ClaimSet,
) -> Result<CheckReport> {
    ctx.check_claim_space()?;
    let mut budget = Budget::standard();
    let mut conditions = Vec::new();

    let step = ctx.phi2.step_dist(n2)?;
    let cond = Event::superset(cset.clone());
    let numerators = step.response_numerators(std::slice::from_ref(q), &cond, &mut budget)?;
    let weight: P = numerators.values().cloned().sum();
    let c1 = !weight.is_zero();
    conditions.push(Condition::from_bool(
        "(1) reasoner response defined",
        c1,
        format!("question weight {weight}"),
    ));

    let c2 = ctx.psi.contains(q);
    conditions.push(Condition::from_bool(
        "(2) q in dom psi",
        c2,
        format!("psi({q}) {}", if c2 { "defined" } else { "undefined" }),
    ));

    if !c2 {
        conditions.push(Condition::fail(
            "(3) answers interpretable",
            "not evaluable: psi undefined at q",
        ));
        conditions.push(Condition::fail(
            "(4) oracle conditional defined",
            "not evaluable: psi undefined at q",
        ));
        return Ok(CheckReport::assemble("prediction-pair", conditions, None));
    }
    let q1s = ctx.psi.get(q).unwrap();

    let mut missing = Vec::new();
    for tuple in numerators.keys() {
        let v = &tuple[0];
        if !ctx.interp.contains(q1s, v) {
            missing.push(v.to_string());
        }
    }
    if c1 {
        if missing.is_empty() {
            conditions.push(Condition::ok("(3) answers interpretable"));
        } else {
            conditions.push(Condition::fail(
                "(3) answers interpretable",
                format!("Psi undefined at answers [{}]", missing.join(", ")),
            ));
        }
    } else {
        conditions.push(Condition::ok_with(
            "(3) answers interpretable",
            "vacuous: no positive answers",
        ));
    }

    let ev = Event::superset(cset.clone()).with_questions(q1s.clone());
    match n1 {
        At::Step(n) => {
            let p = ctx.phi1.step_dist(n)?.event_prob(&ev, &mut budget)?;
            conditions.push(Condition::from_bool(
                "(4) oracle conditional defined",
                !p.is_zero(),
                format!("oracle weight {p}"),
            ));
        }
        At::Limit => {
            let view = ctx.phi1.limit_view()?;
            let p = view.event_prob(&ev, &mut budget)?;
            if !p.lo.is_zero() {
                conditions.push(Condition::ok_with(
                    "(4) oracle conditional defined",
                    format!("oracle weight {p}"),
                ));
            } else if p.hi.is_zero() {
                conditions.push(Condition::fail(
                    "(4) oracle conditional defined",
                    "oracle weight 0".to_string(),
                ));
            } else {
                conditions.push(Condition::undecided(
                    "(4) oracle conditional defined",
                    format!("oracle weight {p}"),
                ));
            }
        }
    }
    Ok(CheckReport::assemble("prediction-pair", conditions, None))
}

/// Single-SMS prediction pair: conditions (2)-(4) with the same process on
/// both sides; the response-definedness requirement is dropped.
pub fn single_pair_report<P: Prob>(
    phi: &SmsSpec<P>,
    psi: &PsiMap,
    interp: &PsiInterp<P>,
    n1: At,
    n2: u32,
    q: &Question,
    cset: &ClaimSet,
) -> Result<CheckReport> {
    let mut budget = Budget::standard();
    let mut conditions = Vec::new();

    let c2 = psi.contains(q);
    conditions.push(Condition::from_bool(
        "(2) q in dom psi",
        c2,
        format!("psi({q}) {}", if c2 { "defined" } else { "undefined" }),
    ));
    if !c2 {
        return Ok(CheckReport::assemble("single-prediction-pair", conditions, None));
    }
    let q1s = psi.get(q).unwrap();

    let step = phi.step_dist(n2)?;
    let cond = Event::superset(cset.clone());
    let numerators = step.response_numerators(std::slice::from_ref(q), &cond, &mut budget)?;
    let mut missing = Vec::new();
    for tuple in numerators.keys() {
        let v = &tuple[0];
        if !interp.contains(q1s, v) {
            missing.push(v.to_string());
        }
    }
    if missing.is_empty() {
        conditions.push(Condition::ok("(3) answers interpretable"));
    } else {
        conditions.push(Condition::fail(
            "(3) answers interpretable",
            format!("Psi undefined at answers [{}]", missing.join(", ")),
        ));
    }

    let ev = Event::superset(cset.clone()).with_questions(q1s.clone());
    match n1 {
        At::Step(n) => {
            let p = phi.step_dist(n)?.event_prob(&ev, &mut budget)?;
            conditions.push(Condition::from_bool(
                "(4) conditional defined",
                !p.is_zero(),
                format!("weight {p}"),
            ));
        }
        At::Limit => {
            let view = phi.limit_view()?;
            let p = view.event_prob(&ev, &mut budget)?;
            if !p.lo.is_zero() {
                conditions.push(Condition::ok_with("(4) conditional defined", format!("weight {p}")));
            } else if p.hi.is_zero() {
                conditions.push(Condition::fail("(4) conditional defined", "weight 0"));
            } else {
                conditions.push(Condition::undecided(
                    "(4) conditional defined",
                    format!("weight {p}"),
                ));
            }
        }
    }
    Ok(CheckReport::assemble("single-prediction-pair", conditions, None))
}

/// Embedded prediction pair: like a prediction pair, but the oracle
/// conditional conditions on the preimage collection of the scientist's
/// state including the prediction claim, per positive answer.
pub fn embedded_pair_report<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
) -> Result<CheckReport> {
    let mut budget = Budget::standard();
    let mut conditions = Vec::new();

    let step = ctx.phi2.step_dist(n)?;
    let cond = Event::superset(cset.clone());
    let numerators = step.response_numerators(std::slice::from_ref(q), &cond, &mut budget)?;
    let weight: P = numerators.values().cloned().sum();
    conditions.push(Condition::from_bool(
        "(1) scientist response defined",
        !weight.is_zero(),
        format!("question weight {weight}"),
    ));

    let c2 = ctx.psi.contains(q);
    conditions.push(Condition::from_bool(
        "(2) q in dom psi",
        c2,
        format!("psi({q}) {}", if c2 { "defined" } else { "undefined" }),
    ));
    if !c2 || weight.is_zero() {
        return Ok(CheckReport::assemble("embedded-prediction-pair", conditions, None));
    }
    let q1s = ctx.psi.get(q).unwrap();
    let view = ctx.phi1.limit_view()?;

    for tuple in numerators.keys() {
        let v = &tuple[0];
        match triple_conditions(ctx, map, &view, q1s, q, cset, v, &mut budget)? {
            TripleOutcome::Ok => {
                conditions.push(Condition::ok(format!("(3,4) answer {v}")));
            }
            TripleOutcome::MissingInterp => {
                conditions.push(Condition::fail(
                    format!("(3,4) answer {v}"),
                    "Psi undefined".to_string(),
                ));
            }
            TripleOutcome::ZeroPreimage => {
                conditions.push(Condition::fail(
                    format!("(3,4) answer {v}"),
                    "universe weight 0 on the preimage collection".to_string(),
                ));
            }
            TripleOutcome::Undecided(w) => {
                conditions.push(Condition::undecided(format!("(3,4) answer {v}"), w));
            }
        }
    }
    Ok(CheckReport::assemble("embedded-prediction-pair", conditions, None))
}

/// Embedded prediction triple: fixes one answer and requires it to have
/// positive probability.
pub fn embedded_triple_report<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    v: &Answer,
) -> Result<CheckReport> {
    let mut budget = Budget::standard();
    let mut conditions = Vec::new();

    let step = ctx.phi2.step_dist(n)?;
    let cond = Event::superset(cset.clone());
    let numerators = step.response_numerators(std::slice::from_ref(q), &cond, &mut budget)?;
    let positive = numerators
        .get(&vec![v.clone()])
        .map(|p| !p.is_zero())
        .unwrap_or(false);
    conditions.push(Condition::from_bool(
        "answer has positive probability",
        positive,
        format!("answer {v}"),
    ));

    let c2 = ctx.psi.contains(q);
    conditions.push(Condition::from_bool("q in dom psi", c2, ""));
    if !c2 || !positive {
        return Ok(CheckReport::assemble("embedded-prediction-triple", conditions, None));
    }
    let q1s = ctx.psi.get(q).unwrap();
    let view = ctx.phi1.limit_view()?;
    match triple_conditions(ctx, map, &view, q1s, q, cset, v, &mut budget)? {
        TripleOutcome::Ok => conditions.push(Condition::ok("(3,4)")),
        TripleOutcome::MissingInterp => {
            conditions.push(Condition::fail("(3,4)", "Psi undefined"))
        }
        TripleOutcome::ZeroPreimage => conditions.push(Condition::fail(
            "(3,4)",
            "universe weight 0 on the preimage collection",
        )),
        TripleOutcome::Undecided(w) => conditions.push(Condition::undecided("(3,4)", w)),
    }
    Ok(CheckReport::assemble("embedded-prediction-triple", conditions, None))
}

enum TripleOutcome {
    Ok,
    MissingInterp,
    ZeroPreimage,
    Undecided(String),
}

fn triple_conditions<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    view: &LimitView<P>,
    q1s: &[Question],
    q: &Question,
    cset: &ClaimSet,
    v: &Answer,
    budget: &mut Budget,
) -> Result<TripleOutcome> {
    if !ctx.interp.contains(q1s, v) {
        return Ok(TripleOutcome::MissingInterp);
    }
    let augmented = cset.with(Claim {
        question: q.clone(),
        answer: v.clone(),
    });
    let pre = map.preimage(&augmented);
    if pre.is_empty() {
        return Ok(TripleOutcome::ZeroPreimage);
    }
    let ev = Event::default()
        .with_collection(pre.to_vec())
        .with_questions(q1s.to_vec());
    let p = view.event_prob(&ev, budget)?;
    if !p.lo.is_zero() {
        Ok(TripleOutcome::Ok)
    } else if p.hi.is_zero() {
        Ok(TripleOutcome::ZeroPreimage)
    } else {
        Ok(TripleOutcome::Undecided(format!("universe weight {p}")))
    }
}

/// Calibration score interval, with the per-answer divergence bounds that
/// were averaged into it.
#[derive(Clone, Debug)]
pub struct CalibrationScore {
    pub lo: f64,
    pub hi: f64,
    pub per_answer: Vec<(Answer, f64, f64)>,
}

impl CalibrationScore {
    pub fn verdict_at(&self, eps: f64) -> Option<bool> {
        if self.hi <= eps {
            Some(true)
        } else if self.lo > eps {
            Some(false)
        } else {
            None
        }
    }

    /// A zero upper bound means every positive-probability answer's
    /// interpretation equals the oracle conditional exactly.
    pub fn is_exact_zero(&self) -> bool {
        self.hi == 0.0
    }
}

/// Expected divergence, over the reasoner's answers at step `n`, between
/// the interpreted answer distribution and the oracle's limit conditional.
pub fn calibration_score<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    kind: DivergenceKind,
) -> Result<CalibrationScore> {
    let pair = prediction_pair_report(ctx, At::Limit, n, q, cset)?;
    if !pair.is_verified() {
        return Err(Error::Precondition(format!(
            "not a prediction pair: {}",
            pair.summary()
        )));
    }
    let mut budget = Budget::standard();
    let step = ctx.phi2.step_dist(n)?;
    let view = ctx.phi1.limit_view()?;
    let q1s = ctx.psi.get(q).expect("pair verified");

    let response = step_response(
        &step,
        std::slice::from_ref(q),
        &Event::superset(cset.clone()),
        &mut budget,
    )?;
    let target = view_response(
        &view,
        q1s,
        &Event::superset(cset.clone()),
        &mut budget,
    )?;

    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut per_answer = Vec::new();
    for (tuple, w) in response.iter() {
        let v = tuple[0].clone();
        let interp = ctx
            .interp
            .get(q1s, &v)
            .ok_or_else(|| Error::Structural(format!("Psi undefined at answer {v}")))?;
        let (dlo, dhi) = divergence_bounds(interp, &target, view.is_exact(), kind)?;
        let wf = w.to_f64();
        lo += wf * dlo;
        hi += wf * dhi;
        per_answer.push((v, dlo, dhi));
    }
    Ok(CalibrationScore { lo, hi, per_answer })
}

/// Oracle-side conditional over answer vectors for `(psi(q), cset)`.
pub fn oracle_conditional<P: Prob>(
    phi1: &SmsSpec<P>,
    q1s: &[Question],
    cset: &ClaimSet,
) -> Result<(crate::dist::BracketDist<Vec<Answer>, P>, bool)> {
    let mut budget = Budget::standard();
    let view = phi1.limit_view()?;
    let d = view_response(&view, q1s, &Event::superset(cset.clone()), &mut budget)?;
    let exact = view.is_exact();
    Ok((d, exact))
}

/// Outcome of the single-SMS reduction: the direct divergence between the
/// step response and the limit response, together with the delta-
/// interpretation calibration score it must lower-bound.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub reduction_lo: f64,
    pub reduction_hi: f64,
    pub delta_score: CalibrationScore,
    pub bound_respected: bool,
}

/// Single-SMS reduction: with psi the identity and Psi the point-mass
/// interpretation, calibration reduces to the divergence between the step
/// response and the limit response for `q`.
pub fn single_sms_reduction<P: Prob>(
    phi: &SmsSpec<P>,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    kind: DivergenceKind,
) -> Result<ReductionOutcome> {
    let mut budget = Budget::standard();
    let step = phi.step_dist(n)?;
    let view = phi.limit_view()?;
    let qs = vec![q.clone()];

    let response = step_response(&step, &qs, &Event::superset(cset.clone()), &mut budget)?;
    let target = view_response(&view, &qs, &Event::superset(cset.clone()), &mut budget)?;
    let (reduction_lo, reduction_hi) =
        divergence_bounds(&response, &target, view.is_exact(), kind)?;

    // Delta-interpretation score: each answer is interpreted as certainty.
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut per_answer = Vec::new();
    for (tuple, w) in response.iter() {
        let delta: Dist<Vec<Answer>, P> = Dist::point_mass(tuple.clone());
        let (dlo, dhi) = divergence_bounds(&delta, &target, view.is_exact(), kind)?;
        let wf = w.to_f64();
        lo += wf * dlo;
        hi += wf * dhi;
        per_answer.push((tuple[0].clone(), dlo, dhi));
    }
    let delta_score = CalibrationScore { lo, hi, per_answer };
    // Convexity: the reduction can never exceed the delta score.
    let bound_respected = reduction_lo <= delta_score.hi + 1e-12;
    Ok(ReductionOutcome {
        reduction_lo,
        reduction_hi,
        delta_score,
        bound_respected,
    })
}

/// Honesty at `(q, v, cset)`: the process's own conditional on having
/// answered `v` to `q` must equal the interpretation of `v`, exactly.
pub fn is_honest<P: Prob>(
    phi: &SmsSpec<P>,
    psi: &PsiMap,
    interp: &PsiInterp<P>,
    at: At,
    q: &Question,
    v: &Answer,
    cset: &ClaimSet,
) -> Result<CheckReport> {
    let augmented = cset.with(Claim {
        question: q.clone(),
        answer: v.clone(),
    });
    // The augmented conditioning event must have positive probability.
    if let Some(q1s) = psi.get(q) {
        let mut budget = Budget::standard();
        let ev = Event::superset(augmented.clone()).with_questions(q1s.clone());
        let zero = match at {
            At::Step(n) => phi.step_dist(n)?.event_prob(&ev, &mut budget)?.is_zero(),
            At::Limit => phi.limit_view()?.event_prob(&ev, &mut budget)?.hi.is_zero(),
        };
        if zero {
            return Err(Error::Conditioning {
                context: format!("augmented claim set {augmented} has probability zero"),
            });
        }
    }
    let n_pair = match at {
        At::Step(n) => n,
        At::Limit => 1,
    };
    let pair = single_pair_report(phi, psi, interp, at, n_pair, q, &augmented)?;
    let mut conditions = vec![Condition::from_bool(
        "single-SMS prediction pair",
        pair.is_verified(),
        pair.summary(),
    )];
    if !pair.is_verified() {
        return Ok(CheckReport::assemble("honest", conditions, None));
    }
    let q1s = psi.get(q).unwrap();
    let stated = interp
        .get(q1s, v)
        .ok_or_else(|| Error::Structural(format!("Psi undefined at answer {v}")))?;

    let mut budget = Budget::standard();
    let cond = Event::superset(augmented.clone());
    match at {
        At::Step(n) => {
            let step = phi.step_dist(n)?;
            let own = step_response(&step, q1s, &cond, &mut budget)?;
            let equal = own == *stated;
            conditions.push(Condition::from_bool(
                "own conditional equals interpretation",
                equal,
                render_mismatch(&own, stated),
            ));
        }
        At::Limit => {
            let view = phi.limit_view()?;
            let own = view_response(&view, q1s, &cond, &mut budget)?;
            match own.to_exact() {
                Some(own) => {
                    let equal = own == *stated;
                    conditions.push(Condition::from_bool(
                        "own conditional equals interpretation",
                        equal,
                        render_mismatch(&own, stated),
                    ));
                }
                None => conditions.push(Condition::undecided(
                    "own conditional equals interpretation",
                    "limit conditional is bracketed at the horizon",
                )),
            }
        }
    }
    Ok(CheckReport::assemble("honest", conditions, None))
}

fn render_mismatch<P: Prob>(
    own: &Dist<Vec<Answer>, P>,
    stated: &Dist<Vec<Answer>, P>,
) -> String {
    let render = |d: &Dist<Vec<Answer>, P>| {
        d.iter()
            .map(|(t, p)| {
                format!(
                    "{}↦{}",
                    t.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","),
                    p
                )
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!("own {{{}}} vs stated {{{}}}", render(own), render(stated))
}

// ---------------------------------------------------------------------------
// Prediction distribution
// ---------------------------------------------------------------------------

/// Which pair notion gates the prediction distribution.
#[derive(Clone, Copy)]
pub enum PairGate<'a> {
    Plain,
    Embedded(&'a EmbeddingMap),
}

/// The prediction distribution: for each prediction pair, the reasoner's
/// answer-mixture of interpreted distributions; weights proportional to the
/// reasoner's question semi-quantity. Non-pairs carry weight zero.
///
/// Conditioning claims at questions inside the codomain of psi ride the
/// answer-tuple dimension (through the joint question); all other claims
/// join the conditioning claim set.
pub struct PredictionDist<'a, P: Prob> {
    phi2: &'a SmsSpec<P>,
    psi: &'a PsiMap,
    interp: &'a PsiInterp<P>,
    n: u32,
    gate: PairGate<'a>,
    step2: StepDist<P>,
    view1: LimitView<P>,
    ctx: CalibrationCtx<'a, P>,
}

impl<'a, P: Prob> PredictionDist<'a, P> {
    pub fn new(
        phi1: &'a SmsSpec<P>,
        phi2: &'a SmsSpec<P>,
        psi: &'a PsiMap,
        interp: &'a PsiInterp<P>,
        n: u32,
        gate: PairGate<'a>,
    ) -> Result<Self> {
        if !psi.is_invertible() {
            return Err(Error::Structural(
                "prediction distribution requires invertible psi".into(),
            ));
        }
        let ctx = CalibrationCtx {
            phi1,
            phi2,
            psi,
            interp,
        };
        let pd = PredictionDist {
            phi2,
            psi,
            interp,
            n,
            gate,
            step2: phi2.step_dist(n)?,
            view1: phi1.limit_view()?,
            ctx,
        };
        // At least one prediction pair must exist; scan psi's domain against
        // the empty set and each support unordering.
        let mut candidates: Vec<ClaimSet> = vec![ClaimSet::empty()];
        candidates.extend(pd.step2.rows().map(|(_, u, _)| u.clone()));
        let mut found = false;
        'outer: for q in pd.psi.domain() {
            for cset in &candidates {
                if pd.pair_state(q, cset)? == Some(true) {
                    found = true;
                    break 'outer;
                }
            }
        }
        if !found {
            return Err(Error::Structural(
                "no prediction pair exists for the given maps".into(),
            ));
        }
        Ok(pd)
    }

    pub fn step(&self) -> u32 {
        self.n
    }

    /// Tri-state pair check: `None` when a loose limit bracket cannot
    /// decide the oracle-side condition.
    pub fn pair_state(&self, q: &Question, cset: &ClaimSet) -> Result<Option<bool>> {
        let report = match self.gate {
            PairGate::Plain => {
                prediction_pair_report(&self.ctx, At::Limit, self.n, q, cset)?
            }
            PairGate::Embedded(map) => embedded_pair_report(&self.ctx, map, self.n, q, cset)?,
        };
        Ok(match report.verdict {
            crate::Verdict::Verified => Some(true),
            crate::Verdict::IndeterminateAtHorizon => None,
            _ => Some(false),
        })
    }

    pub fn pair_report(&self, q: &Question, cset: &ClaimSet) -> Result<CheckReport> {
        match self.gate {
            PairGate::Plain => prediction_pair_report(&self.ctx, At::Limit, self.n, q, cset),
            PairGate::Embedded(map) => embedded_pair_report(&self.ctx, map, self.n, q, cset),
        }
    }

    fn resolve(&self, q1s: &[Question]) -> Result<&Question> {
        self.psi.invert(q1s).ok_or_else(|| {
            Error::Structural(format!(
                "no psi preimage for question vector {:?}",
                q1s.iter().map(|q| q.to_string()).collect::<Vec<_>>()
            ))
        })
    }

    /// Mixture value: the prediction-distribution conditional over oracle
    /// answer tuples for `psi(q) = q1s` given the claim set.
    pub fn mixture(&self, q1s: &[Question], cset: &ClaimSet) -> Result<Dist<Vec<Answer>, P>> {
        let q = self.resolve(q1s)?;
        match self.pair_state(q, cset)? {
            Some(true) => {}
            Some(false) => {
                return Err(Error::Precondition(format!(
                    "({q}, {cset}) is not a prediction pair"
                )))
            }
            None => {
                return Err(Error::Indeterminate(format!(
                    "pair state for ({q}, {cset}) undecided at horizon"
                )))
            }
        }
        let mut budget = Budget::standard();
        let response = step_response(
            &self.step2,
            std::slice::from_ref(q),
            &Event::superset(cset.clone()),
            &mut budget,
        )?;
        let mut entries: BTreeMap<Vec<Answer>, P> = BTreeMap::new();
        for (tuple, w) in response.iter() {
            let v = &tuple[0];
            let interp = self
                .interp
                .get(q1s, v)
                .ok_or_else(|| Error::Structural(format!("Psi undefined at answer {v}")))?;
            for (out, p) in interp.iter() {
                let add = w.clone() * p.clone();
                entries
                    .entry(out.clone())
                    .and_modify(|acc| *acc = acc.clone() + add.clone())
                    .or_insert(add);
            }
        }
        Ok(Dist::new(entries, true))
    }

    /// Raw clause-(2) weight: proportional to the reasoner's question
    /// semi-quantity on pairs, zero on non-pairs.
    pub fn weight(&self, q1s: &[Question], cset: &ClaimSet) -> Result<P> {
        let q = match self.resolve(q1s) {
            Ok(q) => q,
            Err(_) => return Ok(P::zero()),
        };
        match self.pair_state(q, cset)? {
            Some(true) => {}
            Some(false) => return Ok(P::zero()),
            None => {
                return Err(Error::Indeterminate(format!(
                    "pair state for ({q}, {cset}) undecided at horizon"
                )))
            }
        }
        let mut budget = Budget::standard();
        let numerators = self.step2.response_numerators(
            std::slice::from_ref(q),
            &Event::superset(cset.clone()),
            &mut budget,
        )?;
        Ok(numerators.values().cloned().sum())
    }

    /// Conditional probability of additional claim sets given `q1s` and a
    /// base set, as a ratio of raw weights.
    pub fn cond_sets(&self, q1s: &[Question], base: &ClaimSet, extra: &ClaimSet) -> Result<P> {
        let den = self.weight(q1s, base)?;
        if den.is_zero() {
            return Err(Error::Conditioning {
                context: format!("prediction weight zero at base {base}"),
            });
        }
        let num = self.weight(q1s, &base.union(extra))?;
        Ok(num / den)
    }

    /// Whether the underlying limit view is exact.
    pub fn oracle_exact(&self) -> bool {
        self.view1.is_exact()
    }

    pub fn reasoner(&self) -> &SmsSpec<P> {
        self.phi2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claim::claim_set;
    use crate::fixtures;
    use crate::Exact;

    fn ctx<'a>(
        phi1: &'a SmsSpec<Exact>,
        phi2: &'a SmsSpec<Exact>,
        psi: &'a PsiMap,
        interp: &'a PsiInterp<Exact>,
    ) -> CalibrationCtx<'a, Exact> {
        CalibrationCtx {
            phi1,
            phi2,
            psi,
            interp,
        }
    }

    #[test]
    fn sc_id_is_a_prediction_pair() {
        let phi = fixtures::fix_a();
        let (psi, interp) = fixtures::sc_id();
        let c = ctx(&phi, &phi, &psi, &interp);
        let qa = Question::new("qa");
        let report =
            prediction_pair_report(&c, At::Limit, 1, &qa, &ClaimSet::empty()).unwrap();
        assert!(report.is_verified(), "{}", report.summary());
        assert!(report.preconditions.iter().all(|p| p.holds == Some(true)));

        // A question outside the domain of psi fails condition (2).
        let qz = Question::new("qz");
        let mut phi2 = phi.clone();
        phi2.questions.insert(qz.clone());
        let mut phi1 = phi.clone();
        phi1.questions.insert(qz.clone());
        let c2 = ctx(&phi1, &phi2, &psi, &interp);
        let report = prediction_pair_report(&c2, At::Limit, 1, &qz, &ClaimSet::empty()).unwrap();
        assert_eq!(report.verdict, crate::Verdict::PreconditionFailed);
        assert_eq!(report.preconditions[1].holds, Some(false));

        // Conditioning on a zero-probability set fails condition (1).
        let report = prediction_pair_report(
            &c,
            At::Limit,
            1,
            &qa,
            &claim_set(&[("qa", "0"), ("qa", "1")]),
        )
        .unwrap();
        assert_eq!(report.preconditions[0].holds, Some(false));
    }

    #[test]
    fn alphabet_containment_is_structural() {
        let phi1 = fixtures::fix_a();
        let mut phi2 = fixtures::fix_a();
        phi2.questions.insert(Question::new("extra"));
        let (psi, interp) = fixtures::sc_id();
        let c = ctx(&phi1, &phi2, &psi, &interp);
        assert!(matches!(
            prediction_pair_report(&c, At::Limit, 1, &Question::new("qa"), &ClaimSet::empty()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn sc_id_score_is_ln2_and_sc_hon_is_zero() {
        let phi = fixtures::fix_a();
        let qa = Question::new("qa");
        let (psi, interp) = fixtures::sc_id();
        let c = ctx(&phi, &phi, &psi, &interp);
        let score = calibration_score(&c, 1, &qa, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert_eq!(score.lo, score.hi);
        assert!((score.hi - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(score.verdict_at(std::f64::consts::LN_2), Some(true));
        assert_eq!(score.verdict_at(0.5), Some(false));

        let (psi, interp) = fixtures::sc_hon();
        let c = ctx(&phi, &phi, &psi, &interp);
        let score = calibration_score(&c, 1, &qa, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert!(score.is_exact_zero());
    }

    #[test]
    fn reduction_is_zero_at_the_limit_and_respects_bound() {
        let phi = fixtures::fix_a();
        let qa = Question::new("qa");
        let out =
            single_sms_reduction(&phi, 1, &qa, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert_eq!(out.reduction_lo, 0.0);
        assert_eq!(out.reduction_hi, 0.0);
        assert!((out.delta_score.hi - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(out.bound_respected);
    }

    #[test]
    fn honesty_follows_the_augmented_conditional() {
        let phi = fixtures::fix_a();
        let qa = Question::new("qa");
        // Interpretations read off the augmented conditionals are honest.
        let (psi, interp) = fixtures::sc_id();
        let report = is_honest(
            &phi,
            &psi,
            &interp,
            At::Step(1),
            &qa,
            &Answer::new("0"),
            &ClaimSet::empty(),
        )
        .unwrap();
        assert!(report.is_verified(), "{}", report.summary());

        // The flat interpretation disagrees with the sure augmented
        // conditional.
        let (psi, interp) = fixtures::sc_hon();
        let report = is_honest(
            &phi,
            &psi,
            &interp,
            At::Step(1),
            &qa,
            &Answer::new("0"),
            &ClaimSet::empty(),
        )
        .unwrap();
        assert_eq!(report.verdict, crate::Verdict::PreconditionFailed);

        // Zero-probability augmented set is a conditioning error.
        let err = is_honest(
            &phi,
            &psi,
            &interp,
            At::Step(1),
            &qa,
            &Answer::new("0"),
            &claim_set(&[("qa", "1")]),
        );
        assert!(matches!(err, Err(Error::Conditioning { .. })));
    }

    #[test]
    fn prediction_distribution_mixtures() {
        let phi = fixtures::fix_a();
        let qa = Question::new("qa");
        let (psi, interp) = fixtures::sc_id();
        let pd = PredictionDist::new(&phi, &phi, &psi, &interp, 1, PairGate::Plain).unwrap();
        let f = pd.mixture(std::slice::from_ref(&qa), &ClaimSet::empty()).unwrap();
        assert_eq!(f.get(&vec![Answer::new("0")]), Exact::ratio(1, 2));
        assert_eq!(f.get(&vec![Answer::new("1")]), Exact::ratio(1, 2));
        assert_eq!(f.total(), Exact::ratio(1, 1));

        let (psi, interp) = fixtures::sc_hon();
        let pd = PredictionDist::new(&phi, &phi, &psi, &interp, 1, PairGate::Plain).unwrap();
        let f = pd.mixture(std::slice::from_ref(&qa), &ClaimSet::empty()).unwrap();
        assert_eq!(f.get(&vec![Answer::new("0")]), Exact::ratio(1, 2));

        // Non-pair carries weight zero.
        let w = pd
            .weight(std::slice::from_ref(&qa), &claim_set(&[("qa", "0"), ("qa", "1")]))
            .unwrap();
        assert_eq!(w, Exact::ratio(0, 1));
    }

    #[test]
    fn honesty_implies_zero_self_calibration_for_the_induced_interpretation() {
        // Read the interpretation off the augmented conditionals, then
        // score the process against itself at the augmented context.
        let phi = fixtures::fix_a();
        let qa = Question::new("qa");
        let (psi, interp) = fixtures::sc_id();
        for v in ["0", "1"] {
            let honest = is_honest(
                &phi,
                &psi,
                &interp,
                At::Step(1),
                &qa,
                &Answer::new(v),
                &ClaimSet::empty(),
            )
            .unwrap();
            assert!(honest.is_verified());
            let augmented = claim_set(&[("qa", v)]);
            let c = ctx(&phi, &phi, &psi, &interp);
            let score =
                calibration_score(&c, 1, &qa, &augmented, DivergenceKind::Kl).unwrap();
            assert!(score.is_exact_zero(), "score [{}, {}]", score.lo, score.hi);
        }
    }

    #[test]
    fn loose_limit_brackets_make_threshold_verdicts_indeterminate() {
        // A universe that keeps growing past its horizon only brackets its
        // limit conditionals, so a zero threshold cannot be decided.
        let mut phi1 = fixtures::fix_growing();
        phi1.questions.insert(Question::new("qp"));
        let mut phi2 = phi1.clone();
        phi2.horizon = 1;
        phi2.law = crate::sms::Law::PerStep {
            steps: vec![crate::sms::Table::new(vec![(
                crate::claim::claim_vector(&[("qp", "1")]),
                Exact::ratio(1, 1),
            )])],
        };
        phi2.kappa = None;
        let psi = PsiMap::from_pairs(&[("qp", &["q1"])]);
        let mut interp = PsiInterp::default();
        interp.insert(
            vec![Question::new("q1")],
            Answer::new("1"),
            crate::fixtures::delta_tuple(&["1"]),
        );
        let c = ctx(&phi1, &phi2, &psi, &interp);
        let score =
            calibration_score(&c, 1, &Question::new("qp"), &ClaimSet::empty(), DivergenceKind::Kl)
                .unwrap();
        assert!(score.lo < score.hi, "bracket should be loose");
        assert_eq!(score.verdict_at(0.0), None);
    }

    #[test]
    fn prediction_distribution_requires_invertible_psi() {
        let phi = fixtures::fix_a();
        let mut phi2 = phi.clone();
        phi2.questions.insert(Question::new("qx"));
        let mut phi1 = phi2.clone();
        phi1.questions.insert(Question::new("qy"));
        // Two questions mapping to the same vector.
        let psi = PsiMap::from_pairs(&[("qa", &["qa"]), ("qx", &["qa"])]);
        let (_, interp) = fixtures::sc_id();
        assert!(matches!(
            PredictionDist::new(&phi1, &phi2, &psi, &interp, 1, PairGate::Plain),
            Err(Error::Structural(_))
        ));
    }
}
