//! Evidence paths, the non-thwarting condition, and the three
//! multiple-lines-of-evidence propositions as executable checks.
//!
//! Lists of claim sets in conditioning position are always interpreted as
//! unions. Every conditional here is a ratio of upward-closed event
//! probabilities (or of prediction-distribution quantities); conditioning
//! on the target claim is expanded by the chain rule
//! `P(X | (q,v), B) = P(v | q, B∪X) · P(X | q, B) / P(v | q, B)`.

use crate::calibration::{
    calibration_score, embedded_pair_report, oracle_conditional, prediction_pair_report,
    CalibrationCtx, PairGate, PredictionDist, PsiInterp,
};
use crate::claim::{Answer, Claim, ClaimSet, Question};
use crate::dist::{step_response, view_response, At, Budget, Event, LimitView};
use crate::divergence::{divergence, divergence_bounds, mutual_support, DivergenceKind};
use crate::embedding::{embed_calibration_score, verify_embedding, EmbeddingMap};
use crate::error::Error;
use crate::report::{CheckReport, Conclusion, Condition};
use crate::scalar::{Bracket, Prob};
use crate::sms::SmsSpec;
use crate::Result;

/// A conditional-probability source for evidence checks: fixes a target
/// question and target answer, and answers the two primitive conditional
/// forms everything else is derived from.
pub trait CondSource<P: Prob> {
    /// `P(v* | q, union of sets)`.
    fn target_cond(&self, sets: &[&ClaimSet]) -> Result<Bracket<P>>;

    /// `P(union of extra | q asked, union of base)`.
    fn sets_cond(&self, extra: &[&ClaimSet], base: &[&ClaimSet]) -> Result<Bracket<P>>;

    fn is_exact(&self) -> bool;
}

/// Raw SMS distribution at a fixed step.
pub struct StepSource<'a, P: Prob> {
    pub spec: &'a SmsSpec<P>,
    pub step: u32,
    pub question: Question,
    pub target: Answer,
}

impl<P: Prob> CondSource<P> for StepSource<'_, P> {
    fn target_cond(&self, sets: &[&ClaimSet]) -> Result<Bracket<P>> {
        let mut budget = Budget::standard();
        let dist = self.spec.step_dist(self.step)?;
        let cond = Event::superset(union_of(sets));
        let response =
            step_response(&dist, std::slice::from_ref(&self.question), &cond, &mut budget)?;
        Ok(Bracket::exact(response.get(&vec![self.target.clone()])))
    }

    fn sets_cond(&self, extra: &[&ClaimSet], base: &[&ClaimSet]) -> Result<Bracket<P>> {
        let mut budget = Budget::standard();
        let dist = self.spec.step_dist(self.step)?;
        let qs = vec![self.question.clone()];
        let den = dist.event_prob(
            &Event::superset(union_of(base)).with_questions(qs.clone()),
            &mut budget,
        )?;
        if den.is_zero() {
            return Err(Error::Conditioning {
                context: "zero-probability base event".into(),
            });
        }
        let mut all: Vec<&ClaimSet> = base.to_vec();
        all.extend_from_slice(extra);
        let num = dist.event_prob(
            &Event::superset(union_of(&all)).with_questions(qs),
            &mut budget,
        )?;
        Ok(Bracket::exact(num / den))
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Limit distribution of a backward-consistent kernel spec.
pub struct LimitSource<'a, P: Prob> {
    pub view: &'a LimitView<P>,
    pub question: Question,
    pub target: Answer,
}

impl<P: Prob> CondSource<P> for LimitSource<'_, P> {
    fn target_cond(&self, sets: &[&ClaimSet]) -> Result<Bracket<P>> {
        let mut budget = Budget::standard();
        let cond = Event::superset(union_of(sets));
        let response = view_response(
            self.view,
            std::slice::from_ref(&self.question),
            &cond,
            &mut budget,
        )?;
        Ok(response.get(&vec![self.target.clone()]))
    }

    fn sets_cond(&self, extra: &[&ClaimSet], base: &[&ClaimSet]) -> Result<Bracket<P>> {
        let mut budget = Budget::standard();
        let qs = vec![self.question.clone()];
        let den = self.view.event_prob(
            &Event::superset(union_of(base)).with_questions(qs.clone()),
            &mut budget,
        )?;
        if den.hi.is_zero() {
            return Err(Error::Conditioning {
                context: "zero-probability base event".into(),
            });
        }
        let mut all: Vec<&ClaimSet> = base.to_vec();
        all.extend_from_slice(extra);
        let num = self.view.event_prob(
            &Event::superset(union_of(&all)).with_questions(qs),
            &mut budget,
        )?;
        Ok(num.cond_div(&den))
    }

    fn is_exact(&self) -> bool {
        self.view.is_exact()
    }
}

/// Prediction-distribution source: conditionals through the clause-(1)
/// mixture and clause-(2) weight ratios.
pub struct FnSource<'a, 'b, P: Prob> {
    pub pd: &'a PredictionDist<'b, P>,
    pub question_vec: Vec<Question>,
    pub target: Answer,
}

impl<P: Prob> CondSource<P> for FnSource<'_, '_, P> {
    fn target_cond(&self, sets: &[&ClaimSet]) -> Result<Bracket<P>> {
        let mixture = self.pd.mixture(&self.question_vec, &union_of(sets))?;
        Ok(Bracket::exact(mixture.get(&vec![self.target.clone()])))
    }

    fn sets_cond(&self, extra: &[&ClaimSet], base: &[&ClaimSet]) -> Result<Bracket<P>> {
        let base_set = union_of(base);
        let extra_set = union_of(extra);
        Ok(Bracket::exact(
            self.pd.cond_sets(&self.question_vec, &base_set, &extra_set)?,
        ))
    }

    fn is_exact(&self) -> bool {
        self.pd.oracle_exact()
    }
}

fn union_of(sets: &[&ClaimSet]) -> ClaimSet {
    let mut out = ClaimSet::empty();
    for s in sets {
        out = out.union(s);
    }
    out
}

/// `P(union of extra | (q, v*), union of base)` by the chain rule.
fn target_claim_cond<P: Prob, S: CondSource<P> + ?Sized>(
    src: &S,
    extra: &[&ClaimSet],
    base: &[&ClaimSet],
) -> Result<Bracket<P>> {
    let mut all: Vec<&ClaimSet> = base.to_vec();
    all.extend_from_slice(extra);
    let tc_all = src.target_cond(&all)?;
    let tc_base = src.target_cond(base)?;
    let sc = src.sets_cond(extra, base)?;
    if tc_base.hi.is_zero() {
        return Err(Error::Conditioning {
            context: "target conditional zero at base".into(),
        });
    }
    Ok(tc_all.mul(&sc).cond_div(&tc_base))
}

/// An evidence scenario: a base distribution source, a foundational claim
/// set, indexed paths (overlap allowed), and the target claim fixed inside
/// the source.
pub struct EvidenceScenario<'a, P: Prob> {
    pub source: &'a dyn CondSource<P>,
    pub beta: &'a ClaimSet,
    pub paths: &'a [ClaimSet],
}

impl<'a, P: Prob> EvidenceScenario<'a, P> {
    fn chain(&self, upto: usize) -> Vec<&'a ClaimSet> {
        let mut out = vec![self.beta];
        out.extend(self.paths[..upto].iter());
        out
    }
}

fn cmp_strict<P: Prob>(lhs: &Bracket<P>, rhs: &Bracket<P>) -> Option<bool> {
    if lhs.definitely_gt(rhs) {
        Some(true)
    } else if lhs.definitely_le(rhs) {
        Some(false)
    } else {
        None
    }
}

fn cmp_ge_one<P: Prob>(b: &Bracket<P>) -> Option<bool> {
    let one = P::one();
    if b.lo >= one {
        Some(true)
    } else if b.hi < one {
        Some(false)
    } else {
        None
    }
}

/// Per-path lift plus the cumulative chain, both strict.
pub fn is_evidence_collection<P: Prob>(scn: &EvidenceScenario<'_, P>) -> CheckReport {
    let mut conditions = Vec::new();
    if scn.paths.is_empty() {
        conditions.push(Condition::fail("at least one path", "no paths given"));
        return CheckReport::assemble("evidence-collection", conditions, None);
    }
    let base = match scn.source.target_cond(&[scn.beta]) {
        Ok(b) => b,
        Err(e) => {
            conditions.push(Condition::fail("base conditional defined", e.to_string()));
            return CheckReport::assemble("evidence-collection", conditions, None);
        }
    };
    if base.hi.is_zero() {
        conditions.push(Condition::fail(
            "base conditional nonzero",
            "P(v*|q, beta) = 0",
        ));
        return CheckReport::assemble("evidence-collection", conditions, None);
    }

    for (i, path) in scn.paths.iter().enumerate() {
        let idx = i + 1;
        match scn.source.target_cond(&[scn.beta, path]) {
            Ok(lift) => {
                if lift.hi.is_zero() {
                    conditions.push(Condition::fail(
                        format!("conditional nonzero at path {idx}"),
                        "P(v*|q, beta, B(i)) = 0",
                    ));
                    continue;
                }
                match cmp_strict(&lift, &base) {
                    Some(true) => conditions.push(Condition::ok_with(
                        format!("per-path lift {idx}"),
                        format!("{lift} > {base}"),
                    )),
                    Some(false) => conditions.push(Condition::fail(
                        format!("per-path lift {idx}"),
                        format!("{lift} <= {base}"),
                    )),
                    None => conditions.push(Condition::undecided(
                        format!("per-path lift {idx}"),
                        format!("{lift} vs {base}"),
                    )),
                }
            }
            Err(e) => conditions.push(Condition::fail(
                format!("per-path lift {idx}"),
                e.to_string(),
            )),
        }
    }

    let mut prev = base;
    for i in 1..=scn.paths.len() {
        match scn.source.target_cond(&scn.chain(i)) {
            Ok(cur) => {
                match cmp_strict(&cur, &prev) {
                    Some(true) => conditions.push(Condition::ok_with(
                        format!("cumulative chain {i}"),
                        format!("{cur} > {prev}"),
                    )),
                    Some(false) => conditions.push(Condition::fail(
                        format!("cumulative chain {i}"),
                        format!("{cur} <= {prev}"),
                    )),
                    None => conditions.push(Condition::undecided(
                        format!("cumulative chain {i}"),
                        format!("{cur} vs {prev}"),
                    )),
                }
                prev = cur;
            }
            Err(e) => {
                conditions.push(Condition::fail(
                    format!("cumulative chain {i}"),
                    e.to_string(),
                ));
                break;
            }
        }
    }
    CheckReport::assemble("evidence-collection", conditions, None)
}

/// The appendix ratio condition: combining paths must cluster at least as
/// strongly given the target claim as without it.
pub fn is_nonthwarting<P: Prob>(scn: &EvidenceScenario<'_, P>) -> CheckReport {
    let mut conditions = Vec::new();
    for i in 2..=scn.paths.len() {
        match thwart_ratio(scn, i) {
            Ok((lhs, rhs)) => {
                let ratio_cmp = if lhs.lo >= rhs.hi {
                    Some(true)
                } else if lhs.hi < rhs.lo {
                    Some(false)
                } else if lhs == rhs {
                    Some(true)
                } else {
                    None
                };
                match ratio_cmp {
                    Some(true) => conditions.push(Condition::ok_with(
                        format!("non-thwarting at {i}"),
                        format!("{lhs} >= {rhs}"),
                    )),
                    Some(false) => conditions.push(Condition::fail(
                        format!("non-thwarting at {i}"),
                        format!("{lhs} < {rhs}"),
                    )),
                    None => conditions.push(Condition::undecided(
                        format!("non-thwarting at {i}"),
                        format!("{lhs} vs {rhs}"),
                    )),
                }
            }
            Err(e) => conditions.push(Condition::fail(
                format!("non-thwarting at {i}"),
                e.to_string(),
            )),
        }
    }
    if scn.paths.len() < 2 {
        conditions.push(Condition::ok_with(
            "non-thwarting",
            "vacuous below two paths",
        ));
    }
    CheckReport::assemble("non-thwarting", conditions, None)
}

/// Left and right sides of the ratio condition at index `i`.
fn thwart_ratio<P: Prob>(
    scn: &EvidenceScenario<'_, P>,
    i: usize,
) -> Result<(Bracket<P>, Bracket<P>)> {
    let prefix: Vec<&ClaimSet> = scn.paths[..i].iter().collect();
    let prev: Vec<&ClaimSet> = scn.paths[..i - 1].iter().collect();
    let last = &scn.paths[i - 1];
    let base = [scn.beta];

    let joint_t = target_claim_cond(scn.source, &prefix, &base)?;
    let prev_t = target_claim_cond(scn.source, &prev, &base)?;
    let last_t = target_claim_cond(scn.source, &[last], &base)?;
    let lhs = joint_t
        .div(&prev_t.mul(&last_t))
        .ok_or_else(|| Error::Conditioning {
            context: format!("zero conditional in thwart numerator at {i}"),
        })?;

    let joint = scn.source.sets_cond(&prefix, &base)?;
    let prev_q = scn.source.sets_cond(&prev, &base)?;
    let last_q = scn.source.sets_cond(&[last], &base)?;
    let rhs = joint
        .div(&prev_q.mul(&last_q))
        .ok_or_else(|| Error::Conditioning {
            context: format!("zero conditional in thwart denominator at {i}"),
        })?;
    Ok((lhs, rhs))
}

/// Re-derives the cumulative chain from per-path lift plus non-thwarting,
/// reporting the three-factor decomposition of every chain ratio.
pub fn derive_monotone<P: Prob>(scn: &EvidenceScenario<'_, P>) -> CheckReport {
    let mut conditions = Vec::new();

    let percollection = is_evidence_collection(scn);
    let per_path_ok = percollection
        .preconditions
        .iter()
        .filter(|c| c.label.starts_with("per-path"))
        .all(|c| c.holds == Some(true));
    conditions.push(Condition::from_bool(
        "per-path lift",
        per_path_ok,
        percollection.summary(),
    ));
    let nt = is_nonthwarting(scn);
    conditions.push(Condition::from_bool(
        "non-thwarting",
        nt.is_verified(),
        nt.summary(),
    ));

    let mut chain_ok = true;
    for i in 2..=scn.paths.len() {
        let decompose = (|| -> Result<(Bracket<P>, Bracket<P>, Bracket<P>, Bracket<P>)> {
            let base = [scn.beta];
            let f1 = {
                let lift = scn.source.target_cond(&[scn.beta, &scn.paths[i - 1]])?;
                let b = scn.source.target_cond(&base)?;
                lift.div(&b).ok_or_else(|| Error::Conditioning {
                    context: "zero base conditional".into(),
                })?
            };
            let prefix: Vec<&ClaimSet> = scn.paths[..i].iter().collect();
            let prev: Vec<&ClaimSet> = scn.paths[..i - 1].iter().collect();
            let last = &scn.paths[i - 1];
            let f2 = {
                let joint = scn.source.sets_cond(&prefix, &base)?;
                let prev_q = scn.source.sets_cond(&prev, &base)?;
                let last_q = scn.source.sets_cond(&[last], &base)?;
                prev_q
                    .mul(&last_q)
                    .div(&joint)
                    .ok_or_else(|| Error::Conditioning {
                        context: "zero joint conditional".into(),
                    })?
            };
            let f3 = {
                let joint_t = target_claim_cond(scn.source, &prefix, &base)?;
                let prev_t = target_claim_cond(scn.source, &prev, &base)?;
                let last_t = target_claim_cond(scn.source, &[last], &base)?;
                joint_t
                    .div(&prev_t.mul(&last_t))
                    .ok_or_else(|| Error::Conditioning {
                        context: "zero claim-conditioned joint".into(),
                    })?
            };
            let cur = scn.source.target_cond(&scn.chain(i))?;
            let prev_v = scn.source.target_cond(&scn.chain(i - 1))?;
            let ratio = cur.div(&prev_v).ok_or_else(|| Error::Conditioning {
                context: "zero chain conditional".into(),
            })?;
            Ok((f1, f2, f3, ratio))
        })();
        match decompose {
            Ok((f1, f2, f3, ratio)) => {
                let product = f1.mul(&f2).mul(&f3);
                if scn.source.is_exact() && product != ratio {
                    conditions.push(Condition::fail(
                        format!("factorization at {i}"),
                        format!("factors {f1} * {f2} * {f3} != ratio {ratio}"),
                    ));
                    chain_ok = false;
                    continue;
                }
                conditions.push(Condition::ok_with(
                    format!("factorization at {i}"),
                    format!("lift {f1}, cluster {f2} * {f3}, ratio {ratio}"),
                ));
                match (cmp_strict(&f1, &Bracket::exact(P::one())), cmp_ge_one(&f2.mul(&f3))) {
                    (Some(true), Some(true)) => {}
                    _ => chain_ok = false,
                }
                if cmp_strict(&ratio, &Bracket::exact(P::one())) != Some(true) {
                    chain_ok = false;
                }
            }
            Err(e) => {
                conditions.push(Condition::fail(format!("factorization at {i}"), e.to_string()));
                chain_ok = false;
            }
        }
    }
    let conclusion = Conclusion {
        holds: Some(chain_ok && per_path_ok && nt.is_verified()),
        lhs: "cumulative chain".into(),
        rhs: "derived from lift and non-thwarting".into(),
        margin: "exact".into(),
    };
    CheckReport::assemble("monotone-derivation", conditions, Some(conclusion))
}

/// Runs the collection check under every ordering of the paths (the stated
/// indexing is arbitrary); feasible for at most six paths.
pub fn is_evidence_collection_all_orders<P: Prob>(
    scn: &EvidenceScenario<'_, P>,
) -> CheckReport {
    let n = scn.paths.len();
    if n > 6 {
        return CheckReport::assemble(
            "evidence-collection-orders",
            vec![Condition::fail(
                "path count",
                format!("{n} paths exceed the permutation limit of 6"),
            )],
            None,
        );
    }
    let mut conditions = Vec::new();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut orders = Vec::new();
    permutations(&mut indices, 0, &mut orders);
    for order in orders {
        let reordered: Vec<ClaimSet> = order.iter().map(|i| scn.paths[*i].clone()).collect();
        let sub = EvidenceScenario {
            source: scn.source,
            beta: scn.beta,
            paths: &reordered,
        };
        let report = is_evidence_collection(&sub);
        conditions.push(Condition::from_bool(
            format!("order {order:?}"),
            report.is_verified(),
            report.summary(),
        ));
    }
    CheckReport::assemble("evidence-collection-orders", conditions, None)
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// Proposition verifiers
// ---------------------------------------------------------------------------

/// Arguments shared by the evidence proposition verifiers.
pub struct EvidenceArgs {
    /// Reasoner-side prediction question; `psi` must map it to a single
    /// oracle question.
    pub question: Question,
    pub beta: ClaimSet,
    pub paths: Vec<ClaimSet>,
    pub target: Answer,
    pub epsilon: f64,
    pub divergence: DivergenceKind,
    /// Whether to verify the embedding identity in embedded variants.
    pub check_embedding: bool,
    /// Whether to run the perturbation sweep.
    pub sweep: bool,
}

fn arising_contexts(beta: &ClaimSet, paths: &[ClaimSet]) -> Vec<ClaimSet> {
    let mut out = vec![beta.clone()];
    let push = |s: ClaimSet, out: &mut Vec<ClaimSet>| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    for p in paths {
        push(beta.union(p), &mut out);
    }
    let mut acc = beta.clone();
    for p in paths {
        acc = acc.union(p);
        push(acc.clone(), &mut out);
    }
    out
}

fn single_oracle_question<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    q: &Question,
) -> Result<Question> {
    let q1s = ctx
        .psi
        .get(q)
        .ok_or_else(|| Error::Structural(format!("psi undefined at {q}")))?;
    if q1s.len() != 1 {
        return Err(Error::Structural(format!(
            "verifier requires |psi(q)| = 1, got {}",
            q1s.len()
        )));
    }
    Ok(q1s[0].clone())
}

/// Oracle-side conclusion chain values: `P-bar(v* | psi(q), beta, B(1..i))`
/// for `i = 0..=N`.
fn oracle_chain<P: Prob>(
    view: &LimitView<P>,
    q1: &Question,
    target: &Answer,
    beta: &ClaimSet,
    paths: &[ClaimSet],
) -> Result<Vec<Bracket<P>>> {
    let src = LimitSource {
        view,
        question: q1.clone(),
        target: target.clone(),
    };
    let mut out = Vec::new();
    for i in 0..=paths.len() {
        let mut sets: Vec<&ClaimSet> = vec![beta];
        sets.extend(paths[..i].iter());
        out.push(src.target_cond(&sets)?);
    }
    Ok(out)
}

fn chain_conclusion<P: Prob>(values: &[Bracket<P>]) -> (Option<bool>, Conclusion) {
    let mut holds = Some(true);
    let mut margins: Vec<String> = Vec::new();
    for i in 1..values.len() {
        let step = cmp_strict(&values[i], &values[i - 1]);
        margins.push(format!(
            "{} -> {}",
            values[i - 1],
            values[i]
        ));
        holds = match (holds, step) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (None, _) | (_, None) => None,
            (Some(true), Some(true)) => Some(true),
        };
    }
    let conclusion = Conclusion {
        holds,
        lhs: format!("chain [{}]", margins.join(", ")),
        rhs: "strictly increasing".into(),
        margin: min_margin(values),
    };
    (holds, conclusion)
}

fn min_margin<P: Prob>(values: &[Bracket<P>]) -> String {
    let mut min: Option<f64> = None;
    for i in 1..values.len() {
        let m = values[i].lo.to_f64() - values[i - 1].hi.to_f64();
        min = Some(match min {
            None => m,
            Some(v) => v.min(m),
        });
    }
    min.map(|m| format!("{m}")).unwrap_or_else(|| "n/a".into())
}

/// Evidence under the prediction distribution implies the oracle raises its
/// answer probability with each added path, given calibration at every
/// arising context.
///
/// The calibration hypothesis is gated at the mixture level: the prediction
/// distribution's conditional must diverge from the oracle conditional by
/// at most epsilon at each arising context. Per-answer scores are also
/// computed and reported.
pub fn verify_evidence_math<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    n: u32,
    args: &EvidenceArgs,
) -> Result<CheckReport> {
    let q1 = single_oracle_question(ctx, &args.question)?;
    let name = "evidence-oracle-lift";
    let mut conditions = Vec::new();

    let view = ctx.phi1.limit_view()?;
    let conclusion_values = oracle_chain(&view, &q1, &args.target, &args.beta, &args.paths)?;

    let run = |interp: &PsiInterp<P>, conditions: Option<&mut Vec<Condition>>| -> Result<bool> {
        let ctx2 = CalibrationCtx {
            phi1: ctx.phi1,
            phi2: ctx.phi2,
            psi: ctx.psi,
            interp,
        };
        let pd = PredictionDist::new(ctx2.phi1, ctx2.phi2, ctx2.psi, interp, n, PairGate::Plain)?;
        let src = FnSource {
            pd: &pd,
            question_vec: vec![q1.clone()],
            target: args.target.clone(),
        };
        let scn = EvidenceScenario {
            source: &src,
            beta: &args.beta,
            paths: &args.paths,
        };
        let ev = is_evidence_collection(&scn);
        let mut all_ok = ev.is_verified();
        let mut local = vec![Condition::from_bool(
            "(1) evidence collection under F",
            ev.is_verified(),
            ev.summary(),
        )];

        for cset in arising_contexts(&args.beta, &args.paths) {
            let pair = prediction_pair_report(&ctx2, At::Limit, n, &args.question, &cset)?;
            if !pair.is_verified() {
                all_ok = false;
            }
            local.push(Condition::from_bool(
                format!("(2) prediction pair at {cset}"),
                pair.is_verified(),
                pair.summary(),
            ));
            if !pair.is_verified() {
                continue;
            }

            // Mixture-level calibration gate.
            let mixture = pd.mixture(std::slice::from_ref(&q1), &cset)?;
            let (target_dist, exact) = oracle_conditional(ctx2.phi1, std::slice::from_ref(&q1), &cset)?;
            let gate_label = format!("(3) F-level calibration at {cset}");
            if exact {
                let oracle = target_dist.to_exact().expect("exact view");
                if args.divergence.requires_full_support() && !mutual_support(&mixture, &oracle) {
                    all_ok = false;
                    local.push(Condition::fail(
                        format!("(4) support gate at {cset}"),
                        "mixture and oracle conditional differ in support",
                    ));
                    continue;
                }
                local.push(Condition::ok(format!("(4) support gate at {cset}")));
                let d = divergence(&mixture, &oracle, args.divergence)?;
                let ok = d <= args.epsilon;
                if !ok {
                    all_ok = false;
                }
                local.push(Condition::from_bool(
                    gate_label,
                    ok,
                    format!("divergence {d} vs epsilon {}", args.epsilon),
                ));
            } else {
                let (dlo, dhi) = divergence_bounds(&mixture, &target_dist, false, args.divergence)?;
                if dhi <= args.epsilon {
                    local.push(Condition::ok_with(gate_label, format!("bounds [{dlo}, {dhi}]")));
                } else if dlo > args.epsilon {
                    all_ok = false;
                    local.push(Condition::fail(gate_label, format!("bounds [{dlo}, {dhi}]")));
                } else {
                    all_ok = false;
                    local.push(Condition::undecided(
                        gate_label,
                        format!("bounds [{dlo}, {dhi}]"),
                    ));
                }
                local.push(Condition::undecided(
                    format!("(4) support gate at {cset}"),
                    "oracle support bracketed at horizon",
                ));
            }
            // Informational per-answer score.
            if let Ok(score) = calibration_score(&ctx2, n, &args.question, &cset, args.divergence)
            {
                local.push(Condition::ok_with(
                    format!("per-answer score at {cset}"),
                    format!("[{}, {}]", score.lo, score.hi),
                ));
            }
        }
        if let Some(out) = conditions {
            out.extend(local);
        }
        Ok(all_ok)
    };

    let hypotheses_ok = run(ctx.interp, Some(&mut conditions))?;
    let (holds, conclusion) = chain_conclusion(&conclusion_values);

    if args.sweep {
        let sweep_holds = |interp: &PsiInterp<P>| -> Option<bool> {
            // The conclusion of this proposition does not depend on the
            // interpretation; hypotheses do.
            match run(interp, None) {
                Ok(h) => Some(h && holds == Some(true)),
                Err(_) => Some(false),
            }
        };
        let t = sweep_threshold(ctx, sweep_holds);
        conditions.push(Condition::ok_with(
            "epsilon sweep",
            format!("hypotheses and conclusion hold up to interpretation perturbation {t}"),
        ));
    }

    let _ = hypotheses_ok;
    Ok(CheckReport::assemble(name, conditions, Some(conclusion)))
}

/// Bisection for the largest perturbation magnitude at which `holds` stays
/// true; the interpretation is mixed toward uniform by `t`.
pub fn sweep_threshold<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    holds: impl Fn(&PsiInterp<P>) -> Option<bool>,
) -> f64 {
    let at = |num: i64, den: i64| -> Option<bool> {
        let t = P::ratio(num, den);
        let interp = ctx.interp.mixed_toward_uniform(&ctx.phi1.answers, &t);
        holds(&interp)
    };
    if at(1, 1) == Some(true) {
        return 1.0;
    }
    if at(0, 1) != Some(true) {
        return 0.0;
    }
    // Bisect over t = k / 2^16.
    let den: i64 = 65536;
    let mut lo: i64 = 0;
    let mut hi: i64 = den;
    for _ in 0..16 {
        let mid = (lo + hi) / 2;
        if at(mid, den) == Some(true) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as f64 / den as f64
}

/// Embedded analog: evidence under the embedded prediction distribution
/// plus embed-calibration imply the expected universe answer probability
/// rises with each added path.
pub fn verify_evidence_sci<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    args: &EvidenceArgs,
) -> Result<CheckReport> {
    let q1 = single_oracle_question(ctx, &args.question)?;
    let name = "evidence-universe-expectation";
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

    // Conclusion chain of expectations.
    let expectation = |upto: usize| -> Result<Bracket<P>> {
        let mut cset = args.beta.clone();
        for p in &args.paths[..upto] {
            cset = cset.union(p);
        }
        let mut budget = Budget::standard();
        let step = ctx.phi2.step_dist(n)?;
        let response = step_response(
            &step,
            std::slice::from_ref(&args.question),
            &Event::superset(cset.clone()),
            &mut budget,
        )?;
        let mut total = Bracket::exact(P::zero());
        for (tuple, w) in response.iter() {
            let v = &tuple[0];
            let augmented = cset.with(Claim {
                question: args.question.clone(),
                answer: v.clone(),
            });
            let pre = map.preimage(&augmented);
            if pre.is_empty() {
                return Err(Error::Conditioning {
                    context: format!("empty preimage for {augmented}"),
                });
            }
            let cond = Event::default().with_collection(pre.to_vec());
            let universe = view_response(&view, std::slice::from_ref(&q1), &cond, &mut budget)?;
            let u = universe.get(&vec![args.target.clone()]);
            total = total.add(&u.mul(&Bracket::exact(w.clone())));
        }
        Ok(total)
    };
    let mut conclusion_values = Vec::new();
    let mut conclusion_err = None;
    for i in 0..=args.paths.len() {
        match expectation(i) {
            Ok(v) => conclusion_values.push(v),
            Err(e) => {
                conclusion_err = Some(e);
                break;
            }
        }
    }

    let run = |interp: &PsiInterp<P>, conditions: Option<&mut Vec<Condition>>| -> Result<bool> {
        let ctx2 = CalibrationCtx {
            phi1: ctx.phi1,
            phi2: ctx.phi2,
            psi: ctx.psi,
            interp,
        };
        let pd = PredictionDist::new(
            ctx2.phi1,
            ctx2.phi2,
            ctx2.psi,
            interp,
            n,
            PairGate::Embedded(map),
        )?;
        let src = FnSource {
            pd: &pd,
            question_vec: vec![q1.clone()],
            target: args.target.clone(),
        };
        let scn = EvidenceScenario {
            source: &src,
            beta: &args.beta,
            paths: &args.paths,
        };
        let ev = is_evidence_collection(&scn);
        let mut all_ok = ev.is_verified();
        let mut local = vec![Condition::from_bool(
            "(1) evidence collection under embedded F",
            ev.is_verified(),
            ev.summary(),
        )];
        for cset in arising_contexts(&args.beta, &args.paths) {
            let pair = embedded_pair_report(&ctx2, map, n, &args.question, &cset)?;
            if !pair.is_verified() {
                all_ok = false;
            }
            local.push(Condition::from_bool(
                format!("(2) embedded pair at {cset}"),
                pair.is_verified(),
                pair.summary(),
            ));
            if !pair.is_verified() {
                continue;
            }
            match embed_calibration_score(&ctx2, map, n, &args.question, &cset, args.divergence) {
                Ok(score) => {
                    let label = format!("(3) embed-calibration at {cset}");
                    match score.verdict_at(args.epsilon) {
                        Some(true) => local.push(Condition::ok_with(
                            label,
                            format!("score [{}, {}]", score.lo, score.hi),
                        )),
                        Some(false) => {
                            all_ok = false;
                            local.push(Condition::fail(
                                label,
                                format!("score [{}, {}]", score.lo, score.hi),
                            ));
                        }
                        None => {
                            all_ok = false;
                            local.push(Condition::undecided(
                                label,
                                format!("score [{}, {}]", score.lo, score.hi),
                            ));
                        }
                    }
                }
                Err(e) => {
                    all_ok = false;
                    local.push(Condition::fail(
                        format!("(3) embed-calibration at {cset}"),
                        e.to_string(),
                    ));
                }
            }
            if let Some(c) = support_gate_embedded(&ctx2, map, n, &args.question, &cset, args.divergence)? {
                if c.holds != Some(true) {
                    all_ok = false;
                }
                local.push(c);
            }
        }
        if let Some(out) = conditions {
            out.extend(local);
        }
        Ok(all_ok)
    };

    run(ctx.interp, Some(&mut conditions))?;

    let (holds, conclusion) = match conclusion_err {
        Some(e) => (
            Some(false),
            Conclusion {
                holds: Some(false),
                lhs: "expectation chain".into(),
                rhs: "strictly increasing".into(),
                margin: e.to_string(),
            },
        ),
        None => chain_conclusion(&conclusion_values),
    };

    if args.sweep {
        let sweep_holds = |interp: &PsiInterp<P>| -> Option<bool> {
            match run(interp, None) {
                Ok(h) => Some(h && holds == Some(true)),
                Err(_) => Some(false),
            }
        };
        let t = sweep_threshold(ctx, sweep_holds);
        conditions.push(Condition::ok_with(
            "epsilon sweep",
            format!("hypotheses and conclusion hold up to interpretation perturbation {t}"),
        ));
    }

    Ok(CheckReport::assemble(name, conditions, Some(conclusion)))
}

/// Support gate for embedded scores: every interpreted distribution must
/// share support with its conditioned universe target.
fn support_gate_embedded<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    kind: DivergenceKind,
) -> Result<Option<Condition>> {
    if !kind.requires_full_support() {
        return Ok(None);
    }
    let mut budget = Budget::standard();
    let step = ctx.phi2.step_dist(n)?;
    let view = ctx.phi1.limit_view()?;
    let q1s = match ctx.psi.get(q) {
        Some(qs) => qs,
        None => return Ok(None),
    };
    let response = step_response(
        &step,
        std::slice::from_ref(q),
        &Event::superset(cset.clone()),
        &mut budget,
    )?;
    for (tuple, _) in response.iter() {
        let v = &tuple[0];
        let interp = match ctx.interp.get(q1s, v) {
            Some(i) => i,
            None => continue,
        };
        let augmented = cset.with(Claim {
            question: q.clone(),
            answer: v.clone(),
        });
        let pre = map.preimage(&augmented);
        if pre.is_empty() {
            continue;
        }
        let cond = Event::default().with_collection(pre.to_vec());
        let universe = view_response(&view, q1s, &cond, &mut budget)?;
        match universe.to_exact() {
            Some(u) => {
                if !mutual_support(interp, &u) {
                    return Ok(Some(Condition::fail(
                        format!("support gate at {cset}"),
                        format!("answer {v}: interpretation and universe supports differ"),
                    )));
                }
            }
            None => {
                return Ok(Some(Condition::undecided(
                    format!("support gate at {cset}"),
                    "universe support bracketed at horizon",
                )))
            }
        }
    }
    Ok(Some(Condition::ok(format!("support gate at {cset}"))))
}

/// Flipped roles: evidence under the universe limit plus embed-calibration
/// at mapped contexts and the state-uninformativeness proportionality imply
/// the prediction distribution raises its answer probability along the
/// mapped chain.
pub fn verify_evidence_sci_flipped<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    args: &EvidenceArgs,
) -> Result<CheckReport> {
    let q1 = single_oracle_question(ctx, &args.question)?;
    let name = "evidence-prediction-lift";
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

    // (1) evidence collection under the universe limit.
    let src = LimitSource {
        view: &view,
        question: q1.clone(),
        target: args.target.clone(),
    };
    let scn = EvidenceScenario {
        source: &src,
        beta: &args.beta,
        paths: &args.paths,
    };
    let ev = is_evidence_collection(&scn);
    conditions.push(Condition::from_bool(
        "(1) evidence collection under universe limit",
        ev.is_verified(),
        ev.summary(),
    ));

    // Mapped contexts along the chain.
    let chain_sets: Vec<ClaimSet> = {
        let mut out = Vec::new();
        let mut acc = args.beta.clone();
        out.push(acc.clone());
        for p in &args.paths {
            acc = acc.union(p);
            out.push(acc.clone());
        }
        out
    };
    let mut mapped = Vec::new();
    let mut mapping_failed = false;
    for cset in &chain_sets {
        match map.image(cset) {
            Some(img) => mapped.push(img.clone()),
            None => {
                conditions.push(Condition::fail(
                    format!("(2) map defined at {cset}"),
                    "embedding map undefined",
                ));
                mapping_failed = true;
            }
        }
    }
    if mapping_failed {
        return Ok(CheckReport::assemble(name, conditions, None));
    }

    for img in &mapped {
        let pair = embedded_pair_report(ctx, map, n, &args.question, img)?;
        conditions.push(Condition::from_bool(
            format!("(2) embedded pair at {img}"),
            pair.is_verified(),
            pair.summary(),
        ));
        if !pair.is_verified() {
            continue;
        }
        match embed_calibration_score(ctx, map, n, &args.question, img, args.divergence) {
            Ok(score) => {
                let label = format!("(3) embed-calibration at {img}");
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
                format!("(3) embed-calibration at {img}"),
                e.to_string(),
            )),
        }
        if let Some(c) =
            support_gate_embedded(ctx, map, n, &args.question, img, args.divergence)?
        {
            conditions.push(c);
        }
    }

    // (5) proportionality: at each chain index the conditioned-universe
    // value must not depend on the scientist's answer.
    let mut budget = Budget::standard();
    let step = ctx.phi2.step_dist(n)?;
    for (i, img) in mapped.iter().enumerate() {
        let response = match step_response(
            &step,
            std::slice::from_ref(&args.question),
            &Event::superset(img.clone()),
            &mut budget,
        ) {
            Ok(r) => r,
            Err(e) => {
                conditions.push(Condition::fail(
                    format!("(5) proportionality at index {i}"),
                    e.to_string(),
                ));
                continue;
            }
        };
        let mut ratios: Vec<(Answer, Bracket<P>)> = Vec::new();
        let rhs = {
            let mut sets: Vec<&ClaimSet> = vec![&args.beta];
            sets.extend(args.paths[..i].iter());
            src.target_cond(&sets)?
        };
        for (tuple, _) in response.iter() {
            let v = &tuple[0];
            let augmented = img.with(Claim {
                question: args.question.clone(),
                answer: v.clone(),
            });
            let pre = map.preimage(&augmented);
            if pre.is_empty() {
                continue;
            }
            let cond = Event::default().with_collection(pre.to_vec());
            let universe =
                view_response(&view, std::slice::from_ref(&q1), &cond, &mut budget)?;
            let lhs = universe.get(&vec![args.target.clone()]);
            match lhs.div(&rhs) {
                Some(ratio) => ratios.push((v.clone(), ratio)),
                None => {
                    ratios.clear();
                    conditions.push(Condition::fail(
                        format!("(5) proportionality at index {i}"),
                        "zero universe conditional".to_string(),
                    ));
                    break;
                }
            }
        }
        if ratios.is_empty() {
            continue;
        }
        let first = &ratios[0];
        let mut witness = None;
        for (v, r) in &ratios[1..] {
            if r != &first.1 {
                witness = Some(format!(
                    "answers {} and {} give ratios {} and {}",
                    first.0, v, first.1, r
                ));
                break;
            }
        }
        match witness {
            None => conditions.push(Condition::ok_with(
                format!("(5) proportionality at index {i}"),
                format!("constant ratio {}", first.1),
            )),
            Some(w) => conditions.push(Condition::fail(
                format!("(5) proportionality at index {i}"),
                w,
            )),
        }
    }

    // Conclusion under the prediction distribution at mapped contexts.
    let conclusion_at = |interp: &PsiInterp<P>| -> Result<Vec<Bracket<P>>> {
        let pd = PredictionDist::new(
            ctx.phi1,
            ctx.phi2,
            ctx.psi,
            interp,
            n,
            PairGate::Embedded(map),
        )?;
        let fsrc = FnSource {
            pd: &pd,
            question_vec: vec![q1.clone()],
            target: args.target.clone(),
        };
        mapped
            .iter()
            .map(|img| fsrc.target_cond(&[img]))
            .collect()
    };
    let (holds, conclusion) = match conclusion_at(ctx.interp) {
        Ok(values) => chain_conclusion(&values),
        Err(e) => (
            Some(false),
            Conclusion {
                holds: Some(false),
                lhs: "prediction chain".into(),
                rhs: "strictly increasing".into(),
                margin: e.to_string(),
            },
        ),
    };

    if args.sweep {
        let sweep_holds = |interp: &PsiInterp<P>| -> Option<bool> {
            match conclusion_at(interp) {
                Ok(values) => chain_conclusion(&values).0,
                Err(_) => Some(false),
            }
        };
        let t = sweep_threshold(ctx, sweep_holds);
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
    use crate::claim::claim_set;
    use crate::fixtures;
    use crate::Exact;
    use crate::Verdict;

    fn ev_scenario_parts() -> (ClaimSet, Vec<ClaimSet>) {
        (
            ClaimSet::empty(),
            vec![claim_set(&[("qb", "0")]), claim_set(&[("qb", "1")])],
        )
    }

    /// Independent brute-force oracle over the FIX-EV joint table.
    fn oracle_cond(spec: &SmsSpec<Exact>, with_target: bool, present: &[&ClaimSet]) -> Exact {
        let dist = spec.step_dist(1).unwrap();
        let mut num = Exact::ratio(0, 1);
        let mut den = Exact::ratio(0, 1);
        let target = Claim::new("qt", "1");
        for (_, u, p) in dist.rows() {
            if !present.iter().all(|s| s.is_subset(u)) {
                continue;
            }
            if with_target {
                if u.contains(&target) {
                    num += p.clone();
                }
                den += p.clone();
            }
        }
        num / den
    }

    #[test]
    fn fix_ev_is_an_evidence_collection_with_frozen_values() {
        let spec = fixtures::fix_ev();
        let (beta, paths) = ev_scenario_parts();
        let src = StepSource {
            spec: &spec,
            step: 1,
            question: Question::new("qt"),
            target: Answer::new("1"),
        };

        // Frozen from the independent oracle: lift to 3/5 per path, chain
        // to 63/79.
        let base = src.target_cond(&[&beta]).unwrap();
        assert_eq!(base, Bracket::exact(Exact::ratio(1, 2)));
        let b1 = src.target_cond(&[&beta, &paths[0]]).unwrap();
        assert_eq!(b1, Bracket::exact(Exact::ratio(3, 5)));
        assert_eq!(
            oracle_cond(&spec, true, &[&paths[0]]),
            Exact::ratio(3, 5)
        );
        let chain = src.target_cond(&[&beta, &paths[0], &paths[1]]).unwrap();
        assert_eq!(chain, Bracket::exact(Exact::ratio(63, 79)));
        assert_eq!(
            oracle_cond(&spec, true, &[&paths[0], &paths[1]]),
            Exact::ratio(63, 79)
        );

        let scn = EvidenceScenario {
            source: &src,
            beta: &beta,
            paths: &paths,
        };
        let report = is_evidence_collection(&scn);
        assert!(report.is_verified(), "{}", report.summary());

        let nt = is_nonthwarting(&scn);
        assert!(nt.is_verified(), "{}", nt.summary());
        // Frozen ratio values: 7/4 against 79/50.
        assert!(nt.preconditions[0]
            .witness
            .as_deref()
            .unwrap()
            .contains("7/4 >= 79/50"));

        let derived = derive_monotone(&scn);
        assert!(derived.is_verified(), "{}", derived.summary());
    }

    #[test]
    fn single_path_reduces_to_one_inequality() {
        let spec = fixtures::fix_ev();
        let (beta, paths) = ev_scenario_parts();
        let src = StepSource {
            spec: &spec,
            step: 1,
            question: Question::new("qt"),
            target: Answer::new("1"),
        };
        let single = vec![paths[0].clone()];
        let scn = EvidenceScenario {
            source: &src,
            beta: &beta,
            paths: &single,
        };
        let report = is_evidence_collection(&scn);
        assert!(report.is_verified());
        assert_eq!(
            report
                .preconditions
                .iter()
                .filter(|c| c.label.starts_with("cumulative"))
                .count(),
            1
        );
        let nt = is_nonthwarting(&scn);
        assert!(nt.is_verified());
    }

    #[test]
    fn independent_paths_fail_per_path_lift_and_sit_at_ratio_one() {
        let spec = fixtures::fix_ev_independent();
        let (beta, paths) = ev_scenario_parts();
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
        let report = is_evidence_collection(&scn);
        assert_eq!(report.verdict, Verdict::PreconditionFailed);

        let (lhs, rhs) = thwart_ratio(&scn, 2).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs, Bracket::exact(Exact::ratio(1, 1)));
        let nt = is_nonthwarting(&scn);
        assert!(nt.is_verified());
    }

    #[test]
    fn permutation_mode_checks_every_order() {
        let spec = fixtures::fix_ev();
        let (beta, paths) = ev_scenario_parts();
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
        let report = is_evidence_collection_all_orders(&scn);
        assert_eq!(report.preconditions.len(), 2);
        assert!(report.is_verified(), "{}", report.summary());
    }

    #[test]
    fn thwarting_fixture_fails_ratio_and_chain() {
        let spec = fixtures::fix_thwart();
        let (beta, paths) = ev_scenario_parts();
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
        let nt = is_nonthwarting(&scn);
        assert_eq!(nt.verdict, Verdict::PreconditionFailed);
        let (lhs, rhs) = thwart_ratio(&scn, 2).unwrap();
        assert!(lhs.hi < rhs.lo);

        // Per-path lift still holds; the chain breaks at the second path.
        let report = is_evidence_collection(&scn);
        assert!(report
            .preconditions
            .iter()
            .filter(|c| c.label.starts_with("per-path"))
            .all(|c| c.holds == Some(true)));
        assert!(report
            .preconditions
            .iter()
            .any(|c| c.label == "cumulative chain 2" && c.holds == Some(false)));
    }
}
