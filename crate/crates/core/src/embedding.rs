//! Embedding maps between the claim sets of two SMSs, the embedding
//! identity, embedded prediction pairs, embed-calibration, discrimination,
//! and the projection identity.
//!
//! An embedding map `E` is a partial function from claim sets of the
//! universe SMS to claim sets of the scientist SMS, stored as an explicit
//! finite table. Its preimage under a scientist set is a *collection* of
//! universe sets; the probability of a preimage is always the probability
//! that the universe generates a superset of one member, never of their
//! union.

use crate::calibration::{embedded_pair_report, CalibrationCtx};
use crate::claim::{Answer, Claim, ClaimSet, Question};
use crate::dist::{step_response, view_response, Budget, Event};
use crate::divergence::{divergence_bounds, DivergenceKind};
use crate::error::Error;
use crate::report::{CheckReport, Conclusion, Condition};
use crate::scalar::{Bracket, Prob};
use crate::sms::SmsSpec;
use crate::Result;
use std::collections::{BTreeMap, BTreeSet};

/// Explicit finite table for a partial map between claim-set spaces, with a
/// derived preimage index.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMap {
    table: BTreeMap<ClaimSet, ClaimSet>,
    preimage: BTreeMap<ClaimSet, Vec<ClaimSet>>,
}

impl EmbeddingMap {
    pub fn new(rows: impl IntoIterator<Item = (ClaimSet, ClaimSet)>) -> Self {
        let table: BTreeMap<ClaimSet, ClaimSet> = rows.into_iter().collect();
        let mut preimage: BTreeMap<ClaimSet, Vec<ClaimSet>> = BTreeMap::new();
        for (from, to) in &table {
            preimage.entry(to.clone()).or_default().push(from.clone());
        }
        EmbeddingMap { table, preimage }
    }

    /// Projection-style map: every subset of every reachable universe set is
    /// mapped through `project`. Claims for which `project` returns `None`
    /// are dropped.
    pub fn projection(
        reachable: impl IntoIterator<Item = ClaimSet>,
        project: impl Fn(&Claim) -> Option<Claim>,
    ) -> Self {
        let mut rows: BTreeMap<ClaimSet, ClaimSet> = BTreeMap::new();
        for set in reachable {
            for sub in set.subsets() {
                let image = ClaimSet::from_claims(sub.iter().filter_map(&project));
                rows.entry(sub).or_insert(image);
            }
        }
        EmbeddingMap::new(rows)
    }

    pub fn image(&self, set: &ClaimSet) -> Option<&ClaimSet> {
        self.table.get(set)
    }

    pub fn image_or_err(&self, set: &ClaimSet) -> Result<&ClaimSet> {
        self.image(set)
            .ok_or_else(|| Error::Domain(format!("embedding map undefined at {set}")))
    }

    /// Preimage collection of a scientist claim set; empty when no table row
    /// maps onto it.
    pub fn preimage(&self, set: &ClaimSet) -> &[ClaimSet] {
        self.preimage.get(set).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Preimage of a collection: union of member preimages, deduplicated.
    pub fn preimage_collection(&self, collection: &[ClaimSet]) -> Vec<ClaimSet> {
        let mut out: BTreeSet<ClaimSet> = BTreeSet::new();
        for member in collection {
            out.extend(self.preimage(member).iter().cloned());
        }
        out.into_iter().collect()
    }

    /// Image of a collection, member-wise. Errors when any member lies
    /// outside the domain.
    pub fn image_collection(&self, collection: &[ClaimSet]) -> Result<Vec<ClaimSet>> {
        let mut out: BTreeSet<ClaimSet> = BTreeSet::new();
        for member in collection {
            out.insert(self.image_or_err(member)?.clone());
        }
        Ok(out.into_iter().collect())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&ClaimSet, &ClaimSet)> {
        self.table.iter()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Outcome of the embedding-identity check: the report plus per-set
/// residuals for callers that need the numbers.
#[derive(Clone, Debug)]
pub struct EmbeddingVerification<P> {
    pub report: CheckReport,
    /// `(scientist set, scientist probability, universe bracket, residual)`
    pub residuals: Vec<(ClaimSet, P, Bracket<P>, P)>,
    pub max_residual: P,
}

/// Verifies the embedding identity at step `n`: for every non-empty claim
/// set the scientist can produce, the universe limit probability of its
/// preimage collection matches the scientist's superset probability, within
/// the limit bracket.
pub fn verify_embedding<P: Prob>(
    phi1: &SmsSpec<P>,
    phi2: &SmsSpec<P>,
    map: &EmbeddingMap,
    n: u32,
) -> Result<EmbeddingVerification<P>> {
    let mut budget = Budget::standard();
    let view = phi1.limit_view()?;
    let sci = phi2.step_dist(n)?;

    let mut sets: BTreeSet<ClaimSet> = BTreeSet::new();
    for (_, u, _) in sci.rows() {
        for sub in u.subsets() {
            if !sub.is_empty() {
                sets.insert(sub);
            }
        }
    }

    let mut conditions = Vec::new();
    let mut residuals = Vec::new();
    let mut max_residual = P::zero();
    let mut undecided = false;
    for s2 in sets {
        let p2 = sci.event_prob(&Event::superset(s2.clone()), &mut budget)?;
        if p2.is_zero() {
            continue;
        }
        let pre = map.preimage(&s2);
        if pre.is_empty() {
            conditions.push(Condition::fail(
                format!("identity at {s2}"),
                format!("scientist probability {p2} but the preimage collection is empty"),
            ));
            max_residual = if p2 > max_residual { p2.clone() } else { max_residual };
            residuals.push((s2, p2.clone(), Bracket::exact(P::zero()), p2));
            continue;
        }
        let ev = Event::default().with_collection(pre.to_vec());
        let p1 = view.event_prob(&ev, &mut budget)?;
        let residual = if p2 >= p1.lo && p2 <= p1.hi {
            P::zero()
        } else if p2 < p1.lo {
            p1.lo.clone() - p2.clone()
        } else {
            p2.clone() - p1.hi.clone()
        };
        let inside = residual.is_zero();
        if inside && !p1.is_exact() {
            // Contained in a loose bracket: not a confirmed equality.
            undecided = true;
            conditions.push(Condition::undecided(
                format!("identity at {s2}"),
                format!("scientist {p2} inside loose universe bracket {p1}"),
            ));
        } else if inside {
            conditions.push(Condition::ok_with(
                format!("identity at {s2}"),
                format!("both sides {p2}"),
            ));
        } else {
            conditions.push(Condition::fail(
                format!("identity at {s2}"),
                format!("scientist {p2} vs universe {p1}, residual {residual}"),
            ));
        }
        if residual > max_residual {
            max_residual = residual.clone();
        }
        residuals.push((s2, p2, p1, residual));
    }
    let _ = undecided;
    let report = CheckReport::assemble("embedding-identity", conditions, None);
    Ok(EmbeddingVerification {
        report,
        residuals,
        max_residual,
    })
}

/// Embed-calibration score: the expected divergence, over the scientist's
/// answers, between the interpreted answer distribution and the universe
/// limit conditional given the preimage of the scientist's state including
/// the prediction claim itself.
#[derive(Clone, Debug)]
pub struct EmbedScore {
    pub lo: f64,
    pub hi: f64,
    /// Per-answer divergence bounds, weighted into the totals.
    pub per_answer: Vec<(Answer, f64, f64)>,
}

impl EmbedScore {
    /// `Some(true)` when certainly within `eps`, `Some(false)` when
    /// certainly above, `None` when the interval straddles the threshold.
    pub fn verdict_at(&self, eps: f64) -> Option<bool> {
        if self.hi <= eps {
            Some(true)
        } else if self.lo > eps {
            Some(false)
        } else {
            None
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.hi == 0.0
    }
}

/// Computes the embed-calibration score for `(q, cset)`.
pub fn embed_calibration_score<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    kind: DivergenceKind,
) -> Result<EmbedScore> {
    let pair = embedded_pair_report(ctx, map, n, q, cset)?;
    if !pair.is_verified() {
        return Err(Error::Precondition(format!(
            "not an embedded prediction pair: {}",
            pair.summary()
        )));
    }
    let mut budget = Budget::standard();
    let step = ctx.phi2.step_dist(n)?;
    let view = ctx.phi1.limit_view()?;
    let q1s = ctx
        .psi
        .get(q)
        .ok_or_else(|| Error::Structural(format!("psi undefined at {q}")))?;

    let response = step_response(&step, std::slice::from_ref(q), &Event::superset(cset.clone()), &mut budget)?;
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut per_answer = Vec::new();
    for (tuple, w) in response.iter() {
        let v = tuple[0].clone();
        let interp = ctx.interp.get(q1s, &v).ok_or_else(|| {
            Error::Structural(format!("Psi undefined at ({q1s:?}, {v})"))
        })?;
        let augmented = cset.with(Claim {
            question: q.clone(),
            answer: v.clone(),
        });
        let pre = map.preimage(&augmented);
        if pre.is_empty() {
            return Err(Error::Conditioning {
                context: format!("empty preimage for {augmented}"),
            });
        }
        let cond = Event::default().with_collection(pre.to_vec());
        let target = view_response(&view, q1s, &cond, &mut budget)?;
        let (dlo, dhi) = divergence_bounds(interp, &target, view.is_exact(), kind)?;
        let wf = w.to_f64();
        lo += wf * dlo;
        hi += wf * dhi;
        per_answer.push((v, dlo, dhi));
    }
    Ok(EmbedScore { lo, hi, per_answer })
}

/// Checks that the scientist's states discriminate among the universe's
/// possible experiment outcomes: adjoining any supported outcome tuple to
/// the preimage collection and passing through the map and back must be the
/// identity on collections.
pub fn is_discriminating<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
) -> Result<CheckReport> {
    let pair = embedded_pair_report(ctx, map, n, q, cset)?;
    let mut conditions = vec![pair_condition(&pair)];
    if !pair.is_verified() {
        return Ok(CheckReport::assemble("discriminating", conditions, None));
    }
    let mut budget = Budget::standard();
    let step = ctx.phi2.step_dist(n)?;
    let view = ctx.phi1.limit_view()?;
    let q1s = ctx.psi.get(q).expect("pair verified");

    let response = step_response(&step, std::slice::from_ref(q), &Event::superset(cset.clone()), &mut budget)?;
    for (tuple, _) in response.iter() {
        let v = &tuple[0];
        let augmented = cset.with(Claim {
            question: q.clone(),
            answer: v.clone(),
        });
        let pre = map.preimage(&augmented).to_vec();
        let cond = Event::default().with_collection(pre.clone());
        let target = view_response(&view, q1s, &cond, &mut budget)?;
        if target.entries.is_empty() {
            conditions.push(Condition::ok_with(
                format!("answer {v}: vacuous"),
                "conditioned support is empty",
            ));
            continue;
        }
        for out_tuple in target.entries.keys() {
            if target.get(out_tuple).hi.is_zero() {
                continue;
            }
            let augmented_collection: Vec<ClaimSet> = pre
                .iter()
                .map(|member| {
                    let mut m = member.clone();
                    for (qq, aa) in q1s.iter().zip(out_tuple.iter()) {
                        m.insert(Claim {
                            question: qq.clone(),
                            answer: aa.clone(),
                        });
                    }
                    m
                })
                .collect();
            let images = match map.image_collection(&augmented_collection) {
                Ok(i) => i,
                Err(e) => {
                    return Err(Error::Domain(format!(
                        "embedding map undefined on an outcome-augmented set: {e}"
                    )))
                }
            };
            let back: BTreeSet<ClaimSet> =
                map.preimage_collection(&images).into_iter().collect();
            let original: BTreeSet<ClaimSet> = augmented_collection.into_iter().collect();
            let label = format!("answer {v}, outcome {:?}", render_tuple(out_tuple));
            if back == original {
                conditions.push(Condition::ok(label));
            } else {
                conditions.push(Condition::fail(
                    label,
                    format!(
                        "map collapses the augmented collection: {} preimage members vs {} originals",
                        back.len(),
                        original.len()
                    ),
                ));
            }
        }
    }
    Ok(CheckReport::assemble("discriminating", conditions, None))
}

/// Projection identity: with embed-calibration at zero and discrimination,
/// the interpreted answer distribution equals the ratio of scientist
/// probabilities of mapped outcome-augmented collections. Both sides are
/// computed by independent code paths.
pub fn check_projection<P: Prob>(
    ctx: &CalibrationCtx<'_, P>,
    map: &EmbeddingMap,
    n: u32,
    q: &Question,
    cset: &ClaimSet,
    kind: DivergenceKind,
) -> Result<CheckReport> {
    let mut conditions = Vec::new();

    let score = match embed_calibration_score(ctx, map, n, q, cset, kind) {
        Ok(s) => s,
        Err(e) => {
            conditions.push(Condition::fail("embed-calibrated at 0", e.to_string()));
            return Ok(CheckReport::assemble("projection", conditions, None));
        }
    };
    match score.verdict_at(0.0) {
        Some(true) => conditions.push(Condition::ok("embed-calibrated at 0")),
        Some(false) => {
            conditions.push(Condition::fail(
                "embed-calibrated at 0",
                format!("score in [{}, {}]", score.lo, score.hi),
            ));
        }
        None => conditions.push(Condition::undecided(
            "embed-calibrated at 0",
            format!("score in [{}, {}]", score.lo, score.hi),
        )),
    }

    let disc = is_discriminating(ctx, map, n, q, cset)?;
    conditions.push(Condition::from_bool(
        "discriminating",
        disc.is_verified(),
        disc.summary(),
    ));

    if conditions.iter().any(|c| c.holds != Some(true)) {
        return Ok(CheckReport::assemble("projection", conditions, None));
    }

    let mut budget = Budget::standard();
    let step2 = ctx.phi2.step_dist(n)?;
    let view = ctx.phi1.limit_view()?;
    let q1s = ctx.psi.get(q).expect("pair verified");
    let response = step_response(&step2, std::slice::from_ref(q), &Event::superset(cset.clone()), &mut budget)?;

    let mut holds = true;
    let mut lhs_all = Vec::new();
    let mut rhs_all = Vec::new();
    for (tuple, _) in response.iter() {
        let v = &tuple[0];
        let interp = ctx.interp.get(q1s, v).expect("pair verified");
        let augmented = cset.with(Claim {
            question: q.clone(),
            answer: v.clone(),
        });
        let pre = map.preimage(&augmented).to_vec();
        let cond = Event::default().with_collection(pre.clone());
        let target = view_response(&view, q1s, &cond, &mut budget)?;

        // Denominator: scientist probability of mapped collections summed
        // over all supported outcome tuples.
        let mut numerators: BTreeMap<Vec<Answer>, P> = BTreeMap::new();
        for out_tuple in target.entries.keys() {
            let augmented_collection: Vec<ClaimSet> = pre
                .iter()
                .map(|member| {
                    let mut m = member.clone();
                    for (qq, aa) in q1s.iter().zip(out_tuple.iter()) {
                        m.insert(Claim {
                            question: qq.clone(),
                            answer: aa.clone(),
                        });
                    }
                    m
                })
                .collect();
            let images = map.image_collection(&augmented_collection)?;
            let ev = Event::default().with_collection(images);
            let p2 = step2.event_prob(&ev, &mut budget)?;
            numerators.insert(out_tuple.clone(), p2);
        }
        let denom: P = numerators.values().cloned().sum();
        if denom.is_zero() {
            conditions.push(Condition::fail(
                format!("ratio defined for answer {v}"),
                "scientist assigns zero probability to every mapped outcome".to_string(),
            ));
            holds = false;
            continue;
        }
        for (out_tuple, num) in &numerators {
            let lhs = interp.get(out_tuple);
            let rhs = num.clone() / denom.clone();
            lhs_all.push(lhs.to_f64());
            rhs_all.push(rhs.to_f64());
            if lhs != rhs {
                holds = false;
                conditions.push(Condition::fail(
                    format!("identity at answer {v}, outcome {:?}", render_tuple(out_tuple)),
                    format!("interpretation {lhs} vs mapped ratio {rhs}"),
                ));
            }
        }
    }
    let conclusion = Conclusion {
        holds: Some(holds),
        lhs: format!("{lhs_all:?}"),
        rhs: format!("{rhs_all:?}"),
        margin: "exact".into(),
    };
    Ok(CheckReport::assemble("projection", conditions, Some(conclusion)))
}

fn pair_condition(pair: &CheckReport) -> Condition {
    Condition::from_bool(
        "embedded prediction pair",
        pair.is_verified(),
        pair.summary(),
    )
}

fn render_tuple(tuple: &[Answer]) -> Vec<String> {
    tuple.iter().map(|a| a.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{PsiInterp, PsiMap};
    use crate::claim::claim_vector;
    use crate::dist::Dist;
    use crate::fixtures;
    use crate::sms::{kernel_spec, per_step_spec, SmsSpec};
    use crate::Exact;
    use crate::Verdict;

    #[test]
    fn embedding_identity_holds_for_image_process() {
        let universe = fixtures::fix_emb_universe();
        let map = fixtures::fix_emb_map();
        let sci = fixtures::fix_emb_scientist();
        let v = verify_embedding(&universe, &sci, &map, 1).unwrap();
        assert!(v.report.is_verified(), "{}", v.report.summary());
        assert_eq!(v.max_residual, Exact::ratio(0, 1));
    }

    #[test]
    fn embedding_identity_recovers_injected_residual() {
        let universe = fixtures::fix_emb_universe();
        let map = fixtures::fix_emb_map();
        let sci = fixtures::fix_emb_scientist_perturbed();
        let v = verify_embedding(&universe, &sci, &map, 1).unwrap();
        assert_eq!(v.report.verdict, Verdict::PreconditionFailed);
        assert_eq!(v.max_residual, Exact::ratio(1, 10));
    }

    #[test]
    fn positive_set_with_empty_preimage_is_a_witnessed_failure() {
        let universe = fixtures::fix_emb_universe();
        let map = fixtures::fix_emb_map();
        let sci = fixtures::fix_emb_scientist_offimage();
        let v = verify_embedding(&universe, &sci, &map, 1).unwrap();
        assert_eq!(v.report.verdict, Verdict::PreconditionFailed);
        assert!(v
            .report
            .preconditions
            .iter()
            .any(|c| c.holds == Some(false)
                && c.witness.as_deref().unwrap_or("").contains("empty")));
    }

    /// Universe emitting one experiment claim and one prediction claim,
    /// held forever; the scientist is a claim-wise renamed copy.
    fn rename_universe() -> SmsSpec<Exact> {
        let mut init = Vec::new();
        let cells = [
            (("0", "0"), Exact::ratio(1, 4)),
            (("0", "1"), Exact::ratio(1, 4)),
            (("1", "0"), Exact::ratio(1, 6)),
            (("1", "1"), Exact::ratio(1, 3)),
        ];
        let mut kernel = Vec::new();
        for ((a, u), p) in cells {
            let v = claim_vector(&[("qt", a), ("qp", u)]);
            init.push((v.clone(), p));
            kernel.push((v.clone(), vec![(v, Exact::ratio(1, 1))]));
        }
        kernel_spec(&["qt", "qp"], &["0", "1"], 3, init, kernel, Some(0))
    }

    fn rename_scientist() -> SmsSpec<Exact> {
        let rows = vec![
            (claim_vector(&[("st", "0"), ("sp", "0")]), Exact::ratio(1, 4)),
            (claim_vector(&[("st", "0"), ("sp", "1")]), Exact::ratio(1, 4)),
            (claim_vector(&[("st", "1"), ("sp", "0")]), Exact::ratio(1, 6)),
            (claim_vector(&[("st", "1"), ("sp", "1")]), Exact::ratio(1, 3)),
        ];
        per_step_spec(&["st", "sp"], &["0", "1"], vec![rows], None)
    }

    fn rename_map() -> EmbeddingMap {
        let universe = rename_universe();
        let reachable: Vec<ClaimSet> = universe
            .marginal(1)
            .unwrap()
            .keys()
            .map(|v| v.unorder())
            .collect();
        EmbeddingMap::projection(reachable, |c| {
            let q = match c.question.0.as_str() {
                "qt" => "st",
                "qp" => "sp",
                other => other,
            };
            Some(Claim::new(q, c.answer.0.clone()))
        })
    }

    /// Interpretations read off the universe conditionals given each
    /// prediction answer.
    fn rename_interp() -> (PsiMap, PsiInterp<Exact>) {
        let psi = PsiMap::from_pairs(&[("sp", &["qt"])]);
        let mut interp = PsiInterp::default();
        let mut d0 = std::collections::BTreeMap::new();
        d0.insert(vec![Answer::new("0")], Exact::ratio(3, 5));
        d0.insert(vec![Answer::new("1")], Exact::ratio(2, 5));
        interp.insert(
            vec![Question::new("qt")],
            Answer::new("0"),
            Dist::new(d0, true),
        );
        let mut d1 = std::collections::BTreeMap::new();
        d1.insert(vec![Answer::new("0")], Exact::ratio(3, 7));
        d1.insert(vec![Answer::new("1")], Exact::ratio(4, 7));
        interp.insert(
            vec![Question::new("qt")],
            Answer::new("1"),
            Dist::new(d1, true),
        );
        (psi, interp)
    }

    #[test]
    fn embed_calibration_score_zero_for_read_off_interpretation() {
        let universe = rename_universe();
        let sci = rename_scientist();
        let map = rename_map();
        let (psi, interp) = rename_interp();
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &interp,
        };
        let sp = Question::new("sp");
        let score = embed_calibration_score(
            &ctx,
            &map,
            1,
            &sp,
            &ClaimSet::empty(),
            DivergenceKind::Kl,
        )
        .unwrap();
        assert!(score.is_exact_zero(), "score [{}, {}]", score.lo, score.hi);

        // A point-mass interpretation against the unsure conditional costs
        // exactly the log of the conditional mass... here just check > 0.
        let mut wrong = PsiInterp::default();
        wrong.insert(
            vec![Question::new("qt")],
            Answer::new("0"),
            crate::fixtures::delta_tuple(&["0"]),
        );
        wrong.insert(
            vec![Question::new("qt")],
            Answer::new("1"),
            crate::fixtures::delta_tuple(&["1"]),
        );
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &wrong,
        };
        let score =
            embed_calibration_score(&ctx, &map, 1, &sp, &ClaimSet::empty(), DivergenceKind::Kl)
                .unwrap();
        assert!(score.lo > 0.0);
    }

    #[test]
    fn injective_rename_is_discriminating_and_projects() {
        let universe = rename_universe();
        let sci = rename_scientist();
        let map = rename_map();
        let (psi, interp) = rename_interp();
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &interp,
        };
        let sp = Question::new("sp");
        let disc = is_discriminating(&ctx, &map, 1, &sp, &ClaimSet::empty()).unwrap();
        assert!(disc.is_verified(), "{}", disc.summary());

        let proj =
            check_projection(&ctx, &map, 1, &sp, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert!(proj.is_verified(), "{}", proj.summary());
        assert_eq!(proj.conclusion.as_ref().unwrap().holds, Some(true));
    }

    /// Collapsing both experiment outcomes onto one scientist claim breaks
    /// discrimination and therefore gates the projection check.
    #[test]
    fn collapsed_map_fails_discrimination() {
        let universe = rename_universe();
        let map = {
            let reachable: Vec<ClaimSet> = universe
                .marginal(1)
                .unwrap()
                .keys()
                .map(|v| v.unorder())
                .collect();
            EmbeddingMap::projection(reachable, |c| {
                if c.question.0 == "qt" {
                    Some(Claim::new("st", "x"))
                } else {
                    Some(Claim::new("sp", c.answer.0.clone()))
                }
            })
        };
        let sci = per_step_spec(
            &["st", "sp"],
            &["x", "0", "1"],
            vec![vec![
                (
                    claim_vector(&[("st", "x"), ("sp", "0")]),
                    Exact::ratio(5, 12),
                ),
                (
                    claim_vector(&[("st", "x"), ("sp", "1")]),
                    Exact::ratio(7, 12),
                ),
            ]],
            None,
        );
        let (psi, interp) = rename_interp();
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &interp,
        };
        let sp = Question::new("sp");
        let disc = is_discriminating(&ctx, &map, 1, &sp, &ClaimSet::empty()).unwrap();
        assert_eq!(disc.verdict, Verdict::PreconditionFailed);
        assert!(disc
            .preconditions
            .iter()
            .any(|c| c.holds == Some(false)
                && c.witness.as_deref().unwrap_or("").contains("collapses")));

        let proj =
            check_projection(&ctx, &map, 1, &sp, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert_eq!(proj.verdict, Verdict::PreconditionFailed);
    }

    #[test]
    fn embedded_triples_require_positive_answers_and_preimages() {
        use crate::calibration::embedded_triple_report;
        let universe = rename_universe();
        let sci = rename_scientist();
        let map = rename_map();
        let (psi, interp) = rename_interp();
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &interp,
        };
        let sp = Question::new("sp");
        let ok = embedded_triple_report(&ctx, &map, 1, &sp, &ClaimSet::empty(), &Answer::new("0"))
            .unwrap();
        assert!(ok.is_verified(), "{}", ok.summary());

        // An answer the scientist never gives fails the positivity gate.
        let mut phi2 = sci.clone();
        phi2.answers.insert(Answer::new("z"));
        let mut phi1 = universe.clone();
        phi1.answers.insert(Answer::new("z"));
        let ctx = CalibrationCtx {
            phi1: &phi1,
            phi2: &phi2,
            psi: &psi,
            interp: &interp,
        };
        let bad = embedded_triple_report(&ctx, &map, 1, &sp, &ClaimSet::empty(), &Answer::new("z"))
            .unwrap();
        assert_eq!(bad.verdict, Verdict::PreconditionFailed);

        // A claim set with an empty preimage fails condition (4).
        let tiny = EmbeddingMap::new(vec![(ClaimSet::empty(), ClaimSet::empty())]);
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &interp,
        };
        let bad = embedded_triple_report(&ctx, &tiny, 1, &sp, &ClaimSet::empty(), &Answer::new("0"))
            .unwrap();
        assert_eq!(bad.verdict, Verdict::PreconditionFailed);
        assert!(bad
            .preconditions
            .iter()
            .any(|c| c.witness.as_deref().unwrap_or("").contains("preimage")));
    }

    #[test]
    fn perturbed_interpretation_gates_projection() {
        let universe = rename_universe();
        let sci = rename_scientist();
        let map = rename_map();
        let (psi, interp) = rename_interp();
        let perturbed = interp.mixed_toward_uniform(&universe.answers, &Exact::ratio(1, 10));
        let ctx = CalibrationCtx {
            phi1: &universe,
            phi2: &sci,
            psi: &psi,
            interp: &perturbed,
        };
        let sp = Question::new("sp");
        let proj =
            check_projection(&ctx, &map, 1, &sp, &ClaimSet::empty(), DivergenceKind::Kl).unwrap();
        assert_eq!(proj.verdict, Verdict::PreconditionFailed);
    }
}
