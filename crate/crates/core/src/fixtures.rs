//! Canonical fixtures anchoring cross-module examples and tests.
//!
//! Every derived number asserted in tests traces back to one of these
//! objects, so they are part of the public surface.

use crate::calibration::{PsiInterp, PsiMap};
use crate::claim::{claim_vector, Answer, ClaimSet, ClaimVector, Question};
use crate::dist::Dist;
use crate::embedding::EmbeddingMap;
use crate::scalar::Prob;
use crate::sms::{kernel_spec, per_step_spec, SmsSpec};
use crate::Exact;
use std::collections::BTreeMap;

/// FIX-A: a coin flipped once and then held forever.
///
/// Step 1 emits `[(qa, 0)]` or `[(qa, 1)]` with probability 1/2 each; every
/// later step repeats the current vector. Backward-consistent after step 0,
/// stationary from step 2.
pub fn fix_a() -> SmsSpec<Exact> {
    let heads = claim_vector(&[("qa", "0")]);
    let tails = claim_vector(&[("qa", "1")]);
    kernel_spec(
        &["qa"],
        &["0", "1"],
        4,
        vec![
            (heads.clone(), Exact::ratio(1, 2)),
            (tails.clone(), Exact::ratio(1, 2)),
        ],
        vec![
            (heads.clone(), vec![(heads.clone(), Exact::ratio(1, 1))]),
            (tails.clone(), vec![(tails.clone(), Exact::ratio(1, 1))]),
        ],
        Some(0),
    )
}

/// FIX-B: a single step with three support vectors of probability 1/3 each:
/// `[(qa,0),(qb,1)]`, `[(qa,0)]`, `[(qb,0)]`.
pub fn fix_b() -> SmsSpec<Exact> {
    per_step_spec(
        &["qa", "qb"],
        &["0", "1"],
        vec![vec![
            (claim_vector(&[("qa", "0"), ("qb", "1")]), Exact::ratio(1, 3)),
            (claim_vector(&[("qa", "0")]), Exact::ratio(1, 3)),
            (claim_vector(&[("qb", "0")]), Exact::ratio(1, 3)),
        ]],
        None,
    )
}

/// Absorbing kernel: flips a coin for `qa`, appends `(qb, 1)` with
/// probability 1 on the second step, then holds.
pub fn fix_absorbing() -> SmsSpec<Exact> {
    let h = claim_vector(&[("qa", "0")]);
    let t = claim_vector(&[("qa", "1")]);
    let hb = claim_vector(&[("qa", "0"), ("qb", "1")]);
    let tb = claim_vector(&[("qa", "1"), ("qb", "1")]);
    kernel_spec(
        &["qa", "qb"],
        &["0", "1"],
        4,
        vec![
            (h.clone(), Exact::ratio(1, 2)),
            (t.clone(), Exact::ratio(1, 2)),
        ],
        vec![
            (h.clone(), vec![(hb.clone(), Exact::ratio(1, 1))]),
            (t.clone(), vec![(tb.clone(), Exact::ratio(1, 1))]),
            (hb.clone(), vec![(hb.clone(), Exact::ratio(1, 1))]),
            (tb.clone(), vec![(tb.clone(), Exact::ratio(1, 1))]),
        ],
        Some(0),
    )
}

/// A backward-consistent kernel that keeps growing past its horizon, so no
/// marginal fixpoint is reached and limit queries stay bracketed.
pub fn fix_growing() -> SmsSpec<Exact> {
    let qs = ["q0", "q1", "q2", "q3", "q4"];
    let stage = |k: usize| -> ClaimVector {
        claim_vector(
            &qs[..=k]
                .iter()
                .map(|q| (*q, "1"))
                .collect::<Vec<(&str, &str)>>(),
        )
    };
    let mut rows = Vec::new();
    for k in 0..4 {
        rows.push((
            stage(k),
            vec![
                (stage(k), Exact::ratio(1, 2)),
                (stage(k + 1), Exact::ratio(1, 2)),
            ],
        ));
    }
    rows.push((stage(4), vec![(stage(4), Exact::ratio(1, 1))]));
    kernel_spec(
        &qs,
        &["1"],
        4,
        vec![(stage(0), Exact::ratio(1, 1))],
        rows,
        Some(0),
    )
}

/// Builds a single-step SMS from a joint table over a target answer and two
/// evidence-claim presence bits.
///
/// The emitted vector always answers `qt`; claim `(qb, 0)` is present when
/// the first bit is set and `(qb, 1)` when the second is. `cells[a][s1][s2]`
/// are the joint weights.
fn evidence_table(cells: [[[Exact; 2]; 2]; 2]) -> SmsSpec<Exact> {
    let mut rows = Vec::new();
    for (a, by_a) in cells.iter().enumerate() {
        for (s1, by_s1) in by_a.iter().enumerate() {
            for (s2, p) in by_s1.iter().enumerate() {
                let mut claims = vec![("qt", if a == 1 { "1" } else { "0" })];
                if s1 == 1 {
                    claims.push(("qb", "0"));
                }
                if s2 == 1 {
                    claims.push(("qb", "1"));
                }
                rows.push((claim_vector(&claims), p.clone()));
            }
        }
    }
    per_step_spec(&["qt", "qb"], &["0", "1"], vec![rows], None)
}

/// FIX-EV: a two-question, two-path joint table where each path lifts the
/// target answer and the paths cluster given the target, so the appendix
/// ratio condition holds strictly.
///
/// Paths: `B(1) = {(qb, 0)}`, `B(2) = {(qb, 1)}`; target `(qt, 1)`;
/// foundational set empty.
pub fn fix_ev() -> SmsSpec<Exact> {
    let half = |n: i64, d: i64| Exact::ratio(n, d * 2);
    evidence_table([
        // target answer 0: paths independent with rate 1/3
        [
            [half(4, 9), half(2, 9)],
            [half(2, 9), half(1, 9)],
        ],
        // target answer 1: strongly clustered paths, rate 1/2
        [
            [half(7, 16), half(1, 16)],
            [half(1, 16), half(7, 16)],
        ],
    ])
}

/// FIX-THWART: per-path lift holds but the paths strongly anti-correlate
/// given the target answer, so the non-thwarting ratio condition fails.
pub fn fix_thwart() -> SmsSpec<Exact> {
    let half = |n: i64, d: i64| Exact::ratio(n, d * 2);
    evidence_table([
        [
            [half(4, 9), half(2, 9)],
            [half(2, 9), half(1, 9)],
        ],
        [
            [half(1, 16), half(7, 16)],
            [half(7, 16), half(1, 16)],
        ],
    ])
}

/// Fully independent variant: every presence pattern is independent of the
/// target, so per-path lift fails and the thwarting ratio sits exactly at 1.
pub fn fix_ev_independent() -> SmsSpec<Exact> {
    let cell = |a: i64| {
        [
            [
                Exact::ratio(a * 4, 18),
                Exact::ratio(a * 2, 18),
            ],
            [
                Exact::ratio(a * 2, 18),
                Exact::ratio(a, 18),
            ],
        ]
    };
    evidence_table([cell(1), cell(1)])
}

/// Builds a single-step always-asked two-question SMS from a 2x2 joint
/// table: `cells[i][j]` is the probability of answers (`i` to `q1`, `j` to
/// `q2`).
pub fn joint_table(cells: [[Exact; 2]; 2]) -> SmsSpec<Exact> {
    let mut rows = Vec::new();
    for (i, row) in cells.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let a = if i == 1 { "1" } else { "0" };
            let b = if j == 1 { "1" } else { "0" };
            rows.push((claim_vector(&[("q1", a), ("q2", b)]), p.clone()));
        }
    }
    per_step_spec(&["q1", "q2"], &["0", "1"], vec![rows], None)
}

/// FIX-AB: always-asked joint table with lift factor 3/2 between the claims
/// `(q1, 1)` and `(q2, 1)`.
pub fn fix_ab() -> SmsSpec<Exact> {
    joint_table([
        [Exact::ratio(3, 8), Exact::ratio(1, 8)],
        [Exact::ratio(1, 8), Exact::ratio(3, 8)],
    ])
}

/// Independent always-asked joint table: both lift factors are exactly 1.
pub fn fix_ab_independent() -> SmsSpec<Exact> {
    let q = Exact::ratio(1, 4);
    joint_table([[q.clone(), q.clone()], [q.clone(), q]])
}

/// Point-mass answer distribution on a single answer tuple.
pub fn delta_tuple<P: Prob>(answers: &[&str]) -> Dist<Vec<Answer>, P> {
    Dist::point_mass(answers.iter().map(|a| Answer::new(*a)).collect())
}

/// Uniform answer distribution over single-answer tuples.
pub fn uniform_tuples<P: Prob>(answers: &[&str]) -> Dist<Vec<Answer>, P> {
    let n = answers.len() as i64;
    let mut entries: BTreeMap<Vec<Answer>, P> = BTreeMap::new();
    for a in answers {
        entries.insert(vec![Answer::new(*a)], P::ratio(1, n));
    }
    Dist::new(entries, true)
}

/// Shorthand for a question list.
pub fn questions(ids: &[&str]) -> Vec<Question> {
    ids.iter().map(|q| Question::new(*q)).collect()
}

/// Empty claim set.
pub fn empty() -> ClaimSet {
    ClaimSet::empty()
}

/// SC-ID interpretation maps over FIX-A: psi is the identity on `qa` and
/// every answer is interpreted as certainty about itself.
pub fn sc_id() -> (PsiMap, PsiInterp<Exact>) {
    let psi = PsiMap::from_pairs(&[("qa", &["qa"])]);
    let mut interp = PsiInterp::default();
    interp.insert(questions(&["qa"]), Answer::new("0"), delta_tuple(&["0"]));
    interp.insert(questions(&["qa"]), Answer::new("1"), delta_tuple(&["1"]));
    (psi, interp)
}

/// SC-HON interpretation maps over FIX-A: both answers are interpreted as
/// the fair coin.
pub fn sc_hon() -> (PsiMap, PsiInterp<Exact>) {
    let psi = PsiMap::from_pairs(&[("qa", &["qa"])]);
    let mut interp = PsiInterp::default();
    let fair = uniform_tuples(&["0", "1"]);
    interp.insert(questions(&["qa"]), Answer::new("0"), fair.clone());
    interp.insert(questions(&["qa"]), Answer::new("1"), fair);
    (psi, interp)
}

/// FIX-EMB universe: three equally likely vectors held forever; every
/// support vector answers `qa`.
pub fn fix_emb_universe() -> SmsSpec<Exact> {
    let v1 = claim_vector(&[("qa", "0"), ("qb", "1")]);
    let v2 = claim_vector(&[("qa", "0")]);
    let v3 = claim_vector(&[("qa", "1"), ("qb", "0")]);
    kernel_spec(
        &["qa", "qb"],
        &["0", "1"],
        3,
        vec![
            (v1.clone(), Exact::ratio(1, 3)),
            (v2.clone(), Exact::ratio(1, 3)),
            (v3.clone(), Exact::ratio(1, 3)),
        ],
        vec![
            (v1.clone(), vec![(v1.clone(), Exact::ratio(1, 1))]),
            (v2.clone(), vec![(v2.clone(), Exact::ratio(1, 1))]),
            (v3.clone(), vec![(v3.clone(), Exact::ratio(1, 1))]),
        ],
        Some(0),
    )
}

/// FIX-EMB map: restriction of universe claim sets to their `qa` claims,
/// defined on every subset of every reachable universe set.
pub fn fix_emb_map() -> EmbeddingMap {
    let universe = fix_emb_universe();
    let reachable: Vec<ClaimSet> = universe
        .marginal(1)
        .unwrap()
        .keys()
        .map(|v| v.unorder())
        .collect();
    EmbeddingMap::projection(reachable, |c| {
        if c.question == Question::new("qa") {
            Some(c.clone())
        } else {
            None
        }
    })
}

/// FIX-EMB scientist: the image process of the universe under the map.
pub fn fix_emb_scientist() -> SmsSpec<Exact> {
    per_step_spec(
        &["qa"],
        &["0", "1"],
        vec![vec![
            (claim_vector(&[("qa", "0")]), Exact::ratio(2, 3)),
            (claim_vector(&[("qa", "1")]), Exact::ratio(1, 3)),
        ]],
        None,
    )
}

/// FIX-EMB scientist with probabilities perturbed by 1/10.
pub fn fix_emb_scientist_perturbed() -> SmsSpec<Exact> {
    per_step_spec(
        &["qa"],
        &["0", "1"],
        vec![vec![
            (
                claim_vector(&[("qa", "0")]),
                Exact::ratio(2, 3) - Exact::ratio(1, 10),
            ),
            (
                claim_vector(&[("qa", "1")]),
                Exact::ratio(1, 3) + Exact::ratio(1, 10),
            ),
        ]],
        None,
    )
}

/// FIX-EMB scientist emitting a claim outside the image of the map.
pub fn fix_emb_scientist_offimage() -> SmsSpec<Exact> {
    per_step_spec(
        &["qa", "qb"],
        &["0", "1"],
        vec![vec![
            (claim_vector(&[("qa", "0")]), Exact::ratio(2, 3)),
            (claim_vector(&[("qb", "1")]), Exact::ratio(1, 3)),
        ]],
        None,
    )
}
