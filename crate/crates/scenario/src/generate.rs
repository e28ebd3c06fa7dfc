//! Random instance generators.
//!
//! Probabilities carry small denominators and bias toward full support
//! (minimum cell mass 1/32 at default sizes) so that the logarithmic
//! divergences and their Lipschitz gates stay usable; `sparse` lifts the
//! bias for boundary testing.

use crate::construct::{per_step, rat, strings, vector};
use crate::schema::Scenario;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smslab_core::calibration::{PsiInterp, PsiMap};
use smslab_core::claim::{Claim, ClaimSet, ClaimVector, Question};
use smslab_core::divergence::DivergenceKind;
use smslab_core::embedding::EmbeddingMap;
use smslab_core::sms::{Law, SmsSpec, Table};
use smslab_core::{Exact, Sms};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// Size bounds for random instances.
#[derive(Clone, Copy, Debug)]
pub struct Profile {
    pub max_questions: usize,
    pub max_answers: usize,
    pub max_support: usize,
    pub sparse: bool,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            max_questions: 4,
            max_answers: 3,
            max_support: 64,
            sparse: false,
        }
    }
}

fn question_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn answer_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

/// Random single-step scenario that always passes validation.
pub fn random_instance(profile: &Profile, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nq = rng.gen_range(1..=profile.max_questions);
    let na = rng.gen_range(1..=profile.max_answers);
    let questions = question_ids(nq);
    let answers = answer_ids(na);

    let support = rng.gen_range(1..=profile.max_support.min(8));
    let mut vectors: BTreeSet<ClaimVector> = BTreeSet::new();
    let mut guard = 0;
    while vectors.len() < support && guard < 200 {
        guard += 1;
        let len = rng.gen_range(1..=nq);
        let mut qs = questions.clone();
        qs.shuffle(&mut rng);
        let claims: Vec<Claim> = qs[..len]
            .iter()
            .map(|q| {
                Claim::new(
                    q.clone(),
                    answers[rng.gen_range(0..na)].clone(),
                )
            })
            .collect();
        if let Ok(v) = ClaimVector::new(claims) {
            vectors.insert(v);
        }
    }
    let vectors: Vec<ClaimVector> = vectors.into_iter().collect();
    let min_w = if profile.sparse { 0 } else { 1 };
    let weights: Vec<i64> = vectors
        .iter()
        .map(|_| rng.gen_range(min_w..=8i64))
        .collect();
    let total: i64 = weights.iter().sum();
    let mut rows: Vec<(ClaimVector, Exact)> = Vec::new();
    if total == 0 {
        rows.push((vectors[0].clone(), rat(1, 1)));
    } else {
        for (v, w) in vectors.iter().zip(&weights) {
            if *w > 0 {
                rows.push((v.clone(), rat(*w, total)));
            }
        }
    }

    let q_refs: Vec<&str> = questions.iter().map(String::as_str).collect();
    let sms1 = per_step(&q_refs, &answers, rows);
    Scenario {
        sms1,
        sms2: None,
        psi: PsiMap::default(),
        interp: PsiInterp::default(),
        embedding: None,
        divergence: DivergenceKind::Kl,
        epsilon: 0.0,
        step: 1,
        checks: vec![crate::schema::CheckRequest::Validate],
    }
}

/// Random backward-consistent growth kernel: transitions only ever append
/// claims, with optional forced absorption so the vector marginal reaches a
/// fixpoint within the horizon.
pub fn random_bc_kernel(seed: u64, absorbing: bool) -> Sms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nq = rng.gen_range(2..=3usize);
    let na = rng.gen_range(1..=2usize);
    let questions = question_ids(nq);
    let answers = answer_ids(na);
    let horizon = 6;

    let all_claims: Vec<Claim> = questions
        .iter()
        .flat_map(|q| answers.iter().map(move |a| Claim::new(q.clone(), a.clone())))
        .collect();
    // Keeps growth bounded so the reachable set stays small.
    let max_len = if absorbing { 3 } else { all_claims.len().min(4) };

    let init_claim = Claim::new(questions[0].clone(), answers[0].clone());
    let mut init_vecs: Vec<ClaimVector> = vec![vector(vec![init_claim.clone()])];
    if rng.gen_bool(0.5) && all_claims.len() > 1 {
        let extra = all_claims[rng.gen_range(1..all_claims.len())].clone();
        if extra != init_claim {
            init_vecs.push(vector(vec![init_claim.clone(), extra]));
        }
    }
    let init_weights: Vec<i64> = init_vecs.iter().map(|_| rng.gen_range(1..=4i64)).collect();
    let wtotal: i64 = init_weights.iter().sum();
    let init: Vec<(ClaimVector, Exact)> = init_vecs
        .iter()
        .zip(&init_weights)
        .map(|(v, w)| (v.clone(), rat(*w, wtotal)))
        .collect();

    // Breadth-first closure over reachable vectors.
    let mut kernel: BTreeMap<ClaimVector, Vec<(ClaimVector, Exact)>> = BTreeMap::new();
    let mut frontier: Vec<ClaimVector> = init_vecs.clone();
    while let Some(v) = frontier.pop() {
        if kernel.contains_key(&v) {
            continue;
        }
        let present = v.unorder();
        let fresh: Vec<&Claim> = all_claims
            .iter()
            .filter(|c| !present.contains(c))
            .collect();
        let mut successors: Vec<ClaimVector> = Vec::new();
        if v.len() < max_len && !fresh.is_empty() {
            let count = rng.gen_range(1..=2.min(fresh.len()));
            let mut picked: Vec<&Claim> = fresh.clone();
            picked.shuffle(&mut rng);
            for c in picked.into_iter().take(count) {
                let mut claims = v.claims().to_vec();
                claims.push(c.clone());
                successors.push(vector(claims));
            }
        }
        let mut rows: Vec<(ClaimVector, Exact)> = Vec::new();
        if successors.is_empty() {
            rows.push((v.clone(), rat(1, 1)));
        } else if absorbing {
            // All mass moves forward until absorption.
            let weights: Vec<i64> =
                successors.iter().map(|_| rng.gen_range(1..=4i64)).collect();
            let total: i64 = weights.iter().sum();
            for (s, w) in successors.iter().zip(&weights) {
                rows.push((s.clone(), rat(*w, total)));
            }
        } else {
            let hold = rng.gen_range(1..=4i64);
            let weights: Vec<i64> =
                successors.iter().map(|_| rng.gen_range(1..=4i64)).collect();
            let total: i64 = hold + weights.iter().sum::<i64>();
            rows.push((v.clone(), rat(hold, total)));
            for (s, w) in successors.iter().zip(&weights) {
                rows.push((s.clone(), rat(*w, total)));
            }
        }
        frontier.extend(rows.iter().map(|(s, _)| s.clone()));
        kernel.insert(v, rows);
    }

    let q_refs: Vec<&str> = questions.iter().map(String::as_str).collect();
    SmsSpec {
        questions: q_refs.iter().map(|q| Question::new(*q)).collect(),
        answers: answers.iter().map(|a| smslab_core::Answer::new(a.clone())).collect(),
        horizon,
        law: Law::Kernel {
            init: Table::new(init),
            kernel: kernel
                .into_iter()
                .map(|(from, rows)| (from, Table::new(rows)))
                .collect(),
        },
        kappa: Some(0),
    }
}

/// An embedding test pair: a stabilizing universe, the restriction map onto
/// a question subset, the exact image process, and a perturbed image with a
/// known injected residual.
pub struct EmbeddingPair {
    pub universe: Sms,
    pub map: EmbeddingMap,
    pub scientist: Sms,
    pub perturbed: Sms,
    pub injected: Exact,
}

/// Generates an embedding pair from seed. The universe is an absorbing
/// growth kernel whose every vector answers question `q0`, and the map
/// restricts claim sets to a question subset containing `q0`.
pub fn embedding_pair(seed: u64) -> EmbeddingPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Resample until the image process has at least two distinct rows, so
    // a mass-moving perturbation is always expressible.
    let (universe, stationary, kept, rows) = loop {
        let candidate = random_bc_kernel(rng.gen(), true);
        let view = candidate.limit_view().expect("growth kernels are consistent");
        if !view.is_exact() {
            continue;
        }
        let stationary = stationary_marginal(&candidate);

        // Keep a random subset of questions, always including q0.
        let mut kept: BTreeSet<Question> = BTreeSet::new();
        kept.insert(Question::new("q0"));
        for q in &candidate.questions {
            if rng.gen_bool(0.5) {
                kept.insert(q.clone());
            }
        }
        let mut image_rows: BTreeMap<ClaimVector, Exact> = BTreeMap::new();
        for (v, p) in &stationary {
            let image = ClaimSet::from_claims(
                v.unorder()
                    .iter()
                    .filter(|c| kept.contains(&c.question))
                    .cloned(),
            );
            let iv = image.to_vector().expect("q0 is always present");
            image_rows
                .entry(iv)
                .and_modify(|acc| *acc = acc.clone() + p.clone())
                .or_insert_with(|| p.clone());
        }
        if image_rows.len() >= 2 {
            let rows: Vec<(ClaimVector, Exact)> = image_rows.into_iter().collect();
            break (candidate, stationary, kept, rows);
        }
    };
    let reachable: Vec<ClaimSet> = stationary.keys().map(|v| v.unorder()).collect();
    let map = EmbeddingMap::projection(reachable, |c| {
        if kept.contains(&c.question) {
            Some(c.clone())
        } else {
            None
        }
    });
    let questions: Vec<String> = kept.iter().map(|q| q.0.clone()).collect();
    let q_refs: Vec<&str> = questions.iter().map(String::as_str).collect();
    let answers: Vec<String> = universe.answers.iter().map(|a| a.0.clone()).collect();
    let scientist = per_step(&q_refs, &answers, rows.clone());

    // Perturbation: move an exact delta between two distinct rows.
    let (perturbed, injected) = {
        let delta_base = rat(1, 10);
        let from = rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let to = (from + 1) % rows.len();
        let delta = if rows[from].1.clone() > delta_base.clone() {
            delta_base
        } else {
            rows[from].1.clone() * rat(1, 2)
        };
        let mut out = rows.clone();
        out[from].1 = out[from].1.clone() - delta.clone();
        out[to].1 = out[to].1.clone() + delta.clone();
        let out = out.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        (per_step(&q_refs, &answers, out), delta)
    };

    EmbeddingPair {
        universe,
        map,
        scientist,
        perturbed,
        injected,
    }
}

fn stationary_marginal(spec: &Sms) -> BTreeMap<ClaimVector, Exact> {
    let marginals = spec
        .marginals_through(spec.horizon)
        .expect("valid horizon");
    for j in 1..marginals.len() {
        if marginals[j] == marginals[j - 1] {
            return marginals[j].clone();
        }
    }
    marginals.last().unwrap().clone()
}

/// Random full-support joint table over a target answer and two path
/// presence bits, as a single-step SMS; used for the appendix-derivation
/// property runs.
pub fn random_path_table_sms(seed: u64) -> Sms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = [[[0i64; 2]; 2]; 2];
    let mut total = 0i64;
    for a in 0..2 {
        for s1 in 0..2 {
            for s2 in 0..2 {
                let w = rng.gen_range(1..=12i64);
                weights[a][s1][s2] = w;
                total += w;
            }
        }
    }
    let mut rows = Vec::new();
    for a in 0..2 {
        for s1 in 0..2 {
            for s2 in 0..2 {
                let mut claims = vec![Claim::new("qt", if a == 1 { "1" } else { "0" })];
                if s1 == 1 {
                    claims.push(Claim::new("qb1", "1"));
                }
                if s2 == 1 {
                    claims.push(Claim::new("qb2", "1"));
                }
                rows.push((vector(claims), rat(weights[a][s1][s2], total)));
            }
        }
    }
    per_step(&["qt", "qb1", "qb2"], &strings(&["0", "1"]), rows)
}

/// Random always-asked two-question joint table.
pub fn random_joint_sms(seed: u64) -> Sms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<i64> = (0..4).map(|_| rng.gen_range(1..=12i64)).collect();
    let total: i64 = w.iter().sum();
    let mut rows = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            rows.push((
                vector(vec![
                    Claim::new("q1", if a == 1 { "1" } else { "0" }),
                    Claim::new("q2", if b == 1 { "1" } else { "0" }),
                ]),
                rat(w[a * 2 + b], total),
            ));
        }
    }
    per_step(&["q1", "q2"], &strings(&["0", "1"]), rows)
}
