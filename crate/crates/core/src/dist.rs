//! Exact enumeration of step distributions, conditionals, limit brackets,
//! and a seeded Monte Carlo cross-check.
//!
//! Every event handled here is upward-closed in the unordered claim set:
//! "contains these claims", "asks these questions", "contains a superset of
//! one of these sets". Upward-closure is what makes step probabilities of
//! backward-consistent processes non-decreasing, which in turn grounds the
//! limit brackets.

use crate::claim::{Answer, ClaimSet, ClaimVector, Question};
use crate::error::Error;
use crate::scalar::{Bracket, Prob};
use crate::sms::{Law, SmsSpec, TrajectoryPrefix};
use crate::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Default cap on vector evaluations per public operation.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Environment variable overriding the enumeration cap.
pub const BUDGET_ENV: &str = "SMSLAB_BUDGET";

/// Counts vector evaluations against a cap.
#[derive(Debug)]
pub struct Budget {
    used: u64,
    cap: u64,
}

impl Budget {
    /// Cap from `SMSLAB_BUDGET`, falling back to [`DEFAULT_BUDGET`].
    pub fn standard() -> Self {
        let cap = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        Budget { used: 0, cap }
    }

    pub fn with_cap(cap: u64) -> Self {
        Budget { used: 0, cap }
    }

    pub fn charge(&mut self, n: u64) -> Result<()> {
        self.used = self.used.saturating_add(n);
        if self.used > self.cap {
            Err(Error::Budget {
                evaluated: self.used,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }
}

/// An upward-closed event over emitted claim vectors.
///
/// Holds for a vector `C` iff `require ⊆ U(C)`, every question in
/// `questions` occurs in `U(C)`, and (when present) some member of `any_of`
/// is a subset of `U(C)`. The `any_of` clause is evaluated member-wise,
/// never as a union.
#[derive(Clone, Debug, Default)]
pub struct Event {
    pub require: ClaimSet,
    pub questions: Vec<Question>,
    pub any_of: Option<Vec<ClaimSet>>,
}

impl Event {
    pub fn superset(require: ClaimSet) -> Self {
        Event {
            require,
            questions: Vec::new(),
            any_of: None,
        }
    }

    pub fn with_questions(mut self, questions: Vec<Question>) -> Self {
        self.questions = questions;
        self
    }

    pub fn with_collection(mut self, collection: Vec<ClaimSet>) -> Self {
        self.any_of = Some(collection);
        self
    }

    pub fn holds(&self, set: &ClaimSet) -> bool {
        if !self.require.is_subset(set) {
            return false;
        }
        if !self.questions.iter().all(|q| set.asks(q)) {
            return false;
        }
        match &self.any_of {
            None => true,
            Some(coll) => coll.iter().any(|s| s.is_subset(set)),
        }
    }
}

/// A step distribution over claim vectors, with cached unorderings.
#[derive(Clone, Debug)]
pub struct StepDist<P> {
    rows: Vec<(ClaimVector, ClaimSet, P)>,
}

impl<P: Prob> StepDist<P> {
    pub fn from_marginal(m: BTreeMap<ClaimVector, P>) -> Self {
        StepDist {
            rows: m
                .into_iter()
                .map(|(v, p)| {
                    let u = v.unorder();
                    (v, u, p)
                })
                .collect(),
        }
    }

    pub fn support_len(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&ClaimVector, &ClaimSet, &P)> {
        self.rows.iter().map(|(v, u, p)| (v, u, p))
    }

    /// Probability of an upward-closed event by direct support enumeration.
    pub fn event_prob(&self, event: &Event, budget: &mut Budget) -> Result<P> {
        budget.charge(self.rows.len() as u64)?;
        let mut total = P::zero();
        for (_, u, p) in &self.rows {
            if event.holds(u) {
                total = total + p.clone();
            }
        }
        Ok(total)
    }

    /// Probability that the unordering equals `s` exactly.
    pub fn exact_prob(&self, s: &ClaimSet, budget: &mut Budget) -> Result<P> {
        budget.charge(self.rows.len() as u64)?;
        let mut total = P::zero();
        for (_, u, p) in &self.rows {
            if u == s {
                total = total + p.clone();
            }
        }
        Ok(total)
    }

    /// Semi-quantity behind response distributions: the sum over answer
    /// tuples of the tuple-event probabilities. Counts a vector once per
    /// distinct answer tuple it supports, which keeps responses normalized
    /// even on repeating supports.
    pub fn response_weight(
        &self,
        questions: &[Question],
        cond: &Event,
        budget: &mut Budget,
    ) -> Result<P> {
        let numerators = self.response_numerators(questions, cond, budget)?;
        Ok(numerators.values().cloned().sum())
    }

    /// Tuple-event probabilities `P((q1,v1),...,(qm,vm) and cond)` for every
    /// answer tuple with positive probability.
    pub fn response_numerators(
        &self,
        questions: &[Question],
        cond: &Event,
        budget: &mut Budget,
    ) -> Result<BTreeMap<Vec<Answer>, P>> {
        budget.charge(self.rows.len() as u64)?;
        let mut out: BTreeMap<Vec<Answer>, P> = BTreeMap::new();
        for (_, u, p) in &self.rows {
            if !cond.holds(u) {
                continue;
            }
            // Cartesian product of the answers this vector gives to each
            // question; empty if any question is unasked.
            let per_q: Vec<Vec<&Answer>> =
                questions.iter().map(|q| u.answers_to(q)).collect();
            if per_q.iter().any(|v| v.is_empty()) {
                continue;
            }
            let mut tuples: Vec<Vec<Answer>> = vec![Vec::new()];
            for answers in &per_q {
                let mut next = Vec::with_capacity(tuples.len() * answers.len());
                for t in &tuples {
                    for a in answers {
                        let mut t2 = t.clone();
                        t2.push((*a).clone());
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            budget.charge(tuples.len() as u64)?;
            for t in tuples {
                out.entry(t)
                    .and_modify(|acc| *acc = acc.clone() + p.clone())
                    .or_insert_with(|| p.clone());
            }
        }
        Ok(out)
    }
}

/// A view of the infinite-step limit of a backward-consistent kernel spec.
///
/// `Stationary` means the vector marginal reached an exact fixpoint within
/// the horizon; every limit query is then exact. `Bracketed` keeps the last
/// computed marginal: upward-closed events get the bracket
/// `[P^J(event), 1]`.
#[derive(Clone, Debug)]
pub enum LimitView<P> {
    Stationary { dist: StepDist<P>, at_step: u32 },
    Bracketed { last: StepDist<P>, at_step: u32 },
}

impl<P: Prob> LimitView<P> {
    pub fn is_exact(&self) -> bool {
        matches!(self, LimitView::Stationary { .. })
    }

    pub fn event_prob(&self, event: &Event, budget: &mut Budget) -> Result<Bracket<P>> {
        match self {
            LimitView::Stationary { dist, .. } => {
                Ok(Bracket::exact(dist.event_prob(event, budget)?))
            }
            LimitView::Bracketed { last, .. } => {
                let lo = last.event_prob(event, budget)?;
                Ok(Bracket::new(lo, P::one()))
            }
        }
    }

    pub fn response_numerators(
        &self,
        questions: &[Question],
        cond: &Event,
        budget: &mut Budget,
    ) -> Result<BTreeMap<Vec<Answer>, Bracket<P>>> {
        match self {
            LimitView::Stationary { dist, .. } => Ok(dist
                .response_numerators(questions, cond, budget)?
                .into_iter()
                .map(|(t, p)| (t, Bracket::exact(p)))
                .collect()),
            LimitView::Bracketed { last, .. } => Ok(last
                .response_numerators(questions, cond, budget)?
                .into_iter()
                .map(|(t, p)| (t, Bracket::new(p, P::one())))
                .collect()),
        }
    }
}

/// Step selector for operations defined at a finite step or at the limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum At {
    Step(u32),
    Limit,
}

/// A sparse distribution over outcomes of type `O`.
///
/// Semi-distributions (question and claim semi-quantities) carry
/// `normalized = false`; proper distributions carry `normalized = true` and
/// sum exactly to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist<O: Ord, P> {
    entries: BTreeMap<O, P>,
    normalized: bool,
}

impl<O: Ord + Clone, P: Prob> Dist<O, P> {
    pub fn new(entries: BTreeMap<O, P>, normalized: bool) -> Self {
        let entries = entries
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Dist {
            entries,
            normalized,
        }
    }

    pub fn point_mass(outcome: O) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(outcome, P::one());
        Dist {
            entries,
            normalized: true,
        }
    }

    pub fn get(&self, outcome: &O) -> P {
        self.entries.get(outcome).cloned().unwrap_or_else(P::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, &P)> {
        self.entries.iter()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &O> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> P {
        self.entries.values().cloned().sum()
    }

    /// True iff the distribution is a point mass.
    pub fn is_sure(&self) -> bool {
        self.normalized && self.entries.len() == 1
    }

    /// Rescales by the total mass, marking the result normalized.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::Conditioning {
                context: "cannot normalize zero-mass distribution".into(),
            });
        }
        Ok(Dist {
            entries: self
                .entries
                .iter()
                .map(|(o, p)| (o.clone(), p.clone() / total.clone()))
                .collect(),
            normalized: true,
        })
    }

    /// Mixes `self` toward `other` with weight `t` on `other`.
    pub fn mix(&self, other: &Self, t: &P) -> Self {
        let mut entries = BTreeMap::new();
        let keep = P::one() - t.clone();
        for (o, p) in &self.entries {
            entries.insert(o.clone(), keep.clone() * p.clone());
        }
        for (o, p) in &other.entries {
            let add = t.clone() * p.clone();
            entries
                .entry(o.clone())
                .and_modify(|acc: &mut P| *acc = acc.clone() + add.clone())
                .or_insert(add);
        }
        Dist::new(entries, self.normalized && other.normalized)
    }

    pub fn map_values<Q: Prob>(&self, f: impl Fn(&P) -> Q) -> Dist<O, Q> {
        Dist {
            entries: self.entries.iter().map(|(o, p)| (o.clone(), f(p))).collect(),
            normalized: self.normalized,
        }
    }
}

/// A distribution whose probabilities are only known within brackets.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketDist<O: Ord, P> {
    pub entries: BTreeMap<O, Bracket<P>>,
}

impl<O: Ord + Clone, P: Prob> BracketDist<O, P> {
    pub fn exact(dist: &Dist<O, P>) -> Self {
        BracketDist {
            entries: dist
                .iter()
                .map(|(o, p)| (o.clone(), Bracket::exact(p.clone())))
                .collect(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|b| b.is_exact())
    }

    /// Collapses to an exact distribution when all brackets are degenerate.
    pub fn to_exact(&self) -> Option<Dist<O, P>> {
        if !self.is_exact() {
            return None;
        }
        Some(Dist::new(
            self.entries
                .iter()
                .map(|(o, b)| (o.clone(), b.lo.clone()))
                .collect(),
            true,
        ))
    }

    pub fn get(&self, outcome: &O) -> Bracket<P> {
        self.entries
            .get(outcome)
            .cloned()
            .unwrap_or_else(|| Bracket::exact(P::zero()))
    }
}

// ---------------------------------------------------------------------------
// Spec-level operations
// ---------------------------------------------------------------------------

impl<P: Prob> SmsSpec<P> {
    /// The step distribution at `n` as an enumerable view.
    pub fn step_dist(&self, n: u32) -> Result<StepDist<P>> {
        Ok(StepDist::from_marginal(self.marginal(n)?))
    }

    /// Builds a limit view. Requires kernel mode and backward-consistency at
    /// the spec's effective kappa.
    pub fn limit_view(&self) -> Result<LimitView<P>> {
        if !self.is_kernel() {
            return Err(Error::UnsupportedMode { needed: "kernel" });
        }
        let kappa = self.effective_kappa();
        let bc = self.check_backward_consistent(kappa)?;
        if !bc.is_verified() {
            return Err(Error::Precondition(format!(
                "spec is not backward-consistent after step {kappa}"
            )));
        }
        let marginals = self.marginals_through(self.horizon)?;
        for j in 1..marginals.len() {
            if marginals[j] == marginals[j - 1] {
                return Ok(LimitView::Stationary {
                    dist: StepDist::from_marginal(marginals[j].clone()),
                    at_step: j as u32 + 1,
                });
            }
        }
        Ok(LimitView::Bracketed {
            last: StepDist::from_marginal(marginals.last().unwrap().clone()),
            at_step: self.horizon,
        })
    }

    /// Probability that the step-`n` output contains `s` as a subset of its
    /// unordering.
    pub fn prob_superset(&self, n: u32, s: &ClaimSet) -> Result<P> {
        let mut budget = Budget::standard();
        self.step_dist(n)?
            .event_prob(&Event::superset(s.clone()), &mut budget)
    }

    /// Probability that the step-`n` output unorders to exactly `s`.
    pub fn prob_exact(&self, n: u32, s: &ClaimSet) -> Result<P> {
        let mut budget = Budget::standard();
        self.step_dist(n)?.exact_prob(s, &mut budget)
    }

    /// Probability that the step-`n` output contains `s` and asks every
    /// question in `qs`.
    pub fn semidist_question(&self, n: u32, qs: &[Question], s: &ClaimSet) -> Result<P> {
        if qs.is_empty() {
            return Err(Error::Domain("question vector must be non-empty".into()));
        }
        let mut budget = Budget::standard();
        let ev = Event::superset(s.clone()).with_questions(qs.to_vec());
        self.step_dist(n)?.event_prob(&ev, &mut budget)
    }

    /// Conditional distribution over indexed answer tuples for `qs`, given
    /// question presence and `s`. Also reports whether it is sure.
    pub fn response_dist(
        &self,
        n: u32,
        qs: &[Question],
        s: &ClaimSet,
    ) -> Result<(Dist<Vec<Answer>, P>, bool)> {
        if qs.is_empty() {
            return Err(Error::Domain("question vector must be non-empty".into()));
        }
        let mut budget = Budget::standard();
        let dist = self.step_dist(n)?;
        let cond = Event::superset(s.clone());
        let numerators = dist.response_numerators(qs, &cond, &mut budget)?;
        let total: P = numerators.values().cloned().sum();
        if total.is_zero() {
            return Err(Error::Conditioning {
                context: format!(
                    "questions [{}] with set {} at step {n}",
                    qs.iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                    s
                ),
            });
        }
        let entries = numerators
            .into_iter()
            .map(|(t, p)| (t, p / total.clone()))
            .collect();
        let d = Dist::new(entries, true);
        let sure = d.is_sure();
        Ok((d, sure))
    }

    /// Probability of the collection event: some member of `coll` is
    /// contained in the output, together with `extra` and the presence of
    /// every question in `qs`. Direct support enumeration only.
    pub fn prob_collection(
        &self,
        at: At,
        coll: &[ClaimSet],
        extra: &ClaimSet,
        qs: Option<&[Question]>,
    ) -> Result<Bracket<P>> {
        if coll.is_empty() {
            return Err(Error::Domain("collection must be non-empty".into()));
        }
        let mut budget = Budget::standard();
        let mut ev = Event::superset(extra.clone()).with_collection(coll.to_vec());
        if let Some(qs) = qs {
            ev = ev.with_questions(qs.to_vec());
        }
        match at {
            At::Step(n) => Ok(Bracket::exact(
                self.step_dist(n)?.event_prob(&ev, &mut budget)?,
            )),
            At::Limit => self.limit_view()?.event_prob(&ev, &mut budget),
        }
    }

    /// Conditional answer distribution for `qs` given the collection event.
    pub fn cond_response_on_collection(
        &self,
        at: At,
        qs: &[Question],
        coll: &[ClaimSet],
    ) -> Result<BracketDist<Vec<Answer>, P>> {
        if qs.is_empty() {
            return Err(Error::Domain("question vector must be non-empty".into()));
        }
        if coll.is_empty() {
            return Err(Error::Domain("collection must be non-empty".into()));
        }
        let mut budget = Budget::standard();
        let cond = Event::default().with_collection(coll.to_vec());
        let numerators: BTreeMap<Vec<Answer>, Bracket<P>> = match at {
            At::Step(n) => self
                .step_dist(n)?
                .response_numerators(qs, &cond, &mut budget)?
                .into_iter()
                .map(|(t, p)| (t, Bracket::exact(p)))
                .collect(),
            At::Limit => self.limit_view()?.response_numerators(qs, &cond, &mut budget)?,
        };
        normalize_bracket_numerators(numerators, || {
            format!(
                "questions [{}] conditioned on collection of {} sets",
                qs.iter()
                    .map(|q| q.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                coll.len()
            )
        })
    }

    /// Limit probability of the superset event for `s`, with a bracket.
    ///
    /// Exploits monotonicity of upward-closed events past kappa: the value
    /// at the stopping step is a lower bound and 1 an upper bound. When the
    /// vector marginal hits an exact fixpoint the value is exact. `tol`
    /// controls the stopping rule for the non-stationary case.
    pub fn limit_prob(&self, s: &ClaimSet, tol: &P) -> Result<LimitValue<P>> {
        if !self.is_kernel() {
            return Err(Error::UnsupportedMode { needed: "kernel" });
        }
        let kappa = self.effective_kappa();
        let bc = self.check_backward_consistent(kappa)?;
        if !bc.is_verified() {
            return Err(Error::Precondition(format!(
                "spec is not backward-consistent after step {kappa}"
            )));
        }
        let mut budget = Budget::standard();
        let ev = Event::superset(s.clone());
        let marginals = self.marginals_through(self.horizon)?;
        let mut values = Vec::with_capacity(marginals.len());
        for (j, m) in marginals.iter().enumerate() {
            let dist = StepDist::from_marginal(m.clone());
            values.push(dist.event_prob(&ev, &mut budget)?);
            if j > 0 && marginals[j] == marginals[j - 1] {
                let v = values[j].clone();
                return Ok(LimitValue {
                    value: v.clone(),
                    lower: v.clone(),
                    upper: v,
                    stationary_at: Some(j as u32 + 1),
                    stopped_at: j as u32 + 1,
                });
            }
            let step = j as u32 + 1;
            if step > kappa + 1 {
                let inc = values[j].clone() - values[j - 1].clone();
                if inc < *tol {
                    let v = values[j].clone();
                    let upper = {
                        // min(1, v + (1 - v)) collapses to the trivial bound.
                        P::one()
                    };
                    return Ok(LimitValue {
                        value: v.clone(),
                        lower: v,
                        upper,
                        stationary_at: None,
                        stopped_at: step,
                    });
                }
            }
        }
        let last = values.last().unwrap().clone();
        Err(Error::NoConvergence {
            lower: last.to_string(),
            upper: P::one().to_string(),
        })
    }

    /// Answer distribution at step `|prefix| + 1` conditioned on the exact
    /// trajectory prefix and the presence of `q`.
    pub fn trajectory_response_dist(
        &self,
        prefix: &TrajectoryPrefix,
        q: &Question,
    ) -> Result<Dist<Answer, P>> {
        let Law::Kernel { init, kernel } = &self.law else {
            return Err(Error::UnsupportedMode { needed: "kernel" });
        };
        prefix.validate_against(self)?;

        // Probability of the prefix itself.
        let mut prefix_prob = P::one();
        let mut last: Option<&ClaimVector> = None;
        for v in &prefix.0 {
            let p = match last {
                None => init
                    .rows()
                    .iter()
                    .find(|(row, _)| row == v)
                    .map(|(_, p)| p.clone()),
                Some(prev) => kernel.get(prev).and_then(|row| {
                    row.rows()
                        .iter()
                        .find(|(to, _)| to == v)
                        .map(|(_, p)| p.clone())
                }),
            }
            .unwrap_or_else(P::zero);
            prefix_prob = prefix_prob * p;
            last = Some(v);
        }
        if prefix_prob.is_zero() {
            return Err(Error::Conditioning {
                context: "trajectory prefix has probability zero".into(),
            });
        }

        // Next-step distribution given the prefix end.
        let next: Vec<(ClaimVector, P)> = match last {
            None => init.rows().to_vec(),
            Some(prev) => kernel
                .get(prev)
                .ok_or_else(|| Error::Structural(format!("kernel has no row for {prev}")))?
                .rows()
                .to_vec(),
        };
        let mut numerators: BTreeMap<Answer, P> = BTreeMap::new();
        for (v, p) in &next {
            let u = v.unorder();
            for a in u.answers_to(q) {
                numerators
                    .entry(a.clone())
                    .and_modify(|acc| *acc = acc.clone() + p.clone())
                    .or_insert_with(|| p.clone());
            }
        }
        let total: P = numerators.values().cloned().sum();
        if total.is_zero() {
            return Err(Error::Conditioning {
                context: format!("question {q} unasked after the given prefix"),
            });
        }
        Ok(Dist::new(
            numerators
                .into_iter()
                .map(|(a, p)| (a, p / total.clone()))
                .collect(),
            true,
        ))
    }

    /// Unbiased Monte Carlo estimate of `prob_superset`, deterministic for a
    /// fixed seed.
    pub fn mc_estimate(
        &self,
        n: u32,
        s: &ClaimSet,
        samples: u64,
        seed: u64,
    ) -> Result<McEstimate> {
        if samples == 0 {
            return Err(Error::ZeroSamples);
        }
        if n == 0 || n > self.horizon {
            return Err(Error::Horizon {
                step: n,
                horizon: self.horizon,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits: u64 = 0;
        match &self.law {
            Law::PerStep { steps } => {
                let sampler = CdfSampler::new(&steps[(n - 1) as usize]);
                for _ in 0..samples {
                    let set = sampler.draw(&mut rng);
                    if s.is_subset(set) {
                        hits += 1;
                    }
                }
            }
            Law::Kernel { init, kernel } => {
                let init_sampler = CdfSampler::new(init);
                let row_samplers: BTreeMap<&ClaimVector, CdfSampler<'_, P>> = kernel
                    .iter()
                    .map(|(from, row)| (from, CdfSampler::new(row)))
                    .collect();
                for _ in 0..samples {
                    let mut current = init_sampler.draw_vector(&mut rng);
                    for _ in 1..n {
                        let sampler = row_samplers
                            .get(current)
                            .ok_or_else(|| {
                                Error::Structural(format!("kernel has no row for {current}"))
                            })?;
                        current = sampler.draw_vector(&mut rng);
                    }
                    if s.is_subset(&current.unorder()) {
                        hits += 1;
                    }
                }
            }
        }
        let estimate = hits as f64 / samples as f64;
        let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
        Ok(McEstimate {
            estimate,
            std_error,
            samples,
        })
    }
}

/// Normalized answer-tuple response over a step distribution for an
/// arbitrary conditioning event.
pub fn step_response<P: Prob>(
    dist: &StepDist<P>,
    questions: &[Question],
    cond: &Event,
    budget: &mut Budget,
) -> Result<Dist<Vec<Answer>, P>> {
    let numerators = dist.response_numerators(questions, cond, budget)?;
    let total: P = numerators.values().cloned().sum();
    if total.is_zero() {
        return Err(Error::Conditioning {
            context: format!(
                "questions [{}] under conditioning event",
                questions
                    .iter()
                    .map(|q| q.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        });
    }
    Ok(Dist::new(
        numerators
            .into_iter()
            .map(|(t, p)| (t, p / total.clone()))
            .collect(),
        true,
    ))
}

/// Normalized answer-tuple response over a limit view, bracket-valued.
pub fn view_response<P: Prob>(
    view: &LimitView<P>,
    questions: &[Question],
    cond: &Event,
    budget: &mut Budget,
) -> Result<BracketDist<Vec<Answer>, P>> {
    let numerators = view.response_numerators(questions, cond, budget)?;
    normalize_bracket_numerators(numerators, || {
        format!(
            "questions [{}] under limit conditioning event",
            questions
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    })
}

/// Normalizes bracket numerators into a conditional bracket distribution.
pub(crate) fn normalize_bracket_numerators<P: Prob>(
    numerators: BTreeMap<Vec<Answer>, Bracket<P>>,
    context: impl Fn() -> String,
) -> Result<BracketDist<Vec<Answer>, P>> {
    let total = numerators
        .values()
        .fold(Bracket::exact(P::zero()), |acc, b| acc.add(b));
    if total.hi.is_zero() {
        return Err(Error::Conditioning { context: context() });
    }
    Ok(BracketDist {
        entries: numerators
            .into_iter()
            .map(|(t, num)| {
                let q = num.cond_div(&total);
                (t, q)
            })
            .collect(),
    })
}

/// Result of [`SmsSpec::limit_prob`].
#[derive(Clone, Debug, PartialEq)]
pub struct LimitValue<P> {
    pub value: P,
    pub lower: P,
    pub upper: P,
    /// Step at which the vector marginal reached a fixpoint, when it did.
    pub stationary_at: Option<u32>,
    pub stopped_at: u32,
}

impl<P: Prob> LimitValue<P> {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn bracket(&self) -> Bracket<P> {
        Bracket::new(self.lower.clone(), self.upper.clone())
    }
}

/// Monte Carlo frequency estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// f64 cumulative sampler over a table; exactness is not needed here, only
/// determinism under a fixed seed.
struct CdfSampler<'a, P> {
    rows: &'a [(ClaimVector, P)],
    sets: Vec<ClaimSet>,
    cumulative: Vec<f64>,
}

impl<'a, P: Prob> CdfSampler<'a, P> {
    fn new(table: &'a crate::sms::Table<P>) -> Self {
        let rows = table.rows();
        let mut cumulative = Vec::with_capacity(rows.len());
        let mut acc = 0.0;
        for (_, p) in rows {
            acc += p.to_f64();
            cumulative.push(acc);
        }
        CdfSampler {
            rows,
            sets: rows.iter().map(|(v, _)| v.unorder()).collect(),
            cumulative,
        }
    }

    fn index(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.min(self.rows.len() - 1),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &ClaimSet {
        &self.sets[self.index(rng)]
    }

    fn draw_vector(&self, rng: &mut ChaCha8Rng) -> &ClaimVector {
        &self.rows[self.index(rng)].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claim::{claim_set, claim_vector, ClaimSet};
    use crate::fixtures;
    use crate::Exact;
    use num_traits::{One, Zero};

    fn b() -> crate::Sms {
        fixtures::fix_b()
    }

    #[test]
    fn superset_probabilities_on_fix_b() {
        let spec = b();
        assert_eq!(
            spec.prob_superset(1, &claim_set(&[("qa", "0")])).unwrap(),
            Exact::ratio(2, 3)
        );
        assert_eq!(
            spec.prob_superset(1, &ClaimSet::empty()).unwrap(),
            Exact::one()
        );
        assert_eq!(
            spec.prob_superset(1, &claim_set(&[("qa", "1")])).unwrap(),
            Exact::zero()
        );
        assert!(spec.prob_superset(2, &ClaimSet::empty()).is_err());
    }

    #[test]
    fn exact_probabilities_on_fix_b() {
        let spec = b();
        assert_eq!(
            spec.prob_exact(1, &claim_set(&[("qa", "0")])).unwrap(),
            Exact::ratio(1, 3)
        );
        assert_eq!(
            spec.prob_exact(1, &claim_set(&[("qa", "0"), ("qb", "1")]))
                .unwrap(),
            Exact::ratio(1, 3)
        );
        assert_eq!(spec.prob_exact(1, &ClaimSet::empty()).unwrap(), Exact::zero());
    }

    #[test]
    fn question_semidistribution_on_fix_b() {
        let spec = b();
        let qa = Question::new("qa");
        let qb = Question::new("qb");
        assert_eq!(
            spec.semidist_question(1, std::slice::from_ref(&qb), &claim_set(&[("qa", "0")]))
                .unwrap(),
            Exact::ratio(1, 3)
        );
        assert_eq!(
            spec.semidist_question(1, std::slice::from_ref(&qa), &ClaimSet::empty())
                .unwrap(),
            Exact::ratio(2, 3)
        );
        assert_eq!(
            spec.semidist_question(1, &[qa, qb], &ClaimSet::empty())
                .unwrap(),
            Exact::ratio(1, 3)
        );
    }

    #[test]
    fn response_distributions_on_fix_b() {
        let spec = b();
        let qa = Question::new("qa");
        let qb = Question::new("qb");

        let (d, sure) = spec.response_dist(1, &[qa], &ClaimSet::empty()).unwrap();
        assert!(sure);
        assert_eq!(d.get(&vec![Answer::new("0")]), Exact::one());

        let (d, sure) = spec
            .response_dist(1, std::slice::from_ref(&qb), &ClaimSet::empty())
            .unwrap();
        assert!(!sure);
        assert_eq!(d.get(&vec![Answer::new("0")]), Exact::ratio(1, 2));
        assert_eq!(d.get(&vec![Answer::new("1")]), Exact::ratio(1, 2));
        assert_eq!(d.total(), Exact::one());

        let err = spec.response_dist(1, &[qb], &claim_set(&[("qa", "1")]));
        assert!(matches!(err, Err(Error::Conditioning { .. })));
    }

    #[test]
    fn collection_probabilities_on_fix_b() {
        let spec = b();
        let coll = vec![claim_set(&[("qa", "0")]), claim_set(&[("qb", "0")])];
        assert_eq!(
            spec.prob_collection(At::Step(1), &coll, &ClaimSet::empty(), None)
                .unwrap(),
            Bracket::exact(Exact::one())
        );
        assert_eq!(
            spec.prob_collection(
                At::Step(1),
                &[claim_set(&[("qa", "1")])],
                &ClaimSet::empty(),
                None
            )
            .unwrap(),
            Bracket::exact(Exact::zero())
        );
        assert_eq!(
            spec.prob_collection(
                At::Step(1),
                &[claim_set(&[("qa", "0")])],
                &claim_set(&[("qb", "1")]),
                None
            )
            .unwrap(),
            Bracket::exact(Exact::ratio(1, 3))
        );
    }

    #[test]
    fn conditional_response_on_collection() {
        let spec = b();
        let qb = Question::new("qb");
        let qa = Question::new("qa");

        let d = spec
            .cond_response_on_collection(At::Step(1), std::slice::from_ref(&qb), &[claim_set(&[("qa", "0")])])
            .unwrap();
        assert_eq!(
            d.get(&vec![Answer::new("1")]),
            Bracket::exact(Exact::one())
        );

        // Conditioning on the whole space reduces to the plain response.
        let d = spec
            .cond_response_on_collection(At::Step(1), &[qa], &[ClaimSet::empty()])
            .unwrap();
        assert_eq!(
            d.get(&vec![Answer::new("0")]),
            Bracket::exact(Exact::one())
        );

        let err = spec.cond_response_on_collection(
            At::Step(1),
            &[qb],
            &[claim_set(&[("qa", "1")])],
        );
        assert!(matches!(err, Err(Error::Conditioning { .. })));
    }

    #[test]
    fn limit_prob_on_hold_and_absorbing_kernels() {
        let spec = fixtures::fix_a();
        let tol = Exact::ratio(1, 1000);
        let v = spec.limit_prob(&claim_set(&[("qa", "0")]), &tol).unwrap();
        assert!(v.is_exact());
        assert_eq!(v.value, Exact::ratio(1, 2));

        let absorbing = fixtures::fix_absorbing();
        let v = absorbing
            .limit_prob(&claim_set(&[("qb", "1")]), &tol)
            .unwrap();
        assert!(v.is_exact());
        assert_eq!(v.value, Exact::one());

        let v = spec.limit_prob(&ClaimSet::empty(), &tol).unwrap();
        assert_eq!(v.value, Exact::one());
        assert_eq!(v.lower, v.upper);
    }

    #[test]
    fn limit_prob_brackets_non_stationary_growth() {
        let spec = fixtures::fix_growing();
        let tol = Exact::zero();
        // Strict growth each step and tol = 0: no convergence in horizon.
        let err = spec.limit_prob(&claim_set(&[("q1", "1")]), &tol);
        assert!(matches!(err, Err(Error::NoConvergence { .. })));

        // A loose tolerance stops early with the trivial upper bound.
        let tol = Exact::one();
        let v = spec.limit_prob(&claim_set(&[("q1", "1")]), &tol).unwrap();
        assert!(!v.is_exact());
        assert_eq!(v.upper, Exact::one());
    }

    #[test]
    fn trajectory_response_on_fix_a() {
        let spec = fixtures::fix_a();
        let qa = Question::new("qa");

        let prefix = TrajectoryPrefix(vec![claim_vector(&[("qa", "0")])]);
        let d = spec.trajectory_response_dist(&prefix, &qa).unwrap();
        assert_eq!(d.get(&Answer::new("0")), Exact::one());

        let prefix = TrajectoryPrefix(vec![claim_vector(&[("qa", "1")])]);
        let d = spec.trajectory_response_dist(&prefix, &qa).unwrap();
        assert_eq!(d.get(&Answer::new("1")), Exact::one());

        // A prefix outside the support has probability zero.
        let impossible = TrajectoryPrefix(vec![
            claim_vector(&[("qa", "0")]),
            claim_vector(&[("qa", "1")]),
        ]);
        assert!(matches!(
            spec.trajectory_response_dist(&impossible, &qa),
            Err(Error::Conditioning { .. })
        ));
    }

    #[test]
    fn mc_estimate_matches_exact_value() {
        let spec = b();
        let s = claim_set(&[("qa", "0")]);
        let est = spec.mc_estimate(1, &s, 100_000, 7).unwrap();
        let exact = spec.prob_superset(1, &s).unwrap().to_f64();
        assert!(
            (est.estimate - exact).abs() <= 4.0 * est.std_error,
            "estimate {} too far from {}",
            est.estimate,
            exact
        );

        let sure = spec.mc_estimate(1, &ClaimSet::empty(), 100, 1).unwrap();
        assert_eq!(sure.estimate, 1.0);
        let never = spec
            .mc_estimate(1, &claim_set(&[("qa", "1")]), 100, 1)
            .unwrap();
        assert_eq!(never.estimate, 0.0);

        assert!(spec.mc_estimate(1, &s, 0, 1).is_err());

        // Deterministic under a fixed seed.
        let a = spec.mc_estimate(1, &s, 10_000, 42).unwrap();
        let b = spec.mc_estimate(1, &s, 10_000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_cap_is_enforced() {
        let spec = b();
        let mut tiny = Budget::with_cap(2);
        let dist = spec.step_dist(1).unwrap();
        let err = dist.event_prob(&Event::default(), &mut tiny);
        assert!(matches!(err, Err(Error::Budget { .. })));
    }

    #[test]
    fn dominance_and_decomposition_on_fix_b() {
        let spec = b();
        let dist = spec.step_dist(1).unwrap();
        let mut all_sets: Vec<ClaimSet> = Vec::new();
        for (_, u, _) in dist.rows() {
            for sub in u.subsets() {
                if !all_sets.contains(&sub) {
                    all_sets.push(sub);
                }
            }
        }
        let unorderings: Vec<ClaimSet> = dist.rows().map(|(_, u, _)| u.clone()).collect();
        for s in &all_sets {
            let sup = spec.prob_superset(1, s).unwrap();
            let exact = spec.prob_exact(1, s).unwrap();
            assert!(exact <= sup);
            // Superset-sum identity over distinct support unorderings.
            let mut seen: Vec<&ClaimSet> = Vec::new();
            let mut total = Exact::zero();
            for u in &unorderings {
                if s.is_subset(u) && !seen.contains(&u) {
                    seen.push(u);
                    total += spec.prob_exact(1, u).unwrap();
                }
            }
            assert_eq!(total, sup, "decomposition failed for {s}");
        }
    }
}
