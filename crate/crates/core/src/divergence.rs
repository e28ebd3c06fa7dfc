//! Convex divergence measures between finite distributions.
//!
//! Probabilities stay rational until the last moment: equality of the two
//! arguments is decided exactly before any logarithm is taken, so a zero
//! divergence is a statement about rational equality, not float closeness.

use crate::dist::{BracketDist, Dist};
use crate::error::Error;
use crate::report::{CheckReport, Condition};
use crate::scalar::Prob;
use crate::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Available divergence measures. All are convex in the first argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    Kl,
    TotalVariation,
    JensenShannon,
}

impl DivergenceKind {
    /// Whether locally-Lipschitz use of this divergence needs both
    /// arguments positive on the shared outcome set. Total variation is
    /// globally Lipschitz; the logarithmic kinds blow up at the support
    /// boundary.
    pub fn requires_full_support(&self) -> bool {
        !matches!(self, DivergenceKind::TotalVariation)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kl" => Some(DivergenceKind::Kl),
            "tv" | "total-variation" => Some(DivergenceKind::TotalVariation),
            "js" | "jensen-shannon" => Some(DivergenceKind::JensenShannon),
            _ => None,
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::TotalVariation => "tv",
            DivergenceKind::JensenShannon => "js",
        };
        f.write_str(s)
    }
}

/// D[p, r]. Requires both arguments normalized. Returns exactly 0.0 iff the
/// arguments are equal as rational distributions.
pub fn divergence<O, P>(p: &Dist<O, P>, r: &Dist<O, P>, kind: DivergenceKind) -> Result<f64>
where
    O: Ord + Clone + fmt::Debug,
    P: Prob,
{
    if !p.is_normalized() || !r.is_normalized() {
        return Err(Error::Domain(
            "divergence arguments must be normalized distributions".into(),
        ));
    }
    if p == r {
        return Ok(0.0);
    }
    let outcomes: BTreeSet<&O> = p.outcomes().chain(r.outcomes()).collect();
    let mut total = 0.0;
    for o in outcomes {
        let pv = p.get(o);
        let rv = r.get(o);
        match kind {
            DivergenceKind::Kl => {
                if pv.is_zero() {
                    continue;
                }
                if rv.is_zero() {
                    return Err(Error::Support {
                        outcome: format!("{o:?}"),
                    });
                }
                let pf = pv.to_f64();
                total += pf * (pf / rv.to_f64()).ln();
            }
            DivergenceKind::TotalVariation => {
                total += 0.5 * (pv.to_f64() - rv.to_f64()).abs();
            }
            DivergenceKind::JensenShannon => {
                total += js_term(pv.to_f64(), rv.to_f64());
            }
        }
    }
    Ok(total.max(0.0))
}

/// One coordinate of the Jensen-Shannon sum; convex in `r` with minimum 0
/// at `r == p`.
fn js_term(p: f64, r: f64) -> f64 {
    let m = 0.5 * (p + r);
    let mut t = 0.0;
    if p > 0.0 {
        t += 0.5 * p * (p / m).ln();
    }
    if r > 0.0 {
        t += 0.5 * r * (r / m).ln();
    }
    t
}

/// Bounds on D[p, r] when `r` is only known within per-outcome brackets.
///
/// Bounds are per-coordinate and ignore the simplex coupling between the
/// coordinates of `r`, so they are conservative but always valid. When the
/// bracket support may be incomplete (`complete == false`) the upper bound
/// degrades to the trivial one for the kind.
pub fn divergence_bounds<O, P>(
    p: &Dist<O, P>,
    r: &BracketDist<O, P>,
    complete: bool,
    kind: DivergenceKind,
) -> Result<(f64, f64)>
where
    O: Ord + Clone + fmt::Debug,
    P: Prob,
{
    if !p.is_normalized() {
        return Err(Error::Domain(
            "divergence arguments must be normalized distributions".into(),
        ));
    }
    if let Some(exact) = r.to_exact() {
        if complete {
            let d = divergence(p, &exact, kind)?;
            return Ok((d, d));
        }
    }
    let outcomes: BTreeSet<&O> = p.outcomes().chain(r.entries.keys()).collect();
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut hi_unbounded = false;
    for o in outcomes {
        let pv = p.get(o).to_f64();
        let b = r.get(o);
        let (rlo, rhi) = b.to_f64_pair();
        let rhi = if complete || r.entries.contains_key(o) {
            rhi
        } else {
            1.0
        };
        match kind {
            DivergenceKind::Kl => {
                if pv == 0.0 {
                    continue;
                }
                if rhi > 0.0 {
                    lo += pv * (pv / rhi.min(1.0)).ln();
                }
                if rlo == 0.0 {
                    hi_unbounded = true;
                } else {
                    hi += pv * (pv / rlo).ln();
                }
            }
            DivergenceKind::TotalVariation => {
                let dist_lo = if pv < rlo {
                    rlo - pv
                } else if pv > rhi {
                    pv - rhi
                } else {
                    0.0
                };
                lo += 0.5 * dist_lo;
                hi += 0.5 * (pv - rlo).abs().max((pv - rhi).abs());
            }
            DivergenceKind::JensenShannon => {
                let clamped = pv.clamp(rlo, rhi);
                lo += js_term(pv, clamped);
                hi += js_term(pv, rlo).max(js_term(pv, rhi));
            }
        }
    }
    let lo = lo.max(0.0);
    let hi = match kind {
        DivergenceKind::Kl => {
            if hi_unbounded {
                f64::INFINITY
            } else {
                hi.max(lo)
            }
        }
        DivergenceKind::TotalVariation => {
            if complete {
                hi.max(lo).min(1.0)
            } else {
                1.0
            }
        }
        DivergenceKind::JensenShannon => {
            let cap = std::f64::consts::LN_2;
            if complete {
                hi.max(lo).min(cap)
            } else {
                cap
            }
        }
    };
    Ok((lo, hi))
}

/// True when both distributions are positive on exactly the same outcomes:
/// the gate under which the logarithmic divergences are locally Lipschitz
/// on the relevant domain.
pub fn mutual_support<O, P>(p: &Dist<O, P>, r: &Dist<O, P>) -> bool
where
    O: Ord + Clone,
    P: Prob,
{
    let ps: BTreeSet<&O> = p.outcomes().collect();
    let rs: BTreeSet<&O> = r.outcomes().collect();
    ps == rs
}

/// Randomized confirmation that the divergence is convex in its first
/// argument: samples (p1, p2, r, lambda) and checks the mixture inequality
/// up to 1e-12 float slack.
pub fn check_convexity(kind: DivergenceKind, trials: u32, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conditions = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for trial in 0..trials {
        let size = rng.gen_range(2..=4usize);
        let p1 = random_full_support(&mut rng, size);
        let p2 = random_full_support(&mut rng, size);
        let r = random_full_support(&mut rng, size);
        let lambda_num = rng.gen_range(0..=8i64);
        let lambda = crate::Exact::ratio(lambda_num, 8);
        let mix = p2.mix(&p1, &lambda);

        let left = divergence(&mix, &r, kind).expect("full support");
        let d1 = divergence(&p1, &r, kind).expect("full support");
        let d2 = divergence(&p2, &r, kind).expect("full support");
        let lf = lambda.to_f64();
        let right = lf * d1 + (1.0 - lf) * d2;
        let slack = left - right;
        worst = worst.max(slack);
        if slack > 1e-12 {
            conditions.push(Condition::fail(
                format!("trial {trial} convex"),
                format!("D[mix] = {left} exceeds mixture bound {right}"),
            ));
            return CheckReport::assemble("divergence-convexity", conditions, None);
        }
    }
    conditions.push(Condition::ok_with(
        "mixture inequality",
        format!("{trials} trials, worst slack {worst:.3e}"),
    ));
    CheckReport::assemble("divergence-convexity", conditions, None)
}

fn random_full_support(rng: &mut ChaCha8Rng, size: usize) -> Dist<u32, crate::Exact> {
    // Weights in 1..=12 give full support with small denominators.
    let mut entries = BTreeMap::new();
    let weights: Vec<i64> = (0..size).map(|_| rng.gen_range(1..=12i64)).collect();
    let total: i64 = weights.iter().sum();
    for (i, w) in weights.iter().enumerate() {
        entries.insert(i as u32, crate::Exact::ratio(*w, total));
    }
    Dist::new(entries, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claim::Answer;
    use crate::Exact;
    use num_traits::One;
    use std::collections::BTreeMap;

    fn bern(p: Exact) -> Dist<Vec<Answer>, Exact> {
        let mut entries = BTreeMap::new();
        entries.insert(vec![Answer::new("1")], p.clone());
        entries.insert(vec![Answer::new("0")], Exact::one() - p);
        Dist::new(entries, true)
    }

    #[test]
    fn identity_of_indiscernibles() {
        let p = bern(Exact::ratio(2, 7));
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::TotalVariation,
            DivergenceKind::JensenShannon,
        ] {
            assert_eq!(divergence(&p, &p, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn tv_of_delta_vs_fair_coin_is_half() {
        let delta = bern(Exact::one());
        let fair = bern(Exact::ratio(1, 2));
        let d = divergence(&delta, &fair, DivergenceKind::TotalVariation).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        // The perturbed-limit arithmetic: tv((1/2,1/2), (3/4,1/4)) = 1/4.
        let d = divergence(&bern(Exact::ratio(1, 2)), &bern(Exact::ratio(3, 4)),
                           DivergenceKind::TotalVariation).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kl_of_delta_vs_fair_coin_is_ln2() {
        let delta = bern(Exact::one());
        let fair = bern(Exact::ratio(1, 2));
        let d = divergence(&delta, &fair, DivergenceKind::Kl).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_requires_support_containment() {
        let delta = bern(Exact::one());
        let fair = bern(Exact::ratio(1, 2));
        assert!(matches!(
            divergence(&fair, &delta, DivergenceKind::Kl),
            Err(Error::Support { .. })
        ));
    }

    #[test]
    fn kl_is_asymmetric_tv_symmetric() {
        let p = bern(Exact::ratio(1, 4));
        let r = bern(Exact::ratio(1, 2));
        let ab = divergence(&p, &r, DivergenceKind::Kl).unwrap();
        let ba = divergence(&r, &p, DivergenceKind::Kl).unwrap();
        assert!((ab - ba).abs() > 1e-3);
        let tv_ab = divergence(&p, &r, DivergenceKind::TotalVariation).unwrap();
        let tv_ba = divergence(&r, &p, DivergenceKind::TotalVariation).unwrap();
        assert_eq!(tv_ab, tv_ba);
    }

    #[test]
    fn convexity_holds_for_all_kinds() {
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::TotalVariation,
            DivergenceKind::JensenShannon,
        ] {
            let report = check_convexity(kind, 1000, 1);
            assert!(report.is_verified(), "{kind}: {}", report.summary());
        }
    }

    #[test]
    fn lambda_zero_is_equality_endpoint() {
        let p1 = bern(Exact::ratio(1, 3));
        let p2 = bern(Exact::ratio(2, 3));
        let r = bern(Exact::ratio(1, 2));
        // mix with lambda = 0 keeps p2.
        let mix = p2.mix(&p1, &Exact::ratio(0, 1));
        assert_eq!(mix, p2);
        let left = divergence(&mix, &r, DivergenceKind::Kl).unwrap();
        let right = divergence(&p2, &r, DivergenceKind::Kl).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn bracket_bounds_contain_exact_value() {
        use crate::scalar::Bracket;
        let p = bern(Exact::ratio(1, 3));
        let truth = bern(Exact::ratio(1, 2));
        // Bracket the truth loosely and check containment for every kind.
        let loose = BracketDist {
            entries: truth
                .iter()
                .map(|(o, v)| {
                    (
                        o.clone(),
                        Bracket::new(v.clone() - Exact::ratio(1, 10), v.clone() + Exact::ratio(1, 10)),
                    )
                })
                .collect(),
        };
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::TotalVariation,
            DivergenceKind::JensenShannon,
        ] {
            let exact = divergence(&p, &truth, kind).unwrap();
            let (lo, hi) = divergence_bounds(&p, &loose, true, kind).unwrap();
            assert!(lo <= exact && exact <= hi, "{kind}: {lo} {exact} {hi}");
        }
        // Degenerate brackets reproduce the exact value.
        let tight = BracketDist::exact(&truth);
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::TotalVariation,
            DivergenceKind::JensenShannon,
        ] {
            let exact = divergence(&p, &truth, kind).unwrap();
            let (lo, hi) = divergence_bounds(&p, &tight, true, kind).unwrap();
            assert_eq!(lo, hi);
            assert!((lo - exact).abs() < 1e-15);
        }
    }
}
