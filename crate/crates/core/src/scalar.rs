//! Probability scalar abstraction.
//!
//! Core arithmetic is written against [`Prob`] so the same enumeration code
//! runs over exact rationals (the default for every check) or `f64` for
//! fast numeric cross-checks.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use std::fmt;
use std::iter::Sum;

/// Scalar type for probabilities.
pub trait Prob:
    Num + Clone + PartialOrd + fmt::Debug + fmt::Display + Sum<Self> + 'static
{
    /// Constructs `num / den`. `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;

    /// Converts to `f64`; used only at the divergence/reporting boundary.
    fn to_f64(&self) -> f64;

    /// True when the scalar carries exact arithmetic (no rounding).
    fn exact() -> bool;

    fn from_int(n: i64) -> Self {
        Self::ratio(n, 1)
    }
}

impl Prob for BigRational {
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exact() -> bool {
        true
    }
}

impl Prob for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn exact() -> bool {
        false
    }
}

/// Closed interval `[lo, hi]` bounding an imperfectly known probability.
///
/// Exact values are represented as degenerate intervals (`lo == hi`). The
/// arithmetic here is deliberately conservative: results always contain the
/// true value, and conditional ratios are clamped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket<P> {
    pub lo: P,
    pub hi: P,
}

impl<P: Prob> Bracket<P> {
    pub fn exact(value: P) -> Self {
        Bracket {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn new(lo: P, hi: P) -> Self {
        debug_assert!(lo <= hi, "bracket bounds out of order");
        Bracket { lo, hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// Width `hi - lo`.
    pub fn width(&self) -> P {
        self.hi.clone() - self.lo.clone()
    }

    pub fn add(&self, other: &Self) -> Self {
        Bracket {
            lo: self.lo.clone() + other.lo.clone(),
            hi: self.hi.clone() + other.hi.clone(),
        }
    }

    /// Product of two non-negative brackets.
    pub fn mul(&self, other: &Self) -> Self {
        Bracket {
            lo: self.lo.clone() * other.lo.clone(),
            hi: self.hi.clone() * other.hi.clone(),
        }
    }

    /// Conditional ratio `self / den` for probabilities of events where the
    /// numerator event implies the denominator event. The result is clamped
    /// to `[0, 1]`; a denominator that may be zero yields an upper bound of 1.
    pub fn cond_div(&self, den: &Self) -> Self {
        let one = P::one();
        let lo = if den.hi.is_zero() {
            P::zero()
        } else {
            let v = self.lo.clone() / den.hi.clone();
            if v > one {
                one.clone()
            } else {
                v
            }
        };
        let hi = if den.lo.is_zero() {
            one
        } else {
            let v = self.hi.clone() / den.lo.clone();
            if v > one {
                one.clone()
            } else {
                v
            }
        };
        Bracket::new(lo, hi)
    }

    /// Unclamped ratio for semi-quantities (may exceed 1).
    pub fn div(&self, den: &Self) -> Option<Self> {
        if den.lo.is_zero() || den.hi.is_zero() {
            return None;
        }
        Some(Bracket::new(
            self.lo.clone() / den.hi.clone(),
            self.hi.clone() / den.lo.clone(),
        ))
    }

    /// True when the interval is certainly strictly greater than `other`.
    pub fn definitely_gt(&self, other: &Self) -> bool {
        self.lo > other.hi
    }

    /// True when the interval certainly fails to be strictly greater.
    pub fn definitely_le(&self, other: &Self) -> bool {
        self.hi <= other.lo
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }
}

impl<P: Prob> fmt::Display for Bracket<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use num_traits::{One, Zero};

    #[test]
    fn ratio_round_trips_for_both_scalars() {
        let r = Exact::ratio(2, 3);
        assert_eq!(r, Exact::new(2.into(), 3.into()));
        assert!((f64::ratio(2, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert!(Exact::exact());
        assert!(!f64::exact());
    }

    #[test]
    fn cond_div_clamps_to_unit_interval() {
        let num = Bracket::new(Exact::ratio(1, 4), Exact::ratio(1, 2));
        let den = Bracket::new(Exact::ratio(1, 2), Exact::one());
        let q = num.cond_div(&den);
        assert_eq!(q.lo, Exact::ratio(1, 4));
        assert_eq!(q.hi, Exact::one());

        let zero_den = Bracket::new(Exact::zero(), Exact::one());
        let q = num.cond_div(&zero_den);
        assert_eq!(q.hi, Exact::one());
    }
}
