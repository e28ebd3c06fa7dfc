//! Exact probability computations and executable correctness checks for
//! finite stochastic mathematical systems (SMSs): stochastic processes that
//! emit, at each integer step, a finite vector of (question, answer) claims.
//!
//! The crate provides:
//!
//! - the claim algebra (claims, claim vectors, claim sets, the un-ordering
//!   map) and a finite SMS representation with per-step tables or a Markov
//!   kernel over claim vectors ([`sms`]);
//! - exact enumeration of every step distribution, conditional response
//!   distribution, and monotone limit bracket, plus a seeded Monte Carlo
//!   cross-check ([`dist`]);
//! - convex divergence measures evaluated at the rational/float boundary
//!   ([`divergence`]);
//! - calibration of one SMS against another through the interpretation maps
//!   psi / Psi, honesty, and the prediction distribution ([`calibration`]);
//! - embedding maps with preimage collections, embed-calibration,
//!   discrimination, and the projection identity ([`embedding`]);
//! - evidence-path and abduction checks, each phrased as a `CheckReport`
//!   with explicit preconditions, conclusion, and verdict ([`evidence`],
//!   [`abduction`]).
//!
//! All probability arithmetic is generic over the [`scalar::Prob`] scalar.
//! The exact instantiation ([`Exact`], arbitrary-precision rationals) is the
//! one every verdict is defined against; `f64` is available for quick
//! numeric cross-checks. Divergence values convert to `f64` only at the
//! divergence boundary.

pub mod abduction;
pub mod calibration;
pub mod evidence;
pub mod claim;
pub mod dist;
pub mod divergence;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod report;
pub mod scalar;
pub mod sms;

pub use claim::{Answer, Claim, ClaimSet, ClaimVector, Question};
pub use error::Error;
pub use report::{CheckReport, Conclusion, Condition, Verdict};
pub use scalar::{Bracket, Prob};

/// Exact probability scalar used for all verdict-bearing arithmetic.
pub type Exact = num_rational::BigRational;

/// A finite SMS over exact rational probabilities.
pub type Sms = sms::SmsSpec<Exact>;

/// A distribution over answer tuples with exact probabilities.
pub type AnswerDist = dist::Dist<Vec<Answer>, Exact>;

/// Result alias for fallible operations in this crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
