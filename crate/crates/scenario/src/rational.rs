//! Exact rational parsing and serialization.
//!
//! Scenario files carry probabilities as strings: either "a/b", an integer,
//! or a decimal such as "0.25", all converted exactly. JSON numbers are
//! accepted through serde_json's arbitrary-precision representation, so a
//! literal `0.1` becomes exactly 1/10.

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use smslab_core::Exact;

/// Parses a rational from its textual form. Returns `None` on malformed
/// input or a zero denominator.
pub fn parse_rational(text: &str) -> Option<Exact> {
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Exact::new(n, d));
    }
    // Decimal with optional exponent: mantissa [.fraction] [e exponent]
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let negative = int_part.starts_with('-');
    let digits: String = format!(
        "{}{}",
        int_part.trim_start_matches(['+', '-']),
        frac_part
    );
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut value = Exact::new(digits.parse::<BigInt>().ok()?, BigInt::one());
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    if shift >= 0 {
        value *= Exact::from_integer(ten.pow(shift as u64));
    } else {
        value /= Exact::from_integer(ten.pow((-shift) as u64));
    }
    if negative {
        value = -value;
    }
    Some(value)
}

/// Canonical textual form: "a/b" for non-integers, "a" for integers.
pub fn render_rational(value: &Exact) -> String {
    value.to_string()
}

/// Serde adapter: rationals as strings or raw JSON numbers.
pub mod serde_rational {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Number(serde_json::Number),
    }

    pub fn serialize<S: Serializer>(value: &Exact, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&render_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Exact, D::Error> {
        let raw = Raw::deserialize(de)?;
        let text = match &raw {
            Raw::Text(t) => t.clone(),
            Raw::Number(n) => n.to_string(),
        };
        parse_rational(&text)
            .ok_or_else(|| D::Error::custom(format!("invalid rational: {text}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smslab_core::Prob;

    #[test]
    fn parses_fractions_integers_and_decimals_exactly() {
        assert_eq!(parse_rational("1/3").unwrap(), Exact::ratio(1, 3));
        assert_eq!(parse_rational("2").unwrap(), Exact::ratio(2, 1));
        assert_eq!(parse_rational("0.25").unwrap(), Exact::ratio(1, 4));
        assert_eq!(parse_rational("0.1").unwrap(), Exact::ratio(1, 10));
        assert_eq!(parse_rational("-0.5").unwrap(), Exact::ratio(-1, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), Exact::ratio(1, 1000));
        assert_eq!(parse_rational("2.5e1").unwrap(), Exact::ratio(25, 1));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn rendering_round_trips() {
        for r in ["1/3", "7/2", "1", "0", "-3/4"] {
            let v = parse_rational(r).unwrap();
            assert_eq!(parse_rational(&render_rational(&v)).unwrap(), v);
        }
    }
}
