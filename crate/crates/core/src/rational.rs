//! Exact rational numbers and their textual forms.
//!
//! Every probability and payoff in the crate is a [`Rational`]. Text input
//! accepts `p/q`, integers and decimals (`0.25`, `-1.5e-3`); output uses
//! `p/q`, or a bare integer when the denominator is one.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `p/q`, an integer, or a decimal with optional exponent.
pub fn parse(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::SchemaError(format!("`{text}` is not a rational number"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(at) => {
            let e: i32 = s[at + 1..].parse().map_err(|_| bad())?;
            (&s[..at], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let numer: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact value together with a six-decimal approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualValue {
    pub exact: String,
    pub approx: f64,
}

impl From<&Rational> for DualValue {
    fn from(q: &Rational) -> Self {
        DualValue {
            exact: q.to_string(),
            approx: (to_f64(q) * 1e6).round() / 1e6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse(" -3 ").unwrap(), int(-3));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse("1e-6").unwrap(), ratio(1, 1_000_000));
        assert_eq!(parse("2.5E2").unwrap(), int(250));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1/0", "abc", "1.2.3", "--1", "1/x", "."] {
            assert!(parse(s).is_err(), "{s} should not parse");
        }
    }

    #[test]
    fn dual_rendering() {
        let v = DualValue::from(&ratio(1, 3));
        assert_eq!(v.exact, "1/3");
        assert_eq!(v.approx, 0.333333);
        assert_eq!(DualValue::from(&int(2)).exact, "2");
    }
}
