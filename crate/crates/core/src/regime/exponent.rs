use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exactly represented real exponent.
///
/// Values parsed from text (`"1.35"`, `"2/3"`, `"1e-2"`) or converted from
/// `f64` through their shortest round-trip decimal are stored as exact
/// rationals, so breakpoint membership such as `q == p - N/(N+2)` is decided
/// without rounding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent(BigRational);

impl Exponent {
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Exponent(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_integer(n: i64) -> Self {
        Exponent(BigRational::from_integer(BigInt::from(n)))
    }

    /// Converts through the shortest decimal that round-trips to `x`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("exponent must be finite, got {x}")));
        }
        format!("{x:?}").parse()
    }

    pub fn from_rational(r: BigRational) -> Self {
        Exponent(r)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse exponent `{s}`"));
        if let Some((a, b)) = s.split_once('/') {
            let num = parse_decimal(a).ok_or_else(bad)?;
            let den = parse_decimal(b).ok_or_else(bad)?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Exponent(num / den));
        }
        parse_decimal(s).map(Exponent).ok_or_else(bad)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(x) => Exponent::from_f64(x),
            Raw::Int(i) => Ok(Exponent::from_integer(i)),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// An integrability exponent that may be infinite (`L^∞`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtExponent {
    Finite(Exponent),
    Infinite,
}

impl ExtExponent {
    pub fn finite(x: f64) -> Result<Self> {
        if x.is_infinite() && x > 0.0 {
            return Ok(ExtExponent::Infinite);
        }
        Exponent::from_f64(x).map(ExtExponent::Finite)
    }

    pub fn value(&self) -> f64 {
        match self {
            ExtExponent::Finite(e) => e.value(),
            ExtExponent::Infinite => f64::INFINITY,
        }
    }

    /// `c / self`, with the convention `c / ∞ = 0`.
    pub(crate) fn reciprocal_times(&self, c: &BigRational) -> BigRational {
        match self {
            ExtExponent::Finite(e) => c / e.as_rational(),
            ExtExponent::Infinite => BigRational::zero(),
        }
    }

    pub(crate) fn at_least_one(&self) -> bool {
        match self {
            ExtExponent::Finite(e) => *e.as_rational() >= BigRational::one(),
            ExtExponent::Infinite => true,
        }
    }

    pub(crate) fn is_negative_or_zero(&self) -> bool {
        matches!(self, ExtExponent::Finite(e) if !e.as_rational().is_positive())
    }
}

impl FromStr for ExtExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Infinity" | "∞" => Ok(ExtExponent::Infinite),
            other => other.parse().map(ExtExponent::Finite),
        }
    }
}

impl fmt::Display for ExtExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtExponent::Finite(e) => write!(f, "{e}"),
            ExtExponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtExponent::Finite(e) => e.serialize(s),
            ExtExponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(x) => ExtExponent::finite(x),
            Raw::Int(i) => Ok(ExtExponent::Finite(Exponent::from_integer(i))),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_text_is_exact() {
        let a: Exponent = "1.4".parse().unwrap();
        assert_eq!(a, Exponent::from_ratio(7, 5));
        let b: Exponent = "2/3".parse().unwrap();
        assert_eq!(b, Exponent::from_ratio(2, 3));
        let c: Exponent = "-2.5e-1".parse().unwrap();
        assert_eq!(c, Exponent::from_ratio(-1, 4));
        assert!("1.2.3".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
        assert!("1/0".parse::<Exponent>().is_err());
    }

    #[test]
    fn f64_goes_through_shortest_decimal() {
        assert_eq!(Exponent::from_f64(1.4).unwrap(), Exponent::from_ratio(7, 5));
        assert_eq!(Exponent::from_f64(1e-7).unwrap(), Exponent::from_ratio(1, 10_000_000));
        assert!(Exponent::from_f64(f64::NAN).is_err());
        for x in [0.1, 1.35, 2.0 / 3.0, 1234.5678, 3e-300] {
            assert_eq!(Exponent::from_f64(x).unwrap().value(), x);
        }
    }

    #[test]
    fn infinity_parses() {
        assert_eq!("inf".parse::<ExtExponent>().unwrap(), ExtExponent::Infinite);
        assert_eq!(ExtExponent::finite(f64::INFINITY).unwrap(), ExtExponent::Infinite);
        let v: ExtExponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(v, ExtExponent::Infinite);
        let w: ExtExponent = serde_json::from_str("2.5").unwrap();
        assert_eq!(w.value(), 2.5);
    }
}
