//! Exact rational parameters.
//!
//! Exponents and constants are accepted either as integers, decimal literals or
//! `"p/q"` strings and always stored as reduced fractions, so a configuration
//! round-trips without losing digits.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::Zero;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<i64>);

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::param("rational", "zero denominator"));
        }
        Ok(Rational(Ratio::new(num, den)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_positive(&self) -> bool {
        self.numer() > 0
    }

    /// `⌊n^{p/q}⌋` computed exactly as the integer `q`-th root of `n^p`.
    pub fn floor_power(&self, n: u64) -> Result<BigUint> {
        let (p, q) = (self.numer(), self.denom());
        if p < 0 {
            return Err(Error::param("exponent", "negative exponents are not supported"));
        }
        let p = u32::try_from(p).map_err(|_| Error::param("exponent", "numerator too large"))?;
        let q = u32::try_from(q).map_err(|_| Error::param("exponent", "denominator too large"))?;
        let base = BigUint::from(n).pow(p);
        Ok(if q == 1 { base } else { base.nth_root(q) })
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("rational", format!("cannot parse {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d);
        }
        parse_decimal(s).ok_or_else(bad)
    }
}

/// Parses `-12.375` or `1e-3` style literals exactly.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut num: i64 = digits.parse().ok()?;
    let mut den: i64 = 1;
    let scale = exp - frac.len() as i32;
    if scale >= 0 {
        num = num.checked_mul(10i64.checked_pow(scale as u32)?)?;
    } else {
        den = 10i64.checked_pow((-scale) as u32)?;
    }
    if neg {
        num = -num;
    }
    Some(Rational(Ratio::new(num, den)))
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_integer() {
            serializer.serialize_i64(self.numer())
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer, a decimal number or a \"p/q\" string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
                Ok(Rational::integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
                i64::try_from(v).map(Rational::integer).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rational, E> {
                // The shortest round-trip representation is what the user wrote.
                parse_decimal(&format!("{v:?}")).ok_or_else(|| E::custom(format!("cannot represent {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

/// Largest exponent size (in bits of the result) an exact power may reach.
const MAX_POWER_BITS: u64 = 1 << 26;

/// `(a/b)^{p/q}` for a nonnegative rational exponent: its floor, plus the exact
/// value `(num, den)` when the power is rational.
pub(crate) fn rational_power(a: &BigUint, b: &BigUint, exp: Rational) -> Result<(BigUint, Option<(BigUint, BigUint)>)> {
    let (p, q) = (exp.numer(), exp.denom());
    if p < 0 {
        return Err(Error::param("exponent", "negative exponents are not supported"));
    }
    if b.is_zero() {
        return Err(Error::param("rational", "zero denominator"));
    }
    let (p, q) = (p as u64, q as u64);
    let bits = (a.bits().max(b.bits()) + 1).saturating_mul(p).saturating_mul(q);
    if bits > MAX_POWER_BITS || q > u64::from(u32::MAX) {
        return Err(Error::SizeGuard { what: "exact power bits", size: bits, limit: MAX_POWER_BITS });
    }
    let den = b.pow(p as u32);
    // (a/b)^{p/q} = (a^p · b^{p(q−1)})^{1/q} / b^p
    let radicand = a.pow(p as u32) * b.pow((p * (q - 1)) as u32);
    let root = radicand.nth_root(q as u32);
    let exact = (root.pow(q as u32) == radicand).then(|| (root.clone(), den.clone()));
    Ok((root / den, exact))
}

/// `⌊x⌋` of a nonnegative finite float as a big integer.
pub(crate) fn floor_f64_big(x: f64) -> Option<BigUint> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let x = x.floor();
    if x < 9.007_199_254_740_992e15 {
        return Some(BigUint::from(x as u64));
    }
    // Exact binary expansion of the float.
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64 - 1075;
    let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    Some(BigUint::from(mant) << exp as usize)
}
