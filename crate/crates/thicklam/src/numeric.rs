//! Exact scalars shared by every module: half-integers for Gromov products and
//! arbitrary-precision rationals for weights and constants.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_halves(h: i64) -> Self {
        HalfInt(h)
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn to_q(self) -> Q {
        Q::new(BigInt::from(self.0), BigInt::from(2))
    }

    /// Largest half-integer not exceeding `q`.
    pub fn floor_of(q: &Q) -> Self {
        let twice = q * Q::from_integer(BigInt::from(2));
        HalfInt(twice.floor().to_integer().to_i64().unwrap_or(i64::MAX))
    }

    pub fn max0(self) -> Self {
        HalfInt(self.0.max(0))
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let q = parse_q(s)?;
        let twice = &q * Q::from_integer(BigInt::from(2));
        if !twice.is_integer() {
            return Err(Error::Invalid(format!("`{s}` is not a half-integer")));
        }
        twice
            .to_integer()
            .to_i64()
            .map(HalfInt)
            .ok_or_else(|| Error::Invalid(format!("`{s}` out of range")))
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `p/q` or `p` into an exact rational.
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::MalformedLabel(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(p, q))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

pub fn q_to_f64(q: &Q) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // Scale down huge operands before dividing.
        let bits = q.numer().bits().max(q.denom().bits()) as i64 - 60;
        let shift = bits.max(0) as usize;
        let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (q.denom() >> shift).to_f64().unwrap_or(1.0);
        n / d
    }
}

pub fn q_is_nonneg(q: &Q) -> bool {
    !q.is_negative()
}

/// Serde adapter that stores a rational as a `"p/q"` string.
pub mod q_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Q>` as strings.
pub mod q_vec_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(fmt_q).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Q>`; `null` means absent.
pub mod q_opt_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        q.as_ref().map(fmt_q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_q(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Outward-rounded `exp`: returns `(lo, hi)` with `lo <= e^x <= hi`.
pub fn exp_enclosure(x: f64) -> (f64, f64) {
    let v = x.exp();
    // libm exp is accurate to within 1 ulp; widen by a few ulps either side.
    let lo = next_down(next_down(v)).max(0.0);
    let hi = next_up(next_up(v));
    (lo, hi)
}

pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    if x > 0.0 {
        f64::from_bits(b + 1)
    } else {
        f64::from_bits(b - 1)
    }
}

pub fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_int_display_roundtrip() {
        for h in -7..7 {
            let x = HalfInt::from_halves(h);
            let back: HalfInt = x.to_string().parse().unwrap();
            assert_eq!(x, back);
        }
        assert_eq!(HalfInt::from_halves(1).to_string(), "1/2");
        assert_eq!(HalfInt::from_int(3).to_string(), "3");
    }

    #[test]
    fn floor_of_rational() {
        assert_eq!(HalfInt::floor_of(&q_frac(7, 3)), HalfInt::from_halves(4));
        assert_eq!(HalfInt::floor_of(&q_frac(5, 2)), HalfInt::from_halves(5));
    }

    #[test]
    fn exp_enclosure_brackets() {
        for x in [-3.0, -0.5, 0.0, 1.0, 7.25] {
            let (lo, hi) = exp_enclosure(x);
            assert!(lo < f64::exp(x) && f64::exp(x) < hi);
        }
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_q("6/4").unwrap(), q_frac(3, 2));
        assert_eq!(parse_q("-2").unwrap(), q_int(-2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }
}
