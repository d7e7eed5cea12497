//! Slopes on the punctured torus and integer 2×2 matrices acting on them.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced slope `p/q` with `q >= 0`; `1/0` is the slope at infinity.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Slope {
    p: BigInt,
    q: BigInt,
}

impl Slope {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self> {
        let (mut p, mut q) = (p.into(), q.into());
        if p.is_zero() && q.is_zero() {
            return Err(Error::MalformedLabel("0/0".into()));
        }
        let g = p.gcd(&q);
        p /= &g;
        q /= &g;
        if q.is_negative() || (q.is_zero() && p.is_negative()) {
            p = -p;
            q = -q;
        }
        Ok(Slope { p, q })
    }

    pub fn int(n: i64) -> Self {
        Slope { p: n.into(), q: BigInt::one() }
    }

    pub fn infinity() -> Self {
        Slope { p: BigInt::one(), q: BigInt::zero() }
    }

    pub fn zero() -> Self {
        Slope::int(0)
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn is_infinity(&self) -> bool {
        self.q.is_zero()
    }

    /// `max(|p|, q)`.
    pub fn height(&self) -> BigInt {
        self.p.abs().max(self.q.clone())
    }

    /// Farey adjacency: `|ps - qr| = 1`.
    pub fn adjacent(&self, o: &Slope) -> bool {
        (&self.p * &o.q - &self.q * &o.p).abs().is_one()
    }

    /// Regular continued fraction `[a0; a1, ..., an]` with `an >= 2` when `n > 0`.
    /// The slope at infinity has the empty expansion.
    pub fn continued_fraction(&self) -> Vec<BigInt> {
        let mut out = Vec::new();
        let (mut a, mut b) = (self.p.clone(), self.q.clone());
        while !b.is_zero() {
            let (d, r) = a.div_mod_floor(&b);
            out.push(d);
            a = b;
            b = r;
        }
        out
    }

    pub fn from_continued_fraction(digits: &[BigInt]) -> Self {
        // Evaluate from the right: x = a_k + 1/x.
        let (mut p, mut q) = (BigInt::one(), BigInt::zero());
        for d in digits.iter().rev() {
            let np = d * &p + &q;
            q = p;
            p = np;
        }
        Slope::new(p, q).expect("nonzero")
    }

    /// Cross determinant `ps - qr`.
    pub fn det(&self, o: &Slope) -> BigInt {
        &self.p * &o.q - &self.q * &o.p
    }

    pub fn to_f64(&self) -> f64 {
        if self.q.is_zero() {
            return f64::INFINITY;
        }
        crate::numeric::q_to_f64(&num_rational::BigRational::new(self.p.clone(), self.q.clone()))
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedLabel(s.to_string());
        let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        if q.is_negative() {
            return Err(bad());
        }
        let s2 = Slope::new(p.clone(), q.clone()).map_err(|_| bad())?;
        if s2.p != p || s2.q != q {
            // Labels must already be reduced.
            return Err(bad());
        }
        Ok(s2)
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integer matrix `[[a, b], [c, d]]` acting on column vectors `(p, q)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    /// Right twist `[[1,1],[0,1]]`.
    pub fn t() -> Self {
        Mat2::new(1, 1, 0, 1)
    }

    /// Left twist `[[1,0],[1,1]]`.
    pub fn s() -> Self {
        Mat2::new(1, 0, 1, 1)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    /// Inverse of a determinant ±1 matrix.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::Invalid(format!("determinant {det} is not ±1")));
        }
        Ok(Mat2 {
            a: &self.d * &det,
            b: -&self.b * &det,
            c: -&self.c * &det,
            d: &self.a * &det,
        })
    }

    pub fn pow(&self, n: i64) -> Result<Mat2> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Mat2::identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn apply(&self, v: (&BigInt, &BigInt)) -> (BigInt, BigInt) {
        (&self.a * v.0 + &self.b * v.1, &self.c * v.0 + &self.d * v.1)
    }

    /// Projective action on slopes.
    pub fn act(&self, s: &Slope) -> Slope {
        let (p, q) = self.apply((s.p(), s.q()));
        Slope::new(p, q).expect("invertible matrix maps nonzero vectors to nonzero vectors")
    }

    /// An `SL(2,Z)` element sending `s` to `1/0`.
    pub fn to_infinity(s: &Slope) -> Mat2 {
        // Solve x p + y q = 1, then [[x, y], [-q, p]] has determinant 1.
        let e = s.p().extended_gcd(s.q());
        debug_assert!(e.gcd.is_one());
        let (x, y) = if e.gcd.is_negative() { (-e.x, -e.y) } else { (e.x, e.y) };
        Mat2 { a: x, b: y, c: -s.q().clone(), d: s.p().clone() }
    }

    pub fn columns(&self) -> ((BigInt, BigInt), (BigInt, BigInt)) {
        ((self.a.clone(), self.c.clone()), (self.b.clone(), self.d.clone()))
    }

    pub fn is_nonnegative(&self) -> bool {
        !(self.a.is_negative() || self.b.is_negative() || self.c.is_negative() || self.d.is_negative())
    }

    /// Equality in `PGL(2,Z)`, i.e. up to an overall sign.
    pub fn projectively_eq(&self, o: &Mat2) -> bool {
        self == o || (self.a == -&o.a && self.b == -&o.b && self.c == -&o.c && self.d == -&o.d)
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { a: -&self.a, b: -&self.b, c: -&self.c, d: -&self.d }
    }

    pub fn max_abs_entry(&self) -> BigInt {
        [&self.a, &self.b, &self.c, &self.d].iter().map(|x| x.abs()).max().unwrap()
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(s: &str) -> Slope {
        s.parse().unwrap()
    }

    #[test]
    fn labels_roundtrip_and_reject_unreduced() {
        assert_eq!(sl("1/0"), Slope::infinity());
        assert_eq!(sl("-3/7").to_string(), "-3/7");
        assert!("2/4".parse::<Slope>().is_err());
        assert!("1/-2".parse::<Slope>().is_err());
        assert!("abc".parse::<Slope>().is_err());
    }

    #[test]
    fn continued_fraction_of_eight_fifths() {
        let cf: Vec<i64> = sl("8/5")
            .continued_fraction()
            .iter()
            .map(|d| i64::try_from(d).unwrap())
            .collect();
        assert_eq!(cf, vec![1, 1, 1, 2]);
        let digits: Vec<BigInt> = cf.iter().map(|&d| d.into()).collect();
        assert_eq!(Slope::from_continued_fraction(&digits), sl("8/5"));
    }

    #[test]
    fn negative_continued_fraction() {
        let s = sl("-7/3");
        let cf = s.continued_fraction();
        assert_eq!(cf[0], BigInt::from(-3));
        assert_eq!(Slope::from_continued_fraction(&cf), s);
    }

    #[test]
    fn twist_acts_on_zero_slope() {
        assert_eq!(Mat2::t().act(&sl("0/1")), sl("1/1"));
        assert_eq!(Mat2::identity().act(&sl("3/5")), sl("3/5"));
    }

    #[test]
    fn to_infinity_sends_slope_to_infinity() {
        for s in ["3/5", "-2/7", "0/1", "1/0", "13/8"] {
            let g = Mat2::to_infinity(&sl(s));
            assert_eq!(g.det(), BigInt::one());
            assert!(g.act(&sl(s)).is_infinity());
        }
    }

    #[test]
    fn inverse_and_power() {
        let m = Mat2::new(2, 1, 1, 1);
        assert_eq!(m.mul(&m.inverse().unwrap()), Mat2::identity());
        assert_eq!(m.pow(3).unwrap(), m.mul(&m).mul(&m));
        assert_eq!(m.pow(-2).unwrap().mul(&m.pow(2).unwrap()), Mat2::identity());
    }
}
