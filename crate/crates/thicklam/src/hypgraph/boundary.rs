//! Boundary points given by approximating vertex sequences together with a
//! Cauchy certificate: a lower bound on all Gromov products beyond each index.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::farey::distance_from_infinity;
use super::{gromov_product, ExactGraph};
use crate::error::{Error, Result};
use crate::modular::{Mat2, Slope};
use crate::numeric::HalfInt;
use crate::word::{Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryApprox<V> {
    pub basepoint: V,
    pub vertices: Vec<V>,
    /// `tail_bounds[k]` bounds `(x_i · x_j)` from below for all `i, j >= k`,
    /// and therefore also the products with the limit point.
    pub tail_bounds: Vec<HalfInt>,
    pub label: Option<String>,
}

impl<V: Clone + Eq> BoundaryApprox<V> {
    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 2 || self.vertices.len() != self.tail_bounds.len() {
            return Err(Error::MissingCertificate);
        }
        let monotone = self.tail_bounds.windows(2).all(|w| w[0] <= w[1]);
        if !monotone || self.tail_bounds[0] >= *self.tail_bounds.last().unwrap() {
            return Err(Error::MissingCertificate);
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn truncate(&self, depth: usize) -> Self {
        let n = (depth + 1).min(self.vertices.len());
        BoundaryApprox {
            basepoint: self.basepoint.clone(),
            vertices: self.vertices[..n].to_vec(),
            tail_bounds: self.tail_bounds[..n].to_vec(),
            label: self.label.clone(),
        }
    }

    fn last(&self) -> (&V, HalfInt) {
        (self.vertices.last().unwrap(), *self.tail_bounds.last().unwrap())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Point<V> {
    Vertex(V),
    Boundary(BoundaryApprox<V>),
}

impl<V: Clone + Eq + std::fmt::Display> Point<V> {
    /// Identity used to detect shared points between sampled paths.
    pub fn key(&self) -> String {
        match self {
            Point::Vertex(v) => format!("v:{v}"),
            Point::Boundary(b) => match &b.label {
                Some(l) => format!("b:{l}"),
                None => format!("b:{}", b.vertices.last().unwrap()),
            },
        }
    }
}

/// Certified enclosure of a Gromov product; `upper = None` means no finite
/// upper bound was certified at the given depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductBound {
    pub lower: HalfInt,
    pub upper: Option<HalfInt>,
}

impl ProductBound {
    pub fn exact(v: HalfInt) -> Self {
        ProductBound { lower: v, upper: Some(v) }
    }
}

/// Product of two vertices or boundary points at `base`.
///
/// Each boundary input is replaced by its deepest vertex `x_K`; the four-point
/// inequality loses `δ` per replacement, and the tail bound caps what the
/// replacement can certify.
pub fn product_bound<G: ExactGraph>(
    g: &G,
    a: &Point<G::V>,
    b: &Point<G::V>,
    base: &G::V,
    delta: HalfInt,
) -> Result<ProductBound> {
    let mut cap: Option<HalfInt> = None;
    let mut losses = HalfInt::ZERO;
    let mut pick = |p: &Point<G::V>| -> Result<G::V> {
        match p {
            Point::Vertex(v) => Ok(v.clone()),
            Point::Boundary(bd) => {
                bd.validate()?;
                if &bd.basepoint != base {
                    return Err(Error::BasepointMismatch(bd.basepoint.to_string(), base.to_string()));
                }
                let (v, t) = bd.last();
                cap = Some(cap.map_or(t, |c: HalfInt| c.min(t)));
                losses = losses + delta;
                Ok(v.clone())
            }
        }
    };
    let x = pick(a)?;
    let y = pick(b)?;
    let p = gromov_product(g, &x, &y, base);
    match cap {
        None => Ok(ProductBound::exact(p)),
        Some(c) => {
            let lower = (p.min(c) - losses).max0();
            let upper = (c > p + losses).then_some(p + losses);
            Ok(ProductBound { lower, upper })
        }
    }
}

/// An eventually periodic reduced ray in the tree from the identity.
pub fn tree_ray(prefix: &Word, period: &Word, depth: usize) -> Result<BoundaryApprox<Word>> {
    let (Some(&first), Some(&last)) = (period.letters().first(), period.letters().last()) else {
        return Err(Error::Invalid("empty period".into()));
    };
    let joins = |x: Option<&Letter>, y: Letter| x.is_some_and(|x| x.inv() == y);
    if joins(Some(&last), first) || joins(prefix.letters().last(), first) {
        return Err(Error::Invalid("ray is not reduced".into()));
    }
    let letters = prefix
        .letters()
        .iter()
        .chain(period.letters().iter().cycle())
        .take(depth)
        .copied();
    let mut vertices = vec![Word::identity()];
    let mut cur = Word::identity();
    for l in letters {
        cur.push(l);
        vertices.push(cur.clone());
    }
    let tail_bounds = (0..=depth).map(|k| HalfInt::from_int(k as i64)).collect();
    let label = format!("{}({})", if prefix.is_empty() { String::new() } else { prefix.to_string() }, period);
    Ok(BoundaryApprox { basepoint: Word::identity(), vertices, tail_bounds, label: Some(label) })
}

/// Parses `"ab(ba)"` (prefix then repeating period) into a tree ray.
pub fn parse_tree_ray(s: &str, depth: usize) -> Result<BoundaryApprox<Word>> {
    let bad = || Error::MalformedLabel(s.to_string());
    let (pre, rest) = s.trim().split_once('(').ok_or_else(bad)?;
    let period = rest.strip_suffix(')').ok_or_else(bad)?;
    tree_ray(&pre.parse()?, &period.parse()?, depth)
}

/// Partial quotients of an eventually periodic continued fraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicCf {
    pub prefix: Vec<BigInt>,
    pub period: Vec<BigInt>,
}

impl PeriodicCf {
    pub fn digits(&self, n: usize) -> Vec<BigInt> {
        self.prefix.iter().chain(self.period.iter().cycle()).take(n).cloned().collect()
    }

    /// Parses `"[a0;a1,...,(p1,...,pk)]"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::MalformedLabel(s.to_string());
        let inner = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let (a0, rest) = inner.split_once(';').ok_or_else(bad)?;
        let (pre, per) = match rest.split_once('(') {
            Some((p, q)) => (p, q.strip_suffix(')').ok_or_else(bad)?),
            None => return Err(bad()),
        };
        let nums = |t: &str| -> Result<Vec<BigInt>> {
            t.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<BigInt>().map_err(|_| bad()))
                .collect()
        };
        let mut prefix = vec![a0.trim().parse::<BigInt>().map_err(|_| bad())?];
        prefix.extend(nums(pre)?);
        let period = nums(per)?;
        if period.is_empty() || prefix[1..].iter().chain(&period).any(|d| !d.is_positive()) {
            return Err(bad());
        }
        Ok(PeriodicCf { prefix, period })
    }
}

impl std::fmt::Display for PeriodicCf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[BigInt]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "[{};", self.prefix[0])?;
        if self.prefix.len() > 1 {
            write!(f, "{},", join(&self.prefix[1..]))?;
        }
        write!(f, "({})]", join(&self.period))
    }
}

/// Convergents `P_0..P_n` of `[d0; d1, ...]`.
pub fn convergents(digits: &[BigInt]) -> Vec<Slope> {
    let (mut p2, mut q2) = (BigInt::from(0), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::from(0));
    digits
        .iter()
        .map(|a| {
            let p = a * &p1 + &p2;
            let q = a * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            Slope::new(p, q).expect("convergents are reduced")
        })
        .collect()
}

/// An irrational boundary slope in the chart where `basepoint` is `1/0`.
///
/// The Farey edge `{P_{k-1}, P_k}` separates `∞` from every later convergent,
/// so products beyond index `k` are at least `d(∞, P_{k-1}) - ½`.
pub fn farey_ray(cf: &PeriodicCf, depth: usize, basepoint: &Slope) -> BoundaryApprox<Slope> {
    let chart = convergents(&cf.digits(depth + 1));
    let dist: Vec<u64> = chart.iter().map(distance_from_infinity).collect();
    let tail_bounds = (0..=depth)
        .map(|k| match k {
            0 => HalfInt::ZERO,
            _ => (HalfInt::from_int(dist[k - 1] as i64) - HalfInt::from_halves(1)).max0(),
        })
        .collect();
    let back = Mat2::to_infinity(basepoint).inverse().expect("SL2Z");
    BoundaryApprox {
        basepoint: basepoint.clone(),
        vertices: chart.iter().map(|s| back.act(s)).collect(),
        tail_bounds,
        label: Some(format!("{cf}@{basepoint}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgraph::{FareyGraph, TreeGraph};

    #[test]
    fn tree_boundary_product_is_common_prefix() {
        let t = TreeGraph::default();
        let x = parse_tree_ray("(ab)", 20).unwrap();
        let y = parse_tree_ray("ab(ba)", 20).unwrap();
        let p = product_bound(&t, &Point::Boundary(x), &Point::Boundary(y), &Word::identity(), HalfInt::ZERO)
            .unwrap();
        assert_eq!(p, ProductBound::exact(HalfInt::from_int(2)));
    }

    #[test]
    fn farey_vertex_products() {
        let f = FareyGraph::default();
        let p = product_bound(
            &f,
            &Point::Vertex("0/1".parse().unwrap()),
            &Point::Vertex("1/1".parse().unwrap()),
            &Slope::infinity(),
            HalfInt::from_int(1),
        )
        .unwrap();
        assert_eq!(p.lower.to_string(), "1/2");
    }

    #[test]
    fn farey_ray_bounds_are_valid() {
        let f = FareyGraph::default();
        let golden = PeriodicCf::parse("[1;(1)]").unwrap();
        let r = farey_ray(&golden, 12, &Slope::infinity());
        r.validate().unwrap();
        for k in 0..r.vertices.len() {
            for i in k..r.vertices.len() {
                for j in k..r.vertices.len() {
                    let p = gromov_product(&f, &r.vertices[i], &r.vertices[j], &Slope::infinity());
                    assert!(p >= r.tail_bounds[k]);
                }
            }
        }
        assert_eq!(golden.to_string(), "[1;(1)]");
    }

    #[test]
    fn missing_certificate_rejected() {
        let t = TreeGraph::default();
        let bad = BoundaryApprox {
            basepoint: Word::identity(),
            vertices: vec![Word::identity()],
            tail_bounds: vec![],
            label: None,
        };
        let e = product_bound(&t, &Point::Boundary(bad), &Point::Vertex(Word::identity()), &Word::identity(), HalfInt::ZERO);
        assert!(matches!(e, Err(Error::MissingCertificate)));
    }
}
