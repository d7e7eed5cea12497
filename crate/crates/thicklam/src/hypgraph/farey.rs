//! The Farey graph: the curve graph of the once-punctured torus.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use super::ExactGraph;
use crate::error::Result;
use crate::modular::{Mat2, Slope};

#[derive(Clone, Debug)]
pub struct FareyGraph {
    pub basepoint: Slope,
}

impl Default for FareyGraph {
    fn default() -> Self {
        FareyGraph { basepoint: Slope::infinity() }
    }
}

fn digit_u64(d: &BigInt) -> u64 {
    d.to_u64().unwrap_or(u64::MAX)
}

/// Distance from `1/0` to `x` by dynamic programming over the ladder of
/// Farey triangles crossed by the hyperbolic geodesic from `∞` to `x`.
///
/// With convergents `P_k` of `x = [a0; a1, ..., an]`, every path from `∞` to
/// `P_k` crosses the edge `{P_{k-2}, P_{k-1}}`, and inside the fan pivoting
/// at `P_{k-1}` the cheapest routes are `P_{k-1} → P_k` or the rim walk of
/// length `a_k` from `P_{k-2}`.
pub fn distance_from_infinity(x: &Slope) -> u64 {
    if x.is_infinity() {
        return 0;
    }
    let cf = x.continued_fraction();
    let (mut d2, mut d1) = (0u64, 1u64);
    for a in &cf[1..] {
        let d = (d1 + 1).min(d2.saturating_add(digit_u64(a)));
        d2 = d1;
        d1 = d;
    }
    d1
}

pub fn farey_distance(a: &Slope, b: &Slope) -> u64 {
    if a == b {
        return 0;
    }
    distance_from_infinity(&Mat2::to_infinity(a).act(b))
}

/// The (at most two) neighbours of `from` that lie on some geodesic to `to`.
pub fn geodesic_successors(from: &Slope, to: &Slope) -> Vec<Slope> {
    if from == to {
        return Vec::new();
    }
    let g = Mat2::to_infinity(from);
    let x = g.act(to);
    let cf = x.continued_fraction();
    let ginv = g.inverse().expect("SL2Z");
    if cf.len() == 1 {
        return vec![to.clone()];
    }
    let m = distance_from_infinity(&x);
    let a0 = cf[0].clone();
    [a0.clone(), a0 + BigInt::one()]
        .into_iter()
        .map(|n| Slope::new(n, 1).expect("integer slope"))
        .filter(|n| farey_distance(n, &x) + 1 == m)
        .map(|n| ginv.act(&n))
        .collect()
}

impl ExactGraph for FareyGraph {
    type V = Slope;

    fn kind(&self) -> &'static str {
        "farey"
    }

    fn basepoint(&self) -> &Slope {
        &self.basepoint
    }

    fn parse_vertex(&self, s: &str) -> Result<Slope> {
        s.parse()
    }

    fn distance(&self, a: &Slope, b: &Slope) -> u64 {
        farey_distance(a, b)
    }

    fn geodesic(&self, a: &Slope, b: &Slope) -> Vec<Slope> {
        let mut out = vec![a.clone()];
        let mut cur = a.clone();
        while &cur != b {
            let next = geodesic_successors(&cur, b)
                .into_iter()
                .min_by_key(|s| s.to_string())
                .expect("a geodesic successor always exists");
            out.push(next.clone());
            cur = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(s: &str) -> Slope {
        s.parse().unwrap()
    }

    #[test]
    fn adjacent_pair_has_distance_one() {
        assert_eq!(farey_distance(&sl("0/1"), &sl("1/0")), 1);
    }

    #[test]
    fn small_distances() {
        assert_eq!(farey_distance(&sl("2/5"), &sl("1/0")), 3);
        assert_eq!(farey_distance(&sl("8/5"), &sl("1/0")), 3);
        assert_eq!(farey_distance(&sl("1/2"), &sl("1/0")), 2);
        assert_eq!(farey_distance(&sl("1/3"), &sl("2/3")), 2);
    }

    #[test]
    fn geodesic_is_a_path_of_the_right_length() {
        let g = FareyGraph::default();
        let path = g.geodesic(&sl("13/8"), &sl("-5/7"));
        assert_eq!(path.len() as u64 - 1, g.distance(&sl("13/8"), &sl("-5/7")));
        for w in path.windows(2) {
            assert!(w[0].adjacent(&w[1]));
        }
    }
}
