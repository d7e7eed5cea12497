//! Certificates built on the exact backends: broken geodesics, visual-metric
//! enclosures, separation of sampled paths and backtracking intersection.

use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::boundary::{product_bound, BoundaryApprox, Point};
use super::{backtracking_length, ExactGraph, Segment};
use crate::error::{Error, Result};
use crate::numeric::{exp_enclosure, fmt_q, next_down, q_int, q_str, q_to_f64, HalfInt, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateConfig {
    pub delta: HalfInt,
    pub l: u64,
    #[serde(rename = "L")]
    pub big_l: u64,
    #[serde(rename = "K", with = "q_str")]
    pub k: Q,
    #[serde(rename = "B", with = "q_str")]
    pub b: Q,
    #[serde(with = "q_str")]
    pub eps_vis: Q,
    #[serde(with = "q_str")]
    pub kappa_vis: Q,
}

impl CertificateConfig {
    /// Chooses `L` and `K` from `δ` and `l`.
    ///
    /// Backtracking below `l` keeps each pivot product under `c = l + 4δ`, so
    /// every junction costs at most `2(c + 2δ)` of length. With segments of
    /// length at least `4(c + 2δ)` each segment keeps half its length, giving
    /// `d(start, end) >= Σlen / 2 - 2`.
    pub fn calibrated(delta: HalfInt, l: u64, b: Q) -> Self {
        let c2 = HalfInt::from_int(l as i64) + HalfInt::from_halves(4 * delta.halves());
        let per_junction = c2 + HalfInt::from_halves(2 * delta.halves());
        let big_l = (4 * per_junction.halves() + 1) / 2;
        CertificateConfig {
            delta,
            l,
            big_l: big_l.max(1) as u64,
            k: q_int(2),
            b,
            eps_vis: Q::new(1.into(), 2.into()),
            kappa_vis: q_int(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |q: &Q| q.is_positive();
        if self.l == 0 || self.big_l == 0 || !pos(&self.k) || !pos(&self.b) || !pos(&self.eps_vis) {
            return Err(Error::Invalid("config constants must be positive".into()));
        }
        if !pos(&self.kappa_vis) || self.kappa_vis > q_int(1) {
            return Err(Error::Invalid("kappa_vis must lie in (0, 1]".into()));
        }
        if self.delta < HalfInt::ZERO {
            return Err(Error::Invalid("delta must be nonnegative".into()));
        }
        Ok(())
    }

    /// Fellow-travelling radius used for backtracking.
    pub fn radius(&self) -> HalfInt {
        HalfInt::from_halves(2 * self.delta.halves())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrokenGeodesicCertificate {
    pub is_l_backtracking: bool,
    #[serde(with = "crate::numeric::q_opt_str")]
    pub k: Option<Q>,
    pub backtracking: Vec<u64>,
    pub total_length: u64,
    pub config: CertificateConfig,
}

impl BrokenGeodesicCertificate {
    /// The certified lower bound `Σlen / K - K` on the endpoint distance.
    pub fn distance_lower_bound(&self) -> Option<Q> {
        self.k.as_ref().map(|k| q_int(self.total_length as i64) / k - k)
    }
}

fn check_segment<G: ExactGraph>(
    g: &G,
    i: usize,
    seg: &Segment<G::V>,
    config: &CertificateConfig,
) -> Result<()> {
    seg.validate(g)?;
    if seg.len() < config.big_l {
        return Err(Error::SegmentTooShort { index: i, len: seg.len(), min: config.big_l });
    }
    Ok(())
}

pub fn certify_broken_geodesic<G: ExactGraph>(
    g: &G,
    segments: &[Segment<G::V>],
    config: &CertificateConfig,
) -> Result<BrokenGeodesicCertificate> {
    config.validate()?;
    if segments.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for (i, s) in segments.iter().enumerate() {
        check_segment(g, i, s, config)?;
    }
    let mut backtracking = Vec::with_capacity(segments.len() - 1);
    for (i, w) in segments.windows(2).enumerate() {
        if w[0].end() != w[1].start() {
            return Err(Error::NotConcatenable(i + 1));
        }
        backtracking.push(backtracking_length(g, &w[0], &w[1], config.radius())?);
    }
    let ok = backtracking.iter().all(|&b| b < config.l);
    Ok(BrokenGeodesicCertificate {
        is_l_backtracking: ok,
        k: ok.then(|| config.k.clone()),
        backtracking,
        total_length: segments.iter().map(Segment::len).sum(),
        config: config.clone(),
    })
}

/// Appends a segment to a certified broken geodesic, checking only the new
/// junction.
pub fn extend_certificate<G: ExactGraph>(
    g: &G,
    cert: &BrokenGeodesicCertificate,
    last: &Segment<G::V>,
    next: &Segment<G::V>,
) -> Result<BrokenGeodesicCertificate> {
    let n = cert.backtracking.len() + 1;
    check_segment(g, n, next, &cert.config)?;
    if last.end() != next.start() {
        return Err(Error::NotConcatenable(n));
    }
    let b = backtracking_length(g, last, next, cert.config.radius())?;
    let mut out = cert.clone();
    out.backtracking.push(b);
    out.total_length += next.len();
    out.is_l_backtracking = cert.is_l_backtracking && b < cert.config.l;
    out.k = out.is_l_backtracking.then(|| cert.config.k.clone());
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualInterval {
    pub lo: f64,
    pub hi: f64,
}

pub fn visual_distance_bounds<G: ExactGraph>(
    g: &G,
    xi: &BoundaryApprox<G::V>,
    eta: &BoundaryApprox<G::V>,
    config: &CertificateConfig,
) -> Result<VisualInterval> {
    if xi.basepoint != eta.basepoint {
        return Err(Error::BasepointMismatch(xi.basepoint.to_string(), eta.basepoint.to_string()));
    }
    let pb = product_bound(
        g,
        &Point::Boundary(xi.clone()),
        &Point::Boundary(eta.clone()),
        &xi.basepoint,
        config.delta,
    )?;
    Ok(visual_from_products(pb.lower, pb.upper, config))
}

pub fn visual_from_products(lower: HalfInt, upper: Option<HalfInt>, config: &CertificateConfig) -> VisualInterval {
    let eps = q_to_f64(&config.eps_vis);
    let kappa = q_to_f64(&config.kappa_vis);
    let hi = exp_enclosure(-eps * lower.to_f64()).1.min(1.0);
    let lo = match upper {
        Some(u) => next_down(kappa * exp_enclosure(-eps * u.to_f64()).0).max(0.0),
        None => 0.0,
    };
    VisualInterval { lo, hi }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSeparation {
    pub i: usize,
    pub j: usize,
    pub shared: bool,
    /// Largest certified upper bound on products across the pair; `None` when
    /// the pair shares a point or some product had no finite upper bound.
    pub max_product: Option<HalfInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `None` encodes an unbounded constant.
    pub k_sep: Option<HalfInt>,
    pub pairs: Vec<PairSeparation>,
}

pub fn separation_constant<G: ExactGraph>(
    g: &G,
    paths: &[Vec<Point<G::V>>],
    base: &G::V,
    delta: HalfInt,
) -> Result<SeparationReport> {
    if paths.is_empty() || paths.iter().any(Vec::is_empty) {
        return Err(Error::EmptyFamily);
    }
    let mut pairs = Vec::new();
    let mut k_sep = Some(HalfInt::ZERO);
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            let shared = paths[i].iter().any(|x| paths[j].iter().any(|y| x.key() == y.key()));
            let mut max_product = None;
            if !shared {
                let mut m = Some(HalfInt::ZERO);
                for x in &paths[i] {
                    for y in &paths[j] {
                        let pb = product_bound(g, x, y, base, delta)?;
                        m = match (m, pb.upper) {
                            (Some(a), Some(b)) => Some(a.max(b)),
                            _ => None,
                        };
                    }
                }
                max_product = m;
                k_sep = match (k_sep, m) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            pairs.push(PairSeparation { i, j, shared, max_product });
        }
    }
    Ok(SeparationReport { k_sep, pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate<V> {
    pub gamma: V,
    pub path: usize,
    #[serde(with = "q_str")]
    pub product: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub backtracking: Vec<u64>,
    /// Pairs of candidate indices whose paths are asserted to meet.
    pub assertions: Vec<(usize, usize)>,
    #[serde(with = "q_str")]
    pub chained_bound: Q,
    pub config: CertificateConfig,
}

/// Candidates whose geodesics from the basepoint both backtrack at least `l`
/// along `g` have paths with large mutual product, hence the paths meet.
pub fn backtrack_intersection_certificate<G: ExactGraph>(
    graph: &G,
    g: &Segment<G::V>,
    candidates: &[Candidate<G::V>],
    config: &CertificateConfig,
) -> Result<IntersectionReport> {
    config.validate()?;
    for (i, c) in candidates.iter().enumerate() {
        if c.product <= config.b {
            return Err(Error::EvidenceBelowB { index: i, found: fmt_q(&c.product), required: fmt_q(&config.b) });
        }
    }
    if g.len() < config.big_l {
        return Err(Error::SegmentTooShort { index: 0, len: g.len(), min: config.big_l });
    }
    let base = g.end();
    let backtracking = candidates
        .iter()
        .map(|c| backtracking_length(graph, g, &Segment::from_geodesic(graph, base, &c.gamma), config.radius()))
        .collect::<Result<Vec<_>>>()?;
    let mut assertions = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if backtracking[i] >= config.l && backtracking[j] >= config.l {
                assertions.push((i, j));
            }
        }
    }
    let d = config.delta.to_q();
    let l = q_int(config.l as i64);
    let chained_bound = [&config.b - &d * q_int(2), l - &d * q_int(8), &config.b - &d * q_int(4)]
        .into_iter()
        .min()
        .expect("three terms");
    Ok(IntersectionReport { backtracking, assertions, chained_bound, config: config.clone() })
}

/// Smallest `f64` not below a rational, for reporting.
pub fn q_ceil_f64(q: &Q) -> f64 {
    q.ceil().to_integer().to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgraph::TreeGraph;
    use crate::word::Word;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cfg(l: u64, big_l: u64) -> CertificateConfig {
        CertificateConfig {
            delta: HalfInt::ZERO,
            l,
            big_l,
            k: q_int(1),
            b: q_int(3),
            eps_vis: q_int(1),
            kappa_vis: q_int(1),
        }
    }

    #[test]
    fn tree_broken_geodesics() {
        let t = TreeGraph::default();
        let s1 = Segment::from_geodesic(&t, &w("e"), &w("aaaaa"));
        let good = Segment::from_geodesic(&t, &w("aaaaa"), &w("aaaaabbbbb"));
        let c = certify_broken_geodesic(&t, &[s1.clone(), good], &cfg(2, 3)).unwrap();
        assert!(c.is_l_backtracking);
        assert_eq!(c.k, Some(q_int(1)));
        let bad = Segment::from_geodesic(&t, &w("aaaaa"), &w("aabbbbb"));
        let c = certify_broken_geodesic(&t, &[s1.clone(), bad], &cfg(2, 3)).unwrap();
        assert!(!c.is_l_backtracking);
        let short = Segment::from_geodesic(&t, &w("aaaaa"), &w("aaaaab"));
        assert!(matches!(
            certify_broken_geodesic(&t, &[s1, short], &cfg(2, 3)),
            Err(Error::SegmentTooShort { index: 1, .. })
        ));
    }

    #[test]
    fn intersection_chained_bound() {
        let t = TreeGraph::default();
        let g = Segment::from_geodesic(&t, &w("aaaaaa"), &w("e"));
        let cands = vec![
            Candidate { gamma: w("aaaaab"), path: 0, product: q_int(4) },
            Candidate { gamma: w("aaaaaB"), path: 1, product: q_int(4) },
        ];
        let r = backtrack_intersection_certificate(&t, &g, &cands, &cfg(5, 3)).unwrap();
        assert_eq!(r.backtracking, vec![5, 5]);
        assert_eq!(r.assertions, vec![(0, 1)]);
        assert_eq!(r.chained_bound, q_int(3));
        let low = vec![Candidate { gamma: w("a"), path: 0, product: q_int(2) }];
        assert!(matches!(
            backtrack_intersection_certificate(&t, &g, &low, &cfg(5, 3)),
            Err(Error::EvidenceBelowB { .. })
        ));
    }

    #[test]
    fn visual_formula() {
        let c = cfg(1, 1);
        let v = visual_from_products(HalfInt::from_int(3), Some(HalfInt::from_int(3)), &c);
        let e = (-3.0f64).exp();
        assert!(v.lo <= e && e <= v.hi && v.hi - v.lo < 1e-12);
    }

    #[test]
    fn calibrated_tree_config() {
        let c = CertificateConfig::calibrated(HalfInt::ZERO, 2, q_int(3));
        assert_eq!(c.big_l, 8);
        c.validate().unwrap();
    }
}
