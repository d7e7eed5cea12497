//! Limit points of `G`: certified samples, bridges between chains of
//! vertices, and fans spanned by two rays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{in_symmetry_set, ConnectionPoint, MarkovFixture, MarkovGraphs};
use crate::error::{Error, Result};
use crate::hypgraph::certify::{certify_broken_geodesic, BrokenGeodesicCertificate};
use crate::hypgraph::{gromov_product, BoundaryApprox, CertificateConfig, ExactGraph, Segment, TreeGraph};
use crate::mcg::SyntheticClass;
use crate::numeric::{fmt_q, HalfInt, Q};
use crate::word::Word;

impl MarkovFixture {
    /// Certificate constants for the tree with this fixture's `l`.
    pub fn certificate_config(&self, b: Q) -> CertificateConfig {
        CertificateConfig::calibrated(HalfInt::ZERO, self.config.l, b)
    }
}

/// Slack `c = l + 4δ` between a vertex's distance and the products it
/// certifies along an `l`-backtracking chain.
fn pivot_slack(config: &CertificateConfig) -> HalfInt {
    HalfInt::from_int(config.l as i64) + HalfInt::from_halves(4 * config.delta.halves())
}

/// Certifies the vertex sequence `α0 → W1 α0 → W2 α0 → ...` as a broken
/// geodesic and attaches Cauchy tail bounds `d(α0, Wk α0) - c`, checked
/// exactly against every later product.
pub(crate) fn certify_orbit(words: &[Word], config: &CertificateConfig) -> Result<(BoundaryApprox<Word>, BrokenGeodesicCertificate, usize)> {
    let g = TreeGraph::default();
    let e = Word::identity();
    let mut segments = Vec::with_capacity(words.len());
    let mut prev = &e;
    for w in words {
        segments.push(Segment::new(g.geodesic(prev, w))?);
        prev = w;
    }
    let cert = certify_broken_geodesic(&g, &segments, config)?;
    if !cert.is_l_backtracking {
        return Err(Error::Verification(format!("orbit backtracks {:?}", cert.backtracking)));
    }
    let slack = pivot_slack(config);
    let tail_bounds: Vec<HalfInt> =
        words.iter().map(|w| (HalfInt::from_int(g.distance(&e, w) as i64) - slack).max0()).collect();
    let mut checked = 0;
    for k in 0..words.len() {
        for m in k + 1..words.len() {
            checked += 1;
            if gromov_product(&g, &words[k], &words[m], &e) < tail_bounds[k] {
                return Err(Error::Verification(format!("tail bound fails at ({k}, {m})")));
            }
        }
    }
    let approx = BoundaryApprox { basepoint: e, vertices: words.to_vec(), tail_bounds, label: None };
    approx.validate()?;
    Ok((approx, cert, checked))
}

fn prefix_products<'a>(classes: impl IntoIterator<Item = &'a SyntheticClass>) -> Vec<SyntheticClass> {
    let mut acc = SyntheticClass::identity();
    classes
        .into_iter()
        .map(|c| {
            acc = acc.compose(c);
            acc.clone()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSample {
    pub vertices: Vec<usize>,
    /// Model path of each step.
    pub witnesses: Vec<usize>,
    pub classes: Vec<SyntheticClass>,
    /// Approximants `φ1⋯φk α0` with their tail bounds.
    pub approx: BoundaryApprox<Word>,
    pub certificate: BrokenGeodesicCertificate,
    pub products_checked: usize,
}

/// A seeded random walk of `steps` edges in `G` from `start`, read as the
/// boundary point `lim φ1⋯φk α0`.
pub fn sample_limit(
    gr: &MarkovGraphs,
    start: usize,
    steps: usize,
    seed: u64,
    config: &CertificateConfig,
) -> Result<LimitSample> {
    if start >= gr.vertices.len() {
        return Err(Error::NotFound(format!("vertex {start}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = vec![start];
    let mut witnesses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let v = *vertices.last().unwrap();
        let ch = &gr.children[v];
        if ch.is_empty() {
            return Err(Error::DeadEnd(v));
        }
        let p = ch[rng.gen_range(0..ch.len())] as usize;
        let data = &gr.path_data[p];
        witnesses.push(p);
        vertices.push(data[rng.gen_range(0..data.len())]);
    }
    let classes: Vec<SyntheticClass> = vertices.iter().map(|&v| gr.vertices[v].class.clone()).collect();
    let words: Vec<Word> = prefix_products(&classes).into_iter().map(|c| c.word).collect();
    let (approx, certificate, products_checked) = certify_orbit(&words, config)?;
    Ok(LimitSample { vertices, witnesses, classes, approx, certificate, products_checked })
}

/// Face symmetries `θi = φ(i+1)⁻¹ φi` of a chain, checking that each lies in
/// the symmetry set and carries the end face of one datum to the start face
/// of the next.
pub fn chain_thetas(gr: &MarkovGraphs, chain: &[usize]) -> Result<Vec<SyntheticClass>> {
    chain
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a, b) = (&gr.vertices[w[0]], &gr.vertices[w[1]]);
            let theta = b.class.inverse().compose(&a.class);
            if !in_symmetry_set(&theta) || b.faces[0] != theta.act_face(a.faces[1]) {
                return Err(Error::Hypothesis(format!("chain link {i} is not left-to-right")));
            }
            Ok(theta)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Bridge {
    pub chain: Vec<usize>,
    pub thetas: Vec<SyntheticClass>,
    pub start_target: usize,
    pub end_target: usize,
    pub start_path: usize,
    pub end_path: usize,
    /// `𝔭0, ..., 𝔭r`, one per chain vertex.
    pub paths: Vec<usize>,
}

fn witness_for(gr: &MarkovGraphs, v: usize, target: usize) -> Result<usize> {
    gr.g_edge(v, target).ok_or_else(|| Error::Hypothesis(format!("vertex {target} is not a G-successor of {v}")))
}

/// Model paths joining a chain of vertices to prescribed successors of its
/// two ends.
///
/// Paths are chosen greedily from the start: each continues from the image
/// of the previous endpoint, keeps the previous endpoint index when that is
/// admissible and otherwise takes the lowest admissible index. The last
/// choice must also reach the endpoint of the end path.
pub fn bridge(fx: &MarkovFixture, gr: &MarkovGraphs, chain: &[usize], s: usize, e: usize) -> Result<Bridge> {
    let (&v0, &vr) = match (chain.first(), chain.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyFamily),
    };
    let thetas = chain_thetas(gr, chain)?;
    let start_path = witness_for(gr, v0, s)?;
    let end_path = witness_for(gr, vr, e)?;
    let (ps, pe) = (&fx.paths[start_path], &fx.paths[end_path]);
    let r = chain.len() - 1;
    let mut paths = Vec::with_capacity(chain.len());
    if r == 0 {
        let found = [fx.path_id(ps.start, pe.end), Some(start_path), Some(end_path)]
            .into_iter()
            .flatten()
            .find(|&p| gr.has_child(v0, p) && fx.paths[p].shares_endpoint(ps) && fx.paths[p].shares_endpoint(pe))
            .ok_or(Error::DeadEnd(0))?;
        paths.push(found);
    } else {
        let n = fx.n() as u32;
        let mut x = ps.start;
        let mut pref = ps.end.index;
        for i in 0..r {
            let v = chain[i];
            let face = gr.vertices[v].faces[1];
            let order = std::iter::once(pref).chain((0..n).filter(|&k| k != pref));
            let (p, z) = order
                .filter_map(|k| {
                    let y = ConnectionPoint { face, index: k };
                    let p = fx.path_id(x, y).filter(|&p| gr.has_child(v, p))?;
                    let z = y.act(&thetas[i]);
                    let ok = if i + 1 < r {
                        gr.good_for(chain[i + 1], z)
                    } else {
                        fx.path_id(z, pe.end).is_some_and(|q| gr.has_child(vr, q))
                    };
                    ok.then_some((p, z))
                })
                .next()
                .ok_or(Error::DeadEnd(i))?;
            paths.push(p);
            x = z;
            pref = fx.paths[p].end.index;
        }
        paths.push(fx.path_id(x, pe.end).ok_or(Error::DeadEnd(r))?);
    }
    let b = Bridge { chain: chain.to_vec(), thetas, start_target: s, end_target: e, start_path, end_path, paths };
    verify_bridge(fx, gr, &b)?;
    Ok(b)
}

/// Replays every conclusion of a bridge.
pub fn verify_bridge(fx: &MarkovFixture, gr: &MarkovGraphs, b: &Bridge) -> Result<()> {
    let fail = |m: String| Err(Error::Verification(m));
    if b.paths.len() != b.chain.len() {
        return fail("one path per chain vertex".into());
    }
    for (i, (&v, &p)) in b.chain.iter().zip(&b.paths).enumerate() {
        let faces = gr.vertices[v].faces;
        let path = &fx.paths[p];
        if !gr.has_child(v, p) || [path.start.face, path.end.face] != faces {
            return fail(format!("path {i} is not a G'' edge of its vertex"));
        }
        if i > 0 && path.start != fx.paths[b.paths[i - 1]].end.act(&b.thetas[i - 1]) {
            return fail(format!("path {i} does not continue from the previous endpoint"));
        }
    }
    let ends = [
        (b.chain[0], b.start_path, b.start_target, b.paths[0]),
        (*b.chain.last().unwrap(), b.end_path, b.end_target, *b.paths.last().unwrap()),
    ];
    for (v, q, target, p) in ends {
        if !gr.has_child(v, q) || !gr.path_data[q].contains(&target) || !fx.paths[q].shares_endpoint(&fx.paths[p]) {
            return fail(format!("end path {q} does not attach to vertex {v}"));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainedPackages {
    /// The data `ψ0, ..., ψq` as vertex ids.
    pub data: Vec<usize>,
    /// Package size contributed by each bridge path.
    pub sizes: Vec<usize>,
    /// Links `j` where `ψ(j+1)⁻¹ ψj` fails to be a face symmetry matching
    /// the faces.
    pub junction_failures: Vec<usize>,
    pub contains_targets: bool,
}

impl ChainedPackages {
    pub fn ok(&self) -> bool {
        self.junction_failures.is_empty() && self.contains_targets && self.sizes.iter().all(|&d| d > 0)
    }
}

/// Concatenates the packages of a bridge and checks the left-to-right
/// relations across every link.
pub fn chain_packages(gr: &MarkovGraphs, b: &Bridge) -> ChainedPackages {
    let data: Vec<usize> = b.paths.iter().flat_map(|&p| gr.path_data[p].iter().copied()).collect();
    let sizes = b.paths.iter().map(|&p| gr.path_data[p].len()).collect();
    let junction_failures = (0..data.len().saturating_sub(1))
        .filter(|&j| chain_thetas(gr, &data[j..j + 2]).is_err())
        .collect();
    let contains_targets = data.contains(&b.start_target) && data.contains(&b.end_target);
    ChainedPackages { data, sizes, junction_failures, contains_targets }
}

/// Two rays from `start` through the same diagonal model paths, one taking
/// the untwisted datum at every step and the other the twisted one.
///
/// The tree's boundary is totally disconnected, so two rays can only span a
/// fan when their limits agree; twins are the rays that do this.
pub fn twin_rays(fx: &MarkovFixture, gr: &MarkovGraphs, start: usize, depth: usize) -> Result<[Vec<usize>; 2]> {
    let mut rays = [vec![start], vec![start]];
    let mut v = start;
    for _ in 0..depth {
        let [a, b] = gr.vertices[v].faces;
        let p = (0..fx.n() as u32)
            .filter_map(|k| fx.path_id(ConnectionPoint { face: a, index: k }, ConnectionPoint { face: b, index: k }))
            .find(|&p| gr.has_child(v, p))
            .ok_or(Error::DeadEnd(v))?;
        let data = &gr.path_data[p];
        rays[0].push(data[0]);
        rays[1].push(*data.last().unwrap());
        v = data[0];
    }
    Ok(rays)
}

#[derive(Clone, Debug, Serialize)]
pub struct FanLevel {
    pub row: Vec<usize>,
    /// Index in the previous row of each entry's parent.
    pub parent: Vec<usize>,
    /// Model path each entry was reached through.
    pub witness: Vec<usize>,
    /// Bridge that produced this row.
    pub bridge: Option<Bridge>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fan {
    pub rays: [Vec<usize>; 2],
    pub levels: Vec<FanLevel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FanReport {
    pub endpoints: bool,
    pub left_to_right: bool,
    pub refinement: bool,
    pub paths: bool,
}

impl FanReport {
    pub fn ok(&self) -> bool {
        self.endpoints && self.left_to_right && self.refinement && self.paths
    }
}

/// Builds rows level by level: each row is bridged to the next vertices of
/// the two rays and the concatenated packages form the next row.
pub fn build_fan(fx: &MarkovFixture, gr: &MarkovGraphs, c0: &[usize], c1: &[usize]) -> Result<Fan> {
    if c0.is_empty() || c0.len() != c1.len() || c0[0] != c1[0] {
        return Err(Error::Hypothesis("rays must have equal length and a common start".into()));
    }
    for ray in [c0, c1] {
        if let Some(i) = ray.windows(2).position(|w| gr.g_edge(w[0], w[1]).is_none()) {
            return Err(Error::Hypothesis(format!("ray step {i} is not an edge of G")));
        }
    }
    let mut levels =
        vec![FanLevel { row: vec![c0[0]], parent: vec![0], witness: vec![usize::MAX], bridge: None }];
    for n in 0..c0.len() - 1 {
        let row = &levels[n].row;
        let b = bridge(fx, gr, row, c0[n + 1], c1[n + 1])?;
        let chained = chain_packages(gr, &b);
        if !chained.ok() {
            return Err(Error::Hypothesis(format!(
                "packages at level {} are not left-to-right at links {:?}",
                n + 1,
                chained.junction_failures
            )));
        }
        let (first, last) = (chained.data[0], *chained.data.last().unwrap());
        if first != c0[n + 1] || last != c1[n + 1] {
            return Err(Error::Hypothesis(format!("rays do not bound row {}", n + 1)));
        }
        let mut parent = Vec::new();
        let mut witness = Vec::new();
        for (i, (&p, &d)) in b.paths.iter().zip(&chained.sizes).enumerate() {
            parent.extend(std::iter::repeat_n(i, d));
            witness.extend(std::iter::repeat_n(p, d));
        }
        levels.push(FanLevel { row: chained.data, parent, witness, bridge: Some(b) });
    }
    let fan = Fan { rays: [c0.to_vec(), c1.to_vec()], levels };
    let rep = verify_fan(fx, gr, &fan);
    if !rep.ok() {
        return Err(Error::Verification(format!("fan properties fail: {rep:?}")));
    }
    Ok(fan)
}

/// Checks the four defining properties of a fan from its rows alone.
pub fn verify_fan(fx: &MarkovFixture, gr: &MarkovGraphs, fan: &Fan) -> FanReport {
    let levels = &fan.levels;
    let endpoints = levels.len() == fan.rays[0].len()
        && levels.iter().enumerate().all(|(n, lv)| {
            lv.row.first() == Some(&fan.rays[0][n]) && lv.row.last() == Some(&fan.rays[1][n])
        });
    let left_to_right = levels.iter().all(|lv| chain_thetas(gr, &lv.row).is_ok());
    let refinement = levels.windows(2).all(|w| {
        let (prev, cur) = (&w[0], &w[1]);
        let monotone = cur.parent.windows(2).all(|p| p[1] == p[0] || p[1] == p[0] + 1);
        let covers = cur.parent.first() == Some(&0) && cur.parent.last() == Some(&(prev.row.len() - 1));
        let edges = cur.row.iter().zip(&cur.parent).zip(&cur.witness).all(|((&v, &pi), &p)| {
            gr.has_child(prev.row[pi], p) && gr.path_data[p].contains(&v)
        });
        monotone && covers && edges
    });
    let paths = levels.iter().filter_map(|lv| lv.bridge.as_ref()).all(|b| verify_bridge(fx, gr, b).is_ok());
    FanReport { endpoints, left_to_right, refinement, paths }
}

#[derive(Clone, Debug, Serialize)]
pub struct FanPoint {
    pub t: String,
    /// Index of the piece of row `n0` containing `t`.
    pub piece: usize,
    pub approx: BoundaryApprox<Word>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FanLimit {
    pub b: String,
    /// Level beyond which all products on a piece exceed `b`.
    pub n0: usize,
    pub points: Vec<FanPoint>,
    pub pairs_checked: usize,
    pub min_product: Option<HalfInt>,
}

fn row_index(t: &Q, len: usize) -> usize {
    let k = (t * Q::from_integer(len.into())).floor().to_integer();
    let k: usize = k.try_into().unwrap_or(usize::MAX);
    k.min(len - 1)
}

/// The limit path `t ↦ lim Ψ(n)_{j_n(t)} α0` on a grid of parameters, with
/// the level `n0` after which points on the same piece stay `b`-close.
pub fn fan_limit_path(gr: &MarkovGraphs, fan: &Fan, grid: &[Q], config: &CertificateConfig) -> Result<FanLimit> {
    let zero = Q::from_integer(0.into());
    let one = Q::from_integer(1.into());
    if let Some(t) = grid.iter().find(|t| **t < zero || **t > one) {
        return Err(Error::Invalid(format!("parameter {} outside [0, 1]", fmt_q(t))));
    }
    let mut psi: Vec<Vec<SyntheticClass>> = Vec::with_capacity(fan.levels.len());
    for (n, lv) in fan.levels.iter().enumerate() {
        let row = lv
            .row
            .iter()
            .zip(&lv.parent)
            .map(|(&v, &pi)| {
                let c = &gr.vertices[v].class;
                if n == 0 {
                    c.clone()
                } else {
                    psi[n - 1][pi].compose(c)
                }
            })
            .collect();
        psi.push(row);
    }
    let depth = fan.levels.len() - 1;
    let indices = |t: &Q| -> Result<Vec<usize>> {
        let idx: Vec<usize> = fan.levels.iter().map(|lv| row_index(t, lv.row.len())).collect();
        for n in 1..idx.len() {
            if fan.levels[n].parent[idx[n]] != idx[n - 1] {
                return Err(Error::Integrity(format!("row pieces are not nested at level {n}")));
            }
        }
        Ok(idx)
    };
    let mut orbits = Vec::with_capacity(grid.len());
    let mut n0 = 0;
    for t in grid {
        let idx = indices(t)?;
        let words: Vec<Word> = idx.iter().enumerate().map(|(n, &j)| psi[n][j].word.clone()).collect();
        let (approx, _, _) = certify_orbit(&words, config)?;
        let first = approx.tail_bounds.iter().position(|lb| lb.to_q() > config.b).ok_or(Error::DepthExhausted)?;
        n0 = n0.max(first);
        orbits.push((idx, approx));
    }
    let g = TreeGraph::default();
    let e = Word::identity();
    let mut pairs_checked = 0;
    let mut min_product: Option<HalfInt> = None;
    for (it, (ti, at)) in orbits.iter().enumerate() {
        for (is, (si, as_)) in orbits.iter().enumerate() {
            if ti[n0] != si[n0] {
                continue;
            }
            for n in n0..=depth {
                for m in n0..=depth {
                    let p = gromov_product(&g, &at.vertices[n], &as_.vertices[m], &e);
                    pairs_checked += 1;
                    min_product = Some(min_product.map_or(p, |q| q.min(p)));
                    if p.to_q() <= config.b {
                        return Err(Error::Verification(format!(
                            "points {it} and {is} are not close at levels ({n}, {m})"
                        )));
                    }
                }
            }
        }
    }
    let points = grid
        .iter()
        .zip(orbits)
        .map(|(t, (idx, approx))| FanPoint { t: fmt_q(t), piece: idx[n0], approx })
        .collect();
    Ok(FanLimit { b: fmt_q(&config.b), n0, points, pairs_checked, min_product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_graphs, MarkovConfig};
    use crate::numeric::{q_frac, q_int};

    fn small() -> (MarkovFixture, MarkovGraphs) {
        let fx = MarkovFixture::generate(&MarkovConfig::small()).unwrap();
        let gr = build_graphs(&fx).unwrap();
        (fx, gr)
    }

    #[test]
    fn sampled_limits_are_certified() {
        let (fx, gr) = small();
        let cfg = fx.certificate_config(q_int(10));
        let s = sample_limit(&gr, 0, 12, 3, &cfg).unwrap();
        assert!(s.certificate.is_l_backtracking);
        assert_eq!(s.vertices.len(), 13);
        assert!(s.approx.tail_bounds.last().unwrap().to_q() > q_int(100));
    }

    #[test]
    fn twin_fan_at_depth_four() {
        let (fx, gr) = small();
        let [c0, c1] = twin_rays(&fx, &gr, 0, 4).unwrap();
        let fan = build_fan(&fx, &gr, &c0, &c1).unwrap();
        assert_eq!(fan.levels.iter().map(|l| l.row.len()).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16]);
        assert!(verify_fan(&fx, &gr, &fan).ok());
        let grid: Vec<Q> = (0..=8).map(|k| q_frac(k, 8)).collect();
        let lim = fan_limit_path(&gr, &fan, &grid, &fx.certificate_config(q_int(20))).unwrap();
        assert!(lim.n0 <= 4);
        assert!(lim.pairs_checked > 0);
    }

    #[test]
    fn bridge_refuses_non_successors() {
        let (fx, gr) = small();
        let far = (0..gr.vertices.len()).find(|&w| gr.g_edge(0, w).is_none()).unwrap();
        assert!(matches!(bridge(&fx, &gr, &[0], far, far), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn bridge_over_a_twin_chain() {
        let (fx, gr) = small();
        let [c0, c1] = twin_rays(&fx, &gr, 0, 2).unwrap();
        let chain = vec![c0[1], c1[1], c0[1]];
        let b = bridge(&fx, &gr, &chain, c0[2], c1[2]).unwrap();
        assert_eq!(b.paths.len(), 3);
        assert!(chain_packages(&gr, &b).ok());
    }
}
