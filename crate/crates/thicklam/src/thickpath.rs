//! Thick paths built level by level: connection points, model paths with
//! minimal intersection, end refinements, level sequences and their
//! admissible limits.
//!
//! The combinatorics run in the synthetic twisted free group world of
//! [`crate::markov`]. Two derived tracks share a subtrack exactly when their
//! classes differ by a face symmetry, so every row of a level sequence carries
//! one word and the two endpoint sequences are twins.

use std::collections::HashSet;
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgraph::certify::{visual_from_products, BrokenGeodesicCertificate};
use crate::hypgraph::{gromov_product, BoundaryApprox, CertificateConfig, ExactGraph, TreeGraph};
use crate::markov::fan::certify_orbit;
use crate::markov::{connection_points, in_symmetry_set, is_pip, is_pip_oracle, ConnectionPoint, MarkovConfig, MarkovFixture};
use crate::mcg::SyntheticClass;
use crate::numeric::{HalfInt, Q};
use crate::word::{Letter, Word};

/// Connection points per qualifying face.
pub const POINTS_PER_FACE: usize = 6;

/// Chooses six points on every face that carries candidates; faces given as
/// `None` carry none and are skipped.
pub fn connection_points6<T>(candidates: &[Option<Vec<T>>]) -> Result<Vec<Option<Vec<T>>>>
where
    T: Clone + Eq + std::hash::Hash + fmt::Display,
{
    candidates
        .iter()
        .map(|c| match c {
            None => Ok(None),
            Some(pts) => Ok(connection_points(std::slice::from_ref(pts), POINTS_PER_FACE)?.pop()),
        })
        .collect()
}

/// The fixture configuration used by this module: six points per face.
pub fn thick_config(seed: u64) -> MarkovConfig {
    MarkovConfig { connection_points: POINTS_PER_FACE, seed, ..MarkovConfig::default() }
}

// ---------------------------------------------------------------------------
// Minimal intersection at sample resolution

/// A point of the three dimensional chart the sample paths live in.
pub type Chart3 = [Q; 3];

/// A model path sampled as a polyline between two labelled endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePath {
    pub start: usize,
    pub end: usize,
    #[serde(with = "chart_vec")]
    pub samples: Vec<Chart3>,
}

mod chart_vec {
    use super::Chart3;
    use crate::numeric::{fmt_q, parse_q};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Chart3], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|p| p.iter().map(fmt_q).collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Chart3>, D::Error> {
        let raw: Vec<[String; 3]> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|p| {
                let parse = |s: &str| parse_q(s).map_err(serde::de::Error::custom);
                Ok([parse(&p[0])?, parse(&p[1])?, parse(&p[2])?])
            })
            .collect()
    }
}

/// `(t, t², t³)`. No four points of this curve are coplanar, so chords with
/// four distinct endpoints never meet.
pub fn moment_point(t: &Q) -> Chart3 {
    let t2 = t * t;
    let t3 = &t2 * t;
    [t.clone(), t2, t3]
}

/// Straight chords between moment-curve points, each cut into `pieces`
/// segments. `params[i]` places endpoint `i`.
pub fn moment_chords(params: &[Q], pairs: &[(usize, usize)], pieces: usize) -> Vec<SamplePath> {
    let pieces = pieces.max(1);
    pairs
        .iter()
        .map(|&(s, e)| {
            let (p, q) = (moment_point(&params[s]), moment_point(&params[e]));
            let samples = (0..=pieces)
                .map(|k| {
                    let t = Q::new(k.into(), pieces.into());
                    let lerp = |i: usize| &p[i] + (&q[i] - &p[i]) * &t;
                    [lerp(0), lerp(1), lerp(2)]
                })
                .collect();
            SamplePath { start: s, end: e, samples }
        })
        .collect()
}

fn sub(a: &Chart3, b: &Chart3) -> Chart3 {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

fn dot(a: &Chart3, b: &Chart3) -> Q {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

fn cross(a: &Chart3, b: &Chart3) -> Chart3 {
    [&a[1] * &b[2] - &a[2] * &b[1], &a[2] * &b[0] - &a[0] * &b[2], &a[0] * &b[1] - &a[1] * &b[0]]
}

fn along(p: &Chart3, d: &Chart3, s: &Q) -> Chart3 {
    [&p[0] + &d[0] * s, &p[1] + &d[1] * s, &p[2] + &d[2] * s]
}

fn is_zero(v: &Chart3) -> bool {
    v.iter().all(Zero::is_zero)
}

/// How two closed segments meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegmentMeet {
    Disjoint,
    Point(Chart3),
    Overlap,
}

/// Exact intersection of the segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_meet(p0: &Chart3, p1: &Chart3, q0: &Chart3, q1: &Chart3) -> SegmentMeet {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(q0, p0);
    let n = cross(&d1, &d2);
    if !dot(&n, &r).is_zero() {
        return SegmentMeet::Disjoint;
    }
    if is_zero(&n) {
        if !is_zero(&cross(&d1, &r)) {
            return SegmentMeet::Disjoint;
        }
        // Collinear: compare parameter intervals along d1.
        let len2 = dot(&d1, &d1);
        let t0 = dot(&r, &d1) / &len2;
        let t1 = dot(&sub(q1, p0), &d1) / &len2;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let lo = lo.max(Q::zero());
        let hi = hi.min(Q::from_integer(1.into()));
        return match lo.cmp(&hi) {
            std::cmp::Ordering::Greater => SegmentMeet::Disjoint,
            std::cmp::Ordering::Equal => SegmentMeet::Point(along(p0, &d1, &lo)),
            std::cmp::Ordering::Less => SegmentMeet::Overlap,
        };
    }
    let nn = dot(&n, &n);
    let s = dot(&cross(&r, &d2), &n) / &nn;
    let t = dot(&cross(&r, &d1), &n) / &nn;
    let unit = |x: &Q| *x >= Q::zero() && *x <= Q::from_integer(1.into());
    if unit(&s) && unit(&t) {
        SegmentMeet::Point(along(p0, &d1, &s))
    } else {
        SegmentMeet::Disjoint
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionScan {
    pub paths: usize,
    pub pairs_checked: usize,
    pub segment_tests: usize,
    /// Pairs that meet, necessarily at a common endpoint.
    pub endpoint_meetings: usize,
}

/// Verifies that paths without a common endpoint are disjoint and that paths
/// with one meet only there. Any other meeting rejects the family.
pub fn verify_min_intersection(paths: &[SamplePath]) -> Result<IntersectionScan> {
    for (i, p) in paths.iter().enumerate() {
        if p.samples.len() < 2 {
            return Err(Error::Provider(format!("path {i} has fewer than two samples")));
        }
    }
    let pairs: Vec<(usize, usize)> =
        (0..paths.len()).flat_map(|i| (i + 1..paths.len()).map(move |j| (i, j))).collect();
    let results: Vec<Result<(usize, bool)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (&paths[i], &paths[j]);
            let mut shared: Vec<&Chart3> = Vec::new();
            for (a, pa) in [(p.start, p.samples.first()), (p.end, p.samples.last())] {
                for (b, qb) in [(q.start, q.samples.first()), (q.end, q.samples.last())] {
                    if a == b {
                        if pa != qb {
                            return Err(Error::Provider(format!("endpoint {a} placed inconsistently")));
                        }
                        shared.push(pa.expect("checked non-empty"));
                    }
                }
            }
            let mut tests = 0;
            let mut met = false;
            for s in p.samples.windows(2) {
                for t in q.samples.windows(2) {
                    tests += 1;
                    match segment_meet(&s[0], &s[1], &t[0], &t[1]) {
                        SegmentMeet::Disjoint => {}
                        SegmentMeet::Point(x) if shared.contains(&&x) => met = true,
                        other => {
                            return Err(Error::Provider(format!(
                                "paths {i} ({}->{}) and {j} ({}->{}) meet away from a common endpoint: {other:?}",
                                p.start, p.end, q.start, q.end
                            )))
                        }
                    }
                }
            }
            Ok((tests, met))
        })
        .collect();
    let mut scan = IntersectionScan { paths: paths.len(), pairs_checked: pairs.len(), ..Default::default() };
    for r in results {
        let (tests, met) = r?;
        scan.segment_tests += tests;
        scan.endpoint_meetings += met as usize;
    }
    Ok(scan)
}

/// Places the fixture's connection points on the moment curve and samples
/// one chord per unordered endpoint pair; a path and its reverse are the same
/// set. Returns the endpoint labels with the family.
pub fn model_paths_min_intersection(fx: &MarkovFixture, pieces: usize) -> Result<(Vec<ConnectionPoint>, Vec<SamplePath>, IntersectionScan)> {
    let labels: Vec<ConnectionPoint> = (0..2u8).flat_map(|f| fx.points(f)).collect();
    let params: Vec<Q> = (0..labels.len()).map(|i| Q::from_integer((i as i64 + 1).into())).collect();
    let at = |p: ConnectionPoint| p.face as usize * fx.n() + p.index as usize;
    let mut seen = HashSet::new();
    let pairs: Vec<(usize, usize)> = fx
        .paths
        .iter()
        .map(|p| (at(p.start), at(p.end)))
        .filter(|&(s, e)| seen.insert((s.min(e), s.max(e))))
        .collect();
    let family = moment_chords(&params, &pairs, pieces);
    let scan = verify_min_intersection(&family)?;
    Ok((labels, family, scan))
}

// ---------------------------------------------------------------------------
// End refinement

/// A connection point of the track `at·model`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacedPoint {
    pub at: Word,
    pub point: ConnectionPoint,
}

impl fmt::Display for PlacedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.at.is_empty() {
            write!(f, "{}", self.point)
        } else {
            write!(f, "{}.{}", self.at, self.point)
        }
    }
}

/// One piece `φ_i·p_i` of an end refinement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementPiece {
    pub phi: SyntheticClass,
    /// Model path id; the split letter only relabels its far endpoint.
    pub path: usize,
    pub start: ConnectionPoint,
    pub end: PlacedPoint,
    /// Start points excluded by backtracking against `ψ·φ_i`.
    pub excluded_start: Vec<ConnectionPoint>,
    /// End points excluded likewise; path words do not depend on their end.
    pub excluded_end: Vec<ConnectionPoint>,
    /// Backtracking of each package class against `ψ·φ_i`, from the oracle.
    pub backtracking: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndRefinement {
    pub psi: SyntheticClass,
    pub splits: Word,
    pub k1: usize,
    pub pieces: Vec<RefinementPiece>,
}

impl EndRefinement {
    /// Classes of the concatenated package, in order.
    pub fn package(&self, fx: &MarkovFixture) -> Vec<SyntheticClass> {
        self.pieces
            .iter()
            .flat_map(|p| fx.paths[p.path].package().map(|d| p.phi.compose(&d.class)))
            .collect()
    }

    /// The start of the refinement and the image `f(y)` of its far endpoint.
    pub fn endpoints(&self) -> (ConnectionPoint, PlacedPoint) {
        let first = &self.pieces[0];
        let last = self.pieces.last().expect("at least one piece");
        (first.start, PlacedPoint { at: last.phi.word.mul(&last.end.at), point: last.end.point })
    }
}

/// Start points `x` on `face` whose path words backtrack at least `l`
/// against `ψ·φ`: their code cancels against the tail of `ψ·φ`.
fn excluded_starts(fx: &MarkovFixture, psi_phi: &Word, face: u8) -> Vec<ConnectionPoint> {
    let l = fx.config.l as usize;
    fx.points(face).filter(|x| psi_phi.cancellation(&fx.codes[x.face as usize][x.index as usize]) >= l).collect()
}

fn oracle_backtracking(a: &Word, b: &Word) -> Result<usize> {
    let g = TreeGraph::default();
    let e = Word::identity();
    let ab = a.mul(b);
    // The tree has δ = 0, so backtracking is the Gromov product at the pivot.
    let back = gromov_product(&g, &e, &ab, a);
    Ok(back.to_q().to_integer().to_usize().unwrap_or(0).min(g.distance(&e, a) as usize))
}

/// Concatenates images of model paths along the splitting sequence given by
/// `splits`: `φ_1 = id`, `φ_{i+1} = φ_i·s_i` and `φ_n = f`. Piece `i` runs
/// from `x_i` on the model to `s_i·x_{i+1}` on the single split `s_i·model`,
/// so consecutive images share their endpoints. Intermediate starts avoid
/// the points excluded by `ψ·φ_i`.
pub fn end_partial_refinement(
    fx: &MarkovFixture,
    psi: &SyntheticClass,
    splits: &Word,
    x: ConnectionPoint,
    y: ConnectionPoint,
) -> Result<EndRefinement> {
    let n = splits.len() + 1;
    let l = fx.config.l;
    // Faces alternate along the chain, so the last piece ends on face
    // `x.face + n` and must match y.
    let last_start_face = (x.face as usize + n - 1) % 2;
    if y.face as usize != 1 - last_start_face {
        return Err(Error::Hypothesis(format!("{n} pieces from face {} cannot end on face {}", x.face, y.face)));
    }
    let phis: Vec<SyntheticClass> = (0..n).map(|i| SyntheticClass::new(splits.prefix(i), 0)).collect();
    let mut starts = Vec::with_capacity(n);
    let mut excluded = Vec::with_capacity(n);
    for (i, phi) in phis.iter().enumerate() {
        let face = ((x.face as usize + i) % 2) as u8;
        let psi_phi = psi.word.mul(&phi.word);
        let bad = excluded_starts(fx, &psi_phi, face);
        let choice = if i == 0 {
            if bad.contains(&x) {
                return Err(Error::Hypothesis(format!("start point {x} is excluded by backtracking")));
            }
            x
        } else {
            fx.points(face).find(|p| !bad.contains(p)).ok_or_else(|| {
                Error::Integrity(format!("every point of face {face} excluded at piece {i}"))
            })?
        };
        if bad.len() > 2 {
            return Err(Error::Integrity(format!("{} excluded points at piece {i}", bad.len())));
        }
        starts.push(choice);
        excluded.push(bad);
    }
    let mut pieces = Vec::with_capacity(n);
    for i in 0..n {
        let (far, at) = if i + 1 < n {
            (starts[i + 1], Word::from_letters([splits.letters()[i]]))
        } else {
            (y, Word::identity())
        };
        let path = fx
            .path_id(starts[i], far)
            .ok_or_else(|| Error::Integrity(format!("no model path {} -> {far}", starts[i])))?;
        let psi_phi = psi.word.mul(&phis[i].word);
        let mut backtracking = Vec::new();
        for d in fx.paths[path].package() {
            let b = oracle_backtracking(&psi_phi, &d.class.word)?;
            if b as u64 >= l || !is_pip_oracle(&d.class, &SyntheticClass::new(psi_phi.clone(), 0), l)? {
                return Err(Error::Verification(format!("piece {i} backtracks {b} against psi.phi")));
            }
            backtracking.push(b);
        }
        pieces.push(RefinementPiece {
            phi: phis[i].clone(),
            path,
            start: starts[i],
            end: PlacedPoint { at, point: far },
            excluded_start: excluded[i].clone(),
            excluded_end: Vec::new(),
            backtracking,
        });
    }
    let k1 = phis.iter().map(|p| p.word.len()).max().unwrap_or(0);
    let out = EndRefinement { psi: psi.clone(), splits: splits.clone(), k1, pieces };
    verify_end_refinement(fx, &out)?;
    Ok(out)
}

/// Replays an end refinement piece by piece: `φ_1 = id`, `φ_n = f`, norms at
/// most `K1`, matching endpoints and the backtracking bound.
pub fn verify_end_refinement(fx: &MarkovFixture, r: &EndRefinement) -> Result<()> {
    let fail = |m: String| Err(Error::Verification(m));
    let n = r.pieces.len();
    if n != r.splits.len() + 1 || r.pieces[0].phi != SyntheticClass::identity() {
        return fail("first class must be the identity".into());
    }
    if r.pieces[n - 1].phi != SyntheticClass::new(r.splits.clone(), 0) {
        return fail("last class must be the splitting class".into());
    }
    for (i, p) in r.pieces.iter().enumerate() {
        if p.phi.word.len() > r.k1 {
            return fail(format!("piece {i} exceeds K1"));
        }
        let mp = &fx.paths[p.path];
        if mp.start != p.start || mp.end != p.end.point {
            return fail(format!("piece {i} does not follow its model path"));
        }
        if let Some(q) = r.pieces.get(i + 1) {
            // φ_i·(s_i·x_{i+1}) = φ_{i+1}·x_{i+1}.
            if p.phi.word.mul(&p.end.at) != q.phi.word || p.end.point != q.start {
                return fail(format!("pieces {i} and {} do not concatenate", i + 1));
            }
        }
        let psi_phi = SyntheticClass::new(r.psi.word.mul(&p.phi.word), 0);
        if !mp.package().iter().all(|d| is_pip(&d.class, &psi_phi, fx.config.l)) {
            return fail(format!("piece {i} backtracks against psi.phi"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Level sequences

/// The splitting sequences `Ψ^(1)_n = (W_n, 0)` and `Ψ^(2)_n = (W_n, 1)` of
/// the two endpoints, grown one model path at a time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointSequences {
    /// `W_0 = e, W_1, ...`.
    pub words: Vec<Word>,
    /// The model path appended at each step.
    pub pieces: Vec<usize>,
}

impl EndpointSequences {
    pub fn depth(&self) -> usize {
        self.pieces.len()
    }

    /// `Ψ^(k)_n` for `k ∈ {0, 1}`.
    pub fn psi(&self, k: u8, n: usize) -> SyntheticClass {
        SyntheticClass::new(self.words[n].clone(), k)
    }
}

/// Grows the endpoint words by the lowest numbered model paths that do not
/// backtrack against what is already there; consecutive pieces cycle through
/// the fixture so the endpoints are not eventually periodic with short period.
pub fn endpoint_sequences(fx: &MarkovFixture, depth: usize) -> Result<EndpointSequences> {
    let l = fx.config.l;
    let mut words = vec![Word::identity()];
    let mut pieces = Vec::with_capacity(depth);
    let mut cursor = 0;
    for n in 0..depth {
        let w = &words[n];
        let found = (0..fx.paths.len())
            .map(|k| (cursor + k) % fx.paths.len())
            .find(|&id| is_pip(&SyntheticClass::new(fx.paths[id].word.clone(), 0), &SyntheticClass::new(w.clone(), 0), l))
            .ok_or(Error::DeadEnd(n))?;
        cursor = (found * 7 + 5) % fx.paths.len();
        words.push(w.mul(&fx.paths[found].word));
        pieces.push(found);
    }
    Ok(EndpointSequences { words, pieces })
}

/// How an entry of a level arises from its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementCase {
    /// Level zero: no parent.
    Root,
    /// An endpoint class `Ψ^(k)_{n+1}`.
    A,
    /// Inside the first or last interval: a short class `Υ`.
    B,
    /// Interior: a class from the package of a model path.
    C,
}

impl RefinementCase {
    pub fn tag(self) -> char {
        match self {
            RefinementCase::Root => '-',
            RefinementCase::A => 'a',
            RefinementCase::B => 'b',
            RefinementCase::C => 'c',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSequence {
    pub level: usize,
    /// `Φ^(n)_i`; the derived tracks are `Φ^(n)_i·model`.
    pub classes: Vec<SyntheticClass>,
    /// Index of each entry's interval in the previous level.
    pub parent: Vec<usize>,
    /// `Φ^(n)_i = Φ^(n-1)_{parent}·increment`.
    pub increments: Vec<SyntheticClass>,
    pub cases: Vec<RefinementCase>,
    /// Model path whose package supplies the increment.
    pub witness: Vec<Option<usize>>,
    /// Bound on the norm of case b) increments.
    pub k1: usize,
}

impl LevelSequence {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// The interval `I_j` of the next level refining entry `j`.
    pub fn interval(next: &LevelSequence, j: usize) -> std::ops::Range<usize> {
        let lo = next.parent.partition_point(|&p| p < j);
        let hi = next.parent.partition_point(|&p| p <= j);
        lo..hi
    }
}

/// Level zero: the model track and its twin.
pub fn initial_level(ends: &EndpointSequences) -> LevelSequence {
    let classes = vec![ends.psi(0, 0), ends.psi(1, 0)];
    LevelSequence {
        level: 0,
        parent: Vec::new(),
        increments: classes.clone(),
        cases: vec![RefinementCase::Root; 2],
        witness: vec![None; 2],
        classes,
        k1: 0,
    }
}

/// Builds level `n + 1` from the concatenation `p₋ * p_1 * ... * p_m * p₊`:
/// the end pieces come from one-piece end refinements and each interior
/// entry contributes the image of the next model path's package, traversed
/// so that its first class matches the entry's twist.
pub fn refine_level(fx: &MarkovFixture, prev: &LevelSequence, ends: &EndpointSequences) -> Result<LevelSequence> {
    let n = prev.level;
    if n >= ends.depth() {
        return Err(Error::DepthExhausted);
    }
    let path = &fx.paths[ends.pieces[n]];
    let m = prev.len();
    // The end pieces as end refinements with a single piece under Φ_1, Φ_m.
    for j in [0, m - 1] {
        let r = end_partial_refinement(fx, &prev.classes[j], &Word::identity(), path.start, path.end)
            .map_err(|e| Error::Hypothesis(format!("end piece at entry {j}: {e}")))?;
        debug_assert_eq!(r.pieces[0].path, path.id);
    }
    let package = path.package();
    let rows: Vec<Vec<(usize, SyntheticClass)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let k = prev.classes[j].twist;
            let order: [usize; 2] = if k == 0 { [0, 1] } else { [1, 0] };
            order.iter().map(|&o| (j, package[o].class.clone())).collect()
        })
        .collect();
    let flat: Vec<(usize, SyntheticClass)> = rows.into_iter().flatten().collect();
    let last = flat.len() - 1;
    let mut next = LevelSequence {
        level: n + 1,
        classes: Vec::with_capacity(flat.len()),
        parent: Vec::with_capacity(flat.len()),
        increments: Vec::with_capacity(flat.len()),
        cases: Vec::with_capacity(flat.len()),
        witness: Vec::with_capacity(flat.len()),
        k1: fx.config.word_len,
    };
    for (i, (j, inc)) in flat.into_iter().enumerate() {
        let case = if i == 0 || i == last {
            RefinementCase::A
        } else if j == 0 || j == m - 1 {
            RefinementCase::B
        } else {
            RefinementCase::C
        };
        next.classes.push(prev.classes[j].compose(&inc));
        next.parent.push(j);
        next.increments.push(inc);
        next.cases.push(case);
        next.witness.push(Some(path.id));
    }
    Ok(next)
}

/// Which level properties hold; each flag is checked exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub entries: usize,
    pub coarse_path: bool,
    pub tracking: bool,
    pub refinement: bool,
    pub no_backtracking: bool,
    pub failures: Vec<String>,
}

impl LevelReport {
    pub fn ok(&self) -> bool {
        self.coarse_path && self.tracking && self.refinement && self.no_backtracking
    }
}

/// Replays the four level properties of `cur` relative to `prev` (absent for
/// level zero).
pub fn verify_level(fx: &MarkovFixture, prev: Option<&LevelSequence>, cur: &LevelSequence, ends: &EndpointSequences) -> Result<LevelReport> {
    let mut failures = Vec::new();
    let m = cur.len();
    let sized = [cur.increments.len(), cur.cases.len(), cur.witness.len()].iter().all(|&k| k == m)
        && (cur.parent.len() == m || cur.level == 0 && cur.parent.is_empty());
    if m < 2 || !sized {
        return Err(Error::Invalid(format!("level {} is malformed", cur.level)));
    }
    // Coarse Path: consecutive tracks share a subtrack.
    let coarse_path = cur.classes.windows(2).enumerate().all(|(i, w)| {
        let ok = in_symmetry_set(&w[1].inverse().compose(&w[0]));
        if !ok {
            failures.push(format!("entries {i} and {} share no subtrack", i + 1));
        }
        ok
    });
    // Tracking: the ends carry the two endpoint sequences.
    let tracking = cur.level <= ends.depth() && cur.classes[0] == ends.psi(0, cur.level) && cur.classes[m - 1] == ends.psi(1, cur.level);
    if !tracking {
        failures.push("end classes do not track the endpoints".into());
    }
    let (refinement, no_backtracking) = match prev {
        None => (cur.level == 0 && cur.cases.iter().all(|&c| c == RefinementCase::Root), true),
        Some(prev) => {
            let pm = prev.len();
            let mut refinement = cur.level == prev.level + 1;
            let mut no_back = true;
            // Intervals partition the level monotonically and cover every parent.
            let monotone = cur.parent.windows(2).all(|w| w[0] <= w[1] && w[1] <= w[0] + 1);
            if !monotone || cur.parent[0] != 0 || cur.parent[m - 1] != pm - 1 {
                refinement = false;
                failures.push("intervals do not partition the level".into());
            }
            for i in 0..m {
                let j = cur.parent[i];
                let parent = &prev.classes[j];
                let inc = &cur.increments[i];
                if parent.compose(inc) != cur.classes[i] {
                    refinement = false;
                    failures.push(format!("entry {i} is not its parent times its increment"));
                }
                let expected = if i == 0 || i == m - 1 {
                    RefinementCase::A
                } else if j == 0 || j == pm - 1 {
                    RefinementCase::B
                } else {
                    RefinementCase::C
                };
                let case_ok = cur.cases[i] == expected
                    && match expected {
                        RefinementCase::A => cur.classes[i] == ends.psi(if i == 0 { 0 } else { 1 }, cur.level),
                        RefinementCase::B => inc.word.len() <= cur.k1,
                        RefinementCase::C => cur.witness[i]
                            .and_then(|w| fx.paths.get(w))
                            .is_some_and(|p| p.package().iter().any(|d| &d.class == inc)),
                        RefinementCase::Root => false,
                    };
                if !case_ok {
                    refinement = false;
                    failures.push(format!("entry {i} breaks case {}", expected.tag()));
                }
                if !is_pip_oracle(inc, parent, fx.config.l)? {
                    no_back = false;
                    failures.push(format!("entry {i} backtracks against its parent"));
                }
            }
            (refinement, no_back)
        }
    };
    Ok(LevelReport { level: cur.level, entries: m, coarse_path, tracking, refinement, no_backtracking, failures })
}

/// Levels `0..=depth`, each replayed as it is built.
pub fn build_levels(fx: &MarkovFixture, ends: &EndpointSequences, depth: usize) -> Result<(Vec<LevelSequence>, Vec<LevelReport>)> {
    let mut levels = vec![initial_level(ends)];
    let mut reports = vec![verify_level(fx, None, &levels[0], ends)?];
    for n in 0..depth {
        let next = refine_level(fx, &levels[n], ends)?;
        reports.push(verify_level(fx, Some(&levels[n]), &next, ends)?);
        levels.push(next);
    }
    Ok((levels, reports))
}

// ---------------------------------------------------------------------------
// Admissible limits

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleSequence {
    /// `j_1, j_2, ...`, one index per level starting at level one.
    pub indices: Vec<usize>,
    /// Case tags along the sequence, e.g. `aabccc`.
    pub cases: String,
    /// Number of leading case a) steps.
    pub n1: usize,
    /// The short class of the single case b) step, if any.
    pub upsilon: Option<SyntheticClass>,
}

fn case_pattern_ok(cases: &str) -> bool {
    let rest = cases.trim_start_matches('a');
    let rest = rest.strip_prefix('b').unwrap_or(rest);
    rest.chars().all(|c| c == 'c')
}

/// Checks `j_{n+1} ∈ J_{j_n}` and records the case pattern.
pub fn admissible_sequence(levels: &[LevelSequence], indices: &[usize]) -> Result<AdmissibleSequence> {
    if indices.is_empty() || indices.len() >= levels.len() {
        return Err(Error::Invalid(format!("{} indices for {} levels", indices.len(), levels.len())));
    }
    let mut cases = String::new();
    let mut upsilon = None;
    for (k, &j) in indices.iter().enumerate() {
        let lev = &levels[k + 1];
        if j >= lev.len() {
            return Err(Error::Invalid(format!("index {j} out of range at level {}", k + 1)));
        }
        if k > 0 && lev.parent[j] != indices[k - 1] {
            return Err(Error::Invalid(format!("index {j} at level {} is not in the interval of {}", k + 1, indices[k - 1])));
        }
        if k == 0 && lev.parent[j] >= levels[0].len() {
            return Err(Error::Invalid("bad first index".into()));
        }
        let c = lev.cases[j];
        if c == RefinementCase::B {
            upsilon = Some(lev.increments[j].clone());
        }
        cases.push(c.tag());
    }
    if !case_pattern_ok(&cases) {
        return Err(Error::Verification(format!("case pattern {cases} is not a* b? c*")));
    }
    if let Some(u) = &upsilon {
        if u.word.len() > levels[1].k1 {
            return Err(Error::Verification("short class exceeds its bound".into()));
        }
    }
    let n1 = cases.chars().take_while(|&c| c == 'a').count();
    Ok(AdmissibleSequence { indices: indices.to_vec(), cases, n1, upsilon })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleLimit {
    pub sequence: AdmissibleSequence,
    pub approx: BoundaryApprox<Word>,
    pub certificate: BrokenGeodesicCertificate,
    pub products_checked: usize,
}

/// Certifies the curves `Φ^(1)_{j_1} α0, Φ^(2)_{j_2} α0, ...` as a
/// broken geodesic with Cauchy tail bounds. The classes are cumulative, so
/// the increments along the sequence telescope to them.
pub fn admissible_limit(levels: &[LevelSequence], seq: &AdmissibleSequence, config: &CertificateConfig) -> Result<AdmissibleLimit> {
    let words: Vec<Word> = seq.indices.iter().enumerate().map(|(k, &j)| levels[k + 1].classes[j].word.clone()).collect();
    let (approx, certificate, products_checked) = certify_orbit(&words, config).map_err(|e| match e {
        Error::Verification(m) => Error::Verification(format!("certificate stalls: {m}")),
        e => e,
    })?;
    Ok(AdmissibleLimit { sequence: seq.clone(), approx, certificate, products_checked })
}

/// The constant sequence along the first (`right = false`) or last entries.
pub fn end_sequence(levels: &[LevelSequence], right: bool) -> Vec<usize> {
    levels[1..].iter().map(|l| if right { l.len() - 1 } else { 0 }).collect()
}

/// The admissible sequence through `floor(t·m_n)`; rows double, so these
/// indices are nested.
pub fn grid_sequence(levels: &[LevelSequence], t: &Q) -> Result<AdmissibleSequence> {
    if *t < Q::zero() || *t > Q::from_integer(1.into()) {
        return Err(Error::Invalid(format!("grid point {t} outside [0, 1]")));
    }
    let idx: Vec<usize> = levels[1..]
        .iter()
        .map(|l| {
            let m = l.len();
            (t * Q::from_integer(m.into())).floor().to_integer().to_usize().unwrap_or(m).min(m - 1)
        })
        .collect();
    admissible_sequence(levels, &idx)
}

/// A grid of admissible limits with the shared prefix length of each
/// neighbouring pair, the discrete record of continuity along the path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThickPathGrid {
    #[serde(with = "crate::numeric::q_vec_str")]
    pub grid: Vec<Q>,
    pub limits: Vec<AdmissibleLimit>,
    pub shared_prefix: Vec<usize>,
}

pub fn thick_path_grid(levels: &[LevelSequence], grid: &[Q], config: &CertificateConfig) -> Result<ThickPathGrid> {
    let limits = grid
        .par_iter()
        .map(|t| admissible_limit(levels, &grid_sequence(levels, t)?, config))
        .collect::<Result<Vec<_>>>()?;
    let shared_prefix = limits
        .windows(2)
        .map(|w| w[0].sequence.indices.iter().zip(&w[1].sequence.indices).take_while(|(a, b)| a == b).count())
        .collect();
    Ok(ThickPathGrid { grid: grid.to_vec(), limits, shared_prefix })
}

// ---------------------------------------------------------------------------
// Prefix modulus

/// Constants for the product lower bound of limits sharing a prefix: every
/// level adds at least `min_step` to the distance and products lose `slack`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulusParams {
    pub min_step: u64,
    pub slack: u64,
}

impl ModulusParams {
    /// Reads the constants off the endpoint sequences: each step appends a
    /// model path word after cancelling fewer than `l` letters.
    pub fn from_fixture(fx: &MarkovFixture, ends: &EndpointSequences) -> Self {
        let l = fx.config.l;
        let floor = (fx.config.word_len as u64).saturating_sub(2 * (l - 1));
        let measured = ends.words.windows(2).map(|w| (w[1].len() as u64).saturating_sub(w[0].len() as u64));
        let min_step = measured.min().unwrap_or(floor).min(floor);
        ModulusParams { min_step, slack: l }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusBound {
    pub n: usize,
    pub product_lower: HalfInt,
    /// Upper bound on the visual distance; exactly 1 while vacuous.
    pub epsilon: f64,
}

/// Two admissible limits sharing their first `n` indices have products at
/// least `n·min_step - slack`, hence visual distance at most the returned
/// `ε(n)`. Below the onset, where this bound is not positive, `ε = 1`.
pub fn prefix_modulus(n: usize, params: &ModulusParams, config: &CertificateConfig) -> ModulusBound {
    let lower = n as i64 * params.min_step as i64 - params.slack as i64;
    if lower <= 0 {
        return ModulusBound { n, product_lower: HalfInt::ZERO, epsilon: 1.0 };
    }
    let product_lower = HalfInt::from_int(lower);
    let epsilon = visual_from_products(product_lower, None, config).hi.min(1.0);
    ModulusBound { n, product_lower, epsilon }
}

/// Measures products of limit approximants for pairs sharing exactly `n`
/// indices and checks them against the modulus. Returns the smallest
/// product seen.
pub fn check_prefix_modulus(levels: &[LevelSequence], pairs: &[(AdmissibleSequence, AdmissibleSequence)], bound: &ModulusBound) -> Result<Option<HalfInt>> {
    let g = TreeGraph::default();
    let e = Word::identity();
    let mut min = None;
    for (s, t) in pairs {
        let shared = s.indices.iter().zip(&t.indices).take_while(|(a, b)| a == b).count();
        if shared < bound.n {
            return Err(Error::Invalid(format!("pair shares {shared} < {} indices", bound.n)));
        }
        let last = s.indices.len().min(t.indices.len());
        let a = &levels[last].classes[s.indices[last - 1]].word;
        let b = &levels[last].classes[t.indices[last - 1]].word;
        let p = gromov_product(&g, a, b, &e);
        if p < bound.product_lower {
            return Err(Error::Verification(format!("product {} below the modulus bound {}", p.to_f64(), bound.product_lower.to_f64())));
        }
        min = Some(min.map_or(p, |m: HalfInt| m.min(p)));
    }
    Ok(min)
}

/// Letters used by the default split word in end refinements of length `n`.
pub fn default_splits(n: usize) -> Word {
    Word::from_letters((0..n.saturating_sub(1)).map(|i| if i % 2 == 0 { Letter::A } else { Letter::B }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q_int;

    fn fixture() -> MarkovFixture {
        MarkovFixture::generate(&thick_config(11)).unwrap()
    }

    #[test]
    fn six_points_and_skipped_faces() {
        let cands: Vec<Option<Vec<u32>>> = vec![Some((0..10).collect()), None, Some((20..26).collect())];
        let pts = connection_points6(&cands).unwrap();
        assert_eq!(pts[0].as_ref().unwrap().len(), 6);
        assert!(pts[1].is_none());
        assert_eq!(pts[2].as_ref().unwrap().len(), 6);
        assert!(connection_points6(&[Some(vec![1u32, 2, 3])]).is_err());
    }

    #[test]
    fn chords_meet_only_at_shared_endpoints() {
        let params: Vec<Q> = (1..=5).map(q_int).collect();
        let pairs: Vec<_> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect();
        let fam = moment_chords(&params, &pairs, 3);
        assert_eq!(fam.len(), 10);
        let scan = verify_min_intersection(&fam).unwrap();
        assert_eq!(scan.pairs_checked, 45);
        // Pairs of chords on five points sharing an endpoint: 5 · C(4, 2).
        assert_eq!(scan.endpoint_meetings, 30);
    }

    #[test]
    fn crossing_fixture_is_rejected() {
        let z = q_int(0);
        let corner = |x: i64, y: i64| [q_int(x), q_int(y), z.clone()];
        let diag = |s: usize, e: usize, a: Chart3, b: Chart3| SamplePath { start: s, end: e, samples: vec![a, b] };
        let fam = vec![diag(0, 2, corner(0, 0), corner(1, 1)), diag(1, 3, corner(1, 0), corner(0, 1))];
        assert!(matches!(verify_min_intersection(&fam), Err(Error::Provider(_))));
    }

    #[test]
    fn fixture_model_paths_have_minimal_intersection() {
        let fx = fixture();
        let (labels, fam, scan) = model_paths_min_intersection(&fx, 2).unwrap();
        assert_eq!(labels.len(), 12);
        assert_eq!(fam.len(), 36);
        assert!(scan.endpoint_meetings > 0);
    }

    #[test]
    fn single_piece_refinement_is_a_model_path() {
        let fx = fixture();
        let x = ConnectionPoint { face: 0, index: 0 };
        let y = ConnectionPoint { face: 1, index: 2 };
        let r = end_partial_refinement(&fx, &SyntheticClass::identity(), &Word::identity(), x, y).unwrap();
        assert_eq!(r.pieces.len(), 1);
        assert_eq!(r.pieces[0].phi, SyntheticClass::identity());
        assert_eq!(r.pieces[0].path, fx.path_id(x, y).unwrap());
        assert_eq!(r.k1, 0);
    }

    #[test]
    fn three_piece_chain_and_k1_growth() {
        let fx = fixture();
        let psi = SyntheticClass::new(fx.paths[5].word.clone(), 1);
        let x = fx.points(0).find(|p| !excluded_starts(&fx, &psi.word, 0).contains(p)).unwrap();
        let mut k1 = Vec::new();
        for n in 1..=5 {
            let splits = default_splits(n);
            let y_face = ((x.face as usize + n) % 2) as u8;
            let r = end_partial_refinement(&fx, &psi, &splits, x, ConnectionPoint { face: y_face, index: 1 }).unwrap();
            assert_eq!(r.pieces.len(), n);
            assert!(r.pieces.iter().all(|p| p.excluded_start.len() + p.excluded_end.len() <= 2));
            if n == 3 {
                for p in &r.pieces {
                    let psi_phi = psi.word.mul(&p.phi.word);
                    for (d, b) in fx.paths[p.path].package().iter().zip(&p.backtracking) {
                        assert_eq!(*b, psi_phi.cancellation(&d.class.word));
                        assert!((*b as u64) < fx.config.l);
                    }
                }
                let (_, far) = r.endpoints();
                assert_eq!(far.at, splits);
            }
            k1.push(r.k1);
        }
        assert!(k1.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn excluded_start_is_refused() {
        let fx = fixture();
        let x = ConnectionPoint { face: 0, index: 3 };
        // A class ending in the inverse of x's code forces backtracking.
        let psi = SyntheticClass::new(fx.codes[0][3].inverse(), 0);
        let y = ConnectionPoint { face: 1, index: 0 };
        assert!(matches!(end_partial_refinement(&fx, &psi, &Word::identity(), x, y), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn two_levels_replay() {
        let fx = fixture();
        let ends = endpoint_sequences(&fx, 4).unwrap();
        let (levels, reports) = build_levels(&fx, &ends, 4).unwrap();
        for r in &reports {
            assert!(r.ok(), "{r:?}");
        }
        let l2 = &levels[2];
        assert_eq!(l2.len(), 8);
        let a: Vec<usize> = (0..l2.len()).filter(|&i| l2.cases[i] == RefinementCase::A).collect();
        assert_eq!(a, vec![0, 7]);
        for i in 0..l2.len() {
            if l2.cases[i] == RefinementCase::C {
                let p = &fx.paths[l2.witness[i].unwrap()];
                assert!(p.package().iter().any(|d| d.class == l2.increments[i]));
            }
        }
        assert_eq!(LevelSequence::interval(&levels[2], 1), 2..4);
        // A tampered level fails its replay.
        let mut bad = levels[2].clone();
        bad.classes.swap(2, 5);
        bad.classes[3] = SyntheticClass::new(Word::from_letters([Letter::A]), 0);
        let r = verify_level(&fx, Some(&levels[1]), &bad, &ends).unwrap();
        assert!(!r.ok());
    }

    #[test]
    fn admissible_limits_and_modulus() {
        let fx = fixture();
        let depth = 5;
        let ends = endpoint_sequences(&fx, depth).unwrap();
        let (levels, _) = build_levels(&fx, &ends, depth).unwrap();
        let config = fx.certificate_config(q_int(20));

        let left = admissible_sequence(&levels, &end_sequence(&levels, false)).unwrap();
        assert_eq!(left.cases, "aaaaa");
        let lim = admissible_limit(&levels, &left, &config).unwrap();
        for (k, w) in lim.approx.vertices.iter().enumerate() {
            assert_eq!(*w, ends.words[k + 1]);
        }
        // Growth: d(α0, Φ^(n) α0) ≥ C·n with C the model step.
        let params = ModulusParams::from_fixture(&fx, &ends);
        for (k, w) in lim.approx.vertices.iter().enumerate() {
            assert!(w.len() as u64 >= (k as u64 + 1) * params.min_step);
        }

        let mixed = admissible_sequence(&levels, &[0, 1, 2, 5, 10]).unwrap();
        assert_eq!(mixed.cases, "abccc");
        assert_eq!(mixed.n1, 1);
        assert!(mixed.upsilon.is_some());
        admissible_limit(&levels, &mixed, &config).unwrap();
        assert!(admissible_sequence(&levels, &[0, 2]).is_err());

        let eps: Vec<f64> = [5, 10, 15].iter().map(|&n| prefix_modulus(n, &params, &config).epsilon).collect();
        assert!(eps[0] > eps[1] && eps[1] > eps[2]);
        assert_eq!(prefix_modulus(0, &params, &config).epsilon, 1.0);

        let grid: Vec<Q> = (0..=8).map(|k| Q::new(k.into(), 8.into())).collect();
        let tg = thick_path_grid(&levels, &grid, &config).unwrap();
        assert_eq!(tg.limits.len(), 9);
        let bound = prefix_modulus(2, &params, &config);
        let pairs: Vec<_> = tg
            .limits
            .iter()
            .flat_map(|a| tg.limits.iter().map(move |b| (a, b)))
            .filter(|(a, b)| a.sequence.indices[..2] == b.sequence.indices[..2])
            .map(|(a, b)| (a.sequence.clone(), b.sequence.clone()))
            .collect();
        assert!(!pairs.is_empty());
        check_prefix_modulus(&levels, &pairs, &bound).unwrap();
    }

    #[test]
    fn levels_round_trip_through_json() {
        let fx = fixture();
        let ends = endpoint_sequences(&fx, 2).unwrap();
        let (levels, _) = build_levels(&fx, &ends, 2).unwrap();
        let s = serde_json::to_string(&levels).unwrap();
        let back: Vec<LevelSequence> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, levels);
        let fam = moment_chords(&[q_int(1), Q::new(3.into(), 2.into())], &[(0, 1)], 2);
        let s = serde_json::to_string(&fam).unwrap();
        assert_eq!(serde_json::from_str::<Vec<SamplePath>>(&s).unwrap(), fam);
    }
}
