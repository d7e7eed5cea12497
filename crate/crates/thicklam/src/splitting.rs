//! Splitting sequences and splitting packages on the punctured torus.
//!
//! The depth-`N` polyhedra of a model track are the Stern–Brocot cones
//! `basis · W` for words `W` of `N` letters `T`, `S`. A sampled path is cut at
//! the shared vertices of consecutive cones; each piece carries the class `Φ`
//! with `Φ⁻¹ τ` a model track.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgraph::boundary::Point;
use crate::hypgraph::certify::{separation_constant, CertificateConfig};
use crate::hypgraph::farey::{farey_distance, FareyGraph};
use crate::hypgraph::{backtracking_length, gromov_product, Segment};
use crate::mcg::{TorusClass, TorusGen};
use crate::modular::{Mat2, Slope};
use crate::numeric::{HalfInt, Q};
use crate::traintrack::torus::{models, normalize_sign, SplitLetter, TorusTrack};
use crate::traintrack::{CarryingMap, WeightVector};

fn carrying_matrix(letter: SplitLetter) -> CarryingMap {
    let r = |v: [i64; 3]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    let rows = match letter {
        SplitLetter::R => vec![r([1, 1, 0]), r([0, 1, 0]), r([0, 1, 1])],
        SplitLetter::L | SplitLetter::C => vec![r([1, 0, 0]), r([1, 1, 0]), r([1, 0, 1])],
    };
    CarryingMap { rows }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitStep {
    pub letter: SplitLetter,
    pub track: TorusTrack,
    /// Old weights = map · new weights.
    pub map: CarryingMap,
    pub weights: WeightVector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplittingSequence {
    pub model: usize,
    pub start: TorusTrack,
    pub target: WeightVector,
    pub steps: Vec<SplitStep>,
    /// The face reached when the target exhausts before `N` splits.
    pub terminal_face: Option<usize>,
}

impl SplittingSequence {
    pub fn word(&self) -> String {
        self.steps.iter().map(|s| s.letter.to_char()).collect()
    }

    pub fn total_map(&self) -> CarryingMap {
        self.steps.iter().fold(CarryingMap::identity(3), |m, s| m.compose(&s.map))
    }
}

/// `N` full splits of a model track toward a weight vector on the standard
/// combinatorics `(a, b, a + b)`.
pub fn splitting_sequence_toward(model: usize, target: &WeightVector, n: usize) -> Result<SplittingSequence> {
    let start = models().get(model).cloned().ok_or_else(|| Error::Invalid(format!("no model {model}")))?;
    if target.0.len() != 3 {
        return Err(Error::IndexMismatch { expected: 3, found: target.0.len() });
    }
    let (mut a, mut b) = (target.0[0].clone(), target.0[1].clone());
    if a.is_negative() || b.is_negative() || &a + &b != target.0[2] {
        return Err(Error::NotCarried(format!("{:?}", target.0)));
    }
    let mut track = start.clone();
    let mut steps = Vec::new();
    let mut terminal_face = None;
    while steps.len() < n {
        if a.is_zero() || b.is_zero() {
            terminal_face = Some(if a.is_zero() { 0 } else { 1 });
            break;
        }
        let letter = match a.cmp(&b) {
            Ordering::Greater => SplitLetter::R,
            Ordering::Less => SplitLetter::L,
            Ordering::Equal => SplitLetter::C,
        };
        let m = match letter {
            SplitLetter::R => {
                a -= &b;
                Mat2::t()
            }
            _ => {
                b -= &a;
                Mat2::s()
            }
        };
        track = TorusTrack { basis: track.basis.mul(&m) };
        let weights = WeightVector(vec![a.clone(), b.clone(), &a + &b]);
        steps.push(SplitStep { letter, track: track.clone(), map: carrying_matrix(letter), weights });
    }
    if terminal_face.is_none() && (a.is_zero() || b.is_zero()) {
        terminal_face = Some(if a.is_zero() { 0 } else { 1 });
    }
    Ok(SplittingSequence { model, start, target: target.clone(), steps, terminal_face })
}

/// A depth-`N` polyhedron: a model track split along a word in `R`, `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthCone {
    pub model: usize,
    pub letters: String,
    pub track: TorusTrack,
}

fn slope_of(v: (BigInt, BigInt)) -> Slope {
    Slope::new(v.0, v.1).expect("primitive column")
}

impl DepthCone {
    pub fn root(model: usize) -> Self {
        DepthCone { model, letters: String::new(), track: models()[model].clone() }
    }

    fn child(&self, letter: SplitLetter) -> DepthCone {
        let m = if letter == SplitLetter::R { Mat2::t() } else { Mat2::s() };
        let mut letters = self.letters.clone();
        letters.push(letter.to_char());
        DepthCone { model: self.model, letters, track: TorusTrack { basis: self.track.basis.mul(&m) } }
    }

    /// `Φ` with `Φ · model = track`, as a word in the twists.
    pub fn phi(&self) -> TorusClass {
        let (r, l) = if self.model == 0 { (TorusGen::T, TorusGen::S) } else { (TorusGen::SInv, TorusGen::TInv) };
        let word = self.letters.chars().map(|c| if c == 'R' { r } else { l }).collect::<Vec<_>>();
        let t = TorusClass::from_word(word);
        debug_assert!(t.matrix.projectively_eq(&self.track.basis.mul(&models()[self.model].basis.inverse().unwrap())));
        TorusClass { word: t.word, matrix: normalize_sign(t.matrix) }
    }

    /// The two vertex cycles, which are also the two faces.
    pub fn columns(&self) -> [Slope; 2] {
        let (c0, c1) = self.track.basis.columns();
        [slope_of(c0), slope_of(c1)]
    }

    pub fn carries(&self, s: &Slope) -> bool {
        self.track.carries_slope(s)
    }

    pub fn face_of(&self, s: &Slope) -> Option<u8> {
        self.columns().iter().position(|c| c == s).map(|i| i as u8)
    }

    /// Position of `s` along the cone from column 0 to column 1, compared by
    /// cross-multiplying chart coordinates.
    fn cmp_in_chart(&self, x: &Slope, y: &Slope) -> Ordering {
        let (xa, xb) = self.track.chart(x.p(), x.q()).expect("carried");
        let (ya, yb) = self.track.chart(y.p(), y.q()).expect("carried");
        (xb * ya).cmp(&(yb * xa))
    }

    fn between(&self, x: &Slope, a: &Slope, b: &Slope) -> bool {
        let lo = self.cmp_in_chart(a, x) != Ordering::Greater && self.cmp_in_chart(x, b) != Ordering::Greater;
        let hi = self.cmp_in_chart(b, x) != Ordering::Greater && self.cmp_in_chart(x, a) != Ordering::Greater;
        lo || hi
    }
}

/// All depth-`n` cones carrying a slope; at most two per model.
pub fn cones_at_depth(s: &Slope, n: usize) -> Vec<DepthCone> {
    let mut current: Vec<DepthCone> = (0..models().len()).map(DepthCone::root).filter(|c| c.carries(s)).collect();
    for _ in 0..n {
        current = current
            .iter()
            .flat_map(|c| [c.child(SplitLetter::R), c.child(SplitLetter::L)])
            .filter(|c| c.carries(s))
            .collect();
    }
    current
}

/// A face of a model track, named by the vertex cycle it contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceRef {
    pub model: usize,
    pub column: u8,
}

impl FaceRef {
    pub fn slope(&self) -> Slope {
        DepthCone::root(self.model).columns()[self.column as usize].clone()
    }
}

/// Every face of every model track.
pub fn model_faces() -> Vec<FaceRef> {
    (0..models().len()).flat_map(|model| (0..2).map(move |column| FaceRef { model, column })).collect()
}

/// Membership in the symmetry set: `θ` carries some model face onto a model
/// face. Checked by the defining equation.
pub fn in_symmetry_set(theta: &Mat2) -> bool {
    let slopes: Vec<Slope> = model_faces().iter().map(FaceRef::slope).collect();
    slopes.iter().any(|s| slopes.contains(&theta.act(s)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subpath {
    pub cone: DepthCone,
    pub phi_word: String,
    pub phi: Mat2,
    pub points: Vec<Slope>,
    pub start_face: Option<u8>,
    pub end_face: Option<u8>,
}

impl Subpath {
    fn new(cone: DepthCone, points: Vec<Slope>) -> Self {
        let phi = cone.phi();
        Subpath {
            phi_word: phi.word_string(),
            phi: phi.matrix,
            start_face: cone.face_of(&points[0]),
            end_face: cone.face_of(points.last().expect("nonempty")),
            cone,
            points,
        }
    }

    fn contains(&self, x: &Slope) -> bool {
        self.cone.carries(x) && self.points.windows(2).any(|w| self.cone.between(x, &w[0], &w[1]))
            || self.points.contains(x)
    }

    pub fn data(&self) -> PackageData {
        let face = |f: Option<u8>| f.map(|column| FaceRef { model: self.cone.model, column });
        PackageData { phi: self.phi.clone(), phi_word: self.phi_word.clone(), eta_a: face(self.start_face), eta_b: face(self.end_face) }
    }
}

/// The triple `(Φ, Φ⁻¹ η_a, Φ⁻¹ η_b)`; a face is `None` when the endpoint
/// lies inside the polyhedron.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageData {
    pub phi: Mat2,
    pub phi_word: String,
    pub eta_a: Option<FaceRef>,
    pub eta_b: Option<FaceRef>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplittingPackage {
    pub depth: usize,
    pub samples: Vec<Slope>,
    pub subpaths: Vec<Subpath>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageReport {
    pub carried: bool,
    pub breakpoints_on_faces: bool,
    pub shared_faces: bool,
    pub model_pullback: bool,
    pub increments_in_s: bool,
}

impl PackageReport {
    pub fn ok(&self) -> bool {
        self.carried && self.breakpoints_on_faces && self.shared_faces && self.model_pullback && self.increments_in_s
    }
}

/// Cuts a sampled path at face crossings of depth-`n` polyhedra. Consecutive
/// samples must share a polyhedron or lie in two polyhedra with a common
/// face; otherwise the first offending gap is reported.
pub fn package_for_path(samples: &[Slope], n: usize) -> Result<SplittingPackage> {
    if samples.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let first = cones_at_depth(&samples[0], n);
    let cone = match samples.get(1) {
        Some(s1) => first.iter().find(|c| c.carries(s1)).or(first.first()),
        None => first.first(),
    }
    .cloned()
    .ok_or_else(|| Error::NotCarried(samples[0].to_string()))?;
    let mut subpaths = Vec::new();
    let mut cone = cone;
    let mut points = vec![samples[0].clone()];
    for (i, s) in samples.iter().enumerate().skip(1) {
        if cone.carries(s) {
            if points.last() != Some(s) {
                points.push(s.clone());
            }
            continue;
        }
        let [c0, c1] = cone.columns();
        let next = cones_at_depth(s, n).into_iter().find_map(|c| {
            [&c0, &c1].into_iter().find(|z| c.face_of(z).is_some()).map(|z| (c, z.clone()))
        });
        let Some((next, z)) = next else {
            return Err(Error::Resolution(i - 1, i));
        };
        if points.last() != Some(&z) {
            points.push(z.clone());
        }
        subpaths.push(Subpath::new(cone, std::mem::take(&mut points)));
        cone = next;
        points = vec![z.clone()];
        if &z != s {
            points.push(s.clone());
        }
    }
    subpaths.push(Subpath::new(cone, points));
    Ok(SplittingPackage { depth: n, samples: samples.to_vec(), subpaths })
}

impl SplittingPackage {
    /// Replays the package conditions and the symmetry-set membership of
    /// consecutive increments.
    pub fn verify(&self) -> PackageReport {
        let subs = &self.subpaths;
        let carried = subs.iter().all(|sp| sp.points.iter().all(|x| sp.cone.carries(x)));
        let breakpoints_on_faces = subs.windows(2).all(|w| w[0].end_face.is_some() && w[1].start_face.is_some());
        let shared_faces = subs.windows(2).all(|w| {
            let z = w[0].points.last().expect("nonempty");
            z == &w[1].points[0] && w[0].cone.face_of(z).is_some() && w[1].cone.face_of(z).is_some()
        });
        let model_pullback = subs.iter().all(|sp| {
            sp.cone.letters.len() == self.depth
                && sp.phi.inverse().map(|inv| inv.mul(&sp.cone.track.basis)).is_ok_and(|b| {
                    b.projectively_eq(&models()[sp.cone.model].basis)
                })
        });
        let increments_in_s = subs
            .windows(2)
            .all(|w| w[0].phi.inverse().map(|inv| in_symmetry_set(&inv.mul(&w[1].phi))).unwrap_or(false));
        PackageReport { carried, breakpoints_on_faces, shared_faces, model_pullback, increments_in_s }
    }

    /// Data of the subpaths containing `x`: one for interior points, two at a
    /// breakpoint.
    pub fn data_at(&self, x: &Slope) -> Result<Vec<PackageData>> {
        let out: Vec<PackageData> = self.subpaths.iter().filter(|sp| sp.contains(x)).map(Subpath::data).collect();
        if out.is_empty() {
            return Err(Error::OffPath);
        }
        Ok(out)
    }

    pub fn classes(&self) -> Vec<&Mat2> {
        self.subpaths.iter().map(|sp| &sp.phi).collect()
    }
}

/// Comparison of two packages at a common point `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Increment {
    pub theta: Mat2,
    pub x: Slope,
    pub x_prime: Slope,
    pub eta: Option<FaceRef>,
    pub eta_prime: Option<FaceRef>,
}

fn model_face_containing(model: usize, x: &Slope) -> Option<FaceRef> {
    DepthCone::root(model).face_of(x).map(|column| FaceRef { model, column })
}

/// `θ = (Φ′)⁻¹ Φ` for the classes describing `z`, with `θ x = x′` and
/// `θ η = η′` checked exactly and `θ ∈ S_η` by the defining equation.
pub fn increment(pkg: &SplittingPackage, pkg2: &SplittingPackage, z: &Slope) -> Result<Increment> {
    if pkg.depth != pkg2.depth {
        return Err(Error::Verification(format!("depths {} and {} differ", pkg.depth, pkg2.depth)));
    }
    let find_cones = |p: &SplittingPackage| -> Vec<(Mat2, usize)> {
        p.subpaths.iter().filter(|sp| sp.contains(z)).map(|sp| (sp.phi.clone(), sp.cone.model)).collect()
    };
    let (a, b) = (find_cones(pkg), find_cones(pkg2));
    if a.is_empty() || b.is_empty() {
        return Err(Error::OffPath);
    }
    let mut last_err = String::new();
    for (phi, m) in &a {
        for (phi2, m2) in &b {
            let theta = normalize_sign(phi2.inverse()?.mul(phi));
            let x = phi.inverse()?.act(z);
            let x_prime = phi2.inverse()?.act(z);
            let eta = model_face_containing(*m, &x);
            let eta_prime = model_face_containing(*m2, &x_prime);
            let faces_ok = match (eta, eta_prime) {
                (Some(e), Some(e2)) => theta.act(&e.slope()) == e2.slope(),
                (None, None) => true,
                _ => false,
            };
            let in_s = eta.is_none() || in_symmetry_set(&theta);
            if theta.act(&x) == x_prime && faces_ok && in_s {
                return Ok(Increment { theta, x, x_prime, eta, eta_prime });
            }
            last_err = format!("theta {theta} fails at {z}");
        }
    }
    Err(Error::Verification(last_err))
}

/// Evidence gathered at one tested depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthEvidence {
    pub depth: usize,
    /// `None` when some path could not be packaged at this depth.
    pub min_vertex_distance: Option<u64>,
    pub min_product: Option<HalfInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    pub depth: usize,
    pub k_sep: HalfInt,
    pub evidence: Vec<DepthEvidence>,
}

fn depth_evidence(paths: &[Vec<Slope>], n: usize) -> DepthEvidence {
    let g = FareyGraph::default();
    let base = Slope::infinity();
    let model_cycles: Vec<Slope> = (0..models().len()).flat_map(|m| DepthCone::root(m).columns()).collect();
    let pkgs: Result<Vec<SplittingPackage>> = paths.par_iter().map(|p| package_for_path(p, n)).collect();
    let Ok(pkgs) = pkgs else {
        return DepthEvidence { depth: n, min_vertex_distance: None, min_product: None };
    };
    let mut min_d = u64::MAX;
    let mut min_p: Option<HalfInt> = None;
    for sp in pkgs.iter().flat_map(|p| &p.subpaths) {
        let cols = sp.cone.columns();
        for c in &cols {
            for m in &model_cycles {
                min_d = min_d.min(farey_distance(c, m));
            }
        }
        let mut carried: Vec<&Slope> = cols.iter().collect();
        carried.extend(sp.points.iter());
        for (i, x) in carried.iter().enumerate() {
            for y in &carried[i + 1..] {
                if x != y {
                    let p = gromov_product(&g, x, y, &base);
                    min_p = Some(min_p.map_or(p, |q| q.min(p)));
                }
            }
        }
    }
    DepthEvidence { depth: n, min_vertex_distance: Some(min_d), min_product: min_p }
}

/// Smallest depth at which every polyhedron used by the packages has vertex
/// cycles farther than `100 · B` from the model vertex cycles, and products
/// of carried points exceed twice the separation constant of the family.
pub fn calibrate_depth(paths: &[Vec<Slope>], config: &CertificateConfig, max_n: usize) -> Result<Calibration> {
    let g = FareyGraph::default();
    let pts: Vec<Vec<Point<Slope>>> =
        paths.iter().map(|p| p.iter().cloned().map(Point::Vertex).collect()).collect();
    let sep = separation_constant(&g, &pts, &Slope::infinity(), config.delta)?;
    let k_sep = sep.k_sep.ok_or_else(|| Error::Invalid("separation constant is unbounded".into()))?;
    let dist_needed = &config.b * Q::from_integer(100.into());
    let mut evidence = Vec::new();
    for n in 0..=max_n {
        let ev = depth_evidence(paths, n);
        let ok = match (&ev.min_vertex_distance, &ev.min_product) {
            (Some(d), Some(p)) => Q::from_integer((*d).into()) > dist_needed && p.to_q() > k_sep.to_q() * Q::from_integer(2.into()),
            _ => false,
        };
        evidence.push(ev);
        if ok {
            return Ok(Calibration { depth: n, k_sep, evidence });
        }
    }
    Err(Error::DepthGuard(max_n))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivideViolation {
    pub property: char,
    pub paths: (usize, usize),
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivideReport {
    pub class_pairs_scanned: u64,
    pub psi_sampled: usize,
    /// Sampled `Ψ` for which at least one path has a backtracking class.
    pub psi_with_backtracking: usize,
    pub violations: Vec<DivideViolation>,
}

fn disjoint(a: &SplittingPackage, b: &SplittingPackage) -> bool {
    !a.samples.iter().any(|x| b.samples.contains(x))
}

/// Random classes `Ψ` with `d(γ₀, Ψ γ₀) > L`: half are random positive words,
/// half are inverses of package classes followed by a random word, which aims
/// `Ψ⁻¹ γ₀` at a path.
pub fn sample_psi(packages: &[SplittingPackage], config: &CertificateConfig, count: usize, seed: u64) -> Vec<Mat2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<&Mat2> = packages.iter().flat_map(|p| p.classes()).collect();
    let inf = Slope::infinity();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        // Alternating runs of length at least two each add one to the Farey
        // distance, so the rejection step below rarely fires.
        let runs = config.big_l as usize + rng.gen_range(2..16);
        let w = (0..runs).fold(Mat2::identity(), |m, i| {
            let g = if i % 2 == 0 { Mat2::t() } else { Mat2::s() };
            m.mul(&g.pow(rng.gen_range(2..5)).expect("unimodular"))
        });
        let psi = if out.len() % 2 == 1 && !classes.is_empty() {
            let phi = classes.choose(&mut rng).expect("nonempty");
            phi.mul(&w).inverse().expect("unimodular")
        } else {
            w
        };
        if farey_distance(&inf, &psi.act(&inf)) > config.big_l {
            out.push(psi);
        }
    }
    out
}

/// Checks both divide properties on packages of a path family.
pub fn verify_divide(packages: &[SplittingPackage], psis: &[Mat2], config: &CertificateConfig) -> Result<DivideReport> {
    let g = FareyGraph::default();
    let inf = Slope::infinity();
    let mut violations = Vec::new();
    let mut scanned = 0u64;
    for i in 0..packages.len() {
        for j in i + 1..packages.len() {
            if !disjoint(&packages[i], &packages[j]) {
                continue;
            }
            for a in packages[i].classes() {
                for b in packages[j].classes() {
                    scanned += 1;
                    if a.projectively_eq(b) {
                        violations.push(DivideViolation { property: 'a', paths: (i, j), detail: format!("shared class {a}") });
                    }
                }
            }
        }
    }
    // For each Ψ, the set of paths having a class that backtracks at least l.
    let hits: Vec<Vec<bool>> = psis
        .par_iter()
        .map(|psi| {
            let end = psi.act(&inf);
            let first = Segment::from_geodesic(&g, &inf, &end);
            packages
                .iter()
                .map(|p| {
                    p.classes().iter().any(|phi| {
                        let second = Segment::from_geodesic(&g, &end, &psi.mul(phi).act(&inf));
                        backtracking_length(&g, &first, &second, config.radius()).is_ok_and(|b| b >= config.l)
                    })
                })
                .collect()
        })
        .collect();
    for (k, h) in hits.iter().enumerate() {
        for i in 0..packages.len() {
            for j in i + 1..packages.len() {
                if h[i] && h[j] && disjoint(&packages[i], &packages[j]) {
                    violations.push(DivideViolation { property: 'b', paths: (i, j), detail: format!("psi #{k} = {}", psis[k]) });
                }
            }
        }
    }
    let psi_with_backtracking = hits.iter().filter(|h| h.iter().any(|&x| x)).count();
    Ok(DivideReport { class_pairs_scanned: scanned, psi_sampled: psis.len(), psi_with_backtracking, violations })
}

/// Interior Stern–Brocot vertices of a cone down to `depth` further splits,
/// ordered from column 0 to column 1.
pub fn cone_interior_samples(cone: &DepthCone, depth: usize) -> Vec<Slope> {
    fn rec(u: &(BigInt, BigInt), v: &(BigInt, BigInt), depth: usize, out: &mut Vec<Slope>) {
        if depth == 0 {
            return;
        }
        let m = (&u.0 + &v.0, &u.1 + &v.1);
        rec(u, &m, depth - 1, out);
        out.push(slope_of(m.clone()));
        rec(&m, v, depth - 1, out);
    }
    let (u, v) = cone.track.basis.columns();
    let mut out = Vec::new();
    rec(&u, &v, depth, &mut out);
    out
}

/// Cone reached from the root of `model` by a word in `R`, `L`.
pub fn cone_from_letters(model: usize, letters: &str) -> Result<DepthCone> {
    letters.chars().try_fold(DepthCone::root(model), |c, ch| match ch {
        'R' => Ok(c.child(SplitLetter::R)),
        'L' => Ok(c.child(SplitLetter::L)),
        _ => Err(Error::MalformedLabel(letters.to_string())),
    })
}

/// Three pairwise-disjoint sampled paths, each filling a deep cone along a
/// golden-ratio-like word, sampled densely enough to package up to depth
/// `prefix_len + refine`.
pub fn divide_fixture(prefix_len: usize, refine: usize) -> Vec<Vec<Slope>> {
    let alternating: String = (0..prefix_len).map(|i| if i % 2 == 0 { 'L' } else { 'R' }).collect();
    ["R", "RR", "RRR"]
        .iter()
        .map(|head| {
            let cone = cone_from_letters(0, &format!("{head}{alternating}")).expect("valid letters");
            cone_interior_samples(&cone, refine)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q_int;

    fn sl(s: &str) -> Slope {
        s.parse().unwrap()
    }

    #[test]
    fn golden_approximant_sequence() {
        let seq = splitting_sequence_toward(0, &WeightVector::from_ints(&[13, 8, 21]), 5).unwrap();
        assert_eq!(seq.word(), "RLRLR");
        assert!(seq.terminal_face.is_none());
        let m = seq.total_map();
        assert_eq!(m.apply(&seq.steps.last().unwrap().weights).unwrap(), WeightVector::from_ints(&[13, 8, 21]));
        let short = splitting_sequence_toward(0, &WeightVector::from_ints(&[2, 1, 3]), 50).unwrap();
        assert_eq!(short.word(), "RC");
        assert!(short.terminal_face.is_some());
        assert!(splitting_sequence_toward(0, &WeightVector::from_ints(&[2, 1, 3]), 0).unwrap().steps.is_empty());
    }

    #[test]
    fn rejects_uncarried_targets() {
        assert!(splitting_sequence_toward(0, &WeightVector::from_ints(&[2, 1, 4]), 3).is_err());
        assert!(splitting_sequence_toward(0, &WeightVector::from_ints(&[-1, 1, 0]), 3).is_err());
    }

    #[test]
    fn cones_tile() {
        assert_eq!(cones_at_depth(&sl("3/7"), 0).len(), 1);
        assert_eq!(cones_at_depth(&sl("0/1"), 3).len(), 2);
        assert_eq!(cones_at_depth(&sl("1/1"), 4).len(), 2);
        for c in cones_at_depth(&sl("-2/5"), 6) {
            assert_eq!(c.model, 1);
            let phi = c.phi();
            assert!(phi.matrix.mul(&models()[1].basis).projectively_eq(&c.track.basis));
        }
    }

    #[test]
    fn single_polyhedron_path() {
        let p = package_for_path(&[sl("7/5"), sl("10/7")], 2).unwrap();
        assert_eq!(p.subpaths.len(), 1);
        assert!(p.verify().ok());
        assert_eq!(p.data_at(&sl("17/12")).unwrap().len(), 1);
    }

    #[test]
    fn crossing_one_face() {
        let p = package_for_path(&[sl("1/2"), sl("2/1")], 1).unwrap();
        assert_eq!(p.subpaths.len(), 2);
        assert!(p.verify().ok());
        let data = p.data_at(&sl("1/1")).unwrap();
        assert_eq!(data.len(), 2);
        let inc = increment(&p, &p, &sl("1/1")).unwrap();
        assert!(inc.theta.projectively_eq(&Mat2::identity()));
        assert!(matches!(p.data_at(&sl("5/1")), Err(Error::OffPath)));
    }

    #[test]
    fn resolution_failure_is_loud() {
        assert!(matches!(package_for_path(&[sl("1/5"), sl("5/1")], 3), Err(Error::Resolution(0, 1))));
    }

    #[test]
    fn increment_between_sides_of_a_face() {
        let left = package_for_path(&[sl("1/2"), sl("1/1")], 1).unwrap();
        let right = package_for_path(&[sl("1/1"), sl("2/1")], 1).unwrap();
        let inc = increment(&left, &right, &sl("1/1")).unwrap();
        assert_eq!(inc.theta.act(&inc.x), inc.x_prime);
        assert!(in_symmetry_set(&inc.theta));
    }

    #[test]
    fn calibration_and_divide_on_fixture() {
        let paths = divide_fixture(6, 7);
        let cfg = CertificateConfig::calibrated(HalfInt::from_int(1), 3, Q::new(1.into(), 50.into()));
        let cal = calibrate_depth(&paths, &cfg, 12).unwrap();
        let mut aimed = 0;
        for depth in cal.depth..cal.depth + 3 {
            let pkgs: Vec<_> = paths.iter().map(|p| package_for_path(p, depth).unwrap()).collect();
            assert!(pkgs.iter().all(|p| p.verify().ok()));
            let psis = sample_psi(&pkgs, &cfg, 20, 3);
            let rep = verify_divide(&pkgs, &psis, &cfg).unwrap();
            assert!(rep.violations.is_empty(), "{:?}", rep.violations);
            aimed += rep.psi_with_backtracking;
        }
        assert!(aimed > 0);
        let bigger = CertificateConfig { b: q_int(2) * &cfg.b, ..cfg.clone() };
        if let Ok(c2) = calibrate_depth(&paths, &bigger, 12) {
            assert!(c2.depth >= cal.depth);
        }
    }
}
