//! Markov graphs of splitting packages over a synthetic world.
//!
//! The group is `F2 × C2`, acting on the Cayley tree through its word part.
//! There is a single model track with two faces `0` and `1`; the twist swaps
//! them. Each connection point carries a distinct code word of length `l`,
//! and the model path from `x` to `y` has a word starting with the code of
//! `x`. Its splitting package has two data, the word with either twist, and
//! the twist is exactly the face symmetry relating them.

pub mod fan;
pub mod graph;
pub mod subshift;

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgraph::{backtracking_length, ExactGraph, Segment, TreeGraph};
use crate::mcg::SyntheticClass;
use crate::numeric::{q_frac, q_str, HalfInt, Q};
use crate::word::{Letter, Word};

pub use fan::{bridge, build_fan, chain_packages, fan_limit_path, sample_limit, twin_rays, Bridge, Fan, FanLimit, LimitSample};
pub use graph::{build_graphs, matching_report, GEdge, MarkovGraphs, MatchingReport};
pub use subshift::{subshift_encode, SubshiftEncoding};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovConfig {
    /// Connection points per face.
    pub connection_points: usize,
    #[serde(with = "q_str")]
    pub match_fraction: Q,
    #[serde(with = "q_str")]
    pub prune_fraction: Q,
    pub l: u64,
    /// Length of every model-path word; must reach the certificate's `L`.
    pub word_len: usize,
    /// Number of fan levels built from the fixture.
    pub depth: usize,
    pub seed: u64,
    /// Loxodromic element for the subshift encoding; chosen automatically
    /// when absent.
    pub psi: Option<Word>,
    /// Required ratio between distinct subshift exponents.
    pub exponent_ratio: u64,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig {
            connection_points: 20,
            match_fraction: q_frac(8, 9),
            prune_fraction: q_frac(1, 9),
            l: 4,
            word_len: 18,
            depth: 4,
            seed: 7,
            psi: None,
            exponent_ratio: 2,
        }
    }
}

impl MarkovConfig {
    /// A reduced fixture for quick checks. Nine points per face is the least
    /// for which one failing path per endpoint stays within the prune
    /// fraction.
    pub fn small() -> Self {
        MarkovConfig { connection_points: 9, ..MarkovConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.connection_points < 6 {
            return Err(Error::Invalid("at least 6 connection points per face are required".into()));
        }
        if &self.match_fraction + &self.prune_fraction != q_frac(1, 1) {
            return Err(Error::Invalid("match and prune fractions must sum to 1".into()));
        }
        if self.l == 0 || (self.word_len as u64) < 2 * self.l {
            return Err(Error::Invalid("model words must be at least 2l long".into()));
        }
        if self.exponent_ratio < 2 {
            return Err(Error::Invalid("exponent ratio must be at least 2".into()));
        }
        Ok(())
    }
}

/// A connection point: a face of the model track and an index on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConnectionPoint {
    pub face: u8,
    pub index: u32,
}

impl ConnectionPoint {
    /// Image under a class; only the twist moves faces.
    pub fn act(self, theta: &SyntheticClass) -> ConnectionPoint {
        ConnectionPoint { face: theta.act_face(self.face), index: self.index }
    }
}

impl fmt::Display for ConnectionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.face, self.index)
    }
}

/// A vertex of `V0`: a class together with the ordered face pair of its datum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackageDatum {
    pub class: SyntheticClass,
    pub faces: [u8; 2],
}

impl fmt::Display for PackageDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}->{})", self.class, self.faces[0], self.faces[1])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPath {
    pub id: usize,
    pub start: ConnectionPoint,
    pub end: ConnectionPoint,
    pub word: Word,
}

impl ModelPath {
    /// The splitting package: the path word with either twist. Consecutive
    /// data differ by the twist, which maps the end face onto the start face.
    pub fn package(&self) -> [PackageDatum; 2] {
        let faces = [self.start.face, self.end.face];
        [0, 1].map(|k| PackageDatum { class: SyntheticClass::new(self.word.clone(), k), faces })
    }

    pub fn shares_endpoint(&self, o: &ModelPath) -> bool {
        [self.start, self.end].iter().any(|p| *p == o.start || *p == o.end)
    }
}

impl fmt::Display for ModelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}[{}->{}]", self.id, self.start, self.end)
    }
}

/// The model paths and connection points of one synthetic fixture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkovFixture {
    pub config: MarkovConfig,
    /// `codes[face][index]`.
    pub codes: Vec<Vec<Word>>,
    /// Indexed by [`MarkovFixture::path_id`].
    pub paths: Vec<ModelPath>,
}

/// The face symmetries of either face: both twists.
pub fn face_symmetry_set() -> [SyntheticClass; 2] {
    [SyntheticClass::identity(), SyntheticClass::new(Word::identity(), 1)]
}

pub fn in_symmetry_set(theta: &SyntheticClass) -> bool {
    theta.word.is_empty()
}

/// Picks `count` points per face from candidate lists, rejecting repeats
/// across all faces.
pub fn connection_points<T: Clone + Eq + std::hash::Hash + fmt::Display>(
    candidates: &[Vec<T>],
    count: usize,
) -> Result<Vec<Vec<T>>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(candidates.len());
    for face in candidates {
        if face.len() < count {
            return Err(Error::InsufficientCandidates { need: count, have: face.len() });
        }
        let chosen: Vec<T> = face[..count].to_vec();
        for c in &chosen {
            if !seen.insert(c.clone()) {
                return Err(Error::DuplicateCandidate(c.to_string()));
            }
        }
        out.push(chosen);
    }
    Ok(out)
}

impl MarkovFixture {
    pub fn generate(config: &MarkovConfig) -> Result<Self> {
        config.validate()?;
        let n = config.connection_points;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut pool = Word::all_of_length(config.l as usize);
        pool.shuffle(&mut rng);
        let half = pool.len() / 2;
        let candidates = vec![pool[..half].to_vec(), pool[half..].to_vec()];
        let codes = connection_points(&candidates, n)?;

        // Every (x, y) with x, y on opposite faces, as swept out by the face
        // symmetries acting on the point sets.
        let mut pairs = HashSet::new();
        for a in 0..2u8 {
            for theta in face_symmetry_set() {
                let src = theta.inverse().act_face(a);
                for xi in 0..n as u32 {
                    for yi in 0..n as u32 {
                        let x = ConnectionPoint { face: src, index: xi }.act(&theta);
                        let y = ConnectionPoint { face: 1 - src, index: yi }.act(&theta);
                        pairs.insert((x, y));
                    }
                }
            }
        }
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort();

        let mut words = HashSet::new();
        let mut paths = Vec::with_capacity(pairs.len());
        for (id, (x, y)) in pairs.into_iter().enumerate() {
            let code = &codes[x.face as usize][x.index as usize];
            let word = loop {
                let w = extend_randomly(code, config.word_len, &mut rng);
                if words.insert(w.clone()) {
                    break w;
                }
            };
            paths.push(ModelPath { id, start: x, end: y, word });
        }
        let fx = MarkovFixture { config: config.clone(), codes, paths };
        debug_assert!(fx.paths.iter().all(|p| fx.path_id(p.start, p.end) == Some(p.id)));
        Ok(fx)
    }

    pub fn n(&self) -> usize {
        self.config.connection_points
    }

    pub fn path_id(&self, x: ConnectionPoint, y: ConnectionPoint) -> Option<usize> {
        let n = self.n();
        let ok = x.face < 2 && y.face == 1 - x.face && (x.index as usize) < n && (y.index as usize) < n;
        ok.then(|| (x.face as usize * n + x.index as usize) * n + y.index as usize)
    }

    pub fn path(&self, x: ConnectionPoint, y: ConnectionPoint) -> Option<&ModelPath> {
        self.path_id(x, y).map(|i| &self.paths[i])
    }

    pub fn points(&self, face: u8) -> impl Iterator<Item = ConnectionPoint> {
        (0..self.n() as u32).map(move |index| ConnectionPoint { face, index })
    }

    /// Checks that each face symmetry maps connection points onto connection
    /// points of the image face.
    pub fn verify_point_symmetry(&self) -> bool {
        face_symmetry_set().iter().all(|theta| {
            (0..2u8).all(|f| {
                let img: HashSet<_> = self.points(f).map(|p| p.act(theta)).collect();
                img == self.points(theta.act_face(f)).collect()
            })
        })
    }
}

fn extend_randomly(prefix: &Word, len: usize, rng: &mut ChaCha8Rng) -> Word {
    let mut w = prefix.clone();
    while w.len() < len {
        let last = w.letters().last().copied();
        let choices: Vec<Letter> = Letter::ALL.into_iter().filter(|l| Some(l.inv()) != last).collect();
        w.push(choices[rng.gen_range(0..choices.len())]);
    }
    w
}

/// Whether `(phi, psi)` is in position: the geodesic to `psi·α0` followed by
/// its translate toward `psi·phi·α0` backtracks less than `l`. In the tree
/// this is the free cancellation between the two words.
pub fn is_pip(phi: &SyntheticClass, psi: &SyntheticClass, l: u64) -> bool {
    (psi.word.cancellation(&phi.word) as u64) < l
}

/// The same decision computed from geodesics in the tree.
pub fn is_pip_oracle(phi: &SyntheticClass, psi: &SyntheticClass, l: u64) -> Result<bool> {
    let g = TreeGraph::default();
    let a = &psi.word;
    let b = psi.word.mul(&phi.word);
    let first = Segment::new(g.geodesic(g.basepoint(), a))?;
    let second = Segment::new(g.geodesic(a, &b))?;
    Ok(backtracking_length(&g, &first, &second, HalfInt::ZERO)? < l)
}

/// A path is in position with `psi` when every class of its package is.
pub fn is_pip_path(path: &ModelPath, psi: &SyntheticClass, l: u64) -> bool {
    path.package().iter().all(|d| is_pip(&d.class, psi, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape() {
        let fx = MarkovFixture::generate(&MarkovConfig::small()).unwrap();
        assert_eq!(fx.paths.len(), 2 * 9 * 9);
        assert!(fx.verify_point_symmetry());
        for p in &fx.paths {
            assert_eq!(p.word.len(), fx.config.word_len);
            assert_eq!(p.word.prefix(4), fx.codes[p.start.face as usize][p.start.index as usize]);
        }
    }

    #[test]
    fn duplicate_candidates_are_rejected() {
        let c = vec![vec![1, 2, 3], vec![3, 4, 5]];
        assert!(matches!(connection_points(&c, 3), Err(Error::DuplicateCandidate(_))));
        assert!(matches!(connection_points(&c, 4), Err(Error::InsufficientCandidates { need: 4, have: 3 })));
        assert_eq!(connection_points(&c, 2).unwrap(), vec![vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn pip_matches_oracle() {
        let words = Word::all_of_length(3);
        for a in words.iter().step_by(3) {
            for b in words.iter().step_by(2) {
                let (phi, psi) = (SyntheticClass::new(a.clone(), 0), SyntheticClass::new(b.clone(), 1));
                for l in 1..4 {
                    assert_eq!(is_pip(&phi, &psi, l), is_pip_oracle(&phi, &psi, l).unwrap());
                }
            }
        }
    }
}
