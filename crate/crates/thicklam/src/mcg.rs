//! Mapping classes as actors on curves, weights and tracks.
//!
//! Two backends: the punctured torus, where classes are words in the twists
//! `T`, `S` with an exact `SL(2, Z)` matrix, and a synthetic group `F2 × C2`
//! acting on the free-group tree (word part) and on faces (twist part).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgraph::farey::farey_distance;
use crate::modular::{Mat2, Slope};
use crate::traintrack::torus::{normalize_sign, TorusTrack};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TorusGen {
    T,
    S,
    TInv,
    SInv,
}

impl TorusGen {
    pub const ALL: [TorusGen; 4] = [TorusGen::T, TorusGen::S, TorusGen::TInv, TorusGen::SInv];

    pub fn matrix(self) -> Mat2 {
        match self {
            TorusGen::T => Mat2::t(),
            TorusGen::S => Mat2::s(),
            TorusGen::TInv => Mat2::new(1, -1, 0, 1),
            TorusGen::SInv => Mat2::new(1, 0, -1, 1),
        }
    }

    pub fn inv(self) -> TorusGen {
        match self {
            TorusGen::T => TorusGen::TInv,
            TorusGen::S => TorusGen::SInv,
            TorusGen::TInv => TorusGen::T,
            TorusGen::SInv => TorusGen::S,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            TorusGen::T => 'T',
            TorusGen::S => 'S',
            TorusGen::TInv => 't',
            TorusGen::SInv => 's',
        }
    }

    pub fn from_char(c: char) -> Option<TorusGen> {
        TorusGen::ALL.into_iter().find(|g| g.to_char() == c)
    }
}

/// A torus mapping class: a generator word and its matrix.
#[derive(Clone, Debug)]
pub struct TorusClass {
    pub word: Vec<TorusGen>,
    pub matrix: Mat2,
}

impl TorusClass {
    pub fn identity() -> Self {
        TorusClass { word: Vec::new(), matrix: Mat2::identity() }
    }

    pub fn from_word(word: Vec<TorusGen>) -> Self {
        let mut out = TorusClass::identity();
        for g in word {
            out.push(g);
        }
        out
    }

    /// Right-multiplies by a generator, cancelling adjacent inverses.
    pub fn push(&mut self, g: TorusGen) {
        if self.word.last() == Some(&g.inv()) {
            self.word.pop();
        } else {
            self.word.push(g);
        }
        self.matrix = self.matrix.mul(&g.matrix());
    }

    /// A class known only by its matrix; the word is left empty.
    pub fn from_matrix(matrix: Mat2) -> Self {
        TorusClass { word: Vec::new(), matrix }
    }

    pub fn word_string(&self) -> String {
        if self.word.is_empty() {
            "e".into()
        } else {
            self.word.iter().map(|g| g.to_char()).collect()
        }
    }
}

impl FromStr for TorusClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(TorusClass::identity());
        }
        s.chars()
            .map(|c| TorusGen::from_char(c).ok_or_else(|| Error::MalformedLabel(s.to_string())))
            .collect::<Result<Vec<_>>>()
            .map(TorusClass::from_word)
    }
}

/// An element of `F2 × C2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SyntheticClass {
    pub word: Word,
    pub twist: u8,
}

impl SyntheticClass {
    pub fn identity() -> Self {
        SyntheticClass { word: Word::identity(), twist: 0 }
    }

    pub fn new(word: Word, twist: u8) -> Self {
        SyntheticClass { word, twist: twist % 2 }
    }

    pub fn compose(&self, o: &SyntheticClass) -> SyntheticClass {
        SyntheticClass::new(self.word.mul(&o.word), self.twist ^ o.twist)
    }

    pub fn inverse(&self) -> SyntheticClass {
        SyntheticClass::new(self.word.inverse(), self.twist)
    }

    pub fn act_face(&self, f: u8) -> u8 {
        (f + self.twist) % 2
    }
}

impl fmt::Display for SyntheticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.word, self.twist)
    }
}

impl FromStr for SyntheticClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (w, k) = s.split_once('|').ok_or_else(|| Error::MalformedLabel(s.to_string()))?;
        let k: u8 = k.parse().map_err(|_| Error::MalformedLabel(s.to_string()))?;
        if k > 1 {
            return Err(Error::MalformedLabel(s.to_string()));
        }
        Ok(SyntheticClass::new(w.parse()?, k))
    }
}

#[derive(Clone, Debug)]
pub enum MappingClass {
    Torus(TorusClass),
    Synthetic(SyntheticClass),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "lowercase")]
enum MappingClassDoc {
    Torus { word: String, matrix: Mat2 },
    Synthetic { class: String },
}

impl Serialize for MappingClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MappingClass::Torus(t) => {
                MappingClassDoc::Torus { word: t.word_string(), matrix: t.matrix.clone() }.serialize(s)
            }
            MappingClass::Synthetic(c) => MappingClassDoc::Synthetic { class: c.to_string() }.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MappingClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match MappingClassDoc::deserialize(d)? {
            MappingClassDoc::Torus { word, matrix } => {
                let t: TorusClass = word.parse().map_err(D::Error::custom)?;
                if !t.word.is_empty() && t.matrix != matrix {
                    return Err(D::Error::custom("torus word and matrix disagree"));
                }
                Ok(MappingClass::Torus(TorusClass { word: t.word, matrix }))
            }
            MappingClassDoc::Synthetic { class } => {
                class.parse().map(MappingClass::Synthetic).map_err(D::Error::custom)
            }
        }
    }
}

impl PartialEq for MappingClass {
    /// Torus classes compare in `PSL(2, Z)`; synthetic classes exactly.
    fn eq(&self, o: &Self) -> bool {
        match (self, o) {
            (MappingClass::Torus(a), MappingClass::Torus(b)) => a.matrix.projectively_eq(&b.matrix),
            (MappingClass::Synthetic(a), MappingClass::Synthetic(b)) => a == b,
            _ => false,
        }
    }
}

impl MappingClass {
    pub fn surface(&self) -> &'static str {
        match self {
            MappingClass::Torus(_) => "torus",
            MappingClass::Synthetic(_) => "synthetic",
        }
    }

    pub fn compose(&self, o: &MappingClass) -> Result<MappingClass> {
        match (self, o) {
            (MappingClass::Torus(a), MappingClass::Torus(b)) => {
                let mut out = a.clone();
                if a.word.is_empty() && a.matrix != Mat2::identity() || b.word.is_empty() && b.matrix != Mat2::identity() {
                    out = TorusClass::from_matrix(a.matrix.mul(&b.matrix));
                } else {
                    for &g in &b.word {
                        out.push(g);
                    }
                }
                Ok(MappingClass::Torus(out))
            }
            (MappingClass::Synthetic(a), MappingClass::Synthetic(b)) => Ok(MappingClass::Synthetic(a.compose(b))),
            _ => Err(Error::SurfaceMismatch(self.surface().into(), o.surface().into())),
        }
    }

    pub fn invert(&self) -> MappingClass {
        match self {
            MappingClass::Torus(t) => MappingClass::Torus(TorusClass {
                word: t.word.iter().rev().map(|g| g.inv()).collect(),
                matrix: t.matrix.inverse().expect("determinant ±1"),
            }),
            MappingClass::Synthetic(c) => MappingClass::Synthetic(c.inverse()),
        }
    }

    /// Word norm; an upper bound on the true word length.
    pub fn norm(&self) -> usize {
        match self {
            MappingClass::Torus(t) => t.word.len(),
            MappingClass::Synthetic(c) => c.word.len() + c.twist as usize,
        }
    }

    pub fn act_slope(&self, s: &Slope) -> Result<Slope> {
        match self {
            MappingClass::Torus(t) => Ok(t.matrix.act(s)),
            _ => Err(Error::SurfaceMismatch(self.surface().into(), "torus".into())),
        }
    }

    pub fn act_track(&self, tr: &TorusTrack) -> Result<TorusTrack> {
        match self {
            MappingClass::Torus(t) => Ok(tr.act(&t.matrix)),
            _ => Err(Error::SurfaceMismatch(self.surface().into(), "torus".into())),
        }
    }

    /// Action on homology classes `(p, q)`, hence on chart weight vectors.
    pub fn act_vector(&self, v: (&BigInt, &BigInt)) -> Result<(BigInt, BigInt)> {
        match self {
            MappingClass::Torus(t) => Ok(t.matrix.apply(v)),
            _ => Err(Error::SurfaceMismatch(self.surface().into(), "torus".into())),
        }
    }

    pub fn act_vertex(&self, w: &Word) -> Result<Word> {
        match self {
            MappingClass::Synthetic(c) => Ok(c.word.mul(w)),
            _ => Err(Error::SurfaceMismatch(self.surface().into(), "synthetic".into())),
        }
    }
}

/// Generator sets per surface, for export.
pub fn generator_registry() -> serde_json::Value {
    serde_json::json!({
        "torus": {
            "generators": {"T": "[[1,1],[0,1]]", "S": "[[1,0],[1,1]]"},
            "inverse_letters": {"t": "T", "s": "S"}
        },
        "synthetic": {
            "generators": {"a": "free generator", "b": "free generator", "r": "order-two face swap"},
            "inverse_letters": {"A": "a", "B": "b"},
            "encoding": "word|twist"
        }
    })
}

/// All torus classes of word norm at most `n`, one shortest word per element
/// of `PSL(2, Z)`, in breadth-first order.
pub fn torus_classes_up_to(n: usize) -> Vec<TorusClass> {
    let mut seen: HashSet<Mat2> = HashSet::new();
    let key = |m: &Mat2| normalize_sign(m.clone());
    let mut frontier = vec![TorusClass::identity()];
    seen.insert(key(&Mat2::identity()));
    let mut out = frontier.clone();
    for _ in 0..n {
        let mut next = Vec::new();
        for c in &frontier {
            for g in TorusGen::ALL {
                if c.word.last() == Some(&g.inv()) {
                    continue;
                }
                let mut d = c.clone();
                d.push(g);
                if seen.insert(key(&d.matrix)) {
                    next.push(d);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteSymmetrySet {
    pub elements: Vec<MappingClass>,
    pub norm_bound: usize,
    /// False when the set is only known up to the norm bound.
    pub complete: bool,
}

impl FiniteSymmetrySet {
    pub fn contains(&self, f: &MappingClass) -> bool {
        self.elements.iter().any(|g| g == f)
    }
}

/// All torus classes up to norm `bound` sending some `a` to its partner `b`.
pub fn left_to_right_set(pairs: &[(Slope, Slope)], bound: usize) -> FiniteSymmetrySet {
    let elements = torus_classes_up_to(bound)
        .into_iter()
        .filter(|c| pairs.iter().any(|(a, b)| &c.matrix.act(a) == b))
        .map(MappingClass::Torus)
        .collect();
    FiniteSymmetrySet { elements, norm_bound: bound, complete: false }
}

/// All torus classes up to norm `bound` sending `eta` into `faces`.
pub fn face_symmetries(eta: &Slope, faces: &[Slope], bound: usize) -> FiniteSymmetrySet {
    let elements = torus_classes_up_to(bound)
        .into_iter()
        .filter(|c| faces.contains(&c.matrix.act(eta)))
        .map(MappingClass::Torus)
        .collect();
    FiniteSymmetrySet { elements, norm_bound: bound, complete: false }
}

/// In the synthetic group the face stabilisers are exactly the twist factor.
pub fn synthetic_face_symmetries() -> FiniteSymmetrySet {
    FiniteSymmetrySet {
        elements: (0..2).map(|k| MappingClass::Synthetic(SyntheticClass::new(Word::identity(), k))).collect(),
        norm_bound: 1,
        complete: true,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoAnosovData {
    pub is_pa: bool,
    pub trace: BigInt,
    /// `min d(x, f x)` over the sampled slopes.
    pub displacement_lower_bound: u64,
    /// `d(1/0, f^k 1/0)` for `k = 1..=powers`.
    pub orbit_distances: Vec<u64>,
}

pub fn pseudo_anosov_data(f: &Mat2, samples: &[Slope], powers: usize) -> PseudoAnosovData {
    let trace = f.trace();
    let displacement_lower_bound = samples.iter().map(|s| farey_distance(s, &f.act(s))).min().unwrap_or(0);
    let mut m = Mat2::identity();
    let orbit_distances = (0..powers)
        .map(|_| {
            m = m.mul(f);
            farey_distance(&Slope::infinity(), &m.act(&Slope::infinity()))
        })
        .collect();
    PseudoAnosovData { is_pa: trace.abs() > BigInt::from(2), trace, displacement_lower_bound, orbit_distances }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc(s: &str) -> MappingClass {
        MappingClass::Torus(s.parse().unwrap())
    }

    #[test]
    fn twist_acts_on_slopes() {
        assert_eq!(tc("T").act_slope(&"0/1".parse().unwrap()).unwrap(), "1/1".parse().unwrap());
        assert_eq!(tc("e").act_slope(&"3/7".parse().unwrap()).unwrap(), "3/7".parse().unwrap());
    }

    #[test]
    fn group_laws() {
        let f = tc("TSt");
        let g = tc("ssT");
        let fg = f.compose(&g).unwrap();
        let x: Slope = "2/7".parse().unwrap();
        assert_eq!(fg.act_slope(&x).unwrap(), f.act_slope(&g.act_slope(&x).unwrap()).unwrap());
        assert_eq!(f.compose(&f.invert()).unwrap(), tc("e"));
        assert!(fg.norm() <= f.norm() + g.norm());
        let syn = MappingClass::Synthetic("ab|1".parse().unwrap());
        assert!(matches!(f.compose(&syn), Err(Error::SurfaceMismatch(..))));
    }

    #[test]
    fn pa_detection() {
        let pa = pseudo_anosov_data(&Mat2::new(2, 1, 1, 1), &[Slope::zero()], 3);
        assert!(pa.is_pa);
        assert!(!pseudo_anosov_data(&Mat2::t(), &[Slope::zero()], 3).is_pa);
    }

    #[test]
    fn symmetry_sets_verify_their_equations() {
        let pairs = vec![(Slope::zero(), Slope::zero())];
        let s = left_to_right_set(&pairs, 4);
        assert!(s.contains(&tc("e")));
        for f in &s.elements {
            assert_eq!(f.act_slope(&Slope::zero()).unwrap(), Slope::zero());
            assert_eq!(f.invert().act_slope(&Slope::zero()).unwrap(), Slope::zero());
        }
    }

    #[test]
    fn serde_roundtrip() {
        let f = tc("TTs");
        let j = serde_json::to_string(&f).unwrap();
        let g: MappingClass = serde_json::from_str(&j).unwrap();
        assert_eq!(f, g);
    }
}
