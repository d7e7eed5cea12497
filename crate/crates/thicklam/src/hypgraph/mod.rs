//! Hyperbolic graphs with exact distance oracles: the Farey graph, the free
//! group tree, and an interval backend for general surfaces.

pub mod boundary;
pub mod certify;
pub mod farey;
pub mod interval;
pub mod tree;

use std::fmt;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::Slope;
use crate::numeric::HalfInt;
use crate::word::{Letter, Word};

pub use boundary::{BoundaryApprox, Point, ProductBound};
pub use certify::{CertificateConfig, SeparationReport};
pub use farey::FareyGraph;
pub use interval::{DistanceInterval, IntervalSurface};
pub use tree::TreeGraph;

/// A connected graph whose distance can be computed exactly.
pub trait ExactGraph: Sync {
    type V: Clone + Eq + Hash + fmt::Display + fmt::Debug + Send + Sync;

    fn kind(&self) -> &'static str;
    fn basepoint(&self) -> &Self::V;
    fn parse_vertex(&self, s: &str) -> Result<Self::V>;
    fn distance(&self, a: &Self::V, b: &Self::V) -> u64;
    /// A canonical geodesic from `a` to `b`, endpoints included.
    fn geodesic(&self, a: &Self::V, b: &Self::V) -> Vec<Self::V>;

    fn adjacent(&self, a: &Self::V, b: &Self::V) -> bool {
        self.distance(a, b) == 1
    }
}

/// `(a · b)_base`, kept exactly as a half-integer.
pub fn gromov_product<G: ExactGraph>(g: &G, a: &G::V, b: &G::V, base: &G::V) -> HalfInt {
    let s = g.distance(a, base) + g.distance(b, base);
    HalfInt::from_halves(s as i64 - g.distance(a, b) as i64)
}

/// A vertex path that is a geodesic in the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment<V> {
    pub vertices: Vec<V>,
}

impl<V: Clone + Eq> Segment<V> {
    pub fn new(vertices: Vec<V>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Invalid("empty segment".into()));
        }
        Ok(Segment { vertices })
    }

    pub fn from_geodesic<G: ExactGraph<V = V>>(g: &G, a: &V, b: &V) -> Self {
        Segment { vertices: g.geodesic(a, b) }
    }

    pub fn len(&self) -> u64 {
        self.vertices.len() as u64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }

    pub fn start(&self) -> &V {
        &self.vertices[0]
    }

    pub fn end(&self) -> &V {
        self.vertices.last().expect("nonempty")
    }

    /// Checks consecutive adjacency and that the endpoints realise the length.
    pub fn validate<G: ExactGraph<V = V>>(&self, g: &G) -> Result<()> {
        for (i, w) in self.vertices.windows(2).enumerate() {
            if !g.adjacent(&w[0], &w[1]) {
                return Err(Error::Verification(format!("vertices {i} and {} not adjacent", i + 1)));
            }
        }
        if g.distance(self.start(), self.end()) != self.len() {
            return Err(Error::Verification("segment is not geodesic".into()));
        }
        Ok(())
    }
}

/// Largest `l` such that the last `l` steps of `a`, read backwards, stay within
/// `r` of the first `l` steps of `b`. Requires `a` to end where `b` starts.
pub fn backtracking_length<G: ExactGraph>(
    g: &G,
    a: &Segment<G::V>,
    b: &Segment<G::V>,
    r: HalfInt,
) -> Result<u64> {
    if a.end() != b.start() {
        return Err(Error::NotConcatenable(0));
    }
    let n = a.vertices.len().min(b.vertices.len());
    let la = a.vertices.len();
    let mut l = 0u64;
    for i in 1..n {
        let d = g.distance(&a.vertices[la - 1 - i], &b.vertices[i]);
        if HalfInt::from_int(d as i64) > r {
            break;
        }
        l = i as u64;
    }
    Ok(l)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperbolicityEstimate {
    pub delta: HalfInt,
    pub sample_size: usize,
    pub tuples: u64,
    pub warning: Option<String>,
}

/// Four-point constant over all 4-subsets of `sample`: for each quadruple, half
/// the gap between the largest and middle of the three pair sums.
pub fn hyperbolicity_estimate<G: ExactGraph>(g: &G, sample: &[G::V]) -> HyperbolicityEstimate {
    let n = sample.len();
    let dm: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| g.distance(&sample[i], &sample[j])).collect())
        .collect();
    let (worst, tuples) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0u64;
            let mut count = 0u64;
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        let mut s = [
                            dm[i][j] + dm[k][l],
                            dm[i][k] + dm[j][l],
                            dm[i][l] + dm[j][k],
                        ];
                        s.sort_unstable();
                        worst = worst.max(s[2] - s[1]);
                        count += 1;
                    }
                }
            }
            (worst, count)
        })
        .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    let warning = (n < 4).then(|| format!("sample of {n} points has no quadruples"));
    HyperbolicityEstimate { delta: HalfInt::from_halves(worst as i64), sample_size: n, tuples, warning }
}

/// Seeded reduced slopes `p/q` with `1 <= q <= max_den` and `|p| <= 2·max_den`,
/// plus `1/0` with small probability.
pub fn seeded_slopes(count: usize, max_den: i64, seed: u64) -> Vec<Slope> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            if rng.gen_ratio(1, 50) {
                return Slope::infinity();
            }
            loop {
                let q = rng.gen_range(1..=max_den);
                let p = rng.gen_range(-2 * max_den..=2 * max_den);
                if num_integer::gcd(p, q) == 1 {
                    return Slope::new(p, q).expect("reduced");
                }
            }
        })
        .collect()
}

/// Seeded reduced words of length at most `max_len`.
pub fn seeded_words(count: usize, max_len: usize, seed: u64) -> Vec<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(0..=max_len);
            let mut w = Word::identity();
            while w.len() < n {
                w.push(Letter::from_index(rng.gen_range(0..4)));
            }
            w
        })
        .collect()
}

/// Serialized backend description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendDoc {
    #[serde(default = "one")]
    pub version: u32,
    pub kind: String,
    pub basepoint: String,
    #[serde(default)]
    pub data: serde_json::Value,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug)]
pub enum Backend {
    Farey(FareyGraph),
    Tree(TreeGraph),
    Interval { surface: IntervalSurface, basepoint: String },
}

impl Backend {
    pub fn from_doc(doc: &BackendDoc) -> Result<Self> {
        match doc.kind.as_str() {
            "farey" => Ok(Backend::Farey(FareyGraph { basepoint: doc.basepoint.parse()? })),
            "tree" => Ok(Backend::Tree(TreeGraph { basepoint: doc.basepoint.parse()? })),
            "interval" => {
                let surface: IntervalSurface = serde_json::from_value(doc.data.clone())?;
                surface.validate_label(&doc.basepoint)?;
                Ok(Backend::Interval { surface, basepoint: doc.basepoint.clone() })
            }
            k => Err(Error::Invalid(format!("unknown backend kind {k}"))),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Backend::from_doc(&serde_json::from_str(s)?)
    }

    pub fn to_doc(&self) -> BackendDoc {
        match self {
            Backend::Farey(f) => BackendDoc {
                version: 1,
                kind: "farey".into(),
                basepoint: f.basepoint.to_string(),
                data: serde_json::Value::Null,
            },
            Backend::Tree(t) => BackendDoc {
                version: 1,
                kind: "tree".into(),
                basepoint: t.basepoint.to_string(),
                data: serde_json::Value::Null,
            },
            Backend::Interval { surface, basepoint } => BackendDoc {
                version: 1,
                kind: "interval".into(),
                basepoint: basepoint.clone(),
                data: serde_json::to_value(surface).expect("serializable"),
            },
        }
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<DistanceInterval> {
        let exact = |d: u64| DistanceInterval { lo: d, hi: Some(d) };
        match self {
            Backend::Farey(f) => Ok(exact(f.distance(&a.parse()?, &b.parse()?))),
            Backend::Tree(t) => Ok(exact(t.distance(&a.parse()?, &b.parse()?))),
            Backend::Interval { surface, .. } => surface.distance(a, b),
        }
    }

    pub fn geodesic(&self, a: &str, b: &str) -> Result<Vec<String>> {
        fn labels<V: fmt::Display>(v: Vec<V>) -> Vec<String> {
            v.iter().map(|x| x.to_string()).collect()
        }
        match self {
            Backend::Farey(f) => Ok(labels(f.geodesic(&a.parse()?, &b.parse()?))),
            Backend::Tree(t) => Ok(labels(t.geodesic(&a.parse()?, &b.parse()?))),
            Backend::Interval { .. } => Err(Error::Indeterminate),
        }
    }

    /// Gromov product at the backend basepoint for two vertex labels.
    pub fn product(&self, a: &str, b: &str) -> Result<HalfInt> {
        match self {
            Backend::Farey(f) => Ok(gromov_product(f, &a.parse()?, &b.parse()?, &f.basepoint)),
            Backend::Tree(t) => Ok(gromov_product(t, &a.parse()?, &b.parse()?, &t.basepoint)),
            Backend::Interval { .. } => Err(Error::Indeterminate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Word;

    #[test]
    fn tree_backtracking_is_cancellation() {
        let t = TreeGraph::default();
        let a5: Word = "aaaaa".parse().unwrap();
        let seg_a = Segment::from_geodesic(&t, &Word::identity(), &a5);
        let target = a5.mul(&"AAb".parse().unwrap());
        let seg_b = Segment::from_geodesic(&t, &a5, &target);
        assert_eq!(backtracking_length(&t, &seg_a, &seg_b, HalfInt::ZERO).unwrap(), 2);
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let t = TreeGraph::default();
        let sample: Vec<Word> = (0..=3).flat_map(Word::all_of_length).take(40).collect();
        assert_eq!(hyperbolicity_estimate(&t, &sample).delta, HalfInt::ZERO);
    }

    #[test]
    fn backend_doc_roundtrip() {
        let b = Backend::from_json(r#"{"kind":"farey","basepoint":"1/0"}"#).unwrap();
        assert_eq!(b.distance("0/1", "1/0").unwrap().hi, Some(1));
        let doc = serde_json::to_string(&b.to_doc()).unwrap();
        assert!(Backend::from_json(&doc).is_ok());
    }
}
