//! Encoding `G` into the group: the edge `v → w` becomes
//! `A = Ψ^{N_v} Φ_v Ψ^{-N_w}`.
//!
//! Exponents grow geometrically, so elements are stored as compressed reduced
//! words (runs of a repeated word) and compared without expansion.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use super::{MarkovFixture, MarkovGraphs};
use crate::error::{Error, Result};
use crate::word::{Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub word: Word,
    pub reps: BigInt,
}

/// A reduced word written as a sequence of runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedWord {
    pub runs: Vec<Run>,
}

struct Cursor<'a> {
    runs: &'a [Run],
    i: usize,
    off: BigInt,
}

impl<'a> Cursor<'a> {
    fn new(runs: &'a [Run]) -> Self {
        let mut c = Cursor { runs, i: 0, off: BigInt::zero() };
        c.skip_empty();
        c
    }

    fn total(&self) -> BigInt {
        let r = &self.runs[self.i];
        &r.reps * BigInt::from(r.word.len())
    }

    fn skip_empty(&mut self) {
        while self.i < self.runs.len() && self.total().is_zero() {
            self.i += 1;
        }
    }

    fn done(&self) -> bool {
        self.i >= self.runs.len()
    }

    fn remaining(&self) -> BigInt {
        self.total() - &self.off
    }

    fn period(&self) -> usize {
        self.runs[self.i].word.len()
    }

    /// The next `k` letters, `k` at most `remaining()`.
    fn peek(&self, k: usize) -> Vec<Letter> {
        let w = self.runs[self.i].word.letters();
        let start = (&self.off % BigInt::from(w.len())).to_usize().expect("small residue");
        (0..k).map(|j| w[(start + j) % w.len()]).collect()
    }

    fn advance(&mut self, n: &BigInt) {
        self.off += n;
        if self.off == self.total() {
            self.i += 1;
            self.off = BigInt::zero();
            self.skip_empty();
        }
    }
}

impl CompressedWord {
    pub fn len(&self) -> BigInt {
        self.runs.iter().map(|r| &r.reps * BigInt::from(r.word.len())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len().is_zero()
    }

    /// Letter-by-letter equality. Two aligned runs agreeing on `p + q`
    /// letters agree on their whole overlap, so long overlaps are skipped.
    pub fn same_letters(&self, o: &CompressedWord) -> bool {
        if self.len() != o.len() {
            return false;
        }
        let (mut a, mut b) = (Cursor::new(&self.runs), Cursor::new(&o.runs));
        while !a.done() && !b.done() {
            let step = a.remaining().min(b.remaining());
            let window = a.period() + b.period();
            let k = if step <= BigInt::from(window) { step.to_usize().expect("small step") } else { window };
            if a.peek(k) != b.peek(k) {
                return false;
            }
            a.advance(&step);
            b.advance(&step);
        }
        a.done() && b.done()
    }

    pub fn expand(&self) -> Result<Word> {
        let mut out = Word::identity();
        for r in &self.runs {
            let n = r.reps.to_i64().filter(|&n| n <= 1 << 16).ok_or_else(|| Error::WorkLimit("run too long to expand".into()))?;
            out = out.mul(&r.word.pow(n));
        }
        Ok(out)
    }
}

/// A formal product of powers of `Ψ` and explicit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Psi(BigInt),
    Word(Word),
}

/// Merges adjacent factors of the same kind and drops trivial ones.
pub fn normalize_factors(fs: impl IntoIterator<Item = Factor>) -> Vec<Factor> {
    let mut out: Vec<Factor> = Vec::new();
    for f in fs {
        match (out.last_mut(), f) {
            (Some(Factor::Psi(a)), Factor::Psi(b)) => *a += b,
            (Some(Factor::Word(a)), Factor::Word(b)) => *a = a.mul(&b),
            (_, f) => out.push(f),
        }
        let trivial = match out.last() {
            Some(Factor::Psi(a)) => a.is_zero(),
            Some(Factor::Word(w)) => w.is_empty(),
            None => false,
        };
        if trivial {
            out.pop();
        }
    }
    out
}

/// `Ψ^k Φ Ψ^{-k}` reduced, with `k` large enough that a full copy of `Ψ`
/// survives on each side.
#[derive(Clone, Debug)]
struct Core {
    k: u64,
    word: Word,
    /// `|core| - 2k|Ψ|`: the length a letter gains beyond `(N_v + N_w)|Ψ|`.
    offset: i64,
}

fn core_for(psi: &Word, phi: &Word) -> Result<Core> {
    let k = (phi.len() / psi.len() + 2) as u64;
    let word = psi.pow(k as i64).mul(phi).mul(&psi.pow(-(k as i64)));
    let n = psi.len();
    if word.len() < 2 * n || word.prefix(n) != *psi || word.suffix_from(word.len() - n) != psi.inverse() {
        return Err(Error::Hypothesis(format!("{phi} lies too close to the axis of {psi}")));
    }
    let offset = word.len() as i64 - 2 * k as i64 * n as i64;
    Ok(Core { k, word, offset })
}

fn is_cyclically_reduced(w: &Word) -> bool {
    match (w.letters().first(), w.letters().last()) {
        (Some(a), Some(b)) => w.len() == 1 || a.inv() != *b,
        _ => false,
    }
}

fn is_proper_power(w: &Word) -> bool {
    let n = w.len();
    (1..n).any(|d| n.is_multiple_of(d) && w.prefix(d).pow((n / d) as i64) == *w)
}

/// Whether every power `Ψ^n`, `n ≠ 0`, backtracks less than `l` into `Φ`.
fn backtracking_ok(psi: &Word, phi: &Word, l: u64) -> bool {
    let reach = (phi.len() / psi.len() + 2) as i64;
    (1..=reach).all(|n| [n, -n].iter().all(|&m| (psi.pow(m).cancellation(phi) as u64) < l))
}

/// First cyclically reduced, primitive-looking word of length 3 to 6 that
/// backtracks less than `l` into every vertex class and admits cores.
pub fn choose_psi(fx: &MarkovFixture, gr: &MarkovGraphs) -> Result<Word> {
    let phis: Vec<&Word> = unique_words(gr);
    (3..=6)
        .flat_map(Word::all_of_length)
        .find(|psi| {
            is_cyclically_reduced(psi)
                && !is_proper_power(psi)
                && phis.iter().all(|phi| backtracking_ok(psi, phi, fx.config.l) && core_for(psi, phi).is_ok())
        })
        .ok_or_else(|| Error::NotFound("no suitable loxodromic word up to length 6".into()))
}

fn unique_words(gr: &MarkovGraphs) -> Vec<&Word> {
    let mut seen = HashSet::new();
    gr.vertices.iter().map(|d| &d.class.word).filter(|w| seen.insert(*w)).collect()
}

fn ser_big<S: Serializer>(b: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct SubshiftEncoding {
    pub psi: Word,
    /// Exponents are `base · ratio^v` for vertex index `v`.
    pub base_exponent: u64,
    pub exponent_ratio: u64,
    pub max_exponent_bits: u64,
    pub letters: usize,
    pub edges_encoded: usize,
    pub psi_backtracking_ok: bool,
    /// Letters `v → w` and `w → v` compared letter by letter.
    pub opposite_pairs_compared: usize,
    /// Pairs of distinct letters encoding the same element.
    pub collisions: Vec<[usize; 4]>,
    #[serde(serialize_with = "ser_big")]
    pub min_displacement: BigInt,
    #[serde(skip)]
    exponents: Vec<BigInt>,
    #[serde(skip)]
    cores: Vec<Core>,
    #[serde(skip)]
    phis: Vec<Word>,
}

/// Encodes every edge of `G` and checks that distinct (source, range) pairs
/// give distinct elements.
///
/// Letter lengths are `(N_v + N_w)|Ψ| + o_v` with `|o_v|` bounded. The base
/// exponent is chosen so that `base · |Ψ|` exceeds twice that bound; since
/// sums of two powers of a ratio `D >= 2` determine the pair, equal lengths
/// force `{v, w}` to agree, leaving only `v → w` against `w → v` to compare.
pub fn subshift_encode(fx: &MarkovFixture, gr: &MarkovGraphs) -> Result<SubshiftEncoding> {
    let psi = match &fx.config.psi {
        Some(p) => p.clone(),
        None => choose_psi(fx, gr)?,
    };
    if !is_cyclically_reduced(&psi) || is_proper_power(&psi) {
        return Err(Error::Hypothesis(format!("{psi} is not a primitive cyclically reduced word")));
    }
    let ratio = fx.config.exponent_ratio;
    if ratio < 2 {
        return Err(Error::Invalid("exponent ratio must be at least 2".into()));
    }
    let phis: Vec<Word> = gr.vertices.iter().map(|d| d.class.word.clone()).collect();
    let cores = phis.iter().map(|phi| core_for(&psi, phi)).collect::<Result<Vec<_>>>()?;
    let psi_backtracking_ok = phis.iter().all(|phi| backtracking_ok(&psi, phi, fx.config.l));
    let max_k = cores.iter().map(|c| c.k).max().unwrap_or(0);
    let max_off = cores.iter().map(|c| c.offset.unsigned_abs()).max().unwrap_or(0);
    let base_exponent = max_k.max((2 * max_off) / psi.len() as u64 + 1);
    let mut exponents = Vec::with_capacity(phis.len());
    let mut e = BigInt::from(base_exponent);
    for _ in 0..phis.len() {
        exponents.push(e.clone());
        e *= ratio;
    }
    let mut enc = SubshiftEncoding {
        psi,
        base_exponent,
        exponent_ratio: ratio,
        max_exponent_bits: exponents.last().map_or(0, |e| e.bits()),
        letters: 0,
        edges_encoded: 0,
        psi_backtracking_ok,
        opposite_pairs_compared: 0,
        collisions: Vec::new(),
        min_displacement: BigInt::zero(),
        exponents,
        cores,
        phis,
    };
    let mut letters: Vec<HashSet<usize>> = vec![HashSet::new(); gr.vertices.len()];
    for (v, set) in letters.iter_mut().enumerate() {
        for edge in gr.g_edges_from(v) {
            enc.edges_encoded += 1;
            set.insert(edge.range);
        }
    }
    enc.letters = letters.iter().map(HashSet::len).sum();
    let mut min_disp: Option<BigInt> = None;
    for (v, set) in letters.iter().enumerate() {
        for &w in set {
            let len = enc.letter_length(v, w);
            if min_disp.as_ref().is_none_or(|m| len < *m) {
                min_disp = Some(len);
            }
            if v < w && letters[w].contains(&v) {
                enc.opposite_pairs_compared += 1;
                if enc.letter(v, w).same_letters(&enc.letter(w, v)) {
                    enc.collisions.push([v, w, w, v]);
                }
            }
        }
    }
    enc.min_displacement = min_disp.unwrap_or_default();
    Ok(enc)
}

impl SubshiftEncoding {
    pub fn exponent(&self, v: usize) -> &BigInt {
        &self.exponents[v]
    }

    /// The reduced element of the letter `v → w`.
    pub fn letter(&self, v: usize, w: usize) -> CompressedWord {
        let c = &self.cores[v];
        let k = BigInt::from(c.k);
        CompressedWord {
            runs: vec![
                Run { word: self.psi.clone(), reps: &self.exponents[v] - &k },
                Run { word: c.word.clone(), reps: BigInt::one() },
                Run { word: self.psi.inverse(), reps: &self.exponents[w] - &k },
            ],
        }
    }

    /// Word length of the letter, equal to its displacement of the basepoint.
    pub fn letter_length(&self, v: usize, w: usize) -> BigInt {
        (&self.exponents[v] + &self.exponents[w]) * BigInt::from(self.psi.len()) + BigInt::from(self.cores[v].offset)
    }

    pub fn factors(&self, v: usize, w: usize) -> Vec<Factor> {
        vec![
            Factor::Psi(self.exponents[v].clone()),
            Factor::Word(self.phis[v].clone()),
            Factor::Psi(-self.exponents[w].clone()),
        ]
    }

    /// Whether the product of the letters along a path in `G` collapses to
    /// `Ψ^{N_start} Φ1⋯Φk Ψ^{-N_end}`.
    pub fn telescopes(&self, gr: &MarkovGraphs, path: &[usize]) -> Result<bool> {
        if path.len() < 2 {
            return Err(Error::EmptyFamily);
        }
        if let Some(i) = path.windows(2).position(|w| gr.g_edge(w[0], w[1]).is_none()) {
            return Err(Error::Hypothesis(format!("step {i} is not an edge of G")));
        }
        let product = normalize_factors(path.windows(2).flat_map(|w| self.factors(w[0], w[1])));
        let middle = path[..path.len() - 1].iter().fold(Word::identity(), |acc, &v| acc.mul(&self.phis[v]));
        let expected = normalize_factors([
            Factor::Psi(self.exponents[path[0]].clone()),
            Factor::Word(middle),
            Factor::Psi(-self.exponents[*path.last().unwrap()].clone()),
        ]);
        Ok(product == expected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_graphs, MarkovConfig};
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cw(parts: &[(&str, i64)]) -> CompressedWord {
        CompressedWord { runs: parts.iter().map(|(s, n)| Run { word: w(s), reps: BigInt::from(*n) }).collect() }
    }

    #[test]
    fn compressed_equality_sees_through_run_boundaries() {
        assert!(cw(&[("ab", 3), ("a", 1)]).same_letters(&cw(&[("a", 1), ("ba", 3)])));
        assert!(!cw(&[("ab", 3)]).same_letters(&cw(&[("ba", 3)])));
        let big = BigInt::from(1u64 << 60);
        let x = CompressedWord { runs: vec![Run { word: w("ab"), reps: big.clone() }] };
        let y = CompressedWord {
            runs: vec![Run { word: w("abab"), reps: &big / 2 - 1 }, Run { word: w("ab"), reps: BigInt::from(2) }],
        };
        assert!(x.same_letters(&y));
    }

    proptest! {
        #[test]
        fn compressed_matches_expansion(r in proptest::collection::vec((0usize..4, 0i64..5), 1..4),
                                        s in proptest::collection::vec((0usize..4, 0i64..5), 1..4)) {
            let pool = ["ab", "aba", "b", "abB"];
            let pool = pool.map(|p| Word::from_letters(p.chars().filter_map(Letter::from_char)));
            let mk = |v: &[(usize, i64)]| CompressedWord {
                runs: v.iter().map(|&(i, n)| Run { word: pool[i].clone(), reps: BigInt::from(n) }).collect(),
            };
            let (a, b) = (mk(&r), mk(&s));
            // Only reduced concatenations are meaningful; compare raw letters.
            let raw = |c: &CompressedWord| -> Vec<Letter> {
                c.runs.iter().flat_map(|r| {
                    let n = r.reps.to_usize().unwrap();
                    std::iter::repeat_n(r.word.letters().to_vec(), n).flatten()
                }).collect()
            };
            prop_assert_eq!(a.same_letters(&b), raw(&a) == raw(&b));
        }
    }

    #[test]
    fn encoding_has_no_collisions_and_telescopes() {
        let fx = MarkovFixture::generate(&MarkovConfig::small()).unwrap();
        let gr = build_graphs(&fx).unwrap();
        let enc = subshift_encode(&fx, &gr).unwrap();
        assert!(enc.psi_backtracking_ok);
        assert!(enc.collisions.is_empty());
        assert!(enc.opposite_pairs_compared > 0);
        let e = gr.g_edges_from(0).next().unwrap();
        let f = gr.g_edges_from(e.range).next().unwrap();
        assert!(enc.telescopes(&gr, &[0, e.range, f.range]).unwrap());
        // Small-exponent letters expand, and the compressed form is reduced.
        let l = enc.letter(0, e.range);
        if let Ok(x) = l.expand() {
            assert_eq!(BigInt::from(x.len()), enc.letter_length(0, e.range));
        }
    }

    #[test]
    fn lengths_separate_unordered_pairs() {
        let fx = MarkovFixture::generate(&MarkovConfig::small()).unwrap();
        let gr = build_graphs(&fx).unwrap();
        let enc = subshift_encode(&fx, &gr).unwrap();
        let n = 12;
        let mut seen = std::collections::HashMap::new();
        for v in 0..n {
            for u in 0..n {
                let len = enc.letter_length(v, u);
                if let Some(&(a, b)) = seen.get(&len) {
                    assert!((a, b) == (u, v) || (a, b) == (v, u), "{a},{b} vs {v},{u}");
                }
                seen.insert(len, (v, u));
            }
        }
    }
}
