//! The punctured torus: the standard track, its chart to slopes, and
//! split sequences as continued-fraction steps.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{HalfBranch, Surface, Switch, TrainTrack, WeightVector};
use crate::error::{Error, Result};
use crate::modular::{Mat2, Slope};
use crate::numeric::Q;

pub const BRANCH_A: usize = 0;
pub const BRANCH_B: usize = 1;
pub const BRANCH_C: usize = 2;

/// Two switches joined by branches `a`, `b` and the large branch `c`, with
/// switch conditions `c = a + b` at both ends.
pub fn standard_track() -> TrainTrack {
    let sw_u = Switch { sides: [vec![HalfBranch(BRANCH_A, 1), HalfBranch(BRANCH_B, 1)], vec![HalfBranch(BRANCH_C, 0)]] };
    let sw_v = Switch { sides: [vec![HalfBranch(BRANCH_C, 1)], vec![HalfBranch(BRANCH_B, 0), HalfBranch(BRANCH_A, 0)]] };
    let mut t = TrainTrack::new(Surface::PUNCTURED_TORUS, vec![sw_u, sw_v], 3).expect("valid standard track");
    t.model_index = Some(0);
    t
}

/// An embedded standard-type track on the torus, determined by its cone of
/// measures: `basis · (a, b)` with `a, b >= 0` gives the carried homology
/// classes. The basis has determinant 1 and is defined up to sign.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusTrack {
    pub basis: Mat2,
}

impl PartialEq for TorusTrack {
    fn eq(&self, o: &Self) -> bool {
        self.basis.projectively_eq(&o.basis)
    }
}

impl Eq for TorusTrack {}

/// `[[0,-1],[1,0]]`, rotating the positive quadrant onto the negative-slope one.
pub fn rotation() -> Mat2 {
    Mat2::new(0, -1, 1, 0)
}

/// The two model tracks: positive slopes and negative slopes.
pub fn models() -> Vec<TorusTrack> {
    vec![TorusTrack { basis: Mat2::identity() }, TorusTrack { basis: rotation() }]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitLetter {
    R,
    L,
    C,
}

impl SplitLetter {
    pub fn to_char(self) -> char {
        match self {
            SplitLetter::R => 'R',
            SplitLetter::L => 'L',
            SplitLetter::C => 'C',
        }
    }
}

impl TorusTrack {
    pub fn new(basis: Mat2) -> Result<Self> {
        if basis.det() != BigInt::one() {
            return Err(Error::Invalid(format!("basis {basis} must have determinant 1")));
        }
        Ok(TorusTrack { basis })
    }

    pub fn act(&self, f: &Mat2) -> TorusTrack {
        TorusTrack { basis: f.mul(&self.basis) }
    }

    /// Chart coordinates `(a, b)` of a homology class, or `None` if not carried.
    pub fn chart(&self, p: &BigInt, q: &BigInt) -> Option<(BigInt, BigInt)> {
        let inv = self.basis.inverse().expect("determinant 1");
        let (a, b) = inv.apply((p, q));
        if !a.is_negative() && !b.is_negative() {
            Some((a, b))
        } else if !a.is_positive() && !b.is_positive() {
            Some((-a, -b))
        } else {
            None
        }
    }

    pub fn carries_slope(&self, s: &Slope) -> bool {
        self.chart(s.p(), s.q()).is_some()
    }

    /// Branch weights on the standard combinatorics.
    pub fn weights(a: &BigInt, b: &BigInt) -> WeightVector {
        let q = |x: &BigInt| Q::from_integer(x.clone());
        WeightVector(vec![q(a), q(b), q(&(a + b))])
    }

    /// One full split toward chart weights `(a, b)`. A tie splits centrally and
    /// lands on the face where the second weight vanishes.
    pub fn full_split(&self, a: &BigInt, b: &BigInt) -> (SplitLetter, TorusTrack, BigInt, BigInt) {
        match a.cmp(b) {
            std::cmp::Ordering::Greater => (SplitLetter::R, self.act_right(&Mat2::t()), a - b, b.clone()),
            std::cmp::Ordering::Less => (SplitLetter::L, self.act_right(&Mat2::s()), a.clone(), b - a),
            std::cmp::Ordering::Equal => (SplitLetter::C, self.act_right(&Mat2::s()), a.clone(), BigInt::zero()),
        }
    }

    fn act_right(&self, m: &Mat2) -> TorusTrack {
        TorusTrack { basis: self.basis.mul(m) }
    }
}

/// The model chart carrying a slope: positive (and `0/1`, `1/0`) slopes use
/// model 0, negative slopes model 1.
pub fn model_for(s: &Slope) -> usize {
    if s.p().is_negative() {
        1
    } else {
        0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusSplitSequence {
    pub model: usize,
    pub letters: Vec<SplitLetter>,
    pub tracks: Vec<TorusTrack>,
    /// Set when the target weight vanishes on a branch before any central split.
    pub terminal_face: Option<usize>,
}

impl TorusSplitSequence {
    pub fn word(&self) -> String {
        self.letters.iter().map(|l| l.to_char()).collect()
    }

    /// Run lengths of the letters, the final `C` counting toward the last run;
    /// a leading `L` contributes a zeroth digit.
    pub fn digits(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        let mut last: Option<SplitLetter> = None;
        for &l in &self.letters {
            match l {
                SplitLetter::C => match out.last_mut() {
                    Some(d) => *d += 1,
                    None => out.push(1),
                },
                _ if Some(l) == last => *out.last_mut().unwrap() += 1,
                _ => {
                    if out.is_empty() && l == SplitLetter::L {
                        out.push(0);
                    }
                    out.push(1);
                    last = Some(l);
                }
            }
        }
        out
    }
}

/// Full splits from the model track toward a slope, at most `max_steps`.
pub fn split_sequence(s: &Slope, max_steps: usize) -> TorusSplitSequence {
    let model = model_for(s);
    let mut track = models()[model].clone();
    let (mut a, mut b) = track.chart(s.p(), s.q()).expect("model chart carries the slope");
    let mut letters = Vec::new();
    let mut tracks = vec![track.clone()];
    let mut terminal_face = None;
    while letters.len() < max_steps {
        if a.is_zero() || b.is_zero() {
            terminal_face = Some(if a.is_zero() { super::torus::BRANCH_A } else { BRANCH_B });
            break;
        }
        let (l, t, na, nb) = track.full_split(&a, &b);
        letters.push(l);
        tracks.push(t.clone());
        track = t;
        a = na;
        b = nb;
        if l == SplitLetter::C {
            break;
        }
    }
    TorusSplitSequence { model, letters, tracks, terminal_face }
}

/// Every pair `(i, F)` with `F · models[i] = track`, `F` in `SL(2, Z)` up to sign.
pub fn model_recognition(track: &TorusTrack, models: &[TorusTrack]) -> Result<Vec<(usize, Mat2)>> {
    if models.is_empty() {
        return Err(Error::Invalid("empty model set".into()));
    }
    let out: Vec<(usize, Mat2)> = models
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let f = track.basis.mul(&m.basis.inverse().ok()?);
            (f.det() == BigInt::one() && &m.act(&f) == track).then(|| (i, normalize_sign(f)))
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NoMatch);
    }
    Ok(out)
}

/// Representative of `±F` whose first nonzero entry is positive.
pub fn normalize_sign(f: Mat2) -> Mat2 {
    let first = [&f.a, &f.b, &f.c, &f.d].into_iter().find(|x| !x.is_zero()).cloned();
    match first {
        Some(x) if x.is_negative() => f.neg(),
        _ => f,
    }
}

/// Euclidean quotients of `a / b` (independent of the split machinery).
pub fn euclid_digits(a: &BigInt, b: &BigInt) -> Vec<BigInt> {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut out = Vec::new();
    while !b.is_zero() {
        let (d, r) = a.div_mod_floor(&b);
        out.push(d);
        a = b;
        b = r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traintrack::recognition::isomorphisms;
    use crate::traintrack::SplitSide;

    fn sl(s: &str) -> Slope {
        s.parse().unwrap()
    }

    #[test]
    fn eight_fifths_is_rlrlc() {
        let seq = split_sequence(&sl("8/5"), 100);
        assert_eq!(seq.word(), "RLRLC");
        assert_eq!(seq.digits(), vec![1, 1, 1, 2]);
        assert_eq!(split_sequence(&sl("5/8"), 100).digits(), vec![0, 1, 1, 1, 2]);
        assert_eq!(split_sequence(&sl("3/1"), 100).digits(), vec![3]);
        assert_eq!(split_sequence(&sl("1/1"), 100).digits(), vec![1]);
    }

    #[test]
    fn terminal_faces() {
        assert_eq!(split_sequence(&sl("0/1"), 10).terminal_face, Some(BRANCH_A));
        assert_eq!(split_sequence(&sl("1/0"), 10).terminal_face, Some(BRANCH_B));
    }

    #[test]
    fn chart_split_matches_combinatorial_split() {
        // Splitting the standard track yields a track of the same combinatorial
        // type; its carrying matrix restricted to the (a, b) roles is T or S.
        let t = standard_track();
        for (w, side) in [([5, 3], SplitSide::Right), ([3, 5], SplitSide::Left)] {
            let wv = TorusTrack::weights(&w[0].into(), &w[1].into());
            assert_eq!(t.split_side_for(BRANCH_C, &wv).unwrap(), side);
            let (nt, m) = t.split(BRANCH_C, side).unwrap();
            assert!(!isomorphisms(&nt, &t).is_empty());
            let nw = t.split_weights(BRANCH_C, side, &wv).unwrap();
            assert_eq!(m.apply(&nw).unwrap(), wv);
        }
    }

    #[test]
    fn recognition_of_translates() {
        let ms = models();
        let f = Mat2::t().mul(&Mat2::s()).mul(&Mat2::t());
        let track = ms[1].act(&f);
        let found = model_recognition(&track, &ms).unwrap();
        assert!(found.iter().any(|(i, g)| *i == 1 && g.projectively_eq(&f)));
        for (i, g) in &found {
            assert_eq!(&ms[*i].act(g), &track);
        }
        let id = model_recognition(&ms[0], &ms).unwrap();
        assert!(id.contains(&(0, Mat2::identity())));
    }
}
