//! Freely reduced words in the free group on `a, b` (inverses `A, B`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Letters are encoded so that `x ^ 1` is the inverse of `x`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(u8);

impl Letter {
    pub const A: Letter = Letter(0);
    pub const A_INV: Letter = Letter(1);
    pub const B: Letter = Letter(2);
    pub const B_INV: Letter = Letter(3);
    pub const ALL: [Letter; 4] = [Letter::A, Letter::A_INV, Letter::B, Letter::B_INV];

    pub fn inv(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Letter {
        Letter((i & 3) as u8)
    }

    pub fn to_char(self) -> char {
        ['a', 'A', 'b', 'B'][self.0 as usize]
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' => Some(Letter::A),
            'A' => Some(Letter::A_INV),
            'b' => Some(Letter::B),
            'B' => Some(Letter::B_INV),
            _ => None,
        }
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut w = Word::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends a letter, cancelling if it inverts the last one.
    pub fn push(&mut self, l: Letter) {
        if self.0.last() == Some(&l.inv()) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn mul(&self, o: &Word) -> Word {
        let k = self.cancellation(o);
        let mut v = self.0[..self.0.len() - k].to_vec();
        v.extend_from_slice(&o.0[k..]);
        Word(v)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(Word::identity(), |acc, _| acc.mul(&base))
    }

    /// Number of letters cancelled in the product `self · o`.
    pub fn cancellation(&self, o: &Word) -> usize {
        self.0
            .iter()
            .rev()
            .zip(o.0.iter())
            .take_while(|(x, y)| x.inv() == **y)
            .count()
    }

    pub fn common_prefix(&self, o: &Word) -> usize {
        self.0.iter().zip(o.0.iter()).take_while(|(x, y)| x == y).count()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Word {
        Word(self.0[n.min(self.0.len())..].to_vec())
    }

    /// Tree distance between the vertices `self` and `o` of the Cayley tree.
    pub fn distance(&self, o: &Word) -> usize {
        let c = self.common_prefix(o);
        self.len() + o.len() - 2 * c
    }

    /// Applies an automorphism given by the images of `a` and `b`.
    pub fn substitute(&self, img_a: &Word, img_b: &Word) -> Word {
        let ia = img_a.inverse();
        let ib = img_b.inverse();
        self.0.iter().fold(Word::identity(), |acc, l| {
            let piece = match *l {
                Letter::A => img_a,
                Letter::A_INV => &ia,
                Letter::B => img_b,
                _ => &ib,
            };
            acc.mul(piece)
        })
    }

    /// All reduced words of length exactly `n`, in lexicographic order of letter codes.
    pub fn all_of_length(n: usize) -> Vec<Word> {
        let mut out = vec![Word::identity()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * 3);
            for w in &out {
                for l in Letter::ALL {
                    if w.0.last() != Some(&l.inv()) {
                        let mut v = w.0.clone();
                        v.push(l);
                        next.push(Word(v));
                    }
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;
    /// Accepts `e` or the empty string for the identity. Input must already be reduced.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::identity());
        }
        let letters: Option<Vec<Letter>> = s.chars().map(Letter::from_char).collect();
        let letters = letters.ok_or_else(|| Error::MalformedLabel(s.to_string()))?;
        let w = Word::from_letters(letters.iter().copied());
        if w.len() != letters.len() {
            return Err(Error::MalformedLabel(s.to_string()));
        }
        Ok(w)
    }
}

/// Parses a possibly unreduced word and reduces it.
pub fn parse_and_reduce(s: &str) -> Result<Word> {
    let s = s.trim();
    if s.is_empty() || s == "e" {
        return Ok(Word::identity());
    }
    s.chars()
        .map(|c| Letter::from_char(c).ok_or_else(|| Error::MalformedLabel(s.to_string())))
        .collect::<Result<Vec<_>>>()
        .map(Word::from_letters)
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        parse_and_reduce(s).unwrap()
    }

    #[test]
    fn reduction_and_labels() {
        assert_eq!(w("aAb"), w("b"));
        assert_eq!(w("e").to_string(), "e");
        assert!("aA".parse::<Word>().is_err());
        assert!("ac".parse::<Word>().is_err());
    }

    #[test]
    fn cancellation_counts() {
        assert_eq!(w("aaaaa").cancellation(&w("AAAAAb")), 5);
        assert_eq!(w("ab").cancellation(&w("Ba")), 1);
        assert_eq!(w("aaaa").cancellation(&w("b")), 0);
    }

    #[test]
    fn words_of_length_count() {
        assert_eq!(Word::all_of_length(3).len(), 4 * 3 * 3);
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        prop::collection::vec(0usize..4, 0..12)
            .prop_map(|v| Word::from_letters(v.into_iter().map(Letter::from_index)))
    }

    proptest! {
        #[test]
        fn group_laws(x in arb_word(), y in arb_word(), z in arb_word()) {
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            prop_assert_eq!(x.mul(&x.inverse()), Word::identity());
        }

        #[test]
        fn tree_distance_is_left_invariant(x in arb_word(), y in arb_word(), g in arb_word()) {
            prop_assert_eq!(x.distance(&y), g.mul(&x).distance(&g.mul(&y)));
            prop_assert_eq!(x.distance(&y), x.inverse().mul(&y).len());
        }
    }
}
