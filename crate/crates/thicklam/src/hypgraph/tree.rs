//! The Cayley tree of the free group of rank two.

use super::ExactGraph;
use crate::error::Result;
use crate::word::{Letter, Word};

#[derive(Clone, Debug, Default)]
pub struct TreeGraph {
    pub basepoint: Word,
}

impl ExactGraph for TreeGraph {
    type V = Word;

    fn kind(&self) -> &'static str {
        "tree"
    }

    fn basepoint(&self) -> &Word {
        &self.basepoint
    }

    fn parse_vertex(&self, s: &str) -> Result<Word> {
        s.parse()
    }

    fn distance(&self, a: &Word, b: &Word) -> u64 {
        a.distance(b) as u64
    }

    fn geodesic(&self, a: &Word, b: &Word) -> Vec<Word> {
        let c = a.common_prefix(b);
        let mut out: Vec<Word> = (c..=a.len()).rev().map(|k| a.prefix(k)).collect();
        out.extend((c + 1..=b.len()).map(|k| b.prefix(k)));
        out
    }
}

/// The vertex reached by reading `letters` from `w`.
pub fn walk(w: &Word, letters: &[Letter]) -> Word {
    let mut out = w.clone();
    for &l in letters {
        out.push(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_letter_difference() {
        let t = TreeGraph::default();
        assert_eq!(t.distance(&"ab".parse().unwrap(), &"a".parse().unwrap()), 1);
    }

    #[test]
    fn geodesic_through_meet_point() {
        let t = TreeGraph::default();
        let g = t.geodesic(&"ab".parse().unwrap(), &"aBa".parse().unwrap());
        let labels: Vec<String> = g.iter().map(|w| w.to_string()).collect();
        assert_eq!(labels, ["ab", "a", "aB", "aBa"]);
    }
}
