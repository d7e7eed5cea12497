//! Interval backend for surfaces without an exact curve-graph oracle.
//!
//! Upper bounds come from a bounded breadth-first search over user-supplied
//! disjointness data; lower bounds are 1 for distinct curves and 2 when the
//! supplied intersection data reports a positive intersection number.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalSurface {
    pub curves: Vec<String>,
    /// Pairs of disjoint curves (edges of the curve graph).
    pub disjoint: Vec<(String, String)>,
    /// Pairs known to intersect essentially.
    #[serde(default)]
    pub intersecting: Vec<(String, String)>,
    #[serde(default = "default_bound")]
    pub search_bound: u64,
}

fn default_bound() -> u64 {
    16
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceInterval {
    pub lo: u64,
    /// `None` when the bounded search found no path.
    pub hi: Option<u64>,
}

impl IntervalSurface {
    fn index(&self) -> HashMap<&str, usize> {
        self.curves.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect()
    }

    pub fn validate_label(&self, s: &str) -> Result<()> {
        if self.curves.iter().any(|c| c == s) {
            Ok(())
        } else {
            Err(Error::MalformedLabel(s.to_string()))
        }
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<DistanceInterval> {
        self.validate_label(a)?;
        self.validate_label(b)?;
        if a == b {
            return Ok(DistanceInterval { lo: 0, hi: Some(0) });
        }
        let idx = self.index();
        let mut adj = vec![Vec::new(); self.curves.len()];
        for (x, y) in &self.disjoint {
            let (Some(&i), Some(&j)) = (idx.get(x.as_str()), idx.get(y.as_str())) else {
                return Err(Error::MalformedLabel(format!("{x}-{y}")));
            };
            adj[i].push(j);
            adj[j].push(i);
        }
        let inter: HashSet<(usize, usize)> = self
            .intersecting
            .iter()
            .filter_map(|(x, y)| Some((*idx.get(x.as_str())?, *idx.get(y.as_str())?)))
            .flat_map(|(i, j)| [(i, j), (j, i)])
            .collect();
        let (s, t) = (idx[a], idx[b]);
        let lo = if inter.contains(&(s, t)) { 2 } else { 1 };
        let mut dist = vec![u64::MAX; self.curves.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= self.search_bound {
                continue;
            }
            for &v in &adj[u] {
                if dist[v] == u64::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let hi = (dist[t] != u64::MAX).then_some(dist[t]);
        Ok(DistanceInterval { lo: hi.map_or(lo, |h| lo.min(h)), hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pentagon() -> IntervalSurface {
        let curves: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
        let disjoint = (0..5).map(|i| (format!("c{i}"), format!("c{}", (i + 1) % 5))).collect();
        IntervalSurface {
            curves,
            disjoint,
            intersecting: vec![("c0".into(), "c2".into())],
            search_bound: 8,
        }
    }

    #[test]
    fn interval_contains_truth() {
        let s = pentagon();
        assert_eq!(s.distance("c0", "c2").unwrap(), DistanceInterval { lo: 2, hi: Some(2) });
        assert_eq!(s.distance("c0", "c1").unwrap(), DistanceInterval { lo: 1, hi: Some(1) });
        assert_eq!(s.distance("c3", "c3").unwrap(), DistanceInterval { lo: 0, hi: Some(0) });
        assert!(s.distance("c0", "zz").is_err());
    }
}
