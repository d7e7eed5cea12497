//! The graphs `G'`, `G''` and `G` of a fixture, and the replay of the two
//! matching properties.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{is_pip_oracle, is_pip_path, ConnectionPoint, MarkovFixture, PackageDatum};
use crate::error::Result;
use crate::mcg::SyntheticClass;
use crate::word::{Letter, Word};

/// An edge of `G` together with the model path it passes through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GEdge {
    pub source: usize,
    pub witness: usize,
    pub range: usize,
}

#[derive(Clone, Debug)]
pub struct MarkovGraphs {
    pub vertices: Vec<PackageDatum>,
    index: HashMap<PackageDatum, usize>,
    /// Vertex ids of each path's package, in package order.
    pub path_data: Vec<Vec<usize>>,
    /// Paths whose package contains each vertex.
    pub owners: Vec<Vec<usize>>,
    /// `G'` out-neighbours: paths in position with the vertex class, sorted.
    pub pip_children: Vec<Vec<u32>>,
    /// Endpoints failing the match fraction, per vertex.
    pub bad_endpoints: Vec<Vec<ConnectionPoint>>,
    /// `G''` out-neighbours: `G'` edges whose endpoints are not bad.
    pub children: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub vertices: usize,
    pub paths: usize,
    pub g1_edges: usize,
    pub g2_edges: usize,
    pub package_edges: usize,
    pub g_edges: usize,
    pub isolated: usize,
}

pub fn build_graphs(fx: &MarkovFixture) -> Result<MarkovGraphs> {
    let mut vertices = Vec::new();
    let mut index = HashMap::new();
    let mut path_data = Vec::with_capacity(fx.paths.len());
    for p in &fx.paths {
        let ids: Vec<usize> = p
            .package()
            .into_iter()
            .map(|d| {
                *index.entry(d.clone()).or_insert_with(|| {
                    vertices.push(d);
                    vertices.len() - 1
                })
            })
            .collect();
        path_data.push(ids);
    }
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (p, ids) in path_data.iter().enumerate() {
        for &v in ids {
            owners[v].push(p);
        }
    }
    let per_vertex: Vec<_> = vertices.par_iter().map(|d| vertex_edges(fx, d)).collect();
    let mut pip_children = Vec::with_capacity(vertices.len());
    let mut bad_endpoints = Vec::with_capacity(vertices.len());
    let mut children = Vec::with_capacity(vertices.len());
    for (pc, bad, ch) in per_vertex {
        pip_children.push(pc);
        bad_endpoints.push(bad);
        children.push(ch);
    }
    Ok(MarkovGraphs { vertices, index, path_data, owners, pip_children, bad_endpoints, children })
}

fn vertex_edges(fx: &MarkovFixture, d: &PackageDatum) -> (Vec<u32>, Vec<ConnectionPoint>, Vec<u32>) {
    let n = fx.n();
    let [a, b] = d.faces;
    let l = fx.config.l;
    let pip: Vec<Vec<bool>> = fx
        .points(a)
        .map(|x| fx.points(b).map(|y| is_pip_path(fx.path(x, y).expect("paired faces"), &d.class, l)).collect())
        .collect();
    let (num, den) = (fx.config.match_fraction.numer().clone(), fx.config.match_fraction.denom().clone());
    let good = |hits: usize| BigInt::from(hits) * &den >= &num * BigInt::from(n);
    let mut bad = Vec::new();
    for (xi, x) in fx.points(a).enumerate() {
        if !good(pip[xi].iter().filter(|&&t| t).count()) {
            bad.push(x);
        }
    }
    for (yi, y) in fx.points(b).enumerate() {
        if !good(pip.iter().filter(|row| row[yi]).count()) {
            bad.push(y);
        }
    }
    let mut pc = Vec::new();
    let mut ch = Vec::new();
    for (xi, x) in fx.points(a).enumerate() {
        for (yi, y) in fx.points(b).enumerate() {
            if pip[xi][yi] {
                let id = fx.path_id(x, y).expect("paired faces") as u32;
                pc.push(id);
                if !bad.contains(&x) && !bad.contains(&y) {
                    ch.push(id);
                }
            }
        }
    }
    (pc, bad, ch)
}

impl MarkovGraphs {
    pub fn vertex_id(&self, d: &PackageDatum) -> Option<usize> {
        self.index.get(d).copied()
    }

    pub fn has_child(&self, v: usize, p: usize) -> bool {
        self.children[v].binary_search(&(p as u32)).is_ok()
    }

    pub fn g_edges_from(&self, v: usize) -> impl Iterator<Item = GEdge> + '_ {
        self.children[v].iter().flat_map(move |&p| {
            self.path_data[p as usize].iter().map(move |&range| GEdge { source: v, witness: p as usize, range })
        })
    }

    /// A witness path for the `G` edge `v → w`, if there is one.
    pub fn g_edge(&self, v: usize, w: usize) -> Option<usize> {
        self.owners[w].iter().copied().find(|&p| self.has_child(v, p))
    }

    /// Whether `z` is an endpoint on one of `v`'s faces that satisfies the
    /// match fraction for `v`.
    pub fn good_for(&self, v: usize, z: ConnectionPoint) -> bool {
        self.vertices[v].faces.contains(&z.face) && !self.bad_endpoints[v].contains(&z)
    }

    pub fn stats(&self) -> GraphStats {
        let g2_edges = self.children.iter().map(Vec::len).sum();
        GraphStats {
            vertices: self.vertices.len(),
            paths: self.path_data.len(),
            g1_edges: self.pip_children.iter().map(Vec::len).sum(),
            g2_edges,
            package_edges: self.path_data.iter().map(Vec::len).sum(),
            g_edges: self
                .children
                .iter()
                .map(|ch| ch.iter().map(|&p| self.path_data[p as usize].len()).sum::<usize>())
                .sum(),
            isolated: self.children.iter().filter(|c| c.is_empty()).count(),
        }
    }

    /// `G''` in DOT form: vertex nodes `v*`, path nodes `p*`. At most
    /// `max_vertices` vertices are written, with their out-edges.
    pub fn to_dot(&self, fx: &MarkovFixture, max_vertices: usize) -> String {
        let mut s = String::from("digraph markov {\n");
        let shown = self.vertices.len().min(max_vertices);
        let mut paths = HashSet::new();
        for v in 0..shown {
            let _ = writeln!(s, "  v{v} [label=\"{}\"];", self.vertices[v]);
            for &p in &self.children[v] {
                let _ = writeln!(s, "  v{v} -> p{p};");
                paths.insert(p as usize);
            }
        }
        let mut paths: Vec<_> = paths.into_iter().collect();
        paths.sort_unstable();
        for p in paths {
            let _ = writeln!(s, "  p{p} [shape=box,label=\"{}\"];", fx.paths[p]);
            for &w in &self.path_data[p] {
                let _ = writeln!(s, "  p{p} -> v{w} [style=dashed];");
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self, fx: &MarkovFixture, max_vertices: usize) -> serde_json::Value {
        let shown = self.vertices.len().min(max_vertices);
        let vertices: Vec<_> = (0..shown)
            .map(|v| {
                serde_json::json!({
                    "id": v,
                    "class": self.vertices[v].class.to_string(),
                    "faces": self.vertices[v].faces,
                    "bad_endpoints": self.bad_endpoints[v].iter().map(|z| z.to_string()).collect::<Vec<_>>(),
                    "children": self.children[v],
                })
            })
            .collect();
        let paths: Vec<_> = fx
            .paths
            .iter()
            .map(|p| {
                serde_json::json!({
                    "id": p.id, "start": p.start.to_string(), "end": p.end.to_string(),
                    "word": p.word.to_string(), "package": self.path_data[p.id],
                })
            })
            .collect();
        serde_json::json!({
            "stats": self.stats(),
            "vertices": vertices,
            "truncated": shown < self.vertices.len(),
            "paths": paths,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MatchingReport {
    pub classes_sampled: usize,
    /// Sampled classes whose non-PIP paths share no endpoint.
    pub not_pip_failures: Vec<String>,
    pub vertices_checked: usize,
    /// Vertices with more than one bad endpoint.
    pub lots_of_matches_failures: Vec<usize>,
    pub max_bad_endpoints: usize,
    pub witnesses_replayed: usize,
    /// `G''` edges whose PIP decision disagrees with the geodesic oracle.
    pub witness_failures: Vec<(usize, usize)>,
}

impl MatchingReport {
    pub fn ok(&self) -> bool {
        self.not_pip_failures.is_empty() && self.lots_of_matches_failures.is_empty() && self.witness_failures.is_empty()
    }
}

/// Random classes with words up to `max_len`, seeded.
pub fn sample_classes(count: usize, max_len: usize, seed: u64) -> Vec<SyntheticClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let mut w = Word::identity();
            while w.len() < len {
                w.push(Letter::from_index(rng.gen_range(0..4)));
            }
            SyntheticClass::new(w, rng.gen_range(0..2))
        })
        .collect()
}

/// Replays both matching properties and every `G''` witness.
///
/// The non-PIP test runs over `samples` together with all vertex classes.
pub fn matching_report(fx: &MarkovFixture, gr: &MarkovGraphs, samples: &[SyntheticClass]) -> MatchingReport {
    let l = fx.config.l;
    let classes: Vec<&SyntheticClass> = samples.iter().chain(gr.vertices.iter().map(|d| &d.class)).collect();
    let not_pip_failures: Vec<String> = classes
        .par_iter()
        .filter_map(|psi| {
            let mut common: Option<HashSet<ConnectionPoint>> = None;
            for p in fx.paths.iter().filter(|p| !is_pip_path(p, psi, l)) {
                let ends: HashSet<_> = [p.start, p.end].into_iter().collect();
                common = Some(match common {
                    None => ends,
                    Some(c) => c.intersection(&ends).copied().collect(),
                });
            }
            matches!(common, Some(c) if c.is_empty()).then(|| psi.to_string())
        })
        .collect();
    let lots_of_matches_failures: Vec<usize> =
        (0..gr.vertices.len()).filter(|&v| gr.bad_endpoints[v].len() > 1).collect();
    let witness_failures: Vec<(usize, usize)> = (0..gr.vertices.len())
        .into_par_iter()
        .flat_map_iter(|v| {
            let psi = &gr.vertices[v].class;
            gr.children[v]
                .iter()
                .filter(move |&&p| {
                    !fx.paths[p as usize]
                        .package()
                        .iter()
                        .all(|d| is_pip_oracle(&d.class, psi, l).unwrap_or(false))
                })
                .map(move |&p| (v, p as usize))
                .collect::<Vec<_>>()
        })
        .collect();
    MatchingReport {
        classes_sampled: classes.len(),
        not_pip_failures,
        vertices_checked: gr.vertices.len(),
        lots_of_matches_failures,
        max_bad_endpoints: gr.bad_endpoints.iter().map(Vec::len).max().unwrap_or(0),
        witnesses_replayed: gr.children.iter().map(Vec::len).sum(),
        witness_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MarkovConfig;

    #[test]
    fn small_fixture_graphs() {
        let fx = MarkovFixture::generate(&MarkovConfig::small()).unwrap();
        let gr = build_graphs(&fx).unwrap();
        let st = gr.stats();
        assert_eq!(st.vertices, 2 * fx.paths.len());
        assert!(st.g2_edges <= st.g1_edges);
        assert_eq!(st.g_edges, (0..st.vertices).map(|v| gr.g_edges_from(v).count()).sum::<usize>());
        let rep = matching_report(&fx, &gr, &sample_classes(50, 24, 1));
        assert!(rep.ok(), "{rep:?}");
        for v in 0..st.vertices {
            for e in gr.g_edges_from(v).take(3) {
                assert_eq!(gr.g_edge(v, e.range), Some(e.witness));
            }
        }
    }
}
