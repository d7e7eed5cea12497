//! Translation surfaces as polygon gluings, saddle connections by
//! development, the diagonal flow, torus covers and the expansion harness.

pub mod cover;
pub mod expansion;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_q, q_int, q_str, Q};

pub use cover::{TorusCover, TorusFamily};
pub use expansion::{
    build_slit_family, continued_fraction, find_vertical_saddle, sheared_square_family, verify_expansion, ExpansionReport,
    FlowPath, PeriodChart, SlitConfig, VerticalSaddle,
};

/// An exact plane vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vec2 {
    #[serde(with = "q_str")]
    pub x: Q,
    #[serde(with = "q_str")]
    pub y: Q,
}

impl Vec2 {
    pub fn new(x: Q, y: Q) -> Self {
        Vec2 { x, y }
    }

    pub fn int(x: i64, y: i64) -> Self {
        Vec2 { x: q_int(x), y: q_int(y) }
    }

    pub fn zero() -> Self {
        Vec2::int(0, 0)
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x + &o.x, y: &self.y + &o.y }
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2 { x: &self.x - &o.x, y: &self.y - &o.y }
    }

    pub fn scale(&self, k: &Q) -> Vec2 {
        Vec2 { x: &self.x * k, y: &self.y * k }
    }

    pub fn neg(&self) -> Vec2 {
        Vec2 { x: -&self.x, y: -&self.y }
    }

    pub fn cross(&self, o: &Vec2) -> Q {
        &self.x * &o.y - &self.y * &o.x
    }

    pub fn dot(&self, o: &Vec2) -> Q {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn norm2(&self) -> Q {
        self.dot(self)
    }

    pub fn length(&self) -> f64 {
        crate::numeric::q_to_f64(&self.norm2()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// `diag(a, 1/a)`.
    pub fn flow(&self, a: &Q) -> Vec2 {
        Vec2 { x: &self.x * a, y: &self.y / a }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (crate::numeric::q_to_f64(&self.x), crate::numeric::q_to_f64(&self.y))
    }

    /// Half-plane index for the angular order: `[0, π)` is 0, `[π, 2π)` is 1.
    fn half(&self) -> u8 {
        if self.y.is_positive() || self.y.is_zero() && self.x.is_positive() {
            0
        } else {
            1
        }
    }

    /// Exact comparison of polar angles in `[0, 2π)`.
    pub fn angle_cmp(&self, o: &Vec2) -> Ordering {
        self.half().cmp(&o.half()).then_with(|| Q::zero().cmp(&self.cross(o)))
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_q(&self.x), fmt_q(&self.y))
    }
}

/// Nearest integer, halves rounded up.
pub(crate) fn q_round(q: &Q) -> num_bigint::BigInt {
    (q + Q::new(1.into(), 2.into())).floor().to_integer()
}

/// A vertex class of a surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Singularity {
    pub id: usize,
    /// Cone angle divided by 2π.
    pub angle: u32,
    /// Corners `(polygon, vertex)` in counterclockwise order.
    pub corners: Vec<(usize, usize)>,
}

/// Polygons glued edge to edge by translations. Edge `e` of a polygon runs
/// from vertex `e` to vertex `e + 1`; `gluings[p][e]` names the edge it is
/// glued to, which must be the same vector reversed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationSurface {
    pub polygons: Vec<Vec<Vec2>>,
    pub gluings: Vec<Vec<(usize, usize)>>,
    pub singularities: Vec<Singularity>,
    /// `vertex_class[p][v]` is the singularity at that corner.
    pub vertex_class: Vec<Vec<usize>>,
}

impl TranslationSurface {
    pub fn new(polygons: Vec<Vec<Vec2>>, gluings: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        let bad = |m: String| Err(Error::Invalid(m));
        if polygons.len() != gluings.len() {
            return bad("one gluing list per polygon".into());
        }
        for (p, poly) in polygons.iter().enumerate() {
            let n = poly.len();
            if n < 3 || gluings[p].len() != n {
                return bad(format!("polygon {p} has {n} vertices and {} gluings", gluings[p].len()));
            }
            // Strictly convex and counterclockwise.
            for i in 0..n {
                let a = poly[(i + 1) % n].sub(&poly[i]);
                let b = poly[(i + 2) % n].sub(&poly[(i + 1) % n]);
                if !a.cross(&b).is_positive() {
                    return bad(format!("polygon {p} is not strictly convex at vertex {}", (i + 1) % n));
                }
            }
            for (e, &(q, f)) in gluings[p].iter().enumerate() {
                let back = gluings.get(q).and_then(|g| g.get(f));
                if back != Some(&(p, e)) || (q, f) == (p, e) {
                    return bad(format!("edge ({p}, {e}) is not glued symmetrically"));
                }
                let u = edge_vector(&polygons[p], e);
                let v = edge_vector(&polygons[q], f);
                if u.add(&v) != Vec2::zero() {
                    return bad(format!("edges ({p}, {e}) and ({q}, {f}) are not opposite translates"));
                }
            }
        }
        let mut s = TranslationSurface { polygons, gluings, singularities: Vec::new(), vertex_class: Vec::new() };
        s.classify_vertices();
        Ok(s)
    }

    fn classify_vertices(&mut self) {
        let mut class: Vec<Vec<Option<usize>>> = self.polygons.iter().map(|p| vec![None; p.len()]).collect();
        let mut sings = Vec::new();
        for p in 0..self.polygons.len() {
            for v in 0..self.polygons[p].len() {
                if class[p][v].is_some() {
                    continue;
                }
                let id = sings.len();
                let mut corners = Vec::new();
                let mut cur = (p, v);
                loop {
                    class[cur.0][cur.1] = Some(id);
                    corners.push(cur);
                    cur = self.next_ccw(cur);
                    if cur == (p, v) {
                        break;
                    }
                }
                let angle = self.wrap_count(&corners);
                sings.push(Singularity { id, angle, corners });
            }
        }
        self.vertex_class = class.into_iter().map(|r| r.into_iter().map(|c| c.expect("all corners visited")).collect()).collect();
        self.singularities = sings;
    }

    /// The corner following `(p, v)` counterclockwise around its vertex:
    /// cross the incoming edge.
    fn next_ccw(&self, (p, v): (usize, usize)) -> (usize, usize) {
        let n = self.polygons[p].len();
        self.gluings[p][(v + n - 1) % n]
    }

    /// Outgoing edge direction at a corner.
    fn out_dir(&self, (p, v): (usize, usize)) -> Vec2 {
        edge_vector(&self.polygons[p], v)
    }

    /// Full turns made by the outgoing directions around a vertex, counted
    /// exactly as passages through the positive real direction.
    fn wrap_count(&self, corners: &[(usize, usize)]) -> u32 {
        // Each corner turns by less than π, so the angle drops exactly when
        // the positive real direction is passed.
        (0..corners.len())
            .filter(|&k| {
                let u = self.out_dir(corners[k]);
                let w = self.out_dir(corners[(k + 1) % corners.len()]);
                w.angle_cmp(&u) == Ordering::Less
            })
            .count() as u32
    }

    pub fn area(&self) -> Q {
        self.polygons
            .iter()
            .map(|p| (0..p.len()).map(|i| p[i].cross(&p[(i + 1) % p.len()])).fold(Q::zero(), |a, b| a + b))
            .fold(Q::zero(), |a, b| a + b)
            / q_int(2)
    }

    pub fn edge_count(&self) -> usize {
        self.polygons.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Genus from the Euler characteristic, after checking it against the
    /// cone angles: `Σ (k - 1) = 2g - 2`.
    pub fn genus(&self) -> Result<u32> {
        let chi = self.singularities.len() as i64 - self.edge_count() as i64 + self.polygons.len() as i64;
        let excess: i64 = self.singularities.iter().map(|s| s.angle as i64 - 1).sum();
        if chi > 2 || chi.is_odd() || excess != -chi {
            return Err(Error::Integrity(format!("Euler characteristic {chi} disagrees with cone excess {excess}")));
        }
        Ok(((2 - chi) / 2) as u32)
    }

    /// Stratum label such as `H(1,1)` with marked points listed as zeros.
    pub fn stratum(&self) -> String {
        let mut orders: Vec<u32> = self.singularities.iter().map(|s| s.angle - 1).collect();
        orders.sort_unstable_by(|a, b| b.cmp(a));
        let zeros: Vec<String> = orders.iter().filter(|&&k| k > 0).map(u32::to_string).collect();
        let marked = orders.iter().filter(|&&k| k == 0).count();
        let base = format!("H({})", zeros.join(","));
        if marked == 0 {
            base
        } else {
            format!("{base}+{marked} marked")
        }
    }

    /// Applies `diag(a, 1/a)` to every polygon.
    pub fn flow(&self, a: &Q) -> TranslationSurface {
        let polygons = self.polygons.iter().map(|p| p.iter().map(|v| v.flow(a)).collect()).collect();
        TranslationSurface { polygons, ..self.clone() }
    }

    /// Fan-triangulates every polygon from its first vertex.
    pub fn triangulate(&self) -> Result<TranslationSurface> {
        let mut tri_of: Vec<Vec<(usize, usize)>> = Vec::new(); // polygon edge -> (triangle, edge)
        let mut polys = Vec::new();
        let mut glue: Vec<Vec<(usize, usize)>> = Vec::new();
        for poly in &self.polygons {
            let n = poly.len();
            let base = polys.len();
            let mut map = vec![(0, 0); n];
            for k in 0..n - 2 {
                polys.push(vec![poly[0].clone(), poly[k + 1].clone(), poly[k + 2].clone()]);
                let t = base + k;
                map[k + 1] = (t, 1);
                let mut g = vec![(usize::MAX, 0); 3];
                if k > 0 {
                    g[0] = (t - 1, 2);
                }
                if k + 1 < n - 2 {
                    g[2] = (t + 1, 0);
                }
                glue.push(g);
            }
            map[0] = (base, 0);
            map[n - 1] = (base + n - 3, 2);
            tri_of.push(map);
        }
        for (p, poly) in self.polygons.iter().enumerate() {
            for e in 0..poly.len() {
                let (t, te) = tri_of[p][e];
                let (q, f) = self.gluings[p][e];
                glue[t][te] = tri_of[q][f];
            }
        }
        TranslationSurface::new(polys, glue)
    }
}

pub(crate) fn edge_vector(poly: &[Vec2], e: usize) -> Vec2 {
    poly[(e + 1) % poly.len()].sub(&poly[e])
}

/// A saddle connection found by development.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub hol: Vec2,
    pub start: usize,
    pub end: usize,
    /// Triangles crossed after leaving the start corner.
    pub witness: Vec<usize>,
}

/// Squared distance from the origin to the segment `[a, b]`.
fn dist2_to_segment(a: &Vec2, b: &Vec2) -> Q {
    let d = b.sub(a);
    let len2 = d.norm2();
    let u = -a.dot(&d) / &len2;
    let u = u.clamp(Q::zero(), Q::one());
    a.add(&d.scale(&u)).norm2()
}

struct Developer<'a> {
    s: &'a TranslationSurface,
    r2: Q,
    work: usize,
    limit: usize,
    out: Vec<SaddleConnection>,
}

impl Developer<'_> {
    /// Crosses edge `e` of triangle `t`, developed as `a → b` with the
    /// visibility wedge between the directions `lo` and `hi`.
    fn explore(&mut self, start: usize, t: usize, e: usize, a: Vec2, b: Vec2, lo: &Vec2, hi: &Vec2, witness: &mut Vec<usize>) -> Result<()> {
        if dist2_to_segment(&a, &b) > self.r2 {
            return Ok(());
        }
        self.work += 1;
        if self.work > self.limit {
            return Err(Error::WorkLimit(format!("development exceeded {} steps", self.limit)));
        }
        let (t2, e2) = self.s.gluings[t][e];
        let tri = &self.s.polygons[t2];
        // Edge e2 runs b → a in the neighbour; its third vertex develops to c.
        let c = b.add(&tri[(e2 + 2) % 3].sub(&tri[e2]));
        witness.push(t2);
        let left_of_lo = lo.cross(&c).is_positive();
        let right_of_hi = c.cross(hi).is_positive();
        if left_of_lo && right_of_hi {
            if c.norm2() <= self.r2 {
                self.out.push(SaddleConnection {
                    hol: c.clone(),
                    start,
                    end: self.s.vertex_class[t2][(e2 + 2) % 3],
                    witness: witness.clone(),
                });
            }
            self.explore(start, t2, (e2 + 1) % 3, a, c.clone(), lo, &c, witness)?;
            self.explore(start, t2, (e2 + 2) % 3, c.clone(), b, &c, hi, witness)?;
        } else if !left_of_lo {
            self.explore(start, t2, (e2 + 2) % 3, c, b, lo, hi, witness)?;
        } else {
            self.explore(start, t2, (e2 + 1) % 3, a, c, lo, hi, witness)?;
        }
        witness.pop();
        Ok(())
    }
}

/// Every oriented saddle connection with `|hol| ≤ bound`, found by
/// developing the triangles around each corner inside its visibility wedge.
pub fn saddle_census(surface: &TranslationSurface, bound: &Q, work_limit: usize) -> Result<Vec<SaddleConnection>> {
    if !bound.is_positive() {
        return Err(Error::Invalid("census bound must be positive".into()));
    }
    let tri = if surface.polygons.iter().all(|p| p.len() == 3) { surface.clone() } else { surface.triangulate()? };
    let mut dev = Developer { s: &tri, r2: bound * bound, work: 0, limit: work_limit, out: Vec::new() };
    for t in 0..tri.polygons.len() {
        for i in 0..3 {
            let start = tri.vertex_class[t][i];
            let a = tri.polygons[t][(i + 1) % 3].sub(&tri.polygons[t][i]);
            let b = tri.polygons[t][(i + 2) % 3].sub(&tri.polygons[t][i]);
            if a.norm2() <= dev.r2 {
                dev.out.push(SaddleConnection { hol: a.clone(), start, end: tri.vertex_class[t][(i + 1) % 3], witness: vec![t] });
            }
            let mut witness = vec![t];
            dev.explore(start, t, (i + 1) % 3, a.clone(), b.clone(), &a, &b, &mut witness)?;
        }
    }
    let mut out = dev.out;
    out.sort_by(|p, q| p.hol.norm2().cmp(&q.hol.norm2()).then_with(|| p.hol.angle_cmp(&q.hol)).then(p.start.cmp(&q.start)));
    Ok(out)
}

/// The unit square with opposite sides glued and its corner marked.
pub fn square_torus() -> TranslationSurface {
    let sq = vec![Vec2::int(0, 0), Vec2::int(1, 0), Vec2::int(1, 1), Vec2::int(0, 1)];
    TranslationSurface::new(vec![sq], vec![vec![(0, 2), (0, 3), (0, 0), (0, 1)]]).expect("square torus is valid")
}

/// Brute-force census on the square torus: primitive integer vectors.
pub fn square_torus_oracle(bound: &Q) -> Vec<Vec2> {
    let r = bound.ceil().to_integer().to_i64().unwrap_or(0);
    let r2 = bound * bound;
    let mut out = Vec::new();
    for p in -r..=r {
        for q in -r..=r {
            if (p, q) != (0, 0) && p.gcd(&q) == 1 && q_int(p * p + q * q) <= r2 {
                out.push(Vec2::int(p, q));
            }
        }
    }
    out
}

/// Multiset comparison of holonomies.
pub fn same_holonomies(a: &[Vec2], b: &[Vec2]) -> bool {
    fn count(v: &[Vec2]) -> HashMap<&Vec2, usize> {
        let mut m = HashMap::new();
        for x in v {
            *m.entry(x).or_default() += 1;
        }
        m
    }
    count(a) == count(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::q_frac;

    #[test]
    fn square_torus_census_matches_oracle() {
        let sq = square_torus();
        assert_eq!(sq.genus().unwrap(), 1);
        assert_eq!(sq.singularities.len(), 1);
        assert_eq!(sq.singularities[0].angle, 1);
        let c = saddle_census(&sq, &q_frac(3, 2), 10_000).unwrap();
        assert_eq!(c.len(), 8);
        for r in [q_frac(3, 2), q_int(3), q_frac(13, 2)] {
            let c: Vec<Vec2> = saddle_census(&sq, &r, 1_000_000).unwrap().into_iter().map(|s| s.hol).collect();
            assert!(same_holonomies(&c, &square_torus_oracle(&r)), "bound {r}");
        }
    }

    #[test]
    fn census_is_monotone_and_flow_equivariant() {
        let sq = square_torus();
        let small = saddle_census(&sq, &q_int(2), 100_000).unwrap();
        let big = saddle_census(&sq, &q_int(4), 100_000).unwrap();
        assert!(small.iter().all(|s| big.iter().any(|b| b.hol == s.hol)));
        let a = q_int(3);
        let flowed = sq.flow(&a);
        assert_eq!(flowed.area(), sq.area());
        let fc = saddle_census(&flowed, &q_int(6), 1_000_000).unwrap();
        let back: Vec<Vec2> =
            fc.iter().map(|s| s.hol.flow(&(Q::one() / &a))).filter(|v| v.norm2() <= q_int(4)).collect();
        let orig: Vec<Vec2> = small.iter().map(|s| s.hol.clone()).collect();
        assert!(same_holonomies(&back, &orig));
    }

    #[test]
    fn angle_order_is_exact() {
        let dirs = [Vec2::int(1, 0), Vec2::int(1, 1), Vec2::int(0, 1), Vec2::int(-1, 0), Vec2::int(0, -1), Vec2::int(1, -1)];
        for w in dirs.windows(2) {
            assert_eq!(w[0].angle_cmp(&w[1]), Ordering::Less);
        }
    }

    #[test]
    fn malformed_gluings_are_rejected() {
        let sq = vec![Vec2::int(0, 0), Vec2::int(1, 0), Vec2::int(1, 1), Vec2::int(0, 1)];
        assert!(TranslationSurface::new(vec![sq.clone()], vec![vec![(0, 1), (0, 0), (0, 3), (0, 2)]]).is_err());
        let cw: Vec<Vec2> = sq.into_iter().rev().collect();
        assert!(TranslationSurface::new(vec![cw], vec![vec![(0, 2), (0, 3), (0, 0), (0, 1)]]).is_err());
    }
}
