//! Cyclic covers of flat tori branched along a slit, handled through their
//! lattice: saddle connections are segments between lifts of marked points,
//! and crossings of slit lifts track the sheet.

use std::cmp::Ordering;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{q_round, TranslationSurface, Vec2};
use crate::error::{Error, Result};
use crate::numeric::{q_to_f64, Q};

/// A flat torus `R²/Λ` with marked points, optionally covered `sheets` times
/// with branching at the two ends of a slit. Crossing the slit from its right
/// to its left moves one sheet up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusCover {
    pub basis: [Vec2; 2],
    /// Marked points; the first one sits at the corners of the polygon model.
    pub points: Vec<Vec2>,
    /// Indices of the slit endpoints; the slit is the segment between the
    /// given lifts.
    pub slit: Option<[usize; 2]>,
    pub sheets: usize,
}

/// A point of the cover: a branch point, or one lift of a marked point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub torus_point: usize,
    pub sheet: Option<usize>,
    /// Cone angle divided by 2π.
    pub angle: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverConnection {
    pub hol: Vec2,
    pub start: usize,
    pub end: usize,
}

/// Closed segments `p + [0,1]·v` and `q + [0,1]·w` meet.
fn segments_meet(p: &Vec2, v: &Vec2, q: &Vec2, w: &Vec2) -> bool {
    let r = q.sub(p);
    let den = v.cross(w);
    if den.is_zero() {
        if !r.cross(v).is_zero() {
            return false;
        }
        let len2 = v.norm2();
        let t0 = r.dot(v) / &len2;
        let t1 = q.add(w).sub(p).dot(v) / &len2;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return hi >= Q::zero() && lo <= Q::from_integer(1.into());
    }
    let s = r.cross(w) / &den;
    let u = r.cross(v) / &den;
    let unit = |x: &Q| !x.is_negative() && *x <= Q::from_integer(1.into());
    unit(&s) && unit(&u)
}

/// Gauss reduction of a lattice basis, exact.
pub fn gauss_reduce(a: &Vec2, b: &Vec2) -> [Vec2; 2] {
    let (mut u, mut v) = (a.clone(), b.clone());
    loop {
        if u.norm2() > v.norm2() {
            std::mem::swap(&mut u, &mut v);
        }
        let mu = q_round(&(u.dot(&v) / u.norm2()));
        if mu.is_zero() {
            break;
        }
        v = v.sub(&u.scale(&Q::from_integer(mu)));
    }
    if u.cross(&v).is_negative() {
        v = v.neg();
    }
    [u, v]
}

impl TorusCover {
    pub fn det(&self) -> Q {
        self.basis[0].cross(&self.basis[1])
    }

    pub fn area(&self) -> Q {
        self.det() * Q::from_integer(self.sheets.into())
    }

    pub fn reduced_basis(&self) -> [Vec2; 2] {
        gauss_reduce(&self.basis[0], &self.basis[1])
    }

    /// Coordinates of `d` in the basis.
    pub fn coords(&self, d: &Vec2) -> (Q, Q) {
        let det = self.det();
        (d.cross(&self.basis[1]) / &det, self.basis[0].cross(d) / &det)
    }

    /// Lattice vectors `λ` with `|d + λ|² ≤ r2`.
    pub fn lattice_near(&self, d: &Vec2, r2: &Q) -> Vec<Vec2> {
        let [b1, b2] = self.reduced_basis();
        let det = b1.cross(&b2);
        let detf = q_to_f64(&det).abs();
        let r = q_to_f64(r2).sqrt();
        let m0 = q_to_f64(&(d.neg().cross(&b2) / &det));
        let n0 = q_to_f64(&(b1.cross(&d.neg()) / &det));
        let rm = r * b2.length() / detf;
        let rn = r * b1.length() / detf;
        let range = |c: f64, rad: f64| ((c - rad).floor() as i64 - 1)..=((c + rad).ceil() as i64 + 1);
        let mut out = Vec::new();
        for m in range(m0, rm) {
            for n in range(n0, rn) {
                let lam = b1.scale(&Q::from_integer(m.into())).add(&b2.scale(&Q::from_integer(n.into())));
                if d.add(&lam).norm2() <= *r2 {
                    out.push(lam);
                }
            }
        }
        out
    }

    fn is_branch(&self, i: usize) -> bool {
        self.slit.is_some_and(|s| s.contains(&i))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !self.det().is_positive() {
            return bad("basis must be positively oriented".into());
        }
        if self.points.is_empty() {
            return bad("at least one marked point is required".into());
        }
        match self.slit {
            None if self.sheets != 1 => return bad("a cover needs a slit".into()),
            Some([a, b]) if a == b || a.max(b) >= self.points.len() || self.sheets < 2 => {
                return bad("slit needs two distinct endpoints and at least two sheets".into())
            }
            _ => {}
        }
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                let (m, n) = self.coords(&self.points[j].sub(&self.points[i]));
                if m.is_integer() && n.is_integer() {
                    return bad(format!("points {i} and {j} coincide on the torus"));
                }
            }
        }
        if let Some([a, b]) = self.slit {
            let p = &self.points[a];
            let w = self.points[b].sub(p);
            let reach = w.norm2() * Q::from_integer(4.into());
            for lam in self.lattice_near(&Vec2::zero(), &reach) {
                if !lam.is_zero() && segments_meet(p, &w, &p.add(&lam), &w) {
                    return bad("the slit meets one of its translates".into());
                }
            }
            for (j, q) in self.points.iter().enumerate() {
                for lam in self.lattice_near(&q.sub(p), &(w.norm2() * Q::from_integer(4.into()))) {
                    let z = q.add(&lam);
                    let own_end = lam.is_zero() && (j == a || j == b);
                    if !own_end && segments_meet(p, &w, &z, &Vec2::zero()) {
                        return bad(format!("point {j} lies on the slit"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Points of the cover: one per branch point, `sheets` per other point.
    pub fn cover_points(&self) -> Vec<CoverPoint> {
        let mut out = Vec::new();
        for i in 0..self.points.len() {
            if self.is_branch(i) {
                out.push(CoverPoint { torus_point: i, sheet: None, angle: self.sheets as u32 });
            } else {
                for k in 0..self.sheets {
                    out.push(CoverPoint { torus_point: i, sheet: Some(k), angle: 1 });
                }
            }
        }
        out
    }

    fn point_id(&self, i: usize, sheet: usize) -> usize {
        let mut id = 0;
        for j in 0..i {
            id += if self.is_branch(j) { 1 } else { self.sheets };
        }
        if self.is_branch(i) {
            id
        } else {
            id + sheet % self.sheets
        }
    }

    /// Signed count of slit lifts crossed by `p + (0,1)·v`.
    fn slit_crossings(&self, p: &Vec2, v: &Vec2) -> i64 {
        let Some([a, b]) = self.slit else { return 0 };
        let base = &self.points[a];
        let w = self.points[b].sub(base);
        let reach = {
            let r = v.length() + w.length();
            let rq = Q::from_float(r * r * 1.01 + 1e-9).unwrap_or_else(|| v.norm2() + w.norm2());
            rq * Q::from_integer(2.into())
        };
        let mut count = 0;
        for lam in self.lattice_near(&base.sub(p), &reach) {
            let q = base.add(&lam);
            let den = v.cross(&w);
            if den.is_zero() {
                continue;
            }
            let r = q.sub(p);
            let s = r.cross(&w) / &den;
            let u = r.cross(v) / &den;
            let open = |x: &Q| x.is_positive() && *x < Q::from_integer(1.into());
            if open(&s) && open(&u) {
                count += if w.cross(v).is_positive() { 1 } else { -1 };
            }
        }
        count
    }

    /// All oriented saddle connections with `|hol| ≤ bound`.
    pub fn census(&self, bound: &Q) -> Result<Vec<CoverConnection>> {
        self.validate()?;
        let r2 = bound * bound;
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let mut cands: Vec<(Vec2, usize)> = Vec::new();
            for (j, q) in self.points.iter().enumerate() {
                let d = q.sub(p);
                for lam in self.lattice_near(&d, &r2) {
                    let v = d.add(&lam);
                    if !v.is_zero() {
                        cands.push((v, j));
                    }
                }
            }
            cands.sort_by(|x, y| x.0.angle_cmp(&y.0).then_with(|| x.0.norm2().cmp(&y.0.norm2())));
            let mut prev: Option<&Vec2> = None;
            for (v, j) in &cands {
                if prev.is_some_and(|u| u.angle_cmp(v) == Ordering::Equal) {
                    continue;
                }
                prev = Some(v);
                let c = self.slit_crossings(p, v).rem_euclid(self.sheets as i64) as usize;
                for k in 0..self.sheets {
                    out.push(CoverConnection { hol: v.clone(), start: self.point_id(i, k), end: self.point_id(*j, k + c) });
                }
            }
        }
        Ok(out)
    }

    /// Squared length of the shortest saddle connection.
    pub fn systole2(&self) -> Result<Q> {
        let [r1, _] = self.reduced_basis();
        let bound2 = r1.norm2();
        let mut best = bound2.clone();
        for p in &self.points {
            for q in &self.points {
                let d = q.sub(p);
                for lam in self.lattice_near(&d, &bound2) {
                    let v = d.add(&lam);
                    if !v.is_zero() && v.norm2() < best {
                        best = v.norm2();
                    }
                }
            }
        }
        Ok(best)
    }

    pub fn flow(&self, a: &Q) -> TorusCover {
        TorusCover {
            basis: [self.basis[0].flow(a), self.basis[1].flow(a)],
            points: self.points.iter().map(|p| p.flow(a)).collect(),
            ..self.clone()
        }
    }

    /// The polygon model: a fundamental parallelogram cornered at the first
    /// point, triangulated through the other points with the slit as an
    /// edge, one copy per sheet.
    pub fn to_translation_surface(&self) -> Result<TranslationSurface> {
        self.validate()?;
        let (corner_basis, lifts) = self.fundamental_domain()?;
        let [b1, b2] = corner_basis;
        let o = self.points[0].clone();
        let mut mesh = Mesh {
            pts: vec![o.clone(), o.add(&b1), o.add(&b1).add(&b2), o.add(&b2)],
            tris: vec![[0, 1, 2], [0, 2, 3]],
        };
        let mut index = vec![0usize; self.points.len()];
        for (j, z) in lifts.iter().enumerate().skip(1) {
            index[j] = mesh.insert(z.clone())?;
        }
        let slit_edge = self.slit.map(|[a, b]| (index[a], index[b]));
        if let Some((pa, pb)) = slit_edge {
            mesh.recover_edge(pa, pb)?;
        }
        let nt = mesh.tris.len();
        let side = |u: usize, v: usize| -> Option<(usize, usize)> {
            // Parallelogram sides: bottom 0→1 with top 2→3, right 1→2 with left 3→0.
            match (u, v) {
                (0, 1) => Some((2, 3)),
                (2, 3) => Some((0, 1)),
                (1, 2) => Some((3, 0)),
                (3, 0) => Some((1, 2)),
                _ => None,
            }
        };
        let find = |u: usize, v: usize| -> Option<(usize, usize)> {
            mesh.tris.iter().enumerate().find_map(|(t, tri)| (0..3).find(|&e| tri[e] == u && tri[(e + 1) % 3] == v).map(|e| (t, e)))
        };
        let mut polygons = Vec::with_capacity(nt * self.sheets);
        let mut gluings = Vec::with_capacity(nt * self.sheets);
        for k in 0..self.sheets {
            for tri in &mesh.tris {
                polygons.push(tri.iter().map(|&i| mesh.pts[i].clone()).collect());
                let mut g = Vec::with_capacity(3);
                for e in 0..3 {
                    let (u, v) = (tri[e], tri[(e + 1) % 3]);
                    let (target, sheet) = if slit_edge == Some((u, v)) {
                        // Left side of the slit: reached from the right side one sheet down.
                        (find(v, u), (k + self.sheets - 1) % self.sheets)
                    } else if slit_edge == Some((v, u)) {
                        (find(v, u), (k + 1) % self.sheets)
                    } else if let Some((x, y)) = side(u, v) {
                        (find(x, y), k)
                    } else {
                        (find(v, u), k)
                    };
                    let (t, f) = target.ok_or_else(|| Error::Integrity(format!("edge {u}->{v} has no partner")))?;
                    g.push((sheet * nt + t, f));
                }
                gluings.push(g);
            }
        }
        TranslationSurface::new(polygons, gluings)
    }

    /// A basis `(b1, b2 + k·b1)` whose parallelogram at the first point
    /// strictly contains lifts of every other point and the whole slit.
    fn fundamental_domain(&self) -> Result<([Vec2; 2], Vec<Vec2>)> {
        let [b1, b2] = self.basis.clone();
        let o = &self.points[0];
        let one = Q::from_integer(1.into());
        let inside = |x: &Q| x.is_positive() && *x < one;
        for k in [0i64, 1, -1, 2, -2, 3, -3] {
            let c2 = b2.add(&b1.scale(&Q::from_integer(k.into())));
            let local = TorusCover { basis: [b1.clone(), c2.clone()], ..self.clone() };
            let mut lifts = vec![o.clone(); self.points.len()];
            let mut ok = true;
            let place = |d: &Vec2| -> (Q, Q) {
                let (m, n) = local.coords(d);
                (m.fract_pos(), n.fract_pos())
            };
            for (j, p) in self.points.iter().enumerate().skip(1) {
                if self.is_branch(j) {
                    continue;
                }
                let (m, n) = place(&p.sub(o));
                ok &= inside(&m) && inside(&n);
                lifts[j] = o.add(&b1.scale(&m)).add(&c2.scale(&n));
            }
            if let Some([a, b]) = self.slit {
                let w = self.points[b].sub(&self.points[a]);
                let (m, n) = place(&self.points[a].sub(o));
                let pa = o.add(&b1.scale(&m)).add(&c2.scale(&n));
                let pb = pa.add(&w);
                let (mb, nb) = local.coords(&pb.sub(o));
                ok &= inside(&m) && inside(&n) && inside(&mb) && inside(&nb);
                lifts[a] = pa;
                lifts[b] = pb;
            }
            if ok {
                return Ok(([b1, c2], lifts));
            }
        }
        Err(Error::Invalid("no sheared fundamental domain contains the slit".into()))
    }
}

trait FractPos {
    fn fract_pos(&self) -> Q;
}

impl FractPos for Q {
    /// Fractional part in `[0, 1)`.
    fn fract_pos(&self) -> Q {
        self - self.floor()
    }
}

struct Mesh {
    pts: Vec<Vec2>,
    tris: Vec<[usize; 3]>,
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> Q {
    b.sub(a).cross(&c.sub(a))
}

impl Mesh {
    fn insert(&mut self, z: Vec2) -> Result<usize> {
        let id = self.pts.len();
        self.pts.push(z);
        let z = &self.pts[id];
        for t in 0..self.tris.len() {
            let [a, b, c] = self.tris[t];
            let o = [
                orient(&self.pts[a], &self.pts[b], z),
                orient(&self.pts[b], &self.pts[c], z),
                orient(&self.pts[c], &self.pts[a], z),
            ];
            if o.iter().any(Signed::is_negative) {
                continue;
            }
            let zeros: Vec<usize> = (0..3).filter(|&e| o[e].is_zero()).collect();
            match zeros.as_slice() {
                [] => {
                    self.tris[t] = [a, b, id];
                    self.tris.push([b, c, id]);
                    self.tris.push([c, a, id]);
                    return Ok(id);
                }
                [e] => {
                    let tri = self.tris[t];
                    let (u, v, x) = (tri[*e], tri[(*e + 1) % 3], tri[(*e + 2) % 3]);
                    let other = (0..self.tris.len())
                        .find_map(|s| (0..3).find(|&f| self.tris[s][f] == v && self.tris[s][(f + 1) % 3] == u).map(|f| (s, f)))
                        .ok_or_else(|| Error::Invalid("marked point on the polygon boundary".into()))?;
                    let y = self.tris[other.0][(other.1 + 2) % 3];
                    self.tris[t] = [u, id, x];
                    self.tris.push([id, v, x]);
                    self.tris[other.0] = [v, id, y];
                    self.tris.push([id, u, y]);
                    return Ok(id);
                }
                _ => return Err(Error::Invalid("marked points coincide".into())),
            }
        }
        Err(Error::Invalid("point outside the fundamental domain".into()))
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.tris.iter().any(|t| (0..3).any(|e| t[e] == u && t[(e + 1) % 3] == v || t[e] == v && t[(e + 1) % 3] == u))
    }

    /// Flips edges crossing the segment `pa pb` until it is an edge.
    fn recover_edge(&mut self, pa: usize, pb: usize) -> Result<()> {
        let (p, q) = (self.pts[pa].clone(), self.pts[pb].clone());
        for _ in 0..256 {
            if self.has_edge(pa, pb) {
                return Ok(());
            }
            let mut flipped = false;
            'scan: for t in 0..self.tris.len() {
                for e in 0..3 {
                    let (u, v, x) = (self.tris[t][e], self.tris[t][(e + 1) % 3], self.tris[t][(e + 2) % 3]);
                    let (pu, pv) = (&self.pts[u], &self.pts[v]);
                    let proper = orient(&p, &q, pu).signum() * orient(&p, &q, pv).signum() < Q::zero()
                        && orient(pu, pv, &p).signum() * orient(pu, pv, &q).signum() < Q::zero();
                    if !proper {
                        continue;
                    }
                    let Some((s, f)) = (0..self.tris.len())
                        .find_map(|s| (0..3).find(|&f| self.tris[s][f] == v && self.tris[s][(f + 1) % 3] == u).map(|f| (s, f)))
                    else {
                        continue;
                    };
                    let y = self.tris[s][(f + 2) % 3];
                    let (px, py) = (&self.pts[x], &self.pts[y]);
                    if orient(pu, py, px).is_positive() && orient(py, pv, px).is_positive() {
                        self.tris[t] = [u, y, x];
                        self.tris[s] = [y, v, x];
                        flipped = true;
                        break 'scan;
                    }
                }
            }
            if !flipped {
                break;
            }
        }
        Err(Error::Invalid("could not make the slit an edge of the triangulation".into()))
    }
}

/// A family `s ↦ TorusCover` whose basis and points move affinely in `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusFamily {
    pub base: TorusCover,
    pub basis_rate: [Vec2; 2],
    pub point_rates: Vec<Vec2>,
}

impl TorusFamily {
    pub fn at(&self, s: &Q) -> Result<TorusCover> {
        if self.point_rates.len() != self.base.points.len() {
            return Err(Error::Invalid("one rate per point".into()));
        }
        let basis = [0, 1].map(|i| self.base.basis[i].add(&self.basis_rate[i].scale(s)));
        let points = self.base.points.iter().zip(&self.point_rates).map(|(p, r)| p.add(&r.scale(s))).collect();
        let x = TorusCover { basis, points, ..self.base.clone() };
        x.validate()?;
        Ok(x)
    }
}

/// Length of a vector in the sup norm, as a float.
pub fn sup_norm(v: &Vec2) -> Q {
    v.x.abs().max(v.y.abs())
}

/// Rounds a nonnegative rational down to a float; used in reports only.
pub fn q_floor_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatsurf::{saddle_census, same_holonomies};
    use crate::numeric::{q_frac, q_int};

    fn slit_double() -> TorusCover {
        TorusCover {
            basis: [Vec2::int(1, 0), Vec2::new(q_frac(2, 5), q_int(1))],
            points: vec![Vec2::int(0, 0), Vec2::new(q_frac(3, 5), q_frac(1, 3)), Vec2::new(q_frac(4, 5), q_frac(2, 5))],
            slit: Some([1, 2]),
            sheets: 2,
        }
    }

    #[test]
    fn square_torus_cover_matches_polygons() {
        let t = TorusCover { basis: [Vec2::int(1, 0), Vec2::int(0, 1)], points: vec![Vec2::zero()], slit: None, sheets: 1 };
        let c: Vec<Vec2> = t.census(&q_int(3)).unwrap().into_iter().map(|c| c.hol).collect();
        assert!(same_holonomies(&c, &crate::flatsurf::square_torus_oracle(&q_int(3))));
        assert_eq!(t.systole2().unwrap(), q_int(1));
    }

    #[test]
    fn slit_double_polygons_agree_with_lattice_census() {
        for sheets in [2, 3] {
            let x = TorusCover { sheets, ..slit_double() };
            let surf = x.to_translation_surface().unwrap();
            assert_eq!(surf.area(), x.area());
            let g = surf.genus().unwrap();
            // Two branch points of angle 2π·sheets on a torus cover.
            assert_eq!(2 * g as i64 - 2, 2 * (sheets as i64 - 1));
            let cover_angles: Vec<u32> = x.cover_points().iter().map(|p| p.angle).collect();
            let mut a: Vec<u32> = surf.singularities.iter().map(|s| s.angle).collect();
            let mut b = cover_angles.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            let bound = q_frac(3, 2);
            let dev = saddle_census(&surf, &bound, 5_000_000).unwrap();
            let lat = x.census(&bound).unwrap();
            let dv: Vec<Vec2> = dev.iter().map(|c| c.hol.clone()).collect();
            let lv: Vec<Vec2> = lat.iter().map(|c| c.hol.clone()).collect();
            assert!(same_holonomies(&dv, &lv), "sheets {sheets}: {} vs {}", dv.len(), lv.len());
            // End types agree: compare cone angles at both ends.
            let cp = x.cover_points();
            let mut ends_dev: Vec<(Vec2, u32, u32)> =
                dev.iter().map(|c| (c.hol.clone(), surf.singularities[c.start].angle, surf.singularities[c.end].angle)).collect();
            let mut ends_lat: Vec<(Vec2, u32, u32)> = lat.iter().map(|c| (c.hol.clone(), cp[c.start].angle, cp[c.end].angle)).collect();
            let key = |a: &(Vec2, u32, u32), b: &(Vec2, u32, u32)| {
                a.0.angle_cmp(&b.0).then(a.0.norm2().cmp(&b.0.norm2())).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            };
            ends_dev.sort_by(key);
            ends_lat.sort_by(key);
            assert_eq!(ends_dev, ends_lat);
        }
    }

    #[test]
    fn flowed_cover_censuses_agree() {
        let bound = q_int(2);
        for a in [q_frac(3, 2), q_frac(2, 3)] {
            let x = slit_double().flow(&a);
            let surf = x.to_translation_surface().unwrap();
            let dev: Vec<Vec2> = saddle_census(&surf, &bound, 5_000_000).unwrap().into_iter().map(|c| c.hol).collect();
            let lat: Vec<Vec2> = x.census(&bound).unwrap().into_iter().map(|c| c.hol).collect();
            assert!(same_holonomies(&dev, &lat));
            // Equivariance: flowing back the census of the flowed surface.
            let back: Vec<Vec2> = lat.iter().map(|v| v.flow(&(Q::from_integer(1.into()) / &a))).collect();
            let direct: Vec<Vec2> = slit_double().census(&q_int(4)).unwrap().into_iter().map(|c| c.hol).collect();
            assert!(back.iter().all(|v| direct.contains(v)));
        }
    }

    #[test]
    fn flow_round_trip_and_reduction() {
        let x = slit_double();
        let a = q_frac(7, 3);
        let y = x.flow(&a).flow(&(Q::from_integer(1.into()) / &a));
        assert_eq!(x, y);
        let [u, v] = gauss_reduce(&Vec2::int(1, 0), &Vec2::int(7, 1));
        assert_eq!(u.cross(&v), q_int(1));
        assert!(u.norm2() <= v.norm2() && v.norm2() <= q_int(2));
    }

    #[test]
    fn bad_slits_are_rejected() {
        let mut x = slit_double();
        x.points[2] = Vec2::new(q_frac(8, 5), q_frac(1, 3));
        assert!(x.validate().is_err());
        let mut y = slit_double();
        y.points[0] = Vec2::new(q_frac(7, 10), q_frac(11, 30));
        assert!(y.validate().is_err());
    }
}
