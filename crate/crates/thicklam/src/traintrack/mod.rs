//! Combinatorial train tracks with exact rational transverse measures.
//!
//! A switch has a forward direction pointing from side 0 to side 1. Each side
//! lists its half-branches from left to right relative to that direction.

pub mod recognition;
pub mod torus;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{fmt_q, parse_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Surface {
    pub genus: u32,
    pub punctures: u32,
}

impl Surface {
    pub const PUNCTURED_TORUS: Surface = Surface { genus: 1, punctures: 1 };
}

/// One end of a branch: `(branch, end)` with `end ∈ {0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfBranch(pub usize, pub u8);

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Switch {
    pub sides: [Vec<HalfBranch>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainTrack {
    pub surface: Surface,
    pub switches: Vec<Switch>,
    pub branch_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_index: Option<usize>,
}

/// Location of a half-branch: `(switch, side, position)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub switch: usize,
    pub side: usize,
    pub pos: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSide {
    Left,
    Right,
    Central,
}

/// Nonnegative integer matrix with `old = M · new`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarryingMap {
    pub rows: Vec<Vec<BigInt>>,
}

impl CarryingMap {
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        CarryingMap { rows }
    }

    pub fn old_len(&self) -> usize {
        self.rows.len()
    }

    pub fn new_len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// `self ∘ next`: the carrying map of the composite split.
    pub fn compose(&self, next: &CarryingMap) -> CarryingMap {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..next.new_len())
                    .map(|j| r.iter().zip(&next.rows).map(|(a, nr)| a * &nr[j]).sum())
                    .collect()
            })
            .collect();
        CarryingMap { rows }
    }

    pub fn apply(&self, w: &WeightVector) -> Result<WeightVector> {
        if w.0.len() != self.new_len() {
            return Err(Error::IndexMismatch { expected: self.new_len(), found: w.0.len() });
        }
        Ok(WeightVector(
            self.rows
                .iter()
                .map(|r| r.iter().zip(&w.0).map(|(a, x)| Q::from_integer(a.clone()) * x).sum())
                .collect(),
        ))
    }

    pub fn columns_nonzero(&self) -> bool {
        (0..self.new_len()).all(|j| self.rows.iter().any(|r| !r[j].is_zero()))
    }
}

/// Branch weights; serialized as a map from branch id to `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightVector(pub Vec<Q>);

impl WeightVector {
    pub fn from_ints(v: &[i64]) -> Self {
        WeightVector(v.iter().map(|&x| Q::from_integer(x.into())).collect())
    }

    pub fn zeros(n: usize) -> Self {
        WeightVector(vec![Q::zero(); n])
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| !self.0[i].is_zero()).collect()
    }
}

impl Serialize for WeightVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<String, String> =
            self.0.iter().enumerate().map(|(i, q)| (i.to_string(), fmt_q(q))).collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let m = BTreeMap::<String, String>::deserialize(d)?;
        let mut v = vec![None; m.len()];
        for (k, q) in m {
            let i: usize = k.parse().map_err(D::Error::custom)?;
            let slot = v.get_mut(i).ok_or_else(|| D::Error::custom(format!("branch id {i} out of range")))?;
            *slot = Some(parse_q(&q).map_err(D::Error::custom)?);
        }
        Ok(WeightVector(v.into_iter().map(Option::unwrap).collect()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub ok: bool,
    pub violated_switches: Vec<usize>,
    pub negative_branches: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    /// Branches of the parent kept by the subtrack, increasing.
    pub kept: Vec<usize>,
    pub dimension: usize,
    pub codim1: bool,
}

impl TrainTrack {
    pub fn new(surface: Surface, switches: Vec<Switch>, branch_count: usize) -> Result<Self> {
        let t = TrainTrack { surface, switches, branch_count, model_index: None };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![[false; 2]; self.branch_count];
        for (si, sw) in self.switches.iter().enumerate() {
            if sw.sides.iter().any(Vec::is_empty) {
                return Err(Error::Invalid(format!("switch {si} has an empty side")));
            }
            for &HalfBranch(b, e) in sw.sides.iter().flatten() {
                if b >= self.branch_count || e > 1 || seen[b][e as usize] {
                    return Err(Error::Invalid(format!("half-branch ({b},{e}) repeated or out of range")));
                }
                seen[b][e as usize] = true;
            }
        }
        if seen.iter().any(|s| !s[0] || !s[1]) {
            return Err(Error::Invalid("every branch end must attach to a switch".into()));
        }
        Ok(())
    }

    pub fn slot(&self, h: HalfBranch) -> Slot {
        for (switch, sw) in self.switches.iter().enumerate() {
            for side in 0..2 {
                if let Some(pos) = sw.sides[side].iter().position(|&x| x == h) {
                    return Slot { switch, side, pos };
                }
            }
        }
        panic!("half-branch {h:?} not attached; track was not validated")
    }

    /// Side sums must agree at every switch and weights must be nonnegative.
    pub fn check_switch_conditions(&self, w: &WeightVector) -> Result<SwitchReport> {
        if w.0.len() != self.branch_count {
            return Err(Error::IndexMismatch { expected: self.branch_count, found: w.0.len() });
        }
        let sum = |side: &[HalfBranch]| side.iter().map(|h| &w.0[h.0]).sum::<Q>();
        let violated_switches: Vec<usize> = (0..self.switches.len())
            .filter(|&i| sum(&self.switches[i].sides[0]) != sum(&self.switches[i].sides[1]))
            .collect();
        let negative_branches: Vec<usize> = (0..self.branch_count).filter(|&i| w.0[i].is_negative()).collect();
        Ok(SwitchReport {
            ok: violated_switches.is_empty() && negative_branches.is_empty(),
            violated_switches,
            negative_branches,
        })
    }

    pub fn carries(&self, w: &WeightVector) -> bool {
        self.check_switch_conditions(w).map(|r| r.ok).unwrap_or(false)
    }

    /// Dimension of the cone of measures supported on `kept`.
    fn cone_dimension(&self, kept: &[usize]) -> usize {
        let col: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for sw in &self.switches {
            let mut r = vec![Q::zero(); kept.len()];
            let mut any = false;
            for (side, sign) in [(0, 1i64), (1, -1)] {
                for h in &sw.sides[side] {
                    if let Some(&c) = col.get(&h.0) {
                        r[c] += Q::from_integer(sign.into());
                        any = true;
                    }
                }
            }
            if any {
                rows.push(r);
            }
        }
        kept.len() - rank(rows)
    }

    /// The subtrack left after deleting everything outside `kept`, when legal.
    pub fn subtrack(&self, kept: &[usize]) -> Option<(TrainTrack, Vec<usize>)> {
        let renum: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut switches = Vec::new();
        for sw in &self.switches {
            let sides: [Vec<HalfBranch>; 2] = [0, 1].map(|s| {
                sw.sides[s]
                    .iter()
                    .filter_map(|h| renum.get(&h.0).map(|&nb| HalfBranch(nb, h.1)))
                    .collect()
            });
            match (sides[0].is_empty(), sides[1].is_empty()) {
                (true, true) => {}
                (false, false) => switches.push(Switch { sides }),
                _ => return None,
            }
        }
        if kept.is_empty() {
            return None;
        }
        let t = TrainTrack { surface: self.surface, switches, branch_count: kept.len(), model_index: None };
        Some((t, kept.to_vec()))
    }

    /// All nonempty legal subtracks, the full track first.
    pub fn faces(&self) -> Result<Vec<Face>> {
        let n = self.branch_count;
        if n > 20 {
            return Err(Error::WorkLimit(format!("{n} branches exceed the face enumeration limit")));
        }
        let full = self.cone_dimension(&(0..n).collect::<Vec<_>>());
        let mut out = Vec::new();
        for mask in (1u32..(1 << n)).rev() {
            let kept: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            if self.subtrack(&kept).is_some() {
                let dimension = self.cone_dimension(&kept);
                out.push(Face { codim1: dimension + 1 == full, kept, dimension });
            }
        }
        Ok(out)
    }

    /// A branch is large when it is alone on its side at both ends and the
    /// opposite sides are trivalent.
    pub fn large_branch_frame(&self, e: usize) -> Result<SplitFrame> {
        if e >= self.branch_count {
            return Err(Error::NotLarge(e));
        }
        let su = self.slot(HalfBranch(e, 0));
        let sv = self.slot(HalfBranch(e, 1));
        let ok = |s: &Slot| {
            let sw = &self.switches[s.switch];
            sw.sides[s.side].len() == 1 && sw.sides[1 - s.side].len() == 2
        };
        if su.switch == sv.switch || !ok(&su) || !ok(&sv) {
            return Err(Error::NotLarge(e));
        }
        // Travel from u to v; reverse stored order when a switch faces the other way.
        let flip_u = su.side == 0;
        let flip_v = sv.side == 1;
        let travel = |v: &[HalfBranch], flip: bool| {
            let mut v = v.to_vec();
            if flip {
                v.reverse();
            }
            [v[0], v[1]]
        };
        let x = travel(&self.switches[su.switch].sides[1 - su.side], flip_u);
        let y = travel(&self.switches[sv.switch].sides[1 - sv.side], flip_v);
        Ok(SplitFrame { e, u: su, v: sv, flip_u, flip_v, x, y })
    }

    pub fn large_branches(&self) -> Vec<usize> {
        (0..self.branch_count).filter(|&e| self.large_branch_frame(e).is_ok()).collect()
    }

    /// Splits a large branch. Left and right splits reuse the branch id for the
    /// diagonal; a central split deletes the branch.
    pub fn split(&self, e: usize, side: SplitSide) -> Result<(TrainTrack, CarryingMap)> {
        let f = self.large_branch_frame(e)?;
        let [xl, xr] = f.x;
        let [yl, yr] = f.y;
        let ep0 = HalfBranch(e, 0);
        let ep1 = HalfBranch(e, 1);
        let n = self.branch_count;
        let mut t = self.clone();
        t.model_index = None;
        let order = |mut v: Vec<HalfBranch>, flip: bool| {
            if flip {
                v.reverse();
            }
            v
        };
        let (u, v) = (f.u, f.v);
        let mut m = CarryingMap::identity(n);
        match side {
            SplitSide::Right => {
                // The left strand from x_L turns right into the diagonal.
                t.switches[u.switch].sides[u.side] = order(vec![yl, ep0], f.flip_u);
                t.switches[u.switch].sides[1 - u.side] = vec![xl];
                t.switches[v.switch].sides[v.side] = order(vec![ep1, xr], f.flip_v);
                t.switches[v.switch].sides[1 - v.side] = vec![yr];
                m.rows[e][yl.0] += 1;
                m.rows[e][xr.0] += 1;
            }
            SplitSide::Left => {
                t.switches[u.switch].sides[u.side] = order(vec![ep0, yr], f.flip_u);
                t.switches[u.switch].sides[1 - u.side] = vec![xr];
                t.switches[v.switch].sides[v.side] = order(vec![xl, ep1], f.flip_v);
                t.switches[v.switch].sides[1 - v.side] = vec![yl];
                m.rows[e][yr.0] += 1;
                m.rows[e][xl.0] += 1;
            }
            SplitSide::Central => {
                t.switches[u.switch].sides[u.side] = vec![yl];
                t.switches[u.switch].sides[1 - u.side] = vec![xl];
                t.switches[v.switch].sides[v.side] = vec![xr];
                t.switches[v.switch].sides[1 - v.side] = vec![yr];
                m.rows[e][yl.0] += 1;
                m.rows[e][xr.0] += 1;
                m.rows[e][e] = BigInt::zero();
                // Drop branch e and renumber.
                let kept: Vec<usize> = (0..n).filter(|&b| b != e).collect();
                for sw in &mut t.switches {
                    for s in &mut sw.sides {
                        for h in s.iter_mut() {
                            if h.0 > e {
                                h.0 -= 1;
                            }
                        }
                    }
                }
                t.branch_count = n - 1;
                m.rows = m.rows.iter().map(|r| kept.iter().map(|&j| r[j].clone()).collect()).collect();
            }
        }
        t.validate()?;
        Ok((t, m))
    }

    /// The side dictated by a carried measure, or an error if `w` is not carried.
    pub fn split_side_for(&self, e: usize, w: &WeightVector) -> Result<SplitSide> {
        let f = self.large_branch_frame(e)?;
        let (a, b) = (&w.0[f.x[0].0], &w.0[f.y[0].0]);
        Ok(match a.cmp(b) {
            std::cmp::Ordering::Greater => SplitSide::Right,
            std::cmp::Ordering::Less => SplitSide::Left,
            std::cmp::Ordering::Equal => SplitSide::Central,
        })
    }

    /// Weights on the split track inducing `w` on this one.
    pub fn split_weights(&self, e: usize, side: SplitSide, w: &WeightVector) -> Result<WeightVector> {
        let f = self.large_branch_frame(e)?;
        let mut out = w.clone();
        match side {
            SplitSide::Right => out.0[e] = &w.0[f.x[0].0] - &w.0[f.y[0].0],
            SplitSide::Left => out.0[e] = &w.0[f.x[1].0] - &w.0[f.y[1].0],
            SplitSide::Central => {
                out.0.remove(e);
            }
        }
        Ok(out)
    }

    /// Splits every large branch once in the direction the target dictates.
    pub fn full_split(&self, target: &WeightVector) -> Result<FullSplit> {
        let report = self.check_switch_conditions(target)?;
        if !report.ok {
            return Err(Error::NotCarried(format!("{report:?}")));
        }
        let mut track = self.clone();
        let mut w = target.clone();
        let mut map = CarryingMap::identity(self.branch_count);
        let mut steps = Vec::new();
        // Descending order keeps pending ids stable across central splits.
        for e in self.large_branches().into_iter().rev() {
            let side = track.split_side_for(e, &w)?;
            let nw = track.split_weights(e, side, &w)?;
            let (nt, m) = track.split(e, side)?;
            map = map.compose(&m);
            track = nt;
            w = nw;
            steps.push((e, side));
        }
        if !track.carries(&w) {
            return Err(Error::NotCarried("target left the polyhedron".into()));
        }
        Ok(FullSplit { track, map, weights: w, steps })
    }

    /// Complementary regions of the ribbon structure, as cusp counts.
    pub fn complementary_regions(&self) -> Vec<usize> {
        let n = self.branch_count;
        // Oriented boundary edge (b, dir): dir 0 runs end 0 → end 1, region on the left.
        let mut seen = vec![[false; 2]; n];
        let mut regions = Vec::new();
        for b0 in 0..n {
            for d0 in 0..2 {
                if seen[b0][d0] {
                    continue;
                }
                let (mut b, mut d, mut cusps) = (b0, d0, 0);
                while !seen[b][d] {
                    seen[b][d] = true;
                    let arrive = HalfBranch(b, if d == 0 { 1 } else { 0 });
                    let s = self.slot(arrive);
                    let sides = &self.switches[s.switch].sides;
                    let next = if s.side == 0 {
                        if s.pos > 0 {
                            cusps += 1;
                            sides[0][s.pos - 1]
                        } else {
                            sides[1][0]
                        }
                    } else if s.pos + 1 < sides[1].len() {
                        cusps += 1;
                        sides[1][s.pos + 1]
                    } else {
                        *sides[0].last().unwrap()
                    };
                    b = next.0;
                    d = next.1 as usize;
                }
                regions.push(cusps);
            }
        }
        regions
    }

    /// Genus of the closed surface carrying the ribbon structure.
    pub fn ribbon_genus(&self) -> i64 {
        let chi = self.switches.len() as i64 - self.branch_count as i64 + self.complementary_regions().len() as i64;
        (2 - chi) / 2
    }
}

/// A large branch `e` from switch `u` to `v`, with the other branches at each
/// end listed left to right while travelling from `u` to `v`.
#[derive(Clone, Copy, Debug)]
pub struct SplitFrame {
    pub e: usize,
    pub u: Slot,
    pub v: Slot,
    flip_u: bool,
    flip_v: bool,
    pub x: [HalfBranch; 2],
    pub y: [HalfBranch; 2],
}

#[derive(Clone, Debug)]
pub struct FullSplit {
    pub track: TrainTrack,
    pub map: CarryingMap,
    pub weights: WeightVector,
    pub steps: Vec<(usize, SplitSide)>,
}

fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &pivot;
                for k in c..cols {
                    let d = &f * &rows[r][k];
                    rows[i][k] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::torus::standard_track;
    use super::*;

    #[test]
    fn standard_track_conditions() {
        let t = standard_track();
        assert!(t.check_switch_conditions(&WeightVector::from_ints(&[1, 1, 2])).unwrap().ok);
        assert!(t.check_switch_conditions(&WeightVector::zeros(3)).unwrap().ok);
        let r = t.check_switch_conditions(&WeightVector::from_ints(&[1, 1, 3])).unwrap();
        assert!(!r.ok && !r.violated_switches.is_empty());
        assert!(t.check_switch_conditions(&WeightVector::from_ints(&[1, 1])).is_err());
    }

    #[test]
    fn standard_track_is_a_punctured_torus() {
        let t = standard_track();
        assert_eq!(t.ribbon_genus(), 1);
        assert_eq!(t.complementary_regions(), vec![2]);
    }

    #[test]
    fn standard_faces() {
        let faces = standard_track().faces().unwrap();
        assert_eq!(faces[0].kept, vec![0, 1, 2]);
        assert_eq!(faces[0].dimension, 2);
        let codim1: Vec<_> = faces.iter().filter(|f| f.codim1).map(|f| f.kept.clone()).collect();
        assert_eq!(codim1, vec![vec![1, 2], vec![0, 2]]);
    }

    #[test]
    fn split_weights_follow_euclid() {
        let t = standard_track();
        let w = WeightVector::from_ints(&[5, 3, 8]);
        let fs = t.full_split(&w).unwrap();
        let mut got = fs.weights.0.clone();
        got.sort();
        assert_eq!(got, WeightVector::from_ints(&[2, 3, 5]).0);
        assert_eq!(fs.map.apply(&fs.weights).unwrap(), w);
        assert_eq!(fs.track.ribbon_genus(), 1);
    }

    #[test]
    fn tie_forces_central_split() {
        let t = standard_track();
        let fs = t.full_split(&WeightVector::from_ints(&[2, 2, 4])).unwrap();
        assert_eq!(fs.steps, vec![(2, SplitSide::Central)]);
        assert_eq!(fs.track.branch_count, 2);
    }
}
