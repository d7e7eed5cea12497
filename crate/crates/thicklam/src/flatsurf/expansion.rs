//! The slit-cover family, period charts, the expansion verifier and the
//! vertical saddle finder.
//!
//! Period coordinates are taken on the locus of covers: every relative class
//! of the cover has holonomy in the span of the torus lattice and the
//! differences of marked points, so charts use classes of the form
//! `p_to − p_from + m·b1 + n·b2`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{sup_norm, CoverConnection, TorusCover, TorusFamily};
use super::Vec2;
use crate::error::{Error, Result};
use crate::numeric::{exp_enclosure, fmt_q, next_down, q_frac, q_int, q_str, q_to_f64, Q};

/// Partial quotients `[a0; a1, a2, ...]`, at most `depth` of them.
pub fn continued_fraction(x: &Q, depth: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = x.clone();
    while out.len() < depth {
        let a = x.floor().to_integer();
        out.push(a.clone());
        let rest = &x - Q::from_integer(a);
        if rest.is_zero() {
            break;
        }
        x = rest.recip();
    }
    out
}

/// Accepts `x` iff every partial quotient after the integer part is at most `b`.
pub fn check_badly_approximable(x: &Q, b: u64, depth: usize) -> Result<()> {
    let cf = continued_fraction(x, depth);
    if cf.iter().skip(1).all(|a| *a <= BigInt::from(b)) {
        Ok(())
    } else {
        Err(Error::NotBadlyApproximable(fmt_q(x), b))
    }
}

/// `diag(a, 1/a)` with `a` a dyadic approximant of `e^|t|`; negative times
/// use the exact inverse so flowing forth and back is the identity.
pub fn flow_factor(t: &Q) -> Q {
    let scale = 1u64 << 24;
    let e = q_to_f64(&t.abs()).exp();
    let a = Q::new(BigInt::from((e * scale as f64).round() as u64), BigInt::from(scale));
    if t.is_negative() {
        a.recip()
    } else {
        a
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitConfig {
    /// Shear of the torus lattice `(1,0), (alpha,1)`.
    #[serde(with = "q_str")]
    pub alpha: Q,
    pub p0: Vec2,
    pub q0: Vec2,
    pub sheets: usize,
    pub b: u64,
    pub cf_depth: usize,
    pub s_samples: usize,
    #[serde(with = "q_str")]
    pub t_step: Q,
    #[serde(with = "q_str")]
    pub t_max: Q,
}

impl Default for SlitConfig {
    fn default() -> Self {
        SlitConfig {
            alpha: q_frac(4181, 10946),
            p0: Vec2::new(q_frac(55, 89), q_frac(34, 89)),
            q0: Vec2::new(q_frac(21, 25), q_frac(13, 25)),
            sheets: 2,
            b: 2,
            cf_depth: 64,
            s_samples: 33,
            t_step: q_frac(1, 4),
            t_max: q_int(8),
        }
    }
}

/// A family `s ↦ φ(s)` sampled on a grid, with a grid of flow times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub family: TorusFamily,
    #[serde(with = "crate::numeric::q_vec_str")]
    pub s_grid: Vec<Q>,
    #[serde(with = "crate::numeric::q_vec_str")]
    pub t_grid: Vec<Q>,
    pub b: u64,
    /// Slopes of the slit endpoints, checked to be badly approximable.
    #[serde(with = "crate::numeric::q_vec_str")]
    pub slopes: Vec<Q>,
    pub stratum: String,
}

impl FlowPath {
    pub fn sample(&self, s: usize) -> Result<TorusCover> {
        self.family.at(&self.s_grid[s])
    }

    pub fn flowed(&self, s: usize, t: usize) -> Result<TorusCover> {
        Ok(self.sample(s)?.flow(&flow_factor(&self.t_grid[t])))
    }
}

/// Systole of the lattice `g_t Λ` for `t` on the grid, as exact squares.
pub fn torus_systoles(alpha: &Q, t_grid: &[Q]) -> Vec<Q> {
    let lattice = TorusCover {
        basis: [Vec2::int(1, 0), Vec2::new(alpha.clone(), q_int(1))],
        points: vec![Vec2::zero()],
        slit: None,
        sheets: 1,
    };
    t_grid.iter().map(|t| lattice.flow(&flow_factor(t)).systole2().expect("a lattice has a systole")).collect()
}

/// Lower bound on the squared systole of `g_t Λ` for `B`-badly approximable
/// shear: `|m + nα|·|n| ≥ 1/(B+2)` and AM-GM give `2/(B+2)`; we check half.
pub fn torus_systole_bound(b: u64) -> Q {
    Q::new(BigInt::one(), BigInt::from(b + 2))
}

/// Two copies (or `sheets` copies) of a torus with a marked point, glued
/// along a slit whose endpoints move left at unit speed.
pub fn build_slit_family(config: &SlitConfig) -> Result<FlowPath> {
    if config.s_samples < 2 || !config.t_step.is_positive() || config.t_max.is_negative() {
        return Err(Error::Invalid("need two s samples and a positive time step".into()));
    }
    check_badly_approximable(&config.alpha, config.b, config.cf_depth)?;
    let mut slopes = Vec::new();
    for p in [&config.p0, &config.q0] {
        if p.x.is_zero() {
            return Err(Error::Invalid("slit endpoint on the vertical through the marked point".into()));
        }
        let slope = &p.y / &p.x;
        check_badly_approximable(&slope, config.b, config.cf_depth)?;
        slopes.push(slope);
    }
    let base = TorusCover {
        basis: [Vec2::int(1, 0), Vec2::new(config.alpha.clone(), q_int(1))],
        points: vec![Vec2::zero(), config.p0.clone(), config.q0.clone()],
        slit: Some([1, 2]),
        sheets: config.sheets,
    };
    let family = TorusFamily {
        base,
        basis_rate: [Vec2::zero(), Vec2::zero()],
        point_rates: vec![Vec2::zero(), Vec2::int(-1, 0), Vec2::int(-1, 0)],
    };
    let last = (config.s_samples - 1) as i64;
    let s_grid: Vec<Q> = (0..=last).map(|k| q_frac(k, last)).collect();
    let steps = (&config.t_max / &config.t_step).floor().to_integer().to_i64().unwrap_or(0);
    let t_grid: Vec<Q> = (0..=steps).map(|k| &config.t_step * q_int(k)).collect();
    let bound = torus_systole_bound(config.b);
    if let Some(t) = torus_systoles(&config.alpha, &t_grid).iter().position(|s| *s < bound) {
        return Err(Error::Hypothesis(format!("torus systole drops below the badly approximable bound at t = {}", fmt_q(&t_grid[t]))));
    }
    let mut stratum = None;
    for s in &s_grid {
        let x = family.at(s)?;
        if stratum.is_none() {
            stratum = Some(x.to_translation_surface()?.stratum());
        }
    }
    Ok(FlowPath { family, s_grid, t_grid, b: config.b, slopes, stratum: stratum.unwrap_or_default() })
}

/// A relative class `p_to − p_from + m·b1 + n·b2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodClass {
    pub from: usize,
    pub to: usize,
    pub m: i64,
    pub n: i64,
}

impl PeriodClass {
    pub fn holonomy(&self, x: &TorusCover) -> Vec2 {
        x.points[self.to]
            .sub(&x.points[self.from])
            .add(&x.basis[0].scale(&q_int(self.m)))
            .add(&x.basis[1].scale(&q_int(self.n)))
    }
}

/// A basis of relative classes chosen short at a reference surface, valid
/// while every class stays within `l_chart`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodChart {
    pub classes: Vec<PeriodClass>,
    #[serde(with = "q_str")]
    pub l_chart: Q,
}

fn int_coords(x: &TorusCover, v: &Vec2) -> Result<(i64, i64)> {
    let (m, n) = x.coords(v);
    let as_int = |q: Q| q.is_integer().then(|| q.to_integer().to_i64()).flatten();
    as_int(m).zip(as_int(n)).ok_or_else(|| Error::Integrity("lattice vector with fractional coordinates".into()))
}

impl PeriodChart {
    pub fn at(reference: &TorusCover, l_chart: Q) -> Result<PeriodChart> {
        let [r1, r2] = reference.reduced_basis();
        let mut classes = Vec::new();
        for r in [&r1, &r2] {
            let (m, n) = int_coords(reference, r)?;
            classes.push(PeriodClass { from: 0, to: 0, m, n });
        }
        let reach = r1.norm2() + r2.norm2();
        for j in 1..reference.points.len() {
            let d = reference.points[j].sub(&reference.points[0]);
            let lam = reference
                .lattice_near(&d, &reach)
                .into_iter()
                .min_by(|a, b| d.add(a).norm2().cmp(&d.add(b).norm2()))
                .ok_or_else(|| Error::Integrity("no lift within the reduced cell".into()))?;
            let (m, n) = int_coords(reference, &lam)?;
            classes.push(PeriodClass { from: 0, to: j, m, n });
        }
        let chart = PeriodChart { classes, l_chart };
        if !chart.valid_for(reference) {
            return Err(Error::ChartBreakdown(0));
        }
        Ok(chart)
    }

    pub fn valid_for(&self, x: &TorusCover) -> bool {
        let cap = &self.l_chart * &self.l_chart;
        self.classes.iter().all(|c| c.holonomy(x).norm2() <= cap)
    }

    pub fn coordinates(&self, x: &TorusCover) -> Vec<Vec2> {
        self.classes.iter().map(|c| c.holonomy(x)).collect()
    }

    /// Sup norm of the difference of period coordinates.
    pub fn distance(&self, x: &TorusCover, y: &TorusCover) -> Q {
        self.classes
            .iter()
            .map(|c| sup_norm(&c.holonomy(x).sub(&c.holonomy(y))))
            .max()
            .unwrap_or_else(Q::zero)
    }
}

pub fn period_distance(x: &TorusCover, y: &TorusCover, chart: &PeriodChart) -> Result<Q> {
    if !chart.valid_for(x) || !chart.valid_for(y) {
        return Err(Error::ChartBreakdown(usize::from(chart.valid_for(x))));
    }
    Ok(chart.distance(x, y))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLength {
    #[serde(with = "q_str")]
    pub length: Q,
    /// Sample indices where a new chart was taken.
    pub chart_changes: Vec<usize>,
}

/// Chart-wise length of a sampled path: a chart is kept while it covers the
/// next sample and replaced by one centred at the current sample otherwise.
pub fn path_period_length(samples: &[TorusCover], l_chart: &Q) -> Result<PathLength> {
    let Some(first) = samples.first() else {
        return Ok(PathLength { length: Q::zero(), chart_changes: vec![] });
    };
    let mut chart = PeriodChart::at(first, l_chart.clone())?;
    let mut out = PathLength { length: Q::zero(), chart_changes: vec![0] };
    for (i, pair) in samples.windows(2).enumerate() {
        if !chart.valid_for(&pair[1]) {
            chart = PeriodChart::at(&pair[0], l_chart.clone()).map_err(|_| Error::ChartBreakdown(i))?;
            if !chart.valid_for(&pair[1]) {
                return Err(Error::ChartBreakdown(i + 1));
            }
            out.chart_changes.push(i);
        }
        out.length += chart.distance(&pair[0], &pair[1]);
    }
    Ok(out)
}

/// Largest ratio between two charts' distances over all pairs of samples.
pub fn chart_change_factor(a: &PeriodChart, b: &PeriodChart, samples: &[TorusCover]) -> f64 {
    let mut worst = 1.0f64;
    for (i, x) in samples.iter().enumerate() {
        for y in &samples[i + 1..] {
            let (da, db) = (a.distance(x, y), b.distance(x, y));
            if da.is_zero() || db.is_zero() {
                continue;
            }
            let r = q_to_f64(&(da / db));
            worst = worst.max(r).max(1.0 / r);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    /// Required per-step ratio as a fraction of `e^{Δt}`.
    pub delta: f64,
    pub fraction: f64,
    pub c_max: f64,
    pub systole_min: f64,
    #[serde(with = "q_str")]
    pub l_chart: Q,
    /// Multiplicative constant of the period metric comparison; recorded only.
    pub u: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams { delta: 0.9, fraction: 0.95, c_max: 1.02, systole_min: 1e-3, l_chart: q_int(4096), u: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub t: f64,
    pub s: String,
    /// Smallest step ratio over pairs containing this sample; none at `t = 0`.
    pub ratio: Option<f64>,
    pub systole: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub samples: usize,
    pub times: usize,
    pub pairs: usize,
    pub stratum: String,
    pub min_systole: f64,
    pub systole_by_t: Vec<f64>,
    pub torus_systole_min: f64,
    /// Minimum of (step ratio) / e^{Δt} over all pairs and steps.
    pub min_expansion: f64,
    pub ratios_checked: usize,
    pub ratios_passing: usize,
    pub passing_fraction: f64,
    pub c_hat: f64,
    pub c_mean: f64,
    /// Largest gap between a flow factor's logarithm and its nominal time.
    pub flow_error: f64,
    pub charts: usize,
    pub params: ExpansionParams,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("t,s,ratio,systole\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:.9}")).unwrap_or_default();
            out.push_str(&format!("{},{},{},{:.9}\n", r.t, r.s, ratio, r.systole));
        }
        out
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Measures systoles, per-step expansion of `d_per` between all pairs of
/// samples, and the regression exponent of `ln d_per` against flow time.
pub fn verify_expansion(path: &FlowPath, params: &ExpansionParams) -> Result<ExpansionReport> {
    let ns = path.s_grid.len();
    let nt = path.t_grid.len();
    let pairs: Vec<(usize, usize)> = (0..ns).flat_map(|a| (a + 1..ns).map(move |b| (a, b))).collect();
    let factors: Vec<Q> = path.t_grid.iter().map(flow_factor).collect();
    let t_eff: Vec<f64> = factors.iter().map(|a| q_to_f64(a).ln()).collect();
    let flow_error = t_eff.iter().zip(&path.t_grid).map(|(e, t)| (e - q_to_f64(t)).abs()).fold(0.0, f64::max);
    let base: Vec<TorusCover> = (0..ns).map(|s| path.sample(s)).collect::<Result<_>>()?;

    struct Slice {
        systoles: Vec<f64>,
        dists: Vec<Q>,
    }
    let slices: Vec<Slice> = (0..nt)
        .into_par_iter()
        .map(|k| -> Result<Slice> {
            let xs: Vec<TorusCover> = base.iter().map(|x| x.flow(&factors[k])).collect();
            let chart = PeriodChart::at(&xs[0], params.l_chart.clone())?;
            if let Some(bad) = xs.iter().position(|x| !chart.valid_for(x)) {
                return Err(Error::ChartBreakdown(bad));
            }
            let systoles = xs.iter().map(|x| x.systole2().map(|q| q_to_f64(&q).sqrt())).collect::<Result<_>>()?;
            let dists = pairs.iter().map(|&(a, b)| chart.distance(&xs[a], &xs[b])).collect();
            Ok(Slice { systoles, dists })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(ns * nt);
    let mut checked = 0;
    let mut passing = 0;
    let mut min_expansion = f64::INFINITY;
    for k in 0..nt {
        let mut worst = vec![None::<f64>; ns];
        if k > 0 {
            let dt = q_to_f64(&(&path.t_grid[k] - &path.t_grid[k - 1]));
            let (e_lo, e_hi) = exp_enclosure(dt);
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let (d0, d1) = (&slices[k - 1].dists[p], &slices[k].dists[p]);
                if d0.is_zero() {
                    continue;
                }
                let ratio = next_down(q_to_f64(&(d1 / d0)));
                checked += 1;
                if ratio >= params.delta * e_hi {
                    passing += 1;
                }
                min_expansion = min_expansion.min(ratio / e_lo);
                for i in [a, b] {
                    worst[i] = Some(worst[i].map_or(ratio, |w: f64| w.min(ratio)));
                }
            }
        }
        for s in 0..ns {
            rows.push(ExpansionRow {
                t: q_to_f64(&path.t_grid[k]),
                s: fmt_q(&path.s_grid[s]),
                ratio: worst[s],
                systole: slices[k].systoles[s],
            });
        }
    }
    let slopes: Vec<f64> = (0..pairs.len())
        .filter(|&p| slices.iter().all(|sl| sl.dists[p].is_positive()))
        .map(|p| {
            let ys: Vec<f64> = slices.iter().map(|sl| q_to_f64(&sl.dists[p]).ln()).collect();
            slope(&t_eff, &ys)
        })
        .collect();
    let c_hat = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_mean = slopes.iter().sum::<f64>() / slopes.len().max(1) as f64;
    let systole_by_t: Vec<f64> = slices.iter().map(|sl| sl.systoles.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let min_systole = systole_by_t.iter().copied().fold(f64::INFINITY, f64::min);
    let torus_systole_min = torus_systoles(&path.family.base.basis[1].x, &path.t_grid)
        .iter()
        .map(|q| q_to_f64(q).sqrt())
        .fold(f64::INFINITY, f64::min);
    let passing_fraction = if checked == 0 { 1.0 } else { passing as f64 / checked as f64 };
    let pass = min_systole > params.systole_min && passing_fraction >= params.fraction && c_hat <= params.c_max;
    Ok(ExpansionReport {
        samples: ns,
        times: nt,
        pairs: pairs.len(),
        stratum: path.stratum.clone(),
        min_systole,
        systole_by_t,
        torus_systole_min,
        min_expansion,
        ratios_checked: checked,
        ratios_passing: passing,
        passing_fraction,
        c_hat,
        c_mean,
        flow_error,
        charts: nt,
        params: params.clone(),
        pass,
        rows,
    })
}

/// A flat torus with one marked point whose second basis vector sweeps
/// horizontally, passing through vertical at `s = plant`.
pub fn sheared_square_family(plant: &Q, rate: &Q) -> TorusFamily {
    TorusFamily {
        base: TorusCover {
            basis: [Vec2::int(1, 0), Vec2::new(-(rate * plant), q_int(1))],
            points: vec![Vec2::zero()],
            slit: None,
            sheets: 1,
        },
        basis_rate: [Vec2::zero(), Vec2::new(rate.clone(), Q::zero())],
        point_rates: vec![Vec2::zero()],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalSaddle {
    #[serde(with = "q_str")]
    pub s_star: Q,
    /// Grid samples bracketing the crossing.
    #[serde(with = "crate::numeric::q_vec_str")]
    pub bracket: Vec<Q>,
    pub connection: CoverConnection,
    #[serde(with = "q_str")]
    pub l: Q,
    /// Lifts left of the vertical separatrix in the window, per sample.
    pub intersection_counts: Vec<usize>,
}

/// Tracks lifts `p_j + m·b1 + n·b2` above the upward vertical separatrix
/// from the first point with height in `[1/L, L]`. A lift changing sides
/// between two samples is a crossing; the family is affine in `s`, so the
/// crossing parameter is solved exactly and confirmed by a census.
pub fn find_vertical_saddle(family: &TorusFamily, s_grid: &[Q], l: &Q) -> Result<VerticalSaddle> {
    if s_grid.len() < 2 || *l < Q::one() {
        return Err(Error::Invalid("need two samples and L ≥ 1".into()));
    }
    let lo = l.recip();
    let in_window = |v: &Vec2| v.y >= lo && v.y <= *l;
    let mut lifts: Vec<Vec<(usize, i64, i64, Vec2)>> = Vec::with_capacity(s_grid.len());
    for s in s_grid {
        let x = family.at(s)?;
        let o = &x.points[0];
        let r2 = l * l * q_int(4);
        let mut here = Vec::new();
        for (j, p) in x.points.iter().enumerate() {
            let d = p.sub(o);
            for lam in x.lattice_near(&d, &r2) {
                let v = d.add(&lam);
                if in_window(&v) {
                    let (m, n) = int_coords(&x, &lam)?;
                    here.push((j, m, n, v));
                }
            }
        }
        lifts.push(here);
    }
    let intersection_counts: Vec<usize> = lifts.iter().map(|h| h.iter().filter(|e| e.3.x.is_negative()).count()).collect();
    let mut finest = None::<Q>;
    for i in 0..s_grid.len() - 1 {
        let gap = &s_grid[i + 1] - &s_grid[i];
        finest = Some(finest.map_or(gap.clone(), |f: Q| f.min(gap.clone())));
        let mut best: Option<(Q, Vec2)> = None;
        for (j, m, n, v0) in &lifts[i] {
            let Some((_, _, _, v1)) = lifts[i + 1].iter().find(|e| e.0 == *j && e.1 == *m && e.2 == *n) else {
                continue;
            };
            let crosses = v0.x.is_zero() || v1.x.is_zero() || v0.x.signum() != v1.x.signum();
            if !crosses || (i > 0 && v0.x.is_zero()) {
                continue;
            }
            let s_star = if v0.x == v1.x { s_grid[i].clone() } else { &s_grid[i] - &v0.x * &gap / (&v1.x - &v0.x) };
            let x = family.at(&s_star)?;
            let hol = x.points[*j].sub(&x.points[0]).add(&x.basis[0].scale(&q_int(*m))).add(&x.basis[1].scale(&q_int(*n)));
            if !hol.x.is_zero() || !in_window(&hol) {
                continue;
            }
            let better = best.as_ref().is_none_or(|(s, h)| s_star < *s || s_star == *s && hol.y < h.y);
            if better {
                best = Some((s_star, hol));
            }
        }
        if let Some((s_star, _)) = best {
            let x = family.at(&s_star)?;
            let census = x.census(l)?;
            let connection = census
                .into_iter()
                .filter(|c| c.start == 0 && c.hol.x.is_zero() && c.hol.y.is_positive() && in_window(&c.hol))
                .min_by(|a, b| a.hol.y.cmp(&b.hol.y))
                .ok_or_else(|| Error::Verification("crossing lift is not a saddle connection".into()))?;
            return Ok(VerticalSaddle {
                s_star,
                bracket: vec![s_grid[i].clone(), s_grid[i + 1].clone()],
                connection,
                l: l.clone(),
                intersection_counts,
            });
        }
    }
    Err(Error::NotFound(finest.map(|f| fmt_q(&f)).unwrap_or_default()))
}

/// Uniform grid of `n` samples on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<Q> {
    let last = (n.max(2) - 1) as i64;
    (0..=last).map(|k| q_frac(k, last)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continued_fractions_and_bad_approximability() {
        let cf = continued_fraction(&q_frac(34, 55), 64);
        assert_eq!(cf.iter().map(|a| a.to_i64().unwrap()).collect::<Vec<_>>(), vec![0, 1, 1, 1, 1, 1, 1, 1, 2]);
        let c = SlitConfig::default();
        assert!(check_badly_approximable(&c.alpha, 2, 64).is_ok());
        assert!(check_badly_approximable(&c.alpha, 1, 64).is_err());
        assert!(matches!(check_badly_approximable(&q_frac(1, 7), 2, 64), Err(Error::NotBadlyApproximable(_, 2))));
        // Euclid agrees with the convergents.
        let x = q_frac(4181, 10946);
        let mut back = Q::zero();
        for a in continued_fraction(&x, 64).iter().rev() {
            back = if back.is_zero() { Q::from_integer(a.clone()) } else { Q::from_integer(a.clone()) + back.recip() };
        }
        assert_eq!(back, x);
    }

    #[test]
    fn flow_factors_are_exact_inverses() {
        for k in 0..=32 {
            let t = q_frac(k, 4);
            assert_eq!(flow_factor(&t) * flow_factor(&-t.clone()), q_int(1));
            assert!((q_to_f64(&flow_factor(&t)).ln() - q_to_f64(&t)).abs() < 1e-6);
        }
        assert_eq!(flow_factor(&Q::zero()), q_int(1));
    }

    #[test]
    fn slit_family_shape() {
        let path = build_slit_family(&SlitConfig::default()).unwrap();
        assert_eq!(path.s_grid.len(), 33);
        assert_eq!(path.t_grid.len(), 33);
        assert_eq!(path.stratum, "H(1,1)+2 marked");
        let a0 = path.sample(0).unwrap();
        assert_eq!(a0.points[1], SlitConfig::default().p0);
        for s in [0, 16, 32] {
            assert_eq!(path.sample(s).unwrap().area(), q_int(2));
        }
        let three = build_slit_family(&SlitConfig { sheets: 3, s_samples: 5, ..SlitConfig::default() }).unwrap();
        assert_eq!(three.stratum, "H(2,2)+3 marked");
        let bad = SlitConfig { p0: Vec2::new(q_frac(7, 10), q_frac(1, 10)), ..SlitConfig::default() };
        assert!(matches!(build_slit_family(&bad), Err(Error::NotBadlyApproximable(..))));
    }

    #[test]
    fn torus_systole_stays_above_the_bound() {
        let c = SlitConfig::default();
        let ts: Vec<Q> = (0..=32).map(|k| q_frac(k, 4)).collect();
        let bound = torus_systole_bound(c.b);
        assert!(torus_systoles(&c.alpha, &ts).iter().all(|s| *s >= bound));
    }

    #[test]
    fn period_distance_basics_and_chart_change() {
        let path = build_slit_family(&SlitConfig { s_samples: 9, ..SlitConfig::default() }).unwrap();
        let x = path.sample(0).unwrap();
        let y = path.sample(4).unwrap();
        let chart = PeriodChart::at(&x, q_int(8)).unwrap();
        assert_eq!(chart.classes.len(), 4);
        assert_eq!(period_distance(&x, &x, &chart).unwrap(), Q::zero());
        // Both slit endpoints moved by (-1/2, 0).
        assert_eq!(period_distance(&x, &y, &chart).unwrap(), q_frac(1, 2));
        let other = PeriodChart::at(&y, q_int(8)).unwrap();
        let samples: Vec<TorusCover> = (0..9).map(|s| path.sample(s).unwrap()).collect();
        let f = chart_change_factor(&chart, &other, &samples);
        assert!((1.0..=2.0).contains(&f));
        let len = path_period_length(&samples, &q_int(8)).unwrap();
        assert_eq!(len.length, q_int(1));
        assert!(matches!(path_period_length(&samples, &q_frac(1, 2)), Err(Error::ChartBreakdown(_))));
    }

    #[test]
    fn short_expansion_run() {
        let path = build_slit_family(&SlitConfig { s_samples: 5, t_max: q_int(2), ..SlitConfig::default() }).unwrap();
        let rep = verify_expansion(&path, &ExpansionParams::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.pairs, 10);
        assert_eq!(rep.rows.len(), 5 * 9);
        assert!(rep.rows.iter().filter(|r| r.t == 0.0).all(|r| r.ratio.is_none()));
        assert!(rep.c_hat <= 1.02 && rep.c_hat >= 0.98);
        assert!(rep.csv().starts_with("t,s,ratio,systole\n"));
    }

    #[test]
    fn planted_verticals_are_found_exactly() {
        for plant in [q_frac(1, 2), q_frac(1, 3)] {
            let fam = sheared_square_family(&plant, &q_frac(1, 2));
            let v = find_vertical_saddle(&fam, &unit_grid(33), &q_int(2)).unwrap();
            assert_eq!(v.s_star, plant);
            assert!(v.bracket[0] <= plant && plant <= v.bracket[1]);
            assert_eq!(v.connection.hol, Vec2::int(0, 1));
        }
        let fam = sheared_square_family(&q_int(3), &q_frac(1, 8));
        assert!(matches!(find_vertical_saddle(&fam, &unit_grid(9), &q_int(2)), Err(Error::NotFound(_))));
    }

    #[test]
    fn slit_family_passes_through_a_vertical() {
        let path = build_slit_family(&SlitConfig { s_samples: 17, ..SlitConfig::default() }).unwrap();
        let v = find_vertical_saddle(&path.family, &path.s_grid, &q_int(4)).unwrap();
        assert!(v.connection.hol.x.is_zero());
        assert!(v.connection.hol.y >= q_frac(1, 4) && v.connection.hol.y <= q_int(4));
    }
}
