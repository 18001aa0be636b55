//! Finite-size scaling: data collapse, curve crossings and central-charge fits.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::Replica;
use crate::estimators::{AggregateRow, Protocol};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng::hash_words;
use crate::{Result, TelecodeError};

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(TelecodeError::Scaling(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub d: usize,
    pub t_over_pi: f64,
    pub mean: f64,
    pub se: f64,
}

/// Finite-size curves `mean(t)` at several code distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDataset {
    pub points: Vec<ScalingPoint>,
    pub observable: String,
    pub theta_over_pi: Option<f64>,
    pub n_replica: Option<Replica>,
    pub protocol: Option<Protocol>,
}

impl ScalingDataset {
    pub fn new(points: Vec<ScalingPoint>, observable: impl Into<String>) -> Self {
        Self {
            points,
            observable: observable.into(),
            theta_over_pi: None,
            n_replica: None,
            protocol: None,
        }
    }

    /// Dataset from aggregate rows sharing one angle, replica and protocol.
    pub fn from_rows(rows: &[AggregateRow], observable: impl Into<String>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return fail("no rows");
        };
        for r in rows {
            if r.theta_over_pi != first.theta_over_pi || r.n_replica != first.n_replica || r.protocol != first.protocol {
                return Err(TelecodeError::MixedParams(format!(
                    "theta/pi {} n {} vs theta/pi {} n {}",
                    first.theta_over_pi, first.n_replica, r.theta_over_pi, r.n_replica
                )));
            }
        }
        Ok(Self {
            points: rows
                .iter()
                .map(|r| ScalingPoint {
                    d: r.d,
                    t_over_pi: r.t_over_pi,
                    mean: r.mean,
                    se: r.se,
                })
                .collect(),
            observable: observable.into(),
            theta_over_pi: Some(first.theta_over_pi),
            n_replica: Some(first.n_replica),
            protocol: Some(first.protocol),
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.d).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Points at distance `d`, sorted by `t`.
    pub fn curve(&self, d: usize) -> Vec<ScalingPoint> {
        let mut c: Vec<_> = self.points.iter().copied().filter(|p| p.d == d).collect();
        c.sort_by(|a, b| a.t_over_pi.total_cmp(&b.t_over_pi));
        c
    }

    /// Invariants required by [`collapse`].
    pub fn validate(&self) -> Result<()> {
        let sizes = self.sizes();
        if sizes.len() < 3 {
            return fail(format!("need at least 3 distances, got {}", sizes.len()));
        }
        for &d in &sizes {
            let ts: BTreeSet<u64> = self.curve(d).iter().map(|p| p.t_over_pi.to_bits()).collect();
            if ts.len() < 5 {
                return fail(format!("d = {d} has {} t points, need at least 5", ts.len()));
            }
        }
        for p in &self.points {
            if !(p.se > 0.0 && p.se.is_finite() && p.mean.is_finite() && p.t_over_pi.is_finite()) {
                return fail(format!("invalid point d = {} t/pi = {}: mean {} se {}", p.d, p.t_over_pi, p.mean, p.se));
            }
        }
        Ok(())
    }

    /// The dataset with `mean → a·mean + b` and `se → |a|·se`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p.mean = a * p.mean + b;
            p.se *= a.abs();
        }
        out
    }
}

/// Symmetric pentadiagonal matrix, row `i` holding `(i,i)`, `(i,i−1)`, `(i,i−2)`.
#[derive(Clone)]
struct Band5(Vec<[f64; 3]>);

impl Band5 {
    fn cholesky(&self) -> Option<Band5> {
        let a = &self.0;
        let mut l = vec![[0.0; 3]; a.len()];
        for i in 0..a.len() {
            if i >= 2 {
                l[i][2] = a[i][2] / l[i - 2][0];
            }
            if i >= 1 {
                let c = if i >= 2 { l[i][2] * l[i - 1][1] } else { 0.0 };
                l[i][1] = (a[i][1] - c) / l[i - 1][0];
            }
            let diag = a[i][0] - l[i][1] * l[i][1] - l[i][2] * l[i][2];
            if !(diag > 0.0) {
                return None;
            }
            l[i][0] = diag.sqrt();
        }
        Some(Band5(l))
    }

    fn solve_factored(&self, b: &mut [f64]) {
        let l = &self.0;
        let m = b.len();
        for i in 0..m {
            let mut s = b[i];
            if i >= 1 {
                s -= l[i][1] * b[i - 1];
            }
            if i >= 2 {
                s -= l[i][2] * b[i - 2];
            }
            b[i] = s / l[i][0];
        }
        for i in (0..m).rev() {
            let mut s = b[i];
            if i + 1 < m {
                s -= l[i + 1][1] * b[i + 1];
            }
            if i + 2 < m {
                s -= l[i + 2][2] * b[i + 2];
            }
            b[i] = s / l[i][0];
        }
    }

    /// `tr(A⁻¹ B)` for banded `B`, with `self` the Cholesky factor of `A`.
    ///
    /// Only the band of `A⁻¹` is formed, by the backward recurrence on the
    /// unit-diagonal factorization.
    fn inverse_band_trace(&self, b: &Band5) -> f64 {
        let l = &self.0;
        let m = l.len();
        // unit[k][o] = L_{k,k−o} / L_{k−o,k−o}, inv[i] = (Σ_ii, Σ_{i+1,i}, Σ_{i+2,i}).
        let unit = |k: usize, o: usize| l[k][o] / l[k - o][0];
        let mut inv = vec![[0.0; 3]; m];
        let sig = |inv: &Vec<[f64; 3]>, a: usize, c: usize| {
            let (a, c) = if a >= c { (a, c) } else { (c, a) };
            if a - c > 2 { 0.0 } else { inv[c][a - c] }
        };
        for i in (0..m).rev() {
            for off in [2usize, 1] {
                let j = i + off;
                if j >= m {
                    continue;
                }
                let mut v = 0.0;
                for o in 1..=2 {
                    let k = i + o;
                    if k < m {
                        v -= unit(k, o) * sig(&inv, k, j);
                    }
                }
                inv[i][off] = v;
            }
            let mut v = 1.0 / (l[i][0] * l[i][0]);
            for o in 1..=2 {
                let k = i + o;
                if k < m {
                    v -= unit(k, o) * inv[i][o];
                }
            }
            inv[i][0] = v;
        }
        (0..m)
            .map(|i| {
                inv[i][0] * b.0[i][0]
                    + 2.0 * (1..=2).filter(|o| i + o < m).map(|o| inv[i][o] * b.0[i + o][o]).sum::<f64>()
            })
            .sum()
    }
}

/// Weighted cubic smoothing spline minimizing
/// `Σ wᵢ (yᵢ − f(xᵢ))² + λ ∫ f''²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    /// Second derivatives at the knots, zero at both ends.
    pub curvature: Vec<f64>,
    pub lambda: f64,
    /// Effective degrees of freedom `tr S(λ)`.
    pub edf: f64,
    pub gcv: f64,
}

struct SplineSystem {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    h: Vec<f64>,
    r: Band5,
    b: Band5,
    qty: Vec<f64>,
}

impl SplineSystem {
    fn new(points: &[(f64, f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64, f64)> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let span = pts.last().map_or(0.0, |p| p.0) - pts.first().map_or(0.0, |p| p.0);
        let (mut x, mut y, mut w) = (Vec::new(), Vec::<f64>::new(), Vec::<f64>::new());
        for (xi, yi, wi) in pts {
            if !(wi > 0.0 && wi.is_finite() && xi.is_finite() && yi.is_finite()) {
                return fail("spline input must be finite with positive weights");
            }
            match x.last() {
                Some(&xl) if xi - xl <= 1e-12 * span => {
                    let k = y.len() - 1;
                    y[k] = (y[k] * w[k] + yi * wi) / (w[k] + wi);
                    w[k] += wi;
                }
                _ => {
                    x.push(xi);
                    y.push(yi);
                    w.push(wi);
                }
            }
        }
        let n = x.len();
        if n < 4 {
            return fail(format!("smoothing spline needs at least 4 distinct abscissae, got {n}"));
        }
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let m = n - 2;
        let q = |j: usize| [1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]];
        let mut r = vec![[0.0; 3]; m];
        let mut b = vec![[0.0; 3]; m];
        let mut qty = vec![0.0; m];
        for j in 0..m {
            r[j][0] = (h[j] + h[j + 1]) / 3.0;
            if j >= 1 {
                r[j][1] = h[j] / 6.0;
            }
            let qj = q(j);
            qty[j] = (0..3).map(|o| qj[o] * y[j + o]).sum();
            for off in 0..=2.min(j) {
                let qk = q(j - off);
                // Column j touches rows j..j+2, column j−off rows j−off..j−off+2.
                b[j][off] = (j..=j - off + 2).map(|row| qj[row - j] * qk[row - (j - off)] / w[row]).sum();
            }
        }
        Ok(Self {
            x,
            y,
            w,
            h,
            r: Band5(r),
            b: Band5(b),
            qty,
        })
    }

    fn lambda_scale(&self) -> f64 {
        let tr_r: f64 = self.r.0.iter().map(|r| r[0]).sum();
        let tr_b: f64 = self.b.0.iter().map(|b| b[0]).sum();
        tr_r / tr_b
    }

    fn fit(&self, lambda: f64) -> Option<SmoothingSpline> {
        let n = self.x.len();
        let m = n - 2;
        let a = Band5(
            self.r
                .0
                .iter()
                .zip(&self.b.0)
                .map(|(r, b)| [r[0] + lambda * b[0], r[1] + lambda * b[1], r[2] + lambda * b[2]])
                .collect(),
        );
        let l = a.cholesky()?;
        let mut gamma = self.qty.clone();
        l.solve_factored(&mut gamma);
        let mut values = self.y.clone();
        for j in 0..m {
            let qj = [1.0 / self.h[j], -1.0 / self.h[j] - 1.0 / self.h[j + 1], 1.0 / self.h[j + 1]];
            for o in 0..3 {
                values[j + o] -= lambda * qj[o] * gamma[j] / self.w[j + o];
            }
        }
        let tr = l.inverse_band_trace(&self.b);
        let edf = n as f64 - lambda * tr;
        let rss: f64 = (0..n).map(|i| self.w[i] * (self.y[i] - values[i]).powi(2)).sum();
        let denom = 1.0 - edf / n as f64;
        let gcv = (rss / n as f64) / (denom * denom);
        let mut curvature = vec![0.0; n];
        curvature[1..n - 1].copy_from_slice(&gamma);
        gcv.is_finite().then(|| SmoothingSpline {
            knots: self.x.clone(),
            values,
            curvature,
            lambda,
            edf,
            gcv,
        })
    }
}

impl SmoothingSpline {
    /// Fit at a fixed smoothing parameter. Points are `(x, y, weight)`.
    pub fn fit(points: &[(f64, f64, f64)], lambda: f64) -> Result<Self> {
        let sys = SplineSystem::new(points)?;
        sys.fit(lambda).map_or_else(|| fail("smoothing spline system is singular"), Ok)
    }

    /// Fit with `λ` minimizing the generalized cross-validation score.
    pub fn fit_gcv(points: &[(f64, f64, f64)]) -> Result<Self> {
        let sys = SplineSystem::new(points)?;
        let ln0 = sys.lambda_scale().ln();
        let eval = |u: f64| sys.fit((ln0 + u).exp());
        let score = |u: f64| eval(u).map_or(f64::INFINITY, |s| s.gcv);
        let grid: Vec<f64> = (0..=16).map(|k| -12.0 + 1.5 * k as f64).collect();
        let scores: Vec<f64> = grid.iter().map(|&u| score(u)).collect();
        let best = (0..grid.len()).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap_or(0);
        if !scores[best].is_finite() {
            return fail("generalized cross-validation failed at every smoothing level");
        }
        let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut fa, mut fb) = (score(a), score(b));
        for _ in 0..12 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = score(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = score(b);
            }
        }
        let u = if fa < fb { a } else { b };
        let u = if score(u) <= scores[best] { u } else { grid[best] };
        eval(u).map_or_else(|| fail("smoothing spline system is singular"), Ok)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Value at `x`, `None` outside the knot range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, self.knots.len() - 1) - 1;
        let (xl, xr) = (self.knots[i], self.knots[i + 1]);
        let h = xr - xl;
        let (a, b) = (x - xl, xr - x);
        let (g0, g1) = (self.curvature[i], self.curvature[i + 1]);
        Some((a * self.values[i + 1] + b * self.values[i]) / h - a * b / 6.0 * ((1.0 + a / h) * g1 + (1.0 + b / h) * g0))
    }
}

/// Scaling variable `(t − t_c) d^{1/ν}`.
pub fn scaling_variable(t_over_pi: f64, d: usize, t_c: f64, nu: f64) -> f64 {
    (t_over_pi - t_c) * (d as f64).powf(1.0 / nu)
}

/// Points mapped to `(d, x, mean, se)` for plotting a collapse.
pub fn collapsed_points(ds: &ScalingDataset, t_c: f64, nu: f64) -> Vec<(usize, f64, f64, f64)> {
    ds.points
        .iter()
        .map(|p| (p.d, scaling_variable(p.t_over_pi, p.d, t_c, nu), p.mean, p.se))
        .collect()
}

/// Master-curve misfit at `(t_c, ν)`.
///
/// Each distance is compared against a smoothing spline through all other
/// distances, over the part of the scaling axis they cover; the result is
/// `(χ²/(n_used − 2), n_used)`.
pub fn collapse_quality(ds: &ScalingDataset, t_c: f64, nu: f64) -> (f64, usize) {
    if !(nu > 0.05 && nu < 50.0 && t_c.is_finite()) {
        return (f64::INFINITY, 0);
    }
    let scaled = collapsed_points(ds, t_c, nu);
    let mut chi2 = 0.0;
    let mut used = 0usize;
    for d in ds.sizes() {
        let train: Vec<(f64, f64, f64)> = scaled
            .iter()
            .filter(|p| p.0 != d)
            .map(|p| (p.1, p.2, 1.0 / (p.3 * p.3)))
            .collect();
        let Ok(spline) = SmoothingSpline::fit_gcv(&train) else {
            return (f64::INFINITY, 0);
        };
        for p in scaled.iter().filter(|p| p.0 == d) {
            if let Some(f) = spline.eval(p.1) {
                chi2 += ((p.2 - f) / p.3).powi(2);
                used += 1;
            }
        }
    }
    if used < 3.max(ds.points.len() / 3) {
        return (f64::INFINITY, used);
    }
    (chi2 / (used - 2) as f64, used)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    pub bootstrap: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            bootstrap: 200,
            seed: 0,
            max_iter: 500,
        }
    }
}

/// Best point of a single collapse minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub t_c: f64,
    pub nu: f64,
    /// Reduced χ² of the master-curve residuals.
    pub quality: f64,
    pub n_used: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub fit: CollapseFit,
    pub t_c_err: f64,
    pub nu_err: f64,
    /// Resamples whose refit converged.
    pub n_bootstrap: usize,
    pub bootstrap_failures: usize,
}

impl Collapse {
    pub fn converged(&self) -> bool {
        self.fit.converged
    }
}

fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2], max_iter: usize) -> ([f64; 2], f64, usize, bool) {
    let mut simplex = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = simplex.map(f);
    for it in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.map(|k| simplex[k]);
        vals = order.map(|k| vals[k]);
        let size = (1..3)
            .map(|k| ((simplex[k][0] - simplex[0][0]) / step[0]).abs().max(((simplex[k][1] - simplex[0][1]) / step[1]).abs()))
            .fold(0.0, f64::max);
        let spread = (vals[2] - vals[0]).abs();
        if vals[0].is_finite() && size < 1e-6 && spread <= 1e-9 * (1.0 + vals[0].abs()) {
            return (simplex[0], vals[0], it, true);
        }
        let c = [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let along = |s: f64| [c[0] + s * (simplex[2][0] - c[0]), c[1] + s * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (simplex[best], vals[best], max_iter, false)
}

fn t_span(ds: &ScalingDataset) -> f64 {
    let (lo, hi) = ds
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.t_over_pi), hi.max(p.t_over_pi)));
    (hi - lo).max(1e-6)
}

fn minimize(ds: &ScalingDataset, t_c0: f64, nu0: f64, max_iter: usize, scale: f64, restart: bool) -> Result<CollapseFit> {
    ds.validate()?;
    if !(nu0 > 0.0 && nu0.is_finite() && t_c0.is_finite()) {
        return fail(format!("invalid initial guess t_c = {t_c0}, nu = {nu0}"));
    }
    let objective = |p: [f64; 2]| collapse_quality(ds, p[0], p[1]).0;
    let step = [0.1 * scale * t_span(ds), 0.2 * scale * nu0];
    let (mut best, mut val, mut iters, mut ok) = nelder_mead(&objective, [t_c0, nu0], step, max_iter);
    if ok && restart {
        // A restart from the optimum guards against simplex collapse.
        let (b2, v2, it2, ok2) = nelder_mead(&objective, best, [step[0] / 4.0, step[1] / 4.0], max_iter);
        iters += it2;
        if v2 <= val {
            best = b2;
            val = v2;
        }
        ok = ok2;
    }
    if !val.is_finite() {
        return fail("collapse objective is not finite near the initial guess");
    }
    Ok(CollapseFit {
        t_c: best[0],
        nu: best[1],
        quality: val,
        n_used: collapse_quality(ds, best[0], best[1]).1,
        iterations: iters,
        converged: ok,
    })
}

/// Minimize [`collapse_quality`] from `(t_c0, ν0)` without error analysis.
pub fn fit_collapse(ds: &ScalingDataset, t_c0: f64, nu0: f64, max_iter: usize) -> Result<CollapseFit> {
    minimize(ds, t_c0, nu0, max_iter, 1.0, true)
}

/// Gaussian resample of the means, replica `index` of the stream `seed`.
pub fn resample(ds: &ScalingDataset, seed: u64, index: usize) -> ScalingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[seed, index as u64]));
    let mut out = ds.clone();
    for p in &mut out.points {
        let z: f64 = StandardNormal.sample(&mut rng);
        p.mean += p.se * z;
    }
    out
}

/// Refit of one bootstrap resample started from `fit`; `None` if it failed.
pub fn bootstrap_refit(ds: &ScalingDataset, fit: &CollapseFit, opts: &CollapseOptions, index: usize) -> Option<(f64, f64)> {
    let r = minimize(&resample(ds, opts.seed, index), fit.t_c, fit.nu, opts.max_iter, 0.25, false).ok()?;
    (r.converged && r.t_c.is_finite() && r.nu.is_finite()).then_some((r.t_c, r.nu))
}

/// Combine bootstrap refits into standard errors.
pub fn summarize_bootstrap(fit: CollapseFit, draws: &[Option<(f64, f64)>]) -> Collapse {
    let ok: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
    let sd = |v: &dyn Fn(&(f64, f64)) -> f64| {
        if ok.len() < 2 {
            return f64::NAN;
        }
        let n = ok.len() as f64;
        let m = ok.iter().map(v).sum::<f64>() / n;
        (ok.iter().map(|x| (v(x) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Collapse {
        fit,
        t_c_err: sd(&|x| x.0),
        nu_err: sd(&|x| x.1),
        n_bootstrap: ok.len(),
        bootstrap_failures: draws.len() - ok.len(),
    }
}

/// Collapse `mean` against `(t − t_c) d^{1/ν}` with parametric bootstrap
/// errors. Non-convergence is reported through `fit.converged`.
pub fn collapse(ds: &ScalingDataset, t_c0: f64, nu0: f64, opts: &CollapseOptions) -> Result<Collapse> {
    let fit = fit_collapse(ds, t_c0, nu0, opts.max_iter)?;
    let draws: Vec<_> = (0..opts.bootstrap).map(|b| bootstrap_refit(ds, &fit, opts, b)).collect();
    Ok(summarize_bootstrap(fit, &draws))
}

/// Monotone piecewise-cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two points.
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return fail("interpolation needs at least two strictly increasing abscissae");
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope = vec![del[0]; 2];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slope[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
                let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
                if s * d0 <= 0.0 {
                    0.0
                } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                    3.0 * d0
                } else {
                    s
                }
            };
            slope[0] = end(h[0], h[1], del[0], del[1]);
            slope[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slope,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value at `t`, clamped to the end intervals.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.y[k] + h10 * h * self.slope[k] + h01 * self.y[k + 1] + h11 * h * self.slope[k + 1]
    }
}

/// Size variable used to extrapolate pairwise crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    #[default]
    InverseD,
    InverseD2,
}

impl Extrapolation {
    fn abscissa(self, d_mean: f64) -> f64 {
        match self {
            Extrapolation::InverseD => 1.0 / d_mean,
            Extrapolation::InverseD2 => 1.0 / (d_mean * d_mean),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub d_small: usize,
    pub d_large: usize,
    pub t_cross: Option<f64>,
    pub value: Option<f64>,
    /// Sign changes of the difference on the shared grid above the noise floor.
    pub sign_changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub pairs: Vec<PairCrossing>,
    /// Crossing of adjacent-size pairs extrapolated to infinite size.
    pub t_cross: Option<f64>,
    pub value: Option<f64>,
}

impl CrossingResult {
    pub fn found(&self) -> bool {
        self.t_cross.is_some()
    }
}

fn curve_interp(ds: &ScalingDataset, d: usize) -> Result<Pchip> {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for p in ds.curve(d) {
        if xs.last() == Some(&p.t_over_pi) {
            continue;
        }
        xs.push(p.t_over_pi);
        ys.push(p.mean);
    }
    Pchip::new(&xs, &ys)
}

/// Sign changes of the curve difference smaller than this are treated as
/// noise on saturated plateaus.
pub const CROSSING_FLOOR: f64 = 1e-6;

/// The reported crossing is the sign change with the largest jump.
fn pair_crossing(a: &Pchip, b: &Pchip, da: usize, db: usize) -> PairCrossing {
    let (lo, hi) = (a.domain().0.max(b.domain().0), a.domain().1.min(b.domain().1));
    let mut grid: Vec<f64> = a.x.iter().chain(&b.x).copied().filter(|t| (lo..=hi).contains(t)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diff = |t: f64| a.eval(t) - b.eval(t);
    let vals: Vec<f64> = grid.iter().map(|&t| diff(t)).collect();
    // (root, size of the jump in the difference across it)
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for k in 0..vals.len().saturating_sub(1) {
        let (u, v) = (vals[k], vals[k + 1]);
        if u == 0.0 {
            let before = if k > 0 { vals[k - 1].abs() } else { 0.0 };
            roots.push((grid[k], before + v.abs()));
        } else if u * v < 0.0 {
            let (mut l, mut r, mut fl) = (grid[k], grid[k + 1], u);
            for _ in 0..100 {
                let m = 0.5 * (l + r);
                let fm = diff(m);
                if fm * fl > 0.0 {
                    l = m;
                    fl = fm;
                } else {
                    r = m;
                }
            }
            roots.push((0.5 * (l + r), (u - v).abs()));
        }
    }
    if vals.len() > 1 && vals[vals.len() - 1] == 0.0 {
        roots.push((grid[grid.len() - 1], vals[vals.len() - 2].abs()));
    }
    roots.retain(|r| r.1 >= CROSSING_FLOOR);
    let t_cross = roots.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).map(|r| r.0);
    PairCrossing {
        d_small: da.min(db),
        d_large: da.max(db),
        t_cross,
        value: t_cross.map(|t| 0.5 * (a.eval(t) + b.eval(t))),
        sign_changes: roots.len(),
    }
}

/// Crossing of the curves of two distances, independent of argument order.
pub fn crossing_of_pair(ds: &ScalingDataset, d1: usize, d2: usize) -> Result<PairCrossing> {
    let (lo, hi) = (d1.min(d2), d1.max(d2));
    Ok(pair_crossing(&curve_interp(ds, lo)?, &curve_interp(ds, hi)?, lo, hi))
}

fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    match pts.len() {
        0 => None,
        1 => Some((pts[0].1, 0.0)),
        _ => {
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx <= 0.0 {
                return Some((my, 0.0));
            }
            let slope = sxy / sxx;
            Some((my - slope * mx, slope))
        }
    }
}

/// Pairwise crossings of all distances and their extrapolation in `1/d`.
pub fn find_crossing(ds: &ScalingDataset) -> Result<CrossingResult> {
    find_crossing_with(ds, Extrapolation::InverseD)
}

pub fn find_crossing_with(ds: &ScalingDataset, extrapolation: Extrapolation) -> Result<CrossingResult> {
    let sizes = ds.sizes();
    if sizes.len() < 2 {
        return fail(format!("need at least 2 distances, got {}", sizes.len()));
    }
    let interps = sizes.iter().map(|&d| curve_interp(ds, d)).collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            let (a, b) = (&interps[i], &interps[j]);
            if a.domain().0.max(b.domain().0) >= a.domain().1.min(b.domain().1) {
                return fail(format!("t grids of d = {} and d = {} do not overlap", sizes[i], sizes[j]));
            }
            pairs.push(pair_crossing(a, b, sizes[i], sizes[j]));
        }
    }
    let adjacent: Vec<&PairCrossing> = sizes
        .windows(2)
        .filter_map(|w| pairs.iter().find(|p| p.d_small == w[0] && p.d_large == w[1]))
        .filter(|p| p.t_cross.is_some())
        .collect();
    let xs = |p: &PairCrossing| extrapolation.abscissa(0.5 * (p.d_small + p.d_large) as f64);
    let t_fit = linear_fit(&adjacent.iter().map(|p| (xs(p), p.t_cross.unwrap_or(f64::NAN))).collect::<Vec<_>>());
    let v_fit = linear_fit(&adjacent.iter().map(|p| (xs(p), p.value.unwrap_or(f64::NAN))).collect::<Vec<_>>());
    Ok(CrossingResult {
        pairs,
        t_cross: t_fit.map(|f| f.0),
        value: v_fit.map(|f| f.0),
    })
}

/// Calabrese-Cardy fit `S = (c/6) ln sin(πl/2d) + s₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralCharge {
    pub c: f64,
    pub intercept: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
    pub n_points: usize,
    pub negative: bool,
}

/// Least-squares central charge of an even-cut profile on a `2d`-site chain.
pub fn central_charge(profile: &[(usize, f64)], d: usize) -> Result<CentralCharge> {
    if profile.len() < 6 {
        return fail(format!("central-charge fit needs at least 6 cuts, got {}", profile.len()));
    }
    let len = 2 * d;
    let mut pts = Vec::with_capacity(profile.len());
    for &(l, s) in profile {
        if l % 2 != 0 || l == 0 || l >= len {
            return fail(format!("cut {l} is not an even interior cut of a {len}-site chain"));
        }
        if !s.is_finite() {
            return fail(format!("entropy at cut {l} is not finite"));
        }
        pts.push(((core::f64::consts::PI * l as f64 / len as f64).sin().ln(), s));
    }
    let Some((intercept, slope)) = linear_fit(&pts) else {
        return fail("empty profile");
    };
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let c = 6.0 * slope;
    Ok(CentralCharge {
        c,
        intercept,
        residual,
        n_points: pts.len(),
        negative: c < 0.0,
    })
}
