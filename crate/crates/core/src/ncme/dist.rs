use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::{self, isotonic, quintic_segment, Method};
use crate::nonparam::DensityCurve;
use crate::wcme::SkedasticFit;

/// Largest tolerated excursion of `F̃` outside `[0, 1]` before clamping.
pub const CDF_EXCURSION_TOL: f64 = 1e-3;

/// Observed marginal of `X` with the corrected CDF and quantile function of `X*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistFit {
    pub grid: Grid,
    pub f_x: Vec<f64>,
    pub f_x1: Vec<f64>,
    pub f_x2: Vec<f64>,
    pub s_x: Vec<f64>,
    pub s_x1: Vec<f64>,
    /// `F_X` on the grid.
    pub cdf_x: Vec<f64>,
    /// `F̃_{X*} = F_X − ½(f_X'ṽ + f_Xṽ')`, clamped to `[0, 1]`.
    pub cdf_corr: Vec<f64>,
    /// Largest distance of the unclamped `F̃` from `[0, 1]`.
    pub cdf_excursion: f64,
    /// Largest decrease between consecutive `Q̃` nodes before isotonic projection.
    pub quantile_violation: f64,
    v: Vec<f64>,
    v1: Vec<f64>,
    v_mask: Vec<bool>,
    /// Quantile levels `F_X(x_i)` of the nodes and the projected `Q̃` there.
    node_levels: Vec<f64>,
    node_values: Vec<f64>,
}

/// A corrected quantile and whether the correction had to be dropped there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileValue {
    pub value: f64,
    /// `ṽ` was unavailable at `Q_X(s)`, so `Q̃(s) = Q_X(s)`.
    pub fallback: bool,
}

/// Longest run of consecutive valid points as `(first, last)`.
fn longest_valid_run(mask: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Corrected distribution of the true covariate from the observed marginal and `ṽ`.
///
/// `F_X` is the CDF carried by `f_curve`. The quantile correction is
/// evaluated at the nodes `F_X(x_i)` and projected onto nondecreasing
/// sequences; evaluations between nodes are clamped to the projected bracket.
pub fn dist_fit(f_curve: &DensityCurve, sk: &SkedasticFit) -> Result<DistFit> {
    if f_curve.grid != sk.grid {
        return Err(Error::GridMismatch);
    }
    let grid = f_curve.grid.clone();
    let m = grid.len();
    let v_mask = sk.mask();
    let total = f_curve.cdf[m - 1] - f_curve.cdf[0];
    let covered = match longest_valid_run(&v_mask) {
        Some((a, b)) if total > 0.0 => (f_curve.cdf[b] - f_curve.cdf[a]) / total,
        _ => 0.0,
    };
    if covered < 0.5 {
        return Err(Error::SkedasticRangeTooSmall(covered));
    }
    let mut s_x = vec![0.0; m];
    let mut s_x1 = vec![0.0; m];
    for i in 0..m {
        let f = f_curve.f[i];
        if f > 0.0 {
            s_x[i] = f_curve.f1[i] / f;
            s_x1[i] = f_curve.f2[i] / f - s_x[i] * s_x[i];
        }
    }
    let mut cdf_corr = f_curve.cdf.clone();
    let mut excursion = 0.0f64;
    for i in 0..m {
        if v_mask[i] {
            cdf_corr[i] -= 0.5 * (f_curve.f1[i] * sk.v[i] + f_curve.f[i] * sk.v1[i]);
        }
        excursion = excursion.max(-cdf_corr[i]).max(cdf_corr[i] - 1.0);
        cdf_corr[i] = cdf_corr[i].clamp(0.0, 1.0);
    }
    let mut fit = DistFit {
        grid,
        f_x: f_curve.f.clone(),
        f_x1: f_curve.f1.clone(),
        f_x2: f_curve.f2.clone(),
        s_x,
        s_x1,
        cdf_x: f_curve.cdf.clone(),
        cdf_corr,
        cdf_excursion: excursion,
        quantile_violation: 0.0,
        v: sk.v.clone(),
        v1: sk.v1.clone(),
        v_mask,
        node_levels: Vec::new(),
        node_values: Vec::new(),
    };
    let xs = fit.grid.points();
    let mut levels = Vec::with_capacity(m);
    let mut raw = Vec::with_capacity(m);
    for i in 0..m {
        let p = fit.cdf_x[i];
        if levels.last().is_some_and(|&l| p <= l) {
            continue;
        }
        let corr = if fit.v_mask[i] { 0.5 * (fit.s_x[i] * fit.v[i] + fit.v1[i]) } else { 0.0 };
        levels.push(p);
        raw.push(xs[i] + corr);
    }
    fit.quantile_violation = raw.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    fit.node_values = isotonic(&raw);
    fit.node_levels = levels;
    Ok(fit)
}

impl DistFit {
    /// `Q_X(s)` by inverting the quintic Hermite interpolant of `(F_X, f_X, f_X')`.
    pub fn quantile_x(&self, s: f64) -> Result<f64> {
        let m = self.grid.len();
        if !(s > 0.0 && s < 1.0) || s < self.cdf_x[0] || s > self.cdf_x[m - 1] {
            return Err(Error::OutOfRange(s));
        }
        let i = self.cdf_x.partition_point(|&c| c < s).clamp(1, m - 1) - 1;
        let xs = self.grid.points();
        let a = [self.cdf_x[i], self.f_x[i], self.f_x1[i]];
        let b = [self.cdf_x[i + 1], self.f_x[i + 1], self.f_x1[i + 1]];
        let (mut lo, mut hi) = (xs[i], xs[i + 1]);
        if s <= a[0] {
            return Ok(lo);
        }
        if s >= b[0] {
            return Ok(hi);
        }
        // bisection on a short bracket; 60 halvings reach machine precision
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if quintic_segment(xs[i], xs[i + 1], a, b, mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `Q̃_{X*}(s) = Q_X(s) + ½{s_X(Q_X(s))ṽ(Q_X(s)) + ṽ'(Q_X(s))}`, monotonised.
    pub fn quantile_corrected(&self, s: f64) -> Result<QuantileValue> {
        let x = self.quantile_x(s)?;
        let v = interp::masked(&self.grid, &self.v, &self.v_mask, x, Method::Cubic);
        let v1 = interp::masked(&self.grid, &self.v1, &self.v_mask, x, Method::Cubic);
        let score = interp::hermite_cubic(&self.grid, &self.s_x, &self.s_x1, x);
        let (mut value, fallback) = match (v, v1, score) {
            (Some(v), Some(v1), Some(sc)) => (x + 0.5 * (sc * v + v1), false),
            _ => (x, true),
        };
        let j = self.node_levels.partition_point(|&l| l <= s);
        if j > 0 {
            value = value.max(self.node_values[j - 1]);
        }
        if j < self.node_values.len() {
            value = value.min(self.node_values[j]);
        }
        Ok(QuantileValue { value, fallback })
    }

    /// `F̃_{X*}(x)` by cubic interpolation of the grid values.
    pub fn cdf_corrected_at(&self, x: f64) -> Option<f64> {
        let all = vec![true; self.grid.len()];
        interp::masked(&self.grid, &self.cdf_corr, &all, x, Method::Cubic).map(|v| v.clamp(0.0, 1.0))
    }

    /// `F_X(x)` from the quintic Hermite interpolant.
    pub fn cdf_x_at(&self, x: f64) -> Option<f64> {
        interp::hermite_quintic(&self.grid, &self.cdf_x, &self.f_x, &self.f_x1, x)
    }
}
