use serde::Serialize;

use super::curves::CurveSet;
use super::skedastic::{PointStatus, SkedasticFit};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonparam::{RegCurve, ScoreCurve};

/// A bias-corrected regression next to the naive fit it corrects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedCurve {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub naive: Vec<f64>,
    pub status: Vec<PointStatus>,
}

impl CorrectedCurve {
    pub fn mask(&self) -> Vec<bool> {
        self.status.iter().map(|s| s.is_valid()).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_valid()).count()
    }

    fn finish(mut self) -> Self {
        for i in 0..self.rho.len() {
            if self.status[i].is_valid() && !self.rho[i].is_finite() {
                self.status[i] = PointStatus::NonFinite;
            }
            if !self.status[i].is_valid() {
                self.rho[i] = 0.0;
            }
        }
        self
    }
}

/// `ρ̃(x,z) = q(x,z) − ṽ(x)[q'(x)s(x|z) + ½q''(x)] − q'(x)ṽ'(x)` with pooled `q`.
pub fn rho_tilde(curves: &CurveSet, sk: &SkedasticFit, z: &str) -> Result<CorrectedCurve> {
    let cz = curves.z(z)?;
    if sk.grid != curves.grid {
        return Err(Error::GridMismatch);
    }
    let p = &curves.pooled.q;
    let m = curves.grid.len();
    let mut out = CorrectedCurve {
        grid: curves.grid.clone(),
        rho: vec![0.0; m],
        naive: cz.q.g.clone(),
        status: vec![PointStatus::Valid; m],
    };
    for i in 0..m {
        out.status[i] = if !sk.is_valid(i) {
            PointStatus::SkedasticMasked
        } else if !cz.s.mask[i] {
            PointStatus::DensityFloor
        } else if !(cz.q.mask[i] && p.mask[i]) {
            PointStatus::CurveMasked
        } else {
            PointStatus::Valid
        };
        if out.status[i].is_valid() {
            out.rho[i] = cz.q.g[i] - sk.v[i] * (p.g1[i] * cz.s.s[i] + 0.5 * p.g2[i]) - p.g1[i] * sk.v1[i];
        }
    }
    Ok(out.finish())
}

/// Valid grid point with the largest `|denom|`, the best-conditioned CME anchor.
pub fn best_anchor(sk: &SkedasticFit) -> Option<f64> {
    (0..sk.grid.len())
        .filter(|&i| sk.is_valid(i))
        .max_by(|&a, &b| sk.denom[a].abs().total_cmp(&sk.denom[b].abs()))
        .map(|i| sk.grid.points()[i])
}

/// Classical measurement error: one scalar `ṽ(ẋ)` and no `ṽ'` term.
///
/// `ṽ(ẋ)` is interpolated linearly between the two bracketing grid points,
/// both of which must be valid.
pub fn rho_tilde_cme(curves: &CurveSet, sk: &SkedasticFit, anchor_x: f64, z: &str) -> Result<CorrectedCurve> {
    let cz = curves.z(z)?;
    if sk.grid != curves.grid {
        return Err(Error::GridMismatch);
    }
    let pts = sk.grid.points();
    let j = sk.grid.bracket(anchor_x).ok_or(Error::AnchorMasked(anchor_x))?;
    let v_anchor = if pts[j] == anchor_x {
        sk.is_valid(j).then(|| sk.v[j])
    } else if pts[j + 1] == anchor_x {
        sk.is_valid(j + 1).then(|| sk.v[j + 1])
    } else if sk.is_valid(j) && sk.is_valid(j + 1) {
        let t = (anchor_x - pts[j]) / (pts[j + 1] - pts[j]);
        Some(sk.v[j] + t * (sk.v[j + 1] - sk.v[j]))
    } else {
        None
    }
    .ok_or(Error::AnchorMasked(anchor_x))?;
    let p = &curves.pooled.q;
    let m = curves.grid.len();
    let mut out = CorrectedCurve {
        grid: curves.grid.clone(),
        rho: vec![0.0; m],
        naive: cz.q.g.clone(),
        status: vec![PointStatus::Valid; m],
    };
    for i in 0..m {
        out.status[i] = if !cz.s.mask[i] {
            PointStatus::DensityFloor
        } else if !(cz.q.mask[i] && p.mask[i]) {
            PointStatus::CurveMasked
        } else {
            PointStatus::Valid
        };
        if out.status[i].is_valid() {
            out.rho[i] = cz.q.g[i] - v_anchor * (p.g1[i] * cz.s.s[i] + 0.5 * p.g2[i]);
        }
    }
    Ok(out.finish())
}

/// Known skedastic function: `ρ̃ = q − v[q's + ½q''] − q'v'` from pooled curves,
/// no instrument needed. `v_fn(x)` returns `(v(x), v'(x))`.
pub fn rho_tilde_known_v<F>(q_curve: &RegCurve, s_curve: &ScoreCurve, v_fn: F) -> Result<CorrectedCurve>
where
    F: Fn(f64) -> (f64, f64),
{
    if q_curve.grid != s_curve.grid {
        return Err(Error::GridMismatch);
    }
    let m = q_curve.grid.len();
    let mut out = CorrectedCurve {
        grid: q_curve.grid.clone(),
        rho: vec![0.0; m],
        naive: q_curve.g.clone(),
        status: vec![PointStatus::Valid; m],
    };
    for (i, &x) in q_curve.grid.points().iter().enumerate() {
        out.status[i] = if !s_curve.mask[i] {
            PointStatus::DensityFloor
        } else if !q_curve.mask[i] {
            PointStatus::CurveMasked
        } else {
            PointStatus::Valid
        };
        if out.status[i].is_valid() {
            let (v, v1) = v_fn(x);
            out.rho[i] = q_curve.g[i] - v * (q_curve.g1[i] * s_curve.s[i] + 0.5 * q_curve.g2[i]) - q_curve.g1[i] * v1;
        }
    }
    Ok(out.finish())
}
