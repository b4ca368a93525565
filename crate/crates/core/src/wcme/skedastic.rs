use serde::Serialize;

use super::curves::CurveSet;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Why a grid point is (in)valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Valid,
    /// A conditional density is below its floor (outside a conditional support).
    DensityFloor,
    /// A regression fit was singular at this point.
    CurveMasked,
    /// `|q'·Δs|` fell below the rank threshold.
    RankCondition,
    /// The skedastic fit is masked here.
    SkedasticMasked,
    /// A required value was not finite.
    NonFinite,
}

impl PointStatus {
    pub fn is_valid(self) -> bool {
        self == PointStatus::Valid
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Valid => "valid",
            PointStatus::DensityFloor => "density_floor",
            PointStatus::CurveMasked => "curve_masked",
            PointStatus::RankCondition => "rank_condition",
            PointStatus::SkedasticMasked => "skedastic_masked",
            PointStatus::NonFinite => "non_finite",
        }
    }
}

/// Per-point rank condition report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub grid: Grid,
    /// Raw `q'(x)·[s(x|z1) − s(x|z2)]`, reported even where it fails.
    pub denom: Vec<f64>,
    pub status: Vec<PointStatus>,
}

impl RankReport {
    pub fn pass(&self, i: usize) -> bool {
        self.status[i].is_valid()
    }

    pub fn pass_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_valid()).count()
    }
}

/// `ṽ`, `ṽ'` and the rank diagnostics on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkedasticFit {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub v1: Vec<f64>,
    pub denom: Vec<f64>,
    pub status: Vec<PointStatus>,
}

impl SkedasticFit {
    pub fn mask(&self) -> Vec<bool> {
        self.status.iter().map(|s| s.is_valid()).collect()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.status[i].is_valid()
    }

    pub fn valid_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_valid()).count()
    }
}

pub fn rank_diagnostic(curves: &CurveSet, threshold: f64) -> RankReport {
    let (c1, c2) = curves.pair();
    let p = &curves.pooled;
    let m = curves.grid.len();
    let mut denom = vec![0.0; m];
    let mut status = vec![PointStatus::Valid; m];
    for i in 0..m {
        if !(c1.s.mask[i] && c2.s.mask[i]) {
            status[i] = PointStatus::DensityFloor;
        } else if !(p.q.mask[i] && c1.q.mask[i] && c2.q.mask[i]) {
            status[i] = PointStatus::CurveMasked;
        }
        let d = p.q.g1[i] * (c1.s.s[i] - c2.s.s[i]);
        if !d.is_finite() {
            status[i] = PointStatus::NonFinite;
            continue;
        }
        denom[i] = d;
        if status[i].is_valid() && d.abs() < threshold {
            status[i] = PointStatus::RankCondition;
        }
    }
    RankReport { grid: curves.grid.clone(), denom, status }
}

/// Skedastic function `ṽ = Δq / (q'·Δs)` and its closed-form derivative
///
/// `ṽ' = Δq'/denom − ṽ·(q''·Δs + q'·Δs')/denom`.
pub fn v_tilde(curves: &CurveSet, rank_threshold: f64) -> Result<SkedasticFit> {
    let rank = rank_diagnostic(curves, rank_threshold);
    let (c1, c2) = curves.pair();
    let p = &curves.pooled;
    let m = curves.grid.len();
    let mut v = vec![0.0; m];
    let mut v1 = vec![0.0; m];
    let mut status = rank.status.clone();
    for i in 0..m {
        if !status[i].is_valid() {
            continue;
        }
        let d = rank.denom[i];
        let ds = c1.s.s[i] - c2.s.s[i];
        let ds1 = c1.s.s1[i] - c2.s.s1[i];
        let vi = (c1.q.g[i] - c2.q.g[i]) / d;
        let grad = p.q.g2[i] * ds + p.q.g1[i] * ds1;
        let v1i = (c1.q.g1[i] - c2.q.g1[i]) / d - vi * grad / d;
        if vi.is_finite() && v1i.is_finite() {
            v[i] = vi;
            v1[i] = v1i;
        } else {
            status[i] = PointStatus::NonFinite;
        }
    }
    if !status.iter().any(|s| s.is_valid()) {
        return Err(Error::NoValidPoints);
    }
    Ok(SkedasticFit { grid: curves.grid.clone(), v, v1, denom: rank.denom, status })
}
