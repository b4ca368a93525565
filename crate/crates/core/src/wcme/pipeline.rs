use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::curves::{most_frequent_pair, CurveSet, ZCurves};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonparam::bandwidth::quantile_sorted;
use crate::nonparam::{
    kde, local_poly_fit, score_from_density, select_bandwidth, BandwidthMethod, KernelFamily, KernelSpec, Purpose,
    DEFAULT_DERIVATIVE_INFLATION,
};

/// A fixed bandwidth or a selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthChoice {
    Fixed(f64),
    Select(BandwidthMethod),
}

/// Evaluation grid: `size` equispaced points over `range`, or over the
/// `quantiles` of the observed covariate, merged with `include`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub range: Option<[f64; 2]>,
    pub quantiles: [f64; 2],
    pub size: usize,
    pub include: Vec<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { range: None, quantiles: [0.05, 0.95], size: 101, include: Vec::new() }
    }
}

impl GridSettings {
    pub fn build(&self, x: &[f64]) -> Result<Grid> {
        let [lo, hi] = match self.range {
            Some(r) => r,
            None => {
                let mut s = x.to_vec();
                s.sort_by(f64::total_cmp);
                [quantile_sorted(&s, self.quantiles[0]), quantile_sorted(&s, self.quantiles[1])]
            }
        };
        if !(hi > lo) {
            return Err(Error::DegenerateData(format!("covariate range [{lo}, {hi}] is empty")));
        }
        Grid::linspace_with(lo, hi, self.size, &self.include)
    }
}

/// Tuning parameters of the estimation pipeline.
///
/// One bandwidth serves every density object and one every regression
/// object; both are chosen on the pooled sample so that smoothing biases
/// cancel in the instrument differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSettings {
    pub kernel: KernelFamily,
    pub density_bandwidth: BandwidthChoice,
    pub regression_bandwidth: BandwidthChoice,
    /// Multiplies the selected density bandwidth.
    pub density_bandwidth_scale: f64,
    /// Multiplies the selected regression bandwidth.
    pub regression_bandwidth_scale: f64,
    pub derivative_inflation: f64,
    pub degree: usize,
    pub rank_threshold: f64,
    /// Density floor as a fraction of the largest density value on the grid.
    pub density_floor: f64,
    pub z_pair: Option<[String; 2]>,
    /// CME anchor; the best-conditioned valid point when absent.
    pub cme_anchor: Option<f64>,
    pub grid: GridSettings,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Gaussian,
            density_bandwidth: BandwidthChoice::Select(BandwidthMethod::RuleOfThumb),
            regression_bandwidth: BandwidthChoice::Select(BandwidthMethod::RuleOfThumb),
            density_bandwidth_scale: 1.0,
            regression_bandwidth_scale: 1.0,
            derivative_inflation: DEFAULT_DERIVATIVE_INFLATION,
            degree: 3,
            rank_threshold: super::DEFAULT_RANK_THRESHOLD,
            density_floor: crate::nonparam::score::DEFAULT_FLOOR_FRACTION,
            z_pair: None,
            cme_anchor: None,
            grid: GridSettings::default(),
        }
    }
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !matches!(self.degree, 2 | 3) {
            return bad("degree must be 2 or 3");
        }
        for (name, c) in [("density_bandwidth", self.density_bandwidth), ("regression_bandwidth", self.regression_bandwidth)] {
            if let BandwidthChoice::Fixed(h) = c {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidConfig(format!("{name} must be positive")));
                }
            }
        }
        if !(self.density_bandwidth_scale > 0.0 && self.regression_bandwidth_scale > 0.0) {
            return bad("bandwidth scales must be positive");
        }
        if !(self.derivative_inflation >= 1.0 && self.derivative_inflation.is_finite()) {
            return bad("derivative_inflation must be at least 1");
        }
        if !(self.rank_threshold > 0.0) {
            return bad("rank_threshold must be positive");
        }
        if !(self.density_floor > 0.0 && self.density_floor < 1.0) {
            return bad("density_floor must lie in (0, 1)");
        }
        let g = &self.grid;
        if g.size < 3 {
            return bad("grid.size must be at least 3");
        }
        if !(0.0 <= g.quantiles[0] && g.quantiles[0] < g.quantiles[1] && g.quantiles[1] <= 1.0) {
            return bad("grid.quantiles must be increasing within [0, 1]");
        }
        if let Some([lo, hi]) = g.range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return bad("grid.range must be an increasing pair");
            }
        }
        if let Some([a, b]) = &self.z_pair {
            if a == b {
                return bad("z_pair needs two distinct labels");
            }
        }
        Ok(())
    }

    fn bandwidth(&self, choice: BandwidthChoice, x: &[f64], purpose: Purpose<'_>, scale: f64) -> Result<f64> {
        let h = match choice {
            BandwidthChoice::Fixed(h) => h,
            BandwidthChoice::Select(m) => select_bandwidth(x, m, purpose, self.kernel)?,
        };
        Ok(h * scale)
    }

    /// Density and regression kernels selected on the pooled sample.
    pub fn kernels(&self, x: &[f64], y: &[f64]) -> Result<(KernelSpec, KernelSpec)> {
        let hd = self.bandwidth(self.density_bandwidth, x, Purpose::Density, self.density_bandwidth_scale)?;
        let hr = self.bandwidth(
            self.regression_bandwidth,
            x,
            Purpose::Regression { y, degree: self.degree },
            self.regression_bandwidth_scale,
        )?;
        let mk = |h: f64| KernelSpec { derivative_orders: 2, ..KernelSpec::new(self.kernel, h).with_inflation(self.derivative_inflation) };
        Ok((mk(hd), mk(hr)))
    }
}

fn fit_group(x: &[f64], y: &[f64], dk: &KernelSpec, rk: &KernelSpec, degree: usize, floor: f64, grid: &Grid) -> Result<ZCurves> {
    let f = kde(x, dk, grid)?;
    let s = score_from_density(&f, floor * f.max_density());
    let q = local_poly_fit(x, y, degree, rk, grid)?;
    Ok(ZCurves { q, f, s })
}

/// Estimate every curve the correction needs from observed `(y, x, z)`.
pub fn fit_curves(y: &[f64], x: &[f64], z: &[String], settings: &EstimatorSettings) -> Result<CurveSet> {
    settings.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() != z.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: z.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite observation".into()));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((&xi, &yi), zi) in x.iter().zip(y).zip(z) {
        let g = groups.entry(zi.clone()).or_default();
        g.0.push(xi);
        g.1.push(yi);
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientInstrument(groups.len()));
    }
    let grid = settings.grid.build(x)?;
    let (dk, rk) = settings.kernels(x, y)?;
    let floor = settings.density_floor;
    let degree = settings.degree;
    let pooled = fit_group(x, y, &dk, &rk, degree, floor, &grid)?;
    let mut per_z = BTreeMap::new();
    for (label, (gx, gy)) in &groups {
        per_z.insert(label.clone(), fit_group(gx, gy, &dk, &rk, degree, floor, &grid)?);
    }
    let pair = match &settings.z_pair {
        Some([a, b]) => (a.clone(), b.clone()),
        None => {
            let counts = groups.iter().map(|(k, v)| (k.clone(), v.0.len() as f64)).collect();
            most_frequent_pair(&counts)?
        }
    };
    CurveSet::new(grid, per_z, pooled, pair)
}
