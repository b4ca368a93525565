use serde::Serialize;

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// A density and its first two derivatives on a grid, plus the CDF implied
/// by integrating the same kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid: Grid,
    pub f: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl DensityCurve {
    pub fn max_density(&self) -> f64 {
        self.f.iter().copied().fold(0.0, f64::max)
    }
}

/// Kernel density estimate with analytic kernel derivatives.
///
/// `f` uses the base bandwidth, `f1` and `f2` the inflated bandwidths from
/// [`KernelSpec::bandwidth_for`]. Derivatives above `derivative_orders` are
/// reported as zero.
pub fn kde(data: &[f64], spec: &KernelSpec, grid: &Grid) -> Result<DensityCurve> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    spec.validate()?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite observation".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let fam = spec.family;
    let radius = fam.radius();
    let h0 = spec.bandwidth;
    let h1 = spec.bandwidth_for(1);
    let h2 = spec.bandwidth_for(2);
    let window = |x: f64, h: f64| {
        let lo = sorted.partition_point(|&v| v < x - radius * h);
        let hi = sorted.partition_point(|&v| v <= x + radius * h);
        (lo, hi)
    };

    let m = grid.len();
    let (mut f, mut f1, mut f2, mut cdf) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for (j, &x) in grid.points().iter().enumerate() {
        let (lo, hi) = window(x, h0);
        let mut s0 = 0.0;
        let mut c = 0.0;
        for &xi in &sorted[lo..hi] {
            let u = (x - xi) / h0;
            s0 += fam.pdf(u);
            c += fam.cdf(u);
        }
        f[j] = s0 / (n * h0);
        // every observation left of the window contributes a full unit of mass
        cdf[j] = (c + lo as f64) / n;
        if spec.derivative_orders >= 1 {
            let (lo, hi) = window(x, h1);
            let s: f64 = sorted[lo..hi].iter().map(|&xi| fam.d1((x - xi) / h1)).sum();
            f1[j] = s / (n * h1 * h1);
        }
        if spec.derivative_orders >= 2 {
            let (lo, hi) = window(x, h2);
            let s: f64 = sorted[lo..hi].iter().map(|&xi| fam.d2((x - xi) / h2)).sum();
            f2[j] = s / (n * h2 * h2 * h2);
        }
    }
    Ok(DensityCurve { grid: grid.clone(), f, f1, f2, cdf })
}
