use serde::Serialize;

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// A regression function and its first two derivatives on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegCurve {
    pub grid: Grid,
    pub g: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// `false` where the local design was singular.
    pub mask: Vec<bool>,
}

impl RegCurve {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Observations sorted by the covariate, reusable across many fits.
#[derive(Debug, Clone)]
pub(crate) struct SortedXY {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SortedXY {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        Self {
            x: idx.iter().map(|&i| x[i]).collect(),
            y: idx.iter().map(|&i| y[i]).collect(),
        }
    }

    fn window(&self, x0: f64, reach: f64) -> (usize, usize) {
        let lo = self.x.partition_point(|&v| v < x0 - reach);
        let hi = self.x.partition_point(|&v| v <= x0 + reach);
        (lo, hi)
    }
}

/// Weighted normal equations of a local polynomial fit at `x0` in the
/// scaled variable `(x - x0)/h`. `None` when fewer than `degree + 1`
/// effective observations carry weight.
fn normal_equations(
    data: &SortedXY,
    x0: f64,
    degree: usize,
    spec: &KernelSpec,
    h: f64,
) -> Option<([[f64; 4]; 4], [f64; 4])> {
    let fam = spec.family;
    let (lo, hi) = data.window(x0, fam.radius() * h);
    let p = degree + 1;
    let mut mom = [0.0f64; 7];
    let mut rhs = [0.0f64; 4];
    let mut sw = 0.0;
    let mut sw2 = 0.0;
    for i in lo..hi {
        let u = (data.x[i] - x0) / h;
        let w = fam.pdf(u);
        if w == 0.0 {
            continue;
        }
        sw += w;
        sw2 += w * w;
        let mut up = w;
        for (k, m) in mom.iter_mut().enumerate().take(2 * degree + 1) {
            *m += up;
            if k < p {
                rhs[k] += up * data.y[i];
            }
            up *= u;
        }
    }
    // effective number of observations carrying weight
    if sw2 == 0.0 || sw * sw / sw2 < p as f64 {
        return None;
    }
    let mut a = [[0.0f64; 4]; 4];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = mom[r + c];
        }
    }
    Some((a, rhs))
}

/// Local polynomial coefficients (scaled units) at `x0`.
pub(crate) fn local_coefficients(
    data: &SortedXY,
    x0: f64,
    degree: usize,
    spec: &KernelSpec,
    h: f64,
) -> Option<[f64; 4]> {
    let (mut a, mut rhs) = normal_equations(data, x0, degree, spec, h)?;
    solve_small(&mut a, &mut rhs, degree + 1)
}

/// Fitted level at `x0` and the leverage of an observation sitting exactly at `x0`.
pub(crate) fn level_and_leverage(
    data: &SortedXY,
    x0: f64,
    degree: usize,
    spec: &KernelSpec,
    h: f64,
) -> Option<(f64, f64)> {
    let (a, rhs) = normal_equations(data, x0, degree, spec, h)?;
    let (mut a1, mut r1) = (a, rhs);
    let coef = solve_small(&mut a1, &mut r1, degree + 1)?;
    let (mut a2, mut e0) = (a, [1.0, 0.0, 0.0, 0.0]);
    let inv = solve_small(&mut a2, &mut e0, degree + 1)?;
    Some((coef[0], spec.family.pdf(0.0) * inv[0]))
}

/// Gaussian elimination with partial pivoting on a `p x p` system; `None` when singular.
fn solve_small(a: &mut [[f64; 4]; 4], b: &mut [f64; 4], p: usize) -> Option<[f64; 4]> {
    let scale = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            for c in col..p {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for r in (0..p).rev() {
        let mut s = b[r];
        for c in r + 1..p {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) fn validate_inputs(x: &[f64], y: &[f64], degree: usize, spec: &KernelSpec) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if !(2..=3).contains(&degree) {
        return Err(Error::InvalidKernel(format!("local polynomial degree must be 2 or 3, got {degree}")));
    }
    if x.len() < degree + 1 {
        return Err(Error::TooFewObservations { needed: degree + 1, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite observation".into()));
    }
    spec.validate()
}

/// Local polynomial regression of `y` on `x` with derivative estimates.
///
/// The level uses `spec.bandwidth`, the slope and curvature the inflated
/// bandwidths of orders 1 and 2. Points whose local design is singular are
/// masked and carry zeros.
pub fn local_poly_fit(x: &[f64], y: &[f64], degree: usize, spec: &KernelSpec, grid: &Grid) -> Result<RegCurve> {
    validate_inputs(x, y, degree, spec)?;
    let data = SortedXY::new(x, y);
    let m = grid.len();
    let mut out = RegCurve {
        grid: grid.clone(),
        g: vec![0.0; m],
        g1: vec![0.0; m],
        g2: vec![0.0; m],
        mask: vec![true; m],
    };
    let hs = [spec.bandwidth_for(0), spec.bandwidth_for(1), spec.bandwidth_for(2)];
    for (j, &x0) in grid.points().iter().enumerate() {
        let mut coefs: [Option<[f64; 4]>; 3] = [None; 3];
        coefs[0] = local_coefficients(&data, x0, degree, spec, hs[0]);
        for k in 1..3 {
            coefs[k] = if hs[k] == hs[k - 1] {
                coefs[k - 1]
            } else {
                local_coefficients(&data, x0, degree, spec, hs[k])
            };
        }
        match coefs {
            [Some(c0), Some(c1), Some(c2)] => {
                out.g[j] = c0[0];
                out.g1[j] = c1[1] / hs[1];
                out.g2[j] = 2.0 * c2[2] / (hs[2] * hs[2]);
            }
            _ => out.mask[j] = false,
        }
    }
    Ok(out)
}
