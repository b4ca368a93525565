//! Standard normal helpers shared by the kernels and the oracle.

use std::f64::consts::{PI, SQRT_2};


pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of [`norm_cdf`]: Acklam's rational start polished by Halley steps.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
    const B: [f64; 5] = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        // work in the smaller tail to keep the residual accurate
        let e = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
        let u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Derivatives of order 0..=3 of the standard normal density at `x`.
#[inline]
pub fn norm_pdf_derivs(x: f64) -> [f64; 4] {
    let p = norm_pdf(x);
    [p, -x * p, (x * x - 1.0) * p, (3.0 * x - x * x * x) * p]
}

/// Density of N(mean, var) and its first two derivatives at `x`.
pub fn normal_density_derivs(x: f64, mean: f64, var: f64) -> [f64; 3] {
    let sd = var.sqrt();
    let u = (x - mean) / sd;
    let d = norm_pdf_derivs(u);
    [d[0] / sd, d[1] / (sd * sd), d[2] / (sd * sd * sd)]
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_values() {
        assert!((norm_pdf(0.0) - 1.0 / sqrt_2pi()).abs() < 1e-16);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        for p in [1e-6, 0.1, 0.5, 0.77, 0.999] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-14 * p.max(1e-2));
        }
    }

    #[test]
    fn pdf_derivatives_match_differences() {
        let h = 1e-5;
        for x in [-1.7, -0.2, 0.4, 2.3] {
            let d = norm_pdf_derivs(x);
            let dp = norm_pdf_derivs(x + h);
            let dm = norm_pdf_derivs(x - h);
            for k in 0..3 {
                let fd = (dp[k] - dm[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-8);
            }
        }
    }
}
