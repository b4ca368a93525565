//! Bandwidth selection: a documented rule of thumb and least-squares
//! cross-validation over a logarithmic candidate grid.

use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, KernelSpec};
use super::locpoly::{level_and_leverage, SortedXY};
use crate::error::{Error, Result};

/// Smoothness order assumed by the rule of thumb (`n^{-1/(2m+1)}`).
pub const SMOOTHNESS_ORDER: i32 = 4;
/// Rule-of-thumb multiplier for densities (Gaussian-kernel units).
pub const ROT_DENSITY: f64 = 0.7;
/// Rule-of-thumb multiplier for regressions (Gaussian-kernel units).
pub const ROT_REGRESSION: f64 = 1.0;
/// Canonical bandwidth ratio triweight / Gaussian.
pub const TRIWEIGHT_RATIO: f64 = 2.978;
/// Cross-validation candidates span `[0.1, 10] x` the rule of thumb.
pub const CV_CANDIDATES: usize = 25;
pub const CV_MIN_OBS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMethod {
    RuleOfThumb,
    LeastSquaresCv,
}

#[derive(Debug, Clone, Copy)]
pub enum Purpose<'a> {
    Density,
    Regression { y: &'a [f64], degree: usize },
}

/// Robust spread `min(sd, IQR / 1.349)`, falling back to the sd when the IQR vanishes.
pub fn robust_scale(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    if iqr > 0.0 {
        sd.min(iqr / 1.349)
    } else {
        sd
    }
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let t = pos - i as f64;
    sorted[i] + t * (sorted[i + 1] - sorted[i])
}

fn family_factor(family: KernelFamily) -> f64 {
    match family {
        KernelFamily::Gaussian => 1.0,
        KernelFamily::EpanechnikovSmoothed => TRIWEIGHT_RATIO,
    }
}

/// `c · scale · n^{-1/9}` with `c` = [`ROT_DENSITY`] or [`ROT_REGRESSION`].
pub fn rule_of_thumb(data: &[f64], purpose: Purpose<'_>, family: KernelFamily) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.len() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: data.len() });
    }
    let scale = robust_scale(data);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegenerateData("covariate has zero spread".into()));
    }
    let c = match purpose {
        Purpose::Density => ROT_DENSITY,
        Purpose::Regression { .. } => ROT_REGRESSION,
    };
    let n = data.len() as f64;
    Ok(c * family_factor(family) * scale * n.powf(-1.0 / (2 * SMOOTHNESS_ORDER + 1) as f64))
}

pub fn select_bandwidth(
    data: &[f64],
    method: BandwidthMethod,
    purpose: Purpose<'_>,
    family: KernelFamily,
) -> Result<f64> {
    match method {
        BandwidthMethod::RuleOfThumb => rule_of_thumb(data, purpose, family),
        BandwidthMethod::LeastSquaresCv => {
            if data.len() < CV_MIN_OBS {
                return Err(Error::TooFewObservations { needed: CV_MIN_OBS, got: data.len() });
            }
            let h0 = rule_of_thumb(data, purpose, family)?;
            let candidates: Vec<f64> = (0..CV_CANDIDATES)
                .map(|i| h0 * 10f64.powf(-1.0 + 2.0 * i as f64 / (CV_CANDIDATES - 1) as f64))
                .collect();
            let scores: Vec<f64> = match purpose {
                Purpose::Density => density_lscv(data, &candidates, family),
                Purpose::Regression { y, degree } => {
                    if y.len() != data.len() {
                        return Err(Error::LengthMismatch { left: data.len(), right: y.len() });
                    }
                    regression_loocv(data, y, degree, &candidates, family)
                }
            };
            let best = scores
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_finite())
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| candidates[i])
                .unwrap_or(h0);
            Ok(best)
        }
    }
}

const CV_BINS: usize = 512;

/// Binned least-squares cross-validation `∫f̂² - 2/n Σ f̂_{-i}(X_i)`.
fn density_lscv(data: &[f64], candidates: &[f64], family: KernelFamily) -> Vec<f64> {
    let n = data.len() as f64;
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let delta = (hi - lo) / (CV_BINS - 1) as f64;
    // linear binning
    let mut counts = vec![0.0; CV_BINS];
    for &v in data {
        let pos = (v - lo) / delta;
        let k = (pos.floor() as usize).min(CV_BINS - 2);
        let t = pos - k as f64;
        counts[k] += 1.0 - t;
        counts[k + 1] += t;
    }
    candidates
        .iter()
        .map(|&h| {
            let reach = (family.radius() * h / delta).ceil() as usize;
            // density at bin centres, padded by the kernel reach on each side
            let total = CV_BINS + 2 * reach;
            let mut dens = vec![0.0; total];
            for (m, d) in dens.iter_mut().enumerate() {
                let centre = m as f64 - reach as f64;
                let k_lo = (centre - reach as f64).max(0.0) as usize;
                let k_hi = ((centre + reach as f64) as isize).min(CV_BINS as isize - 1);
                if k_hi < k_lo as isize {
                    continue;
                }
                let mut s = 0.0;
                for (k, &c) in counts.iter().enumerate().take(k_hi as usize + 1).skip(k_lo) {
                    if c != 0.0 {
                        s += c * family.pdf((centre - k as f64) * delta / h);
                    }
                }
                *d = s / (n * h);
            }
            let int_sq: f64 = dens.iter().map(|d| d * d).sum::<f64>() * delta;
            // Σ_i f̂(X_i) over bins, then strip the self-contribution
            let cross: f64 = counts
                .iter()
                .enumerate()
                .map(|(k, &c)| c * dens[k + reach])
                .sum::<f64>();
            let loo = (cross * n * h - n * family.pdf(0.0)) / ((n - 1.0) * h);
            int_sq - 2.0 * loo / n
        })
        .collect()
}

const CV_MAX_POINTS: usize = 1500;

/// Leave-one-out criterion `Σ ((y_i - ĝ(x_i)) / (1 - L_ii))²` on interior points.
fn regression_loocv(x: &[f64], y: &[f64], degree: usize, candidates: &[f64], family: KernelFamily) -> Vec<f64> {
    let data = SortedXY::new(x, y);
    let n = data.x.len();
    let lo = n / 20;
    let hi = n - n / 20;
    let stride = ((hi - lo) / CV_MAX_POINTS).max(1);
    let idx: Vec<usize> = (lo..hi).step_by(stride).collect();
    candidates
        .iter()
        .map(|&h| {
            let spec = KernelSpec::new(family, h);
            let mut sse = 0.0;
            let mut used = 0usize;
            for &i in &idx {
                if let Some((fit, lev)) = level_and_leverage(&data, data.x[i], degree, &spec, h) {
                    if lev < 1.0 - 1e-8 {
                        let r = (data.y[i] - fit) / (1.0 - lev);
                        sse += r * r;
                        used += 1;
                    }
                }
            }
            if used * 10 < idx.len() * 9 {
                f64::INFINITY
            } else {
                sse / used as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn cv_needs_fifty_points() {
        assert!(matches!(
            select_bandwidth(&[1.0], BandwidthMethod::LeastSquaresCv, Purpose::Density, KernelFamily::Gaussian),
            Err(Error::TooFewObservations { .. })
        ));
    }

    #[test]
    fn rule_of_thumb_formula() {
        let d = normal_draws(10_000, 3);
        let h = rule_of_thumb(&d, Purpose::Density, KernelFamily::Gaussian).unwrap();
        let expected = ROT_DENSITY * robust_scale(&d) * 10_000f64.powf(-1.0 / 9.0);
        assert!((h - expected).abs() < 1e-15);
        assert!((10_000f64.powf(-1.0 / 9.0) - 0.3594).abs() < 1e-4);
        assert!((h / ROT_DENSITY - 0.3594).abs() < 0.01);
    }

    #[test]
    fn scale_equivariance() {
        let d = normal_draws(400, 9);
        let y: Vec<f64> = d.iter().map(|v| (0.5 * v).exp()).collect();
        for c in [0.01, 3.0, 250.0] {
            let dc: Vec<f64> = d.iter().map(|v| v * c).collect();
            for m in [BandwidthMethod::RuleOfThumb, BandwidthMethod::LeastSquaresCv] {
                let h = select_bandwidth(&d, m, Purpose::Density, KernelFamily::Gaussian).unwrap();
                let hc = select_bandwidth(&dc, m, Purpose::Density, KernelFamily::Gaussian).unwrap();
                assert!((hc / (c * h) - 1.0).abs() < 1e-9, "{m:?} {c}");
                let p = Purpose::Regression { y: &y, degree: 3 };
                let h = select_bandwidth(&d, m, p, KernelFamily::Gaussian).unwrap();
                let hc = select_bandwidth(&dc, m, p, KernelFamily::Gaussian).unwrap();
                assert!((hc / (c * h) - 1.0).abs() < 1e-9, "{m:?} {c}");
            }
        }
    }

    #[test]
    fn density_cv_picks_a_sensible_bandwidth() {
        let d = normal_draws(2000, 1);
        let h = select_bandwidth(&d, BandwidthMethod::LeastSquaresCv, Purpose::Density, KernelFamily::Gaussian).unwrap();
        // the MISE-optimal Gaussian bandwidth for N(0,1) is 1.06 n^{-1/5} ≈ 0.23
        assert!(h > 0.1 && h < 0.5, "{h}");
    }
}
