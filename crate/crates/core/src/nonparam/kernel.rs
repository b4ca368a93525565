use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};

/// Bandwidth inflation applied per derivative order.
pub const DEFAULT_DERIVATIVE_INFLATION: f64 = 1.2;

/// Second-order smoothing kernels with two continuous derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    /// Triweight `35/32 (1 - u²)³` on `[-1, 1]`: the smoothest compactly
    /// supported member of the Epanechnikov family that still has a
    /// continuous second derivative.
    #[serde(alias = "epanechnikov-smoothed", alias = "triweight")]
    EpanechnikovSmoothed,
}

const GAUSS_RADIUS: f64 = 8.5;

impl KernelFamily {
    /// Radius outside which the kernel (and its derivatives) is treated as zero.
    pub fn radius(self) -> f64 {
        match self {
            Self::Gaussian => GAUSS_RADIUS,
            Self::EpanechnikovSmoothed => 1.0,
        }
    }

    #[inline]
    pub fn pdf(self, u: f64) -> f64 {
        match self {
            Self::Gaussian => norm_pdf(u),
            Self::EpanechnikovSmoothed => {
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - u * u;
                    35.0 / 32.0 * w * w * w
                }
            }
        }
    }

    #[inline]
    pub fn d1(self, u: f64) -> f64 {
        match self {
            Self::Gaussian => -u * norm_pdf(u),
            Self::EpanechnikovSmoothed => {
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - u * u;
                    -105.0 / 16.0 * u * w * w
                }
            }
        }
    }

    #[inline]
    pub fn d2(self, u: f64) -> f64 {
        match self {
            Self::Gaussian => (u * u - 1.0) * norm_pdf(u),
            Self::EpanechnikovSmoothed => {
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    -105.0 / 16.0 * (1.0 - u * u) * (1.0 - 5.0 * u * u)
                }
            }
        }
    }

    /// Integrated kernel `∫_{-∞}^{u} K`.
    #[inline]
    pub fn cdf(self, u: f64) -> f64 {
        match self {
            Self::Gaussian => norm_cdf(u),
            Self::EpanechnikovSmoothed => {
                if u <= -1.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    let u2 = u * u;
                    let p = u * (1.0 - u2 + 0.6 * u2 * u2 - u2 * u2 * u2 / 7.0);
                    0.5 + 35.0 / 32.0 * p
                }
            }
        }
    }
}

/// Kernel family plus bandwidth for one smoothing target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
    /// Highest density derivative order to compute (0, 1 or 2).
    pub derivative_orders: u8,
    /// Derivative of order `k` uses `bandwidth * derivative_inflation^k`.
    #[serde(default = "default_inflation")]
    pub derivative_inflation: f64,
}

fn default_inflation() -> f64 {
    DEFAULT_DERIVATIVE_INFLATION
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Self {
        Self {
            family,
            bandwidth,
            derivative_orders: 2,
            derivative_inflation: DEFAULT_DERIVATIVE_INFLATION,
        }
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn with_inflation(mut self, inflation: f64) -> Self {
        self.derivative_inflation = inflation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::NonpositiveBandwidth(self.bandwidth));
        }
        if self.derivative_orders > 2 {
            return Err(Error::InvalidKernel(format!(
                "derivative_orders must be at most 2, got {}",
                self.derivative_orders
            )));
        }
        if !(self.derivative_inflation >= 1.0 && self.derivative_inflation.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "derivative_inflation must be >= 1, got {}",
                self.derivative_inflation
            )));
        }
        Ok(())
    }

    /// Bandwidth used for derivative order `k`.
    pub fn bandwidth_for(&self, k: u8) -> f64 {
        self.bandwidth * self.derivative_inflation.powi(k as i32)
    }
}
