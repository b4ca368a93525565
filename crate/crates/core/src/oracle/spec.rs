use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_pdf, normal_density_derivs};

/// Standard deviation of the outcome noise `U ~ N(0, 0.25)`.
pub const OUTCOME_NOISE_SD: f64 = 0.5;

/// Regression function `ρ` of the true covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rho {
    /// `a + b·x`
    Affine { a: f64, b: f64 },
    /// `a + b·x + c·x²`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `exp(x/2)`
    ExpHalf,
    /// `1 / (1 + exp(-x))`
    Logistic,
}

impl Rho {
    /// `[ρ, ρ', ρ'']` at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 3] {
        match *self {
            Rho::Affine { a, b } => [a + b * x, b, 0.0],
            Rho::Quadratic { a, b, c } => [a + b * x + c * x * x, b + 2.0 * c * x, 2.0 * c],
            Rho::ExpHalf => {
                let e = (0.5 * x).exp();
                [e, 0.5 * e, 0.25 * e]
            }
            Rho::Logistic => {
                let l = 1.0 / (1.0 + (-x).exp());
                let d = l * (1.0 - l);
                [l, d, d * (1.0 - 2.0 * l)]
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivs(x)[0]
    }
}

/// Scale function `σ` of the measurement error `ε = τ σ(X*) ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sigma {
    Constant { c: f64 },
    /// `sqrt(1 + a·x²)`
    Hetero { a: f64 },
}

impl Sigma {
    /// `[σ, σ']` at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 2] {
        match *self {
            Sigma::Constant { c } => [c, 0.0],
            Sigma::Hetero { a } => {
                let s = (1.0 + a * x * x).sqrt();
                [s, a * x / s]
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivs(x)[0]
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Sigma::Constant { .. })
    }
}

/// Standardised error shape `ζ` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zeta {
    StandardNormal,
    /// `(W² − 1)/√2` with `W ~ N(0,1)`: skewed, third moment `2√2`.
    CenteredChiSquare,
}

impl Zeta {
    /// `ζ` as a function of a standard normal draw `w`.
    pub fn from_normal(self, w: f64) -> f64 {
        match self {
            Zeta::StandardNormal => w,
            Zeta::CenteredChiSquare => (w * w - 1.0) / std::f64::consts::SQRT_2,
        }
    }

    pub fn third_moment(self) -> f64 {
        match self {
            Zeta::StandardNormal => 0.0,
            Zeta::CenteredChiSquare => 2.0 * std::f64::consts::SQRT_2,
        }
    }

    /// Approximation order: 4 for symmetric errors, 3 otherwise.
    pub fn order(self) -> u32 {
        if self.third_moment() == 0.0 {
            4
        } else {
            3
        }
    }
}

/// Strictly increasing map `μ` with `X* = μ(𝒳*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mu {
    /// `a + b·ϰ`, `b > 0`
    Affine { a: f64, b: f64 },
    /// `ϰ + c·ϰ³`, `c ≥ 0`
    CubicOdd { c: f64 },
}

impl Mu {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            Mu::Affine { a, b } => a + b * k,
            Mu::CubicOdd { c } => k + c * k * k * k,
        }
    }

    pub fn inverse(&self, x: f64) -> f64 {
        match *self {
            Mu::Affine { a, b } => (x - a) / b,
            Mu::CubicOdd { c } => {
                if c == 0.0 {
                    return x;
                }
                // Cardano for k³ + k/c − x/c = 0, then Newton polish
                let p = 1.0 / c;
                let q = -x / c;
                let d = (q * q / 4.0 + p * p * p / 27.0).sqrt();
                let mut k = (-q / 2.0 + d).cbrt() + (-q / 2.0 - d).cbrt();
                for _ in 0..3 {
                    let g = k + c * k * k * k - x;
                    k -= g / (1.0 + 3.0 * c * k * k);
                }
                k
            }
        }
    }
}

/// One instrument value and the conditional law `X* | Z = z ~ N(mean, var)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instrument {
    pub label: String,
    pub prob: f64,
    pub mean: f64,
    pub var: f64,
}

/// A fully specified synthetic model:
/// `Y = ρ(X*) + U`, `X = X* + τ σ(X*) ζ`, `X* | Z = z ~ N(mean_z, var_z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub rho: Rho,
    pub instruments: Vec<Instrument>,
    pub sigma: Sigma,
    pub zeta: Zeta,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ncme_mu: Option<Mu>,
    #[serde(default = "default_smoothness")]
    pub smoothness_order: u32,
}

fn default_smoothness() -> u32 {
    4
}

pub const CATALOG_IDS: [&str; 7] = [
    "gaussian",
    "gaussian-hetero",
    "asymmetric",
    "ncme-cubic",
    "symmetric",
    "flat",
    "irrelevant",
];

fn two_instruments(m0: f64, m1: f64) -> Vec<Instrument> {
    vec![
        Instrument { label: "0".into(), prob: 0.5, mean: m0, var: 1.0 },
        Instrument { label: "1".into(), prob: 0.5, mean: m1, var: 1.0 },
    ]
}

impl DgpSpec {
    /// Named presets. All share `X* | Z = z ~ N(·, 1)` with two equally likely
    /// instrument values and `τ = 0.2`.
    ///
    /// * `gaussian`: `ρ = e^{x/2}`, means 0 and 1, `σ = 1`, normal `ζ`.
    /// * `gaussian-hetero`: as `gaussian` with `σ(x) = √(1 + x²/4)`.
    /// * `asymmetric`: as `gaussian` with centred chi-square `ζ`.
    /// * `ncme-cubic`: as `gaussian` with `μ(ϰ) = ϰ + 0.1ϰ³`.
    /// * `symmetric`: logistic `ρ`, means −1 and 1.
    /// * `flat`: constant `ρ = 1`.
    /// * `irrelevant`: both instrument values share `N(0.5, 1)`.
    pub fn catalog(id: &str) -> Result<Self> {
        let base = DgpSpec {
            rho: Rho::ExpHalf,
            instruments: two_instruments(0.0, 1.0),
            sigma: Sigma::Constant { c: 1.0 },
            zeta: Zeta::StandardNormal,
            tau: 0.2,
            ncme_mu: None,
            smoothness_order: 4,
        };
        let spec = match id {
            "gaussian" => base,
            "gaussian-hetero" => DgpSpec { sigma: Sigma::Hetero { a: 0.25 }, ..base },
            "asymmetric" => DgpSpec { zeta: Zeta::CenteredChiSquare, ..base },
            "ncme-cubic" => DgpSpec { ncme_mu: Some(Mu::CubicOdd { c: 0.1 }), ..base },
            "symmetric" => DgpSpec { rho: Rho::Logistic, instruments: two_instruments(-1.0, 1.0), ..base },
            "flat" => DgpSpec { rho: Rho::Affine { a: 1.0, b: 0.0 }, ..base },
            "irrelevant" => DgpSpec { instruments: two_instruments(0.5, 0.5), ..base },
            other => return Err(Error::InvalidSpec(format!("unknown catalog id `{other}`"))),
        };
        Ok(spec)
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        DgpSpec { tau, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.instruments.len() < 2 {
            return bad("at least two instrument values are required".into());
        }
        let mut labels: Vec<&str> = self.instruments.iter().map(|i| i.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.instruments.len() {
            return bad("instrument labels must be unique".into());
        }
        for i in &self.instruments {
            if !(i.prob > 0.0 && i.prob.is_finite()) {
                return bad(format!("probability of `{}` must be positive", i.label));
            }
            if !(i.var > 0.0 && i.var.is_finite() && i.mean.is_finite()) {
                return bad(format!("law of `{}` needs finite mean and positive variance", i.label));
            }
        }
        let total: f64 = self.instruments.iter().map(|i| i.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("instrument probabilities sum to {total}, not 1"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be a nonnegative real, got {}", self.tau));
        }
        match self.sigma {
            Sigma::Constant { c } if !(c > 0.0 && c.is_finite()) => return bad("constant sigma must be positive".into()),
            Sigma::Hetero { a } if !(a >= 0.0 && a.is_finite()) => return bad("hetero sigma needs a >= 0".into()),
            _ => {}
        }
        match self.ncme_mu {
            Some(Mu::Affine { a, b }) if !(b > 0.0 && a.is_finite() && b.is_finite()) => {
                return bad("affine mu needs a positive slope".into())
            }
            Some(Mu::CubicOdd { c }) if !(c >= 0.0 && c.is_finite()) => return bad("cubic mu needs c >= 0".into()),
            _ => {}
        }
        if let Rho::Affine { a, b } = self.rho {
            if !(a.is_finite() && b.is_finite()) {
                return bad("non-finite rho parameters".into());
            }
        }
        if let Rho::Quadratic { a, b, c } = self.rho {
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return bad("non-finite rho parameters".into());
            }
        }
        if self.smoothness_order < self.zeta.order() {
            return bad(format!(
                "smoothness_order {} is below the approximation order {}",
                self.smoothness_order,
                self.zeta.order()
            ));
        }
        Ok(())
    }

    /// Approximation order `p` of the correction for this error law.
    pub fn order(&self) -> u32 {
        self.zeta.order()
    }

    pub fn instrument(&self, label: &str) -> Option<&Instrument> {
        self.instruments.iter().find(|i| i.label == label)
    }

    /// Mixture density of `X*` and its first two derivatives.
    pub fn xstar_density(&self, x: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in &self.instruments {
            let d = normal_density_derivs(x, i.mean, i.var);
            for k in 0..3 {
                out[k] += i.prob * d[k];
            }
        }
        out
    }

    /// Marginal score `s_{X*}(x)`.
    pub fn xstar_score(&self, x: f64) -> f64 {
        let d = self.xstar_density(x);
        d[1] / d[0]
    }

    /// Mean and standard deviation of the `X*` mixture.
    pub fn xstar_moments(&self) -> (f64, f64) {
        let mean: f64 = self.instruments.iter().map(|i| i.prob * i.mean).sum();
        let second: f64 = self.instruments.iter().map(|i| i.prob * (i.var + i.mean * i.mean)).sum();
        (mean, (second - mean * mean).sqrt())
    }

    /// Smallest σ over `[lo, hi]`; σ is even and increasing in `|x|`.
    pub fn sigma_min(&self, lo: f64, hi: f64) -> f64 {
        let x = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        self.sigma.eval(x)
    }

    /// Conditional `X* | Z` density at `x` for one instrument (used by tests).
    pub fn conditional_xstar_pdf(&self, label: &str, x: f64) -> Option<f64> {
        self.instrument(label).map(|i| norm_pdf((x - i.mean) / i.var.sqrt()) / i.var.sqrt())
    }
}
