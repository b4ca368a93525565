use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::oracle::DgpSpec;
use crate::special::norm_cdf;

/// Minimum number of rows in a tabulated marginal.
pub const MIN_TABLE_ROWS: usize = 100;

/// Externally known marginal law of the true covariate `𝒳*`.
#[derive(Debug, Clone)]
pub enum ExternalMarginal {
    Normal { mean: f64, sd: f64 },
    /// The `𝒳*` law implied by a catalog specification.
    Spec(Box<DgpSpec>),
    /// Monotone cubic through a strictly increasing `(ϰ, F)` table.
    Tabulated(Pchip),
}

impl ExternalMarginal {
    pub fn tabulated(kappa: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if kappa.len() != cdf.len() {
            return Err(Error::InvalidMarginal(format!("{} abscissae but {} CDF values", kappa.len(), cdf.len())));
        }
        if kappa.len() < MIN_TABLE_ROWS {
            return Err(Error::InvalidMarginal(format!(
                "need at least {MIN_TABLE_ROWS} rows, got {}",
                kappa.len()
            )));
        }
        for i in 0..kappa.len() {
            if !(kappa[i].is_finite() && cdf[i].is_finite() && (0.0..=1.0).contains(&cdf[i])) {
                return Err(Error::InvalidMarginal(format!("row {}: values must be finite with cdf in [0, 1]", i + 1)));
            }
            if i > 0 && !(kappa[i] > kappa[i - 1] && cdf[i] > cdf[i - 1]) {
                return Err(Error::InvalidMarginal(format!("row {}: table is not strictly increasing", i + 1)));
            }
        }
        Ok(Self::Tabulated(Pchip::new(kappa, cdf)))
    }

    pub fn from_spec(spec: &DgpSpec) -> Self {
        Self::Spec(Box::new(spec.clone()))
    }

    /// `F_{𝒳*}(ϰ)`; `OutOfRange` outside a tabulated range.
    pub fn cdf(&self, k: f64) -> Result<f64> {
        match self {
            Self::Normal { mean, sd } => Ok(norm_cdf((k - mean) / sd)),
            Self::Spec(spec) => {
                let x = spec.ncme_mu.map_or(k, |m| m.eval(k));
                Ok(spec.instruments.iter().map(|i| i.prob * norm_cdf((x - i.mean) / i.var.sqrt())).sum())
            }
            Self::Tabulated(p) => p.eval(k).ok_or(Error::OutOfRange(k)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_validation() {
        let k: Vec<f64> = (0..120).map(|i| -3.0 + i as f64 * 0.05).collect();
        let f: Vec<f64> = k.iter().map(|&v| norm_cdf(v)).collect();
        let m = ExternalMarginal::tabulated(k.clone(), f.clone()).unwrap();
        assert!((m.cdf(0.0).unwrap() - 0.5).abs() < 1e-4);
        assert!(matches!(m.cdf(10.0), Err(Error::OutOfRange(_))));
        let mut bad = f.clone();
        bad[50] = bad[49];
        assert!(ExternalMarginal::tabulated(k.clone(), bad).is_err());
        assert!(ExternalMarginal::tabulated(k[..50].to_vec(), f[..50].to_vec()).is_err());
    }

    #[test]
    fn spec_marginal_applies_the_transform() {
        let spec = DgpSpec::catalog("ncme-cubic").unwrap();
        let m = ExternalMarginal::from_spec(&spec);
        let direct: f64 = 0.5 * norm_cdf(0.5125) + 0.5 * norm_cdf(0.5125 - 1.0);
        assert!((m.cdf(0.5).unwrap() - direct).abs() < 1e-15);
    }
}
