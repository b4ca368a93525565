//! Non-classical measurement error: corrected CDF and quantile function of
//! the true covariate and the composed estimator using an external marginal.

mod dist;
mod marginal;

pub use dist::{dist_fit, DistFit, QuantileValue, CDF_EXCURSION_TOL};
pub use marginal::ExternalMarginal;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::{self, Method};
use crate::wcme::CorrectedCurve;

/// One composed estimate and where it was read off the corrected curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NcmePoint {
    pub value: f64,
    /// `Q̃(level)`, the abscissa on the corrected curve.
    pub target_x: f64,
    pub level: f64,
    /// `true` when the quantile correction fell back to zero at the target.
    pub fallback: bool,
}

fn read_corrected(level: f64, dist: &DistFit, corrected: &CorrectedCurve) -> Result<NcmePoint> {
    let q = dist.quantile_corrected(level)?;
    let mask = corrected.mask();
    let value = interp::masked(&corrected.grid, &corrected.rho, &mask, q.value, Method::Cubic)
        .ok_or(Error::MaskedTarget(q.value))?;
    Ok(NcmePoint { value, target_x: q.value, level, fallback: q.fallback })
}

/// `ρ̃_{𝒳*}(ϰ) = ρ̃(Q̃(F_{𝒳*}(ϰ)))`.
pub fn rho_ncme(varkappa: f64, ext: &ExternalMarginal, dist: &DistFit, corrected: &CorrectedCurve) -> Result<NcmePoint> {
    let level = ext.cdf(varkappa)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::OutOfRange(varkappa));
    }
    read_corrected(level, dist, corrected)
}

/// `ρ̃(Q̃(level))`: the regression at the `level` quantile of the true covariate,
/// with no external marginal needed.
pub fn rho_ncme_quantile(level: f64, dist: &DistFit, corrected: &CorrectedCurve) -> Result<NcmePoint> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::OutOfRange(level));
    }
    read_corrected(level, dist, corrected)
}
