use std::path::Path;

use smeiv::ncme::{dist_fit, rho_ncme, rho_ncme_quantile, ExternalMarginal, NcmePoint};
use smeiv::numfmt::{format_opt, format_sig};

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::fit::estimate;

pub const NCME_HEADER: &str = "input,level,estimate,target_x,status";

/// What to evaluate: `ϰ` values against an external marginal, or quantile levels.
pub enum Request<'a> {
    Marginal { path: &'a Path, kappa: &'a [f64] },
    Quantiles(&'a [f64]),
}

fn row(input: f64, level: Option<f64>, r: smeiv::Result<NcmePoint>) -> CliResult<String> {
    use smeiv::Error as E;
    let (est, target, status) = match r {
        Ok(p) => return Ok(format!("{},{},{},{},{}\n", format_sig(input), format_sig(p.level), format_sig(p.value), format_sig(p.target_x), if p.fallback { "fallback" } else { "ok" })),
        Err(E::OutOfRange(_)) => (None, None, "out_of_range"),
        Err(E::MaskedTarget(t)) => (None, Some(t), "masked"),
        Err(e) => return Err(e.into()),
    };
    Ok(format!("{},{},{},{},{status}\n", format_sig(input), format_opt(level), format_opt(est), format_opt(target)))
}

pub fn run(data: &Path, config: Option<&Path>, request: Request<'_>, out: Option<&Path>) -> CliResult<()> {
    // the marginal is validated before any estimation work
    let ext = match &request {
        Request::Marginal { path, kappa } => {
            if kappa.is_empty() {
                return Err(CliError::input("--kappa needs at least one value"));
            }
            let (k, c) = csvio::read_marginal(path)?;
            Some(ExternalMarginal::tabulated(k, c).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?)
        }
        Request::Quantiles(q) => {
            if q.is_empty() {
                return Err(CliError::input("--quantiles needs at least one value"));
            }
            None
        }
    };
    let f = estimate(data, config)?;
    let dist = dist_fit(&f.curves.pooled.f, &f.sk)?;
    let mut text = format!("{NCME_HEADER}\n");
    match request {
        Request::Marginal { kappa, .. } => {
            let ext = ext.expect("marginal loaded");
            for &k in kappa {
                let level = ext.cdf(k).ok();
                text.push_str(&row(k, level, rho_ncme(k, &ext, &dist, &f.corrected))?);
            }
        }
        Request::Quantiles(levels) => {
            for &q in levels {
                text.push_str(&row(q, Some(q), rho_ncme_quantile(q, &dist, &f.corrected))?);
            }
        }
    }
    if dist.quantile_violation > 0.0 {
        eprintln!("warning: corrected quantile nodes were monotonised (largest violation {})", format_sig(dist.quantile_violation));
    }
    csvio::emit(out, &text)
}
