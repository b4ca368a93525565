use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use smeiv::numfmt::{format_opt, format_sig};
use smeiv::wcme::{best_anchor, fit_curves, rho_tilde, rho_tilde_cme, v_tilde, CorrectedCurve, CurveSet, EstimatorSettings, SkedasticFit};

use crate::config;
use crate::csvio::{self, Data};
use crate::error::{CliError, CliResult};

/// Smallest sample accepted by `fit` and `ncme-fit`.
pub const MIN_OBSERVATIONS: usize = 200;

pub const CURVES_HEADER: &str = "x,naive_pooled,naive_z1,naive_z2,rho_tilde,rho_tilde_cme,v_tilde,v_tilde_prime,denom,status";

/// Everything estimated from one data set.
pub struct Fitted {
    pub settings: EstimatorSettings,
    pub config_hash: String,
    pub data: Data,
    pub curves: CurveSet,
    pub sk: SkedasticFit,
    pub corrected: CorrectedCurve,
    pub cme: Option<CorrectedCurve>,
    pub cme_anchor: Option<f64>,
    pub bandwidths: (f64, f64),
    pub warnings: Vec<String>,
}

pub fn estimate(data_path: &Path, config_path: Option<&Path>) -> CliResult<Fitted> {
    let settings: EstimatorSettings = config::load(config_path)?;
    settings.validate()?;
    let config_hash = config::hash(&settings);
    let data = csvio::read_data(data_path)?;
    if data.y.len() < MIN_OBSERVATIONS {
        return Err(CliError::input(format!("need at least {MIN_OBSERVATIONS} observations, got {}", data.y.len())));
    }
    if data.x.iter().all(|&v| v == data.x[0]) {
        return Err(smeiv::Error::DegenerateData("the x column is constant".into()).into());
    }
    let curves = fit_curves(&data.y, &data.x, &data.z, &settings)?;
    let (kd, kr) = settings.kernels(&data.x, &data.y)?;
    let sk = v_tilde(&curves, settings.rank_threshold)?;
    let corrected = rho_tilde(&curves, &sk, &curves.z_pair.0)?;
    let mut warnings = Vec::new();
    let cme_anchor = settings.cme_anchor.or_else(|| best_anchor(&sk));
    let cme = match cme_anchor {
        Some(a) => match rho_tilde_cme(&curves, &sk, a, &curves.z_pair.0) {
            Ok(c) => Some(c),
            Err(e) => {
                warnings.push(format!("classical-error variant skipped: {e}"));
                None
            }
        },
        None => None,
    };
    Ok(Fitted { settings, config_hash, data, curves, sk, corrected, cme, cme_anchor, bandwidths: (kd.bandwidth, kr.bandwidth), warnings })
}

fn masked(v: f64, ok: bool) -> String {
    format_opt(ok.then_some(v))
}

pub fn curves_csv(f: &Fitted) -> String {
    let cs = &f.curves;
    let (z1, z2) = (&cs.per_z[&cs.z_pair.0], &cs.per_z[&cs.z_pair.1]);
    let mut out = format!("{CURVES_HEADER}\n");
    for (i, &x) in cs.grid.points().iter().enumerate() {
        let valid = f.sk.is_valid(i);
        let cme = f.cme.as_ref().map_or(String::new(), |c| masked(c.rho[i], c.status[i].is_valid()));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            format_sig(x),
            masked(cs.pooled.q.g[i], cs.pooled.q.mask[i]),
            masked(z1.q.g[i], z1.q.mask[i]),
            masked(z2.q.g[i], z2.q.mask[i]),
            masked(f.corrected.rho[i], f.corrected.status[i].is_valid()),
            cme,
            masked(f.sk.v[i], valid),
            masked(f.sk.v1[i], valid),
            format_sig(f.sk.denom[i]),
            f.corrected.status[i].as_str()
        ));
    }
    out
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    config_hash: &'a str,
    config: &'a EstimatorSettings,
    n: usize,
    z_counts: BTreeMap<&'a str, usize>,
    z_pair: [&'a str; 2],
    density_bandwidth: f64,
    regression_bandwidth: f64,
    grid_points: usize,
    valid_points: usize,
    masked_points: usize,
    status_counts: BTreeMap<&'static str, usize>,
    cme_anchor: Option<f64>,
    warnings: &'a [String],
}

pub fn diagnostics_json(f: &Fitted) -> String {
    let mut z_counts = BTreeMap::new();
    for z in &f.data.z {
        *z_counts.entry(z.as_str()).or_insert(0) += 1;
    }
    let mut status_counts = BTreeMap::new();
    for s in &f.corrected.status {
        *status_counts.entry(s.as_str()).or_insert(0) += 1;
    }
    let valid = f.corrected.valid_count();
    let d = Diagnostics {
        config_hash: &f.config_hash,
        config: &f.settings,
        n: f.data.y.len(),
        z_counts,
        z_pair: [&f.curves.z_pair.0, &f.curves.z_pair.1],
        density_bandwidth: f.bandwidths.0,
        regression_bandwidth: f.bandwidths.1,
        grid_points: f.curves.grid.len(),
        valid_points: valid,
        masked_points: f.curves.grid.len() - valid,
        status_counts,
        cme_anchor: f.cme_anchor,
        warnings: &f.warnings,
    };
    let mut s = serde_json::to_string_pretty(&d).expect("diagnostics serialize");
    s.push('\n');
    s
}

pub fn run(data: &Path, config: Option<&Path>, out_dir: &Path) -> CliResult<()> {
    let f = estimate(data, config)?;
    csvio::ensure_dir(out_dir)?;
    csvio::emit(Some(&out_dir.join("curves.csv")), &curves_csv(&f))?;
    csvio::emit(Some(&out_dir.join("diagnostics.json")), &diagnostics_json(&f))?;
    for w in &f.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
