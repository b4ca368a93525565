use std::path::Path;

use serde::{Deserialize, Serialize};
use smeiv::simlab::{n_sweep, tau_sweep, SweepAxis, SweepConfig, SweepMode, SweepReport, TauRule};

use crate::config;
use crate::csvio;
use crate::error::{CliError, CliResult};

/// Slope window lower edge is `p − SLOPE_MARGIN`.
pub const SLOPE_MARGIN: f64 = 0.4;
pub const NAIVE_WINDOW: [f64; 2] = [1.8, 2.2];

/// Config file for `sweep`: simulation settings plus the `τ_n` rule used by n sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepCliConfig {
    pub sweep: SweepConfig,
    pub tau_rule: TauRule,
}

#[derive(Serialize)]
struct SlopeEntry<'a> {
    series: &'a str,
    x: Option<f64>,
    slope: Option<f64>,
    points: usize,
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: Option<f64>,
    window: [f64; 2],
    pass: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: String,
    axis: SweepAxis,
    mode: SweepMode,
    spec_order: u32,
    values: &'a [f64],
    taus: &'a [f64],
    slopes: Vec<SlopeEntry<'a>>,
    /// Smallest corrected slope across evaluation points.
    corrected_slope: Option<f64>,
    corrected_beats_naive: &'a [f64],
    corrected_decreasing: Option<bool>,
    checks: Vec<Check>,
    pass: bool,
    warnings: &'a [String],
}

fn window(series: &str, p: u32) -> Option<[f64; 2]> {
    match series {
        "naive" => Some(NAIVE_WINDOW),
        "skedastic" | "corrected" | "cme" | "quantile" | "ncme" => Some([p as f64 - SLOPE_MARGIN, f64::INFINITY]),
        _ => None,
    }
}

fn label(name: &str, x: Option<f64>) -> String {
    match x {
        Some(x) => format!("{name}@{x}"),
        None => name.to_string(),
    }
}

fn summarize(report: &SweepReport, p: u32, hash: String) -> Summary<'_> {
    let slopes: Vec<SlopeEntry> = report
        .series
        .iter()
        .map(|s| SlopeEntry { series: &s.name, x: s.x, slope: s.slope.map(|f| f.slope), points: s.slope.map_or(0, |f| f.points) })
        .collect();
    let corrected_slope = report.series.iter().filter(|s| s.name == "corrected").filter_map(|s| s.slope.map(|f| f.slope)).reduce(f64::min);
    let mut checks = Vec::new();
    match report.axis {
        SweepAxis::Tau => {
            for s in &report.series {
                if let (Some(w), Some(f)) = (window(&s.name, p), s.slope) {
                    let pass = f.slope >= w[0] && f.slope <= w[1];
                    checks.push(Check { name: format!("{}_slope", label(&s.name, s.x)), value: Some(f.slope), window: w, pass });
                }
            }
        }
        SweepAxis::N => {
            if let Some(d) = report.corrected_decreasing {
                checks.push(Check { name: "corrected_rmse_decreasing".into(), value: Some(d as u8 as f64), window: [1.0, 1.0], pass: d });
            }
            let largest = report.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k);
            if let Some(k) = largest {
                let frac = report.corrected_beats_naive[k];
                checks.push(Check { name: "corrected_beats_naive_at_largest_n".into(), value: Some(frac), window: [0.5, 1.0], pass: frac > 0.5 });
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Summary {
        config_hash: hash,
        axis: report.axis,
        mode: report.mode,
        spec_order: p,
        values: &report.values,
        taus: &report.taus,
        slopes,
        corrected_slope,
        corrected_beats_naive: &report.corrected_beats_naive,
        corrected_decreasing: report.corrected_decreasing,
        checks,
        pass,
        warnings: &report.warnings,
    }
}

pub fn run(axis: SweepAxis, spec_arg: &str, values: &[f64], mc: bool, config: Option<&Path>, out_dir: &Path) -> CliResult<()> {
    let cfg: SweepCliConfig = config::load(config)?;
    cfg.sweep.validate()?;
    let spec = config::spec_from_arg(spec_arg)?;
    if values.is_empty() {
        return Err(CliError::input("--values needs at least one value"));
    }
    let report = match axis {
        SweepAxis::Tau => {
            let mode = if mc { SweepMode::Mc } else { SweepMode::Population };
            tau_sweep(&spec, values, mode, &cfg.sweep)?
        }
        SweepAxis::N => {
            let ns = values
                .iter()
                .map(|&v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(CliError::input(format!("n values must be positive integers, got {v}"))) })
                .collect::<CliResult<Vec<usize>>>()?;
            n_sweep(&spec, &ns, cfg.tau_rule, &cfg.sweep)?
        }
    };
    let hash = config::hash(&(&cfg, &spec));
    let summary = summarize(&report, spec.order(), hash);
    csvio::ensure_dir(out_dir)?;
    csvio::emit(Some(&out_dir.join("sweep.csv")), &report.to_csv())?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    csvio::emit(Some(&out_dir.join("summary.json")), &json)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
