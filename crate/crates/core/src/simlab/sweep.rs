use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ncme::{dist_fit, rho_ncme, ExternalMarginal};
use crate::numfmt::{format_opt, format_sig};
use crate::oracle::{population_curves, population_dist, true_v, DgpSpec};
use crate::quadrature::QuadratureConfig;
use crate::wcme::{rho_tilde, rho_tilde_cme, rho_tilde_known_v, v_tilde, EstimatorSettings, POPULATION_RANK_THRESHOLD};

use super::mc::{run_mc, Estimator, McConfig, ESTIMATORS};
use super::slope::{fit_loglog_slope, SlopeFit};

/// Minimum axis points for a τ slope.
pub const MIN_TAU_SLOPE_POINTS: usize = 4;
/// Minimum axis points for an `n` slope.
pub const MIN_N_SLOPE_POINTS: usize = 3;
/// Errors below this multiple of the quadrature tolerance are treated as floor noise.
pub const FLOOR_GUARD_FACTOR: f64 = 10.0;
/// Population-mode evaluation point when none is configured.
pub const DEFAULT_POPULATION_EVAL: f64 = 0.5;
/// Relative spread of successive τ ratios tolerated before warning.
const GEOMETRIC_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Population,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tau,
    N,
}

/// Measurement error scale as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauRule {
    Constant { tau: f64 },
    /// `τ_n = c·n^{exponent}`.
    Power { c: f64, exponent: f64 },
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::Power { c: 0.8, exponent: -1.0 / 12.0 }
    }
}

impl TauRule {
    pub fn tau(&self, n: usize) -> f64 {
        match *self {
            TauRule::Constant { tau } => tau,
            TauRule::Power { c, exponent } => c * (n as f64).powf(exponent),
        }
    }
}

/// Settings shared by both sweeps. Population fields are ignored in mc mode and vice versa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Evaluation points for pointwise errors. Defaults to `x = 0.5` in
    /// population mode and the `X*` quartiles in mc mode.
    pub eval_points: Option<Vec<f64>>,
    pub quantile_level: f64,
    pub kappa_points: Vec<f64>,
    pub quadrature: QuadratureConfig,
    /// Spacing of the population grid.
    pub grid_step: f64,
    pub rank_threshold: f64,
    /// Anchor for the classical-error variant. Defaults to 0.5.
    pub cme_anchor: Option<f64>,
    /// Population grid bounds as `X*` quantile levels.
    pub grid_quantiles: [f64; 2],
    /// `X*` quantile levels bounding the sup-norm region of the classical-error variant.
    pub sup_quantiles: [f64; 2],
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub estimator: EstimatorSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eval_points: None,
            quantile_level: 0.25,
            kappa_points: vec![0.5],
            quadrature: QuadratureConfig::default(),
            grid_step: 0.025,
            rank_threshold: POPULATION_RANK_THRESHOLD,
            cme_anchor: None,
            grid_quantiles: [0.05, 0.95],
            sup_quantiles: [0.15, 0.85],
            n: 4000,
            reps: 50,
            seed: 1,
            estimator: EstimatorSettings::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        self.estimator.validate()?;
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::InvalidConfig(format!("grid_step must lie in (0, 0.5], got {}", self.grid_step)));
        }
        if !(self.quantile_level > 0.0 && self.quantile_level < 1.0) {
            return Err(Error::InvalidConfig(format!("quantile_level must lie in (0, 1), got {}", self.quantile_level)));
        }
        let ordered = |q: [f64; 2]| q[0] > 0.0 && q[0] < q[1] && q[1] < 1.0;
        if !ordered(self.grid_quantiles) || !ordered(self.sup_quantiles) {
            return Err(Error::InvalidConfig("quantile bounds must satisfy 0 < lo < hi < 1".into()));
        }
        if !(self.rank_threshold >= 0.0) {
            return Err(Error::InvalidConfig("rank_threshold must be nonnegative".into()));
        }
        if self.eval_points.as_ref().is_some_and(|e| e.is_empty()) {
            return Err(Error::InvalidConfig("eval_points is empty".into()));
        }
        Ok(())
    }
}

/// One error curve along the axis with its fitted log–log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    /// Where the error is measured; `None` for sup-norm series.
    pub x: Option<f64>,
    pub errors: Vec<Option<f64>>,
    pub slope: Option<SlopeFit>,
    /// Axis indices excluded from the slope by the floor guard.
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub tau: f64,
    pub series: String,
    pub x: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub mode: SweepMode,
    pub values: Vec<f64>,
    pub taus: Vec<f64>,
    pub series: Vec<Series>,
    /// n sweep only: fraction of evaluation points where corrected rmse < naive rmse, per n.
    pub corrected_beats_naive: Vec<f64>,
    /// n sweep only: corrected rmse strictly decreasing in n at every evaluation point.
    pub corrected_decreasing: Option<bool>,
    pub warnings: Vec<String>,
}

impl SweepReport {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn series_at(&self, name: &str, x: f64) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name && s.x.is_some_and(|v| (v - x).abs() < 1e-12))
    }

    pub fn rows(&self) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for (k, (&v, &t)) in self.values.iter().zip(&self.taus).enumerate() {
            for s in &self.series {
                rows.push(SweepRow { axis_value: v, tau: t, series: s.name.clone(), x: s.x, error: s.errors[k] });
            }
        }
        rows
    }

    pub const CSV_HEADER: &'static str = "axis_value,tau,series,x,error";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in self.rows() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                format_sig(r.axis_value),
                format_sig(r.tau),
                r.series,
                format_opt(r.x),
                format_opt(r.error)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn series(name: &str, x: Option<f64>, axis: &[f64], errors: Vec<Option<f64>>, min_points: usize, floor: f64) -> Series {
    let mut dropped = Vec::new();
    // Floor guard: the smallest axis value is dropped when its error is indistinguishable from quadrature noise.
    if let Some((imin, _)) = axis.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        if errors[imin].is_some_and(|e| e < floor) {
            dropped.push(imin);
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = axis
        .iter()
        .zip(&errors)
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .filter_map(|(_, (&a, e))| e.filter(|v| *v > 0.0 && v.is_finite()).map(|v| (a, v)))
        .unzip();
    let slope = if xs.len() >= min_points { fit_loglog_slope(&xs, &ys) } else { None };
    Series { name: name.into(), x, errors, slope, dropped }
}

fn geometric_warning(taus: &[f64]) -> Option<String> {
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ratios: Vec<f64> = sorted.windows(2).map(|w| w[1] / w[0]).collect();
    let first = *ratios.first()?;
    let spread = ratios.iter().map(|r| (r / first - 1.0).abs()).fold(0.0, f64::max);
    (spread > GEOMETRIC_TOL).then(|| format!("NonGeometricTaus: successive ratios {ratios:?} are not constant"))
}

/// Population grid over the central `X*` range, aligned to `grid_step` and containing `extra`.
pub fn population_grid(spec: &DgpSpec, cfg: &SweepConfig, extra: &[f64]) -> Result<Grid> {
    let pd = population_dist(&spec.with_tau(0.0), &cfg.quadrature)?;
    let lo = pd.quantile_xstar(cfg.grid_quantiles[0])?;
    let hi = pd.quantile_xstar(cfg.grid_quantiles[1])?;
    let step = cfg.grid_step;
    let (a, b) = ((lo / step).floor() as i64, (hi / step).ceil() as i64);
    let mut pts: Vec<f64> = (a..=b).map(|k| k as f64 * step).collect();
    for &e in extra {
        if !pts.iter().any(|p| (p - e).abs() < 1e-12) {
            pts.push(e);
        }
    }
    pts.sort_by(f64::total_cmp);
    Grid::new(pts)
}

struct PopulationErrors {
    skedastic: Vec<Option<f64>>,
    corrected: Vec<Option<f64>>,
    naive: Vec<Option<f64>>,
    known_v: Vec<Option<f64>>,
    cme: Option<f64>,
    quantile: Option<f64>,
    ncme: Vec<Option<f64>>,
}

fn population_errors(spec: &DgpSpec, cfg: &SweepConfig, grid: &Grid, evals: &[f64], anchor: f64, sup: (f64, f64)) -> Result<PopulationErrors> {
    let cs = population_curves(spec, grid, &cfg.quadrature)?;
    let idx: Vec<usize> = evals.iter().map(|&e| grid.index_of(e, 1e-12).expect("eval point on grid")).collect();
    let z1 = cs.z_pair.0.clone();
    let sk = v_tilde(&cs, cfg.rank_threshold).ok();
    let at = |vals: &[f64], ok: &dyn Fn(usize) -> bool, truth: &dyn Fn(f64) -> f64| -> Vec<Option<f64>> {
        idx.iter().map(|&i| ok(i).then(|| (vals[i] - truth(grid.points()[i])).abs())).collect()
    };
    let rho = |x: f64| spec.rho.eval(x);
    let naive = at(&cs.pooled.q.g, &|i| cs.pooled.q.mask[i], &rho);
    let kv = rho_tilde_known_v(&cs.pooled.q, &cs.pooled.s, |x| true_v(spec, x))?;
    let known_v = at(&kv.rho, &|i| kv.status[i].is_valid(), &rho);
    let none = vec![None; evals.len()];
    let Some(sk) = sk else {
        return Ok(PopulationErrors { skedastic: none.clone(), corrected: none.clone(), naive, known_v, cme: None, quantile: None, ncme: vec![None; cfg.kappa_points.len()] });
    };
    let skedastic = at(&sk.v, &|i| sk.is_valid(i), &|x| true_v(spec, x).0);
    let corr = rho_tilde(&cs, &sk, &z1)?;
    let corrected = at(&corr.rho, &|i| corr.status[i].is_valid(), &rho);
    let cme = if spec.sigma.is_constant() {
        rho_tilde_cme(&cs, &sk, anchor, &z1).ok().and_then(|c| {
            let errs: Vec<f64> = grid
                .points()
                .iter()
                .enumerate()
                .filter(|(i, &x)| x >= sup.0 && x <= sup.1 && c.status[*i].is_valid())
                .map(|(i, &x)| (c.rho[i] - rho(x)).abs())
                .collect();
            (!errs.is_empty()).then(|| errs.into_iter().fold(0.0, f64::max))
        })
    } else {
        None
    };
    let pd = population_dist(spec, &cfg.quadrature)?;
    let dist = dist_fit(&cs.pooled.f, &sk).ok();
    let quantile = match &dist {
        Some(d) => {
            let q = d.quantile_corrected(cfg.quantile_level)?;
            (!q.fallback).then(|| (q.value - pd.quantile_xstar(cfg.quantile_level).unwrap_or(f64::NAN)).abs())
        }
        None => None,
    };
    let ncme = if spec.ncme_mu.is_some() {
        let ext = ExternalMarginal::from_spec(spec);
        cfg.kappa_points
            .iter()
            .map(|&k| {
                let d = dist.as_ref()?;
                rho_ncme(k, &ext, d, &corr).ok().map(|p| (p.value - pd.rho_kappa(k)).abs())
            })
            .collect()
    } else {
        vec![None; cfg.kappa_points.len()]
    };
    Ok(PopulationErrors { skedastic, corrected, naive, known_v, cme, quantile, ncme })
}

/// Error of each estimand as τ varies, with fitted log–log slopes.
///
/// Population mode evaluates exact quadrature curves. Mc mode records the
/// absolute mean bias over `cfg.reps` replications of size `cfg.n`.
pub fn tau_sweep(spec: &DgpSpec, taus: &[f64], mode: SweepMode, cfg: &SweepConfig) -> Result<SweepReport> {
    spec.validate()?;
    cfg.validate()?;
    if taus.is_empty() || taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidConfig("taus must be positive and nonempty".into()));
    }
    let mut warnings: Vec<String> = geometric_warning(taus).into_iter().collect();
    if taus.len() < MIN_TAU_SLOPE_POINTS {
        warnings.push(format!("fewer than {MIN_TAU_SLOPE_POINTS} tau values: slopes omitted"));
    }
    let mut out = Vec::new();
    match mode {
        SweepMode::Population => {
            let pd0 = population_dist(&spec.with_tau(0.0), &cfg.quadrature)?;
            let evals = match &cfg.eval_points {
                Some(e) => e.clone(),
                None => vec![DEFAULT_POPULATION_EVAL],
            };
            let anchor = cfg.cme_anchor.unwrap_or(0.5);
            let sup = (pd0.quantile_xstar(cfg.sup_quantiles[0])?, pd0.quantile_xstar(cfg.sup_quantiles[1])?);
            let mut extra = evals.clone();
            extra.push(anchor);
            let grid = population_grid(spec, cfg, &extra)?;
            let per_tau: Vec<PopulationErrors> =
                taus.iter().map(|&t| population_errors(&spec.with_tau(t), cfg, &grid, &evals, anchor, sup)).collect::<Result<_>>()?;
            let floor = FLOOR_GUARD_FACTOR * cfg.quadrature.abs_tol;
            let mk = |name: &str, x: Option<f64>, e: Vec<Option<f64>>| series(name, x, taus, e, MIN_TAU_SLOPE_POINTS, floor);
            for (k, &x) in evals.iter().enumerate() {
                out.push(mk("skedastic", Some(x), per_tau.iter().map(|p| p.skedastic[k]).collect()));
                out.push(mk("corrected", Some(x), per_tau.iter().map(|p| p.corrected[k]).collect()));
                out.push(mk("naive", Some(x), per_tau.iter().map(|p| p.naive[k]).collect()));
                out.push(mk("known_v", Some(x), per_tau.iter().map(|p| p.known_v[k]).collect()));
            }
            if spec.sigma.is_constant() {
                out.push(mk("cme", None, per_tau.iter().map(|p| p.cme).collect()));
            }
            out.push(mk("quantile", Some(cfg.quantile_level), per_tau.iter().map(|p| p.quantile).collect()));
            if spec.ncme_mu.is_some() {
                for (k, &kp) in cfg.kappa_points.iter().enumerate() {
                    out.push(mk("ncme", Some(kp), per_tau.iter().map(|p| p.ncme[k]).collect()));
                }
            }
        }
        SweepMode::Mc => {
            let reports = taus
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    run_mc(&McConfig {
                        spec: spec.with_tau(t),
                        n: cfg.n,
                        reps: cfg.reps,
                        seed: cfg.seed.wrapping_add(k as u64),
                        estimator: cfg.estimator.clone(),
                        eval_points: cfg.eval_points.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let evals = reports[0].eval_points.clone();
            for (p, &x) in evals.iter().enumerate() {
                for est in ESTIMATORS {
                    let errs = reports.iter().map(|r| r.cell(p, est).mean_bias.map(f64::abs)).collect();
                    out.push(series(est.as_str(), Some(x), taus, errs, MIN_TAU_SLOPE_POINTS, 0.0));
                }
            }
        }
    }
    Ok(SweepReport {
        axis: SweepAxis::Tau,
        mode,
        values: taus.to_vec(),
        taus: taus.to_vec(),
        series: out,
        corrected_beats_naive: Vec::new(),
        corrected_decreasing: None,
        warnings,
    })
}

/// Monte Carlo rmse of each estimator as `n` grows with `τ = tau_rule(n)`.
pub fn n_sweep(spec: &DgpSpec, ns: &[usize], tau_rule: TauRule, cfg: &SweepConfig) -> Result<SweepReport> {
    spec.validate()?;
    cfg.validate()?;
    if ns.is_empty() {
        return Err(Error::InvalidConfig("ns must be nonempty".into()));
    }
    let mut warnings = Vec::new();
    if ns.len() < MIN_N_SLOPE_POINTS {
        warnings.push(format!("fewer than {MIN_N_SLOPE_POINTS} n values: slopes omitted"));
    }
    let taus: Vec<f64> = ns.iter().map(|&n| tau_rule.tau(n)).collect();
    let reports = ns
        .iter()
        .zip(&taus)
        .enumerate()
        .map(|(k, (&n, &t))| {
            run_mc(&McConfig {
                spec: spec.with_tau(t),
                n,
                reps: cfg.reps,
                seed: cfg.seed.wrapping_add(k as u64),
                estimator: cfg.estimator.clone(),
                eval_points: cfg.eval_points.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let evals = reports[0].eval_points.clone();
    let mut out = Vec::new();
    for (p, &x) in evals.iter().enumerate() {
        for est in ESTIMATORS {
            let errs = reports.iter().map(|r| r.cell(p, est).rmse).collect();
            out.push(series(est.as_str(), Some(x), &values, errs, MIN_N_SLOPE_POINTS, 0.0));
        }
    }
    let corrected_beats_naive = reports
        .iter()
        .map(|r| {
            let wins = (0..evals.len())
                .filter(|&p| match (r.cell(p, Estimator::Corrected).rmse, r.cell(p, Estimator::Naive).rmse) {
                    (Some(c), Some(n)) => c < n,
                    _ => false,
                })
                .count();
            wins as f64 / evals.len() as f64
        })
        .collect();
    let corrected_decreasing = (ns.len() >= 2).then(|| {
        let mut order: Vec<usize> = (0..ns.len()).collect();
        order.sort_by_key(|&k| ns[k]);
        (0..evals.len()).all(|p| {
            let r: Vec<Option<f64>> = order.iter().map(|&k| reports[k].cell(p, Estimator::Corrected).rmse).collect();
            r.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a))
        })
    });
    Ok(SweepReport {
        axis: SweepAxis::N,
        mode: SweepMode::Mc,
        values,
        taus,
        series: out,
        corrected_beats_naive,
        corrected_decreasing,
        warnings,
    })
}
