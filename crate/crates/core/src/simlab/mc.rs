use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numfmt::{format_opt, format_sig};
use crate::oracle::{predicted_naive_bias, sample_stream, true_v, DgpSpec};
use crate::special::norm_cdf;
use crate::wcme::{best_anchor, fit_curves, rho_tilde, rho_tilde_cme, rho_tilde_known_v, v_tilde, EstimatorSettings};

/// Monte Carlo design: `reps` samples of size `n` from `spec`, estimated with `estimator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub spec: DgpSpec,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    /// Defaults to the quartiles of `X*`.
    #[serde(default)]
    pub eval_points: Option<Vec<f64>>,
}

/// Quantile levels of `X*` bounding admissible evaluation points.
const INTERIOR: (f64, f64) = (0.02, 0.98);

fn xstar_quantile(spec: &DgpSpec, p: f64) -> f64 {
    let (m, s) = spec.xstar_moments();
    let cdf = |x: f64| -> f64 { spec.instruments.iter().map(|i| i.prob * norm_cdf((x - i.mean) / i.var.sqrt())).sum() };
    let (mut lo, mut hi) = (m - 20.0 * s, m + 20.0 * s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.estimator.validate()?;
        if self.reps < 2 {
            return Err(Error::InvalidConfig(format!("reps must be at least 2, got {}", self.reps)));
        }
        if self.n < 10 {
            return Err(Error::InvalidConfig(format!("n must be at least 10, got {}", self.n)));
        }
        let (lo, hi) = (xstar_quantile(&self.spec, INTERIOR.0), xstar_quantile(&self.spec, INTERIOR.1));
        for &x in self.eval_points.iter().flatten() {
            if !(x >= lo && x <= hi) {
                return Err(Error::InvalidConfig(format!("eval point {x} outside the interior range [{lo:.4}, {hi:.4}]")));
            }
        }
        if self.eval_points.as_ref().is_some_and(|e| e.is_empty()) {
            return Err(Error::InvalidConfig("eval_points is empty".into()));
        }
        Ok(())
    }

    pub fn resolved_eval_points(&self) -> Vec<f64> {
        self.eval_points
            .clone()
            .unwrap_or_else(|| [0.25, 0.5, 0.75].iter().map(|&p| xstar_quantile(&self.spec, p)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Naive,
    Corrected,
    Cme,
    KnownV,
}

pub const ESTIMATORS: [Estimator; 4] = [Estimator::Naive, Estimator::Corrected, Estimator::Cme, Estimator::KnownV];

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Naive => "naive",
            Estimator::Corrected => "corrected",
            Estimator::Cme => "cme",
            Estimator::KnownV => "known_v",
        }
    }
}

/// Summary of one estimator at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub x: f64,
    pub estimator: Estimator,
    pub truth: f64,
    pub valid: usize,
    pub masked_fraction: f64,
    pub mean_bias: Option<f64>,
    /// Standard deviation across replications (denominator = valid count).
    pub sd: Option<f64>,
    pub rmse: Option<f64>,
    /// Monte Carlo standard error of the mean bias, `sd / √valid`.
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub config: McConfig,
    pub eval_points: Vec<f64>,
    /// Second-order prediction for the naive (pooled) bias at each evaluation point.
    pub predicted_naive_bias: Vec<f64>,
    pub cells: Vec<McCell>,
    /// Replications whose pipeline failed outright.
    pub failed_reps: usize,
    /// Informational only; excluded from [`McReport::to_csv`].
    pub wall_time_secs: f64,
}

impl McReport {
    pub fn cell(&self, point: usize, est: Estimator) -> &McCell {
        &self.cells[point * ESTIMATORS.len() + ESTIMATORS.iter().position(|&e| e == est).unwrap()]
    }

    pub const CSV_HEADER: &'static str = "x,estimator,truth,valid,masked_fraction,mean_bias,sd,rmse,mc_se,predicted_naive_bias";

    /// Deterministic CSV of all cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (k, c) in self.cells.iter().enumerate() {
            let pred = self.predicted_naive_bias[k / ESTIMATORS.len()];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                format_sig(c.x),
                c.estimator.as_str(),
                format_sig(c.truth),
                c.valid,
                format_sig(c.masked_fraction),
                format_opt(c.mean_bias),
                format_opt(c.sd),
                format_opt(c.rmse),
                format_opt(c.mc_se),
                format_sig(pred)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type RepValues = Vec<[Option<f64>; 4]>;

fn estimate_rep(cfg: &McConfig, settings: &EstimatorSettings, evals: &[f64], rep: usize) -> Option<RepValues> {
    let s = sample_stream(&cfg.spec, cfg.n, cfg.seed, rep as u64).ok()?;
    let cs = fit_curves(&s.y, &s.x, &s.z, settings).ok()?;
    let idx: Vec<Option<usize>> = evals.iter().map(|&e| cs.grid.index_of(e, 1e-12)).collect();
    let pick = |vals: &[f64], ok: &dyn Fn(usize) -> bool, i: Option<usize>| i.filter(|&i| ok(i)).map(|i| vals[i]);
    let z1 = cs.z_pair.0.clone();
    let naive_q = &cs.pooled.q;
    let sk = v_tilde(&cs, settings.rank_threshold).ok();
    let corrected = sk.as_ref().and_then(|sk| rho_tilde(&cs, sk, &z1).ok());
    let cme = sk.as_ref().and_then(|sk| {
        let anchor = settings.cme_anchor.or_else(|| best_anchor(sk))?;
        rho_tilde_cme(&cs, sk, anchor, &z1).ok()
    });
    let known = rho_tilde_known_v(&cs.pooled.q, &cs.pooled.s, |x| true_v(&cfg.spec, x)).ok();
    Some(
        idx.iter()
            .map(|&i| {
                [
                    pick(&naive_q.g, &|j| naive_q.mask[j], i),
                    corrected.as_ref().and_then(|c| pick(&c.rho, &|j| c.status[j].is_valid(), i)),
                    cme.as_ref().and_then(|c| pick(&c.rho, &|j| c.status[j].is_valid(), i)),
                    known.as_ref().and_then(|c| pick(&c.rho, &|j| c.status[j].is_valid(), i)),
                ]
            })
            .collect(),
    )
}

fn summarize(x: f64, est: Estimator, truth: f64, values: &[f64], reps: usize) -> McCell {
    let k = values.len();
    let masked_fraction = 1.0 - k as f64 / reps as f64;
    if k == 0 {
        return McCell { x, estimator: est, truth, valid: 0, masked_fraction, mean_bias: None, sd: None, rmse: None, mc_se: None };
    }
    let kf = k as f64;
    let mean = values.iter().sum::<f64>() / kf;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / kf;
    let bias = mean - truth;
    let sd = var.sqrt();
    McCell {
        x,
        estimator: est,
        truth,
        valid: k,
        masked_fraction,
        mean_bias: Some(bias),
        sd: Some(sd),
        rmse: Some((bias * bias + var).sqrt()),
        mc_se: Some(sd / kf.sqrt()),
    }
}

/// Run every replication (in parallel) and aggregate in replication order, so
/// the report does not depend on the number of worker threads.
pub fn run_mc(cfg: &McConfig) -> Result<McReport> {
    cfg.validate()?;
    let start = Instant::now();
    let evals = cfg.resolved_eval_points();
    let mut settings = cfg.estimator.clone();
    settings.grid.include.extend(evals.iter().copied());
    let per_rep: Vec<Option<RepValues>> =
        (0..cfg.reps).into_par_iter().map(|r| estimate_rep(cfg, &settings, &evals, r)).collect();
    let failed_reps = per_rep.iter().filter(|r| r.is_none()).count();
    let corrected_any = per_rep.iter().flatten().any(|r| r.iter().any(|v| v[1].is_some()));
    if !corrected_any {
        return Err(Error::AllRepsFailed);
    }
    let mut cells = Vec::with_capacity(evals.len() * ESTIMATORS.len());
    for (p, &x) in evals.iter().enumerate() {
        let truth = cfg.spec.rho.eval(x);
        for (e, &est) in ESTIMATORS.iter().enumerate() {
            let values: Vec<f64> = per_rep.iter().flatten().filter_map(|r| r[p][e]).collect();
            cells.push(summarize(x, est, truth, &values, cfg.reps));
        }
    }
    let predicted = if evals.len() >= 3 && Grid::new(evals.clone()).is_ok() {
        predicted_naive_bias(&cfg.spec, &Grid::new(evals.clone())?).pooled
    } else {
        evals
            .iter()
            .map(|&x| predicted_naive_bias(&cfg.spec, &Grid::new(vec![x - 1.0, x, x + 1.0]).expect("valid")).pooled[1])
            .collect()
    };
    Ok(McReport {
        config: cfg.clone(),
        eval_points: evals,
        predicted_naive_bias: predicted,
        cells,
        failed_reps,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> McConfig {
        McConfig {
            spec: DgpSpec::catalog("gaussian").unwrap(),
            n: 600,
            reps,
            seed: 11,
            estimator: EstimatorSettings::default(),
            eval_points: Some(vec![0.0, 0.5, 1.0]),
        }
    }

    #[test]
    fn validation() {
        assert!(small(1).validate().is_err());
        let mut c = small(2);
        c.eval_points = Some(vec![5.0]);
        assert!(c.validate().is_err());
        assert_eq!(McConfig { eval_points: None, ..small(2) }.resolved_eval_points().len(), 3);
    }

    #[test]
    fn decomposition_and_fractions() {
        let r = run_mc(&small(6)).unwrap();
        for c in &r.cells {
            assert!((0.0..=1.0).contains(&c.masked_fraction));
            if let (Some(b), Some(s), Some(m)) = (c.mean_bias, c.sd, c.rmse) {
                assert!((m * m - (b * b + s * s)).abs() < 1e-10);
            }
        }
    }
}
