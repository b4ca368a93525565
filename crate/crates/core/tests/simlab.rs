use smeiv::oracle::DgpSpec;
use smeiv::simlab::*;
use smeiv::wcme::EstimatorSettings;

fn gaussian(tau: f64) -> DgpSpec {
    DgpSpec::catalog("gaussian").unwrap().with_tau(tau)
}

fn config(tau: f64, n: usize, reps: usize) -> McConfig {
    McConfig { spec: gaussian(tau), n, reps, seed: 2024, estimator: EstimatorSettings::default(), eval_points: None }
}

#[test]
fn reports_are_deterministic() {
    let c = config(0.3, 800, 2);
    let (a, b) = (run_mc(&c).unwrap(), run_mc(&c).unwrap());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.cells, b.cells);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let c = config(0.3, 600, 6);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_mc(&c).unwrap().to_csv())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn no_measurement_error_means_no_systematic_difference() {
    let r = run_mc(&config(0.0, 4000, 100)).unwrap();
    for p in 0..r.eval_points.len() {
        let (n, c) = (r.cell(p, Estimator::Naive), r.cell(p, Estimator::Corrected));
        let combined = (n.mc_se.unwrap().powi(2) + c.mc_se.unwrap().powi(2)).sqrt();
        assert!((c.mean_bias.unwrap() - n.mean_bias.unwrap()).abs() < 2.0 * combined, "point {p}");
    }
}

#[test]
fn cells_decompose_and_fractions_are_bounded() {
    for (tau, n) in [(0.2, 500), (0.4, 1500)] {
        let r = run_mc(&config(tau, n, 5)).unwrap();
        assert_eq!(r.cells.len(), 3 * ESTIMATORS.len());
        for c in &r.cells {
            assert!((0.0..=1.0).contains(&c.masked_fraction));
            if let (Some(b), Some(s), Some(m)) = (c.mean_bias, c.sd, c.rmse) {
                assert!((m * m - (b * b + s * s)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn rank_failure_everywhere_is_reported() {
    let mut c = config(0.2, 500, 3);
    c.estimator.rank_threshold = 1e6;
    assert!(matches!(run_mc(&c), Err(smeiv::Error::AllRepsFailed)));
}

#[test]
fn csv_layout() {
    let r = run_mc(&config(0.2, 500, 2)).unwrap();
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], McReport::CSV_HEADER);
    assert_eq!(lines.len(), 1 + r.cells.len());
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 10));
    assert!(!csv.contains("wall"));
}

#[test]
fn n_sweep_without_error_shrinks_both() {
    let cfg = SweepConfig { reps: 30, seed: 5, ..SweepConfig::default() };
    let r = n_sweep(&gaussian(0.0), &[1000, 8000], TauRule::Constant { tau: 0.0 }, &cfg).unwrap();
    for s in r.series.iter().filter(|s| s.name == "naive" || s.name == "corrected") {
        assert!(s.errors[1].unwrap() < s.errors[0].unwrap(), "{} at {:?}", s.name, s.x);
        assert!(s.slope.is_none());
    }
}

#[test]
fn single_n_gives_table_only() {
    let cfg = SweepConfig { reps: 3, ..SweepConfig::default() };
    let r = n_sweep(&gaussian(0.2), &[600], TauRule::default(), &cfg).unwrap();
    assert!(r.series.iter().all(|s| s.slope.is_none()));
    assert_eq!(r.corrected_decreasing, None);
    assert!(!r.to_csv().is_empty());
}

#[test]
fn mc_tau_sweep_runs() {
    let cfg = SweepConfig { reps: 4, n: 800, ..SweepConfig::default() };
    let r = tau_sweep(&gaussian(0.2), &[0.1, 0.2, 0.4, 0.8], SweepMode::Mc, &cfg).unwrap();
    assert_eq!(r.series.len(), 3 * ESTIMATORS.len());
    assert!(r.series.iter().all(|s| s.errors.len() == 4));
}

#[test]
fn exact_power_law_slope() {
    let taus = [0.05, 0.1, 0.2, 0.4];
    let err: Vec<f64> = taus.iter().map(|t| 0.7 * t * t).collect();
    assert!((fit_loglog_slope(&taus, &err).unwrap().slope - 2.0).abs() < 1e-6);
}

#[test]
fn non_geometric_taus_warn() {
    let r = tau_sweep(&gaussian(0.2), &[0.05, 0.1, 0.3, 0.4], SweepMode::Population, &SweepConfig::default()).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("NonGeometricTaus")));
}
