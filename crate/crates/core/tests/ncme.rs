use smeiv::ncme::*;
use smeiv::oracle::*;
use smeiv::quadrature::QuadratureConfig;
use smeiv::simlab::{population_grid, tau_sweep, SweepConfig, SweepMode};
use smeiv::special::norm_cdf;
use smeiv::wcme::*;
use smeiv::{Error, Grid};

fn qc() -> QuadratureConfig {
    QuadratureConfig::default()
}

struct Fitted {
    dist: DistFit,
    corrected: CorrectedCurve,
    pd: PopulationDist,
}

fn fitted(spec: &DgpSpec) -> Fitted {
    let grid = population_grid(spec, &SweepConfig::default(), &[]).unwrap();
    let cs = population_curves(spec, &grid, &qc()).unwrap();
    let sk = v_tilde(&cs, POPULATION_RANK_THRESHOLD).unwrap();
    let corrected = rho_tilde(&cs, &sk, &cs.z_pair.0).unwrap();
    let dist = dist_fit(&cs.pooled.f, &sk).unwrap();
    Fitted { dist, corrected, pd: population_dist(spec, &qc()).unwrap() }
}

/// `X* ~ N(0, 1)` with `ε ~ N(0, τ²)`, with the skedastic fit set to the true `v ≡ τ²`.
fn standard_normal_fit(tau: f64) -> (DistFit, PopulationDist) {
    let mut spec = DgpSpec::catalog("gaussian").unwrap().with_tau(tau);
    for ins in &mut spec.instruments {
        ins.mean = 0.0;
    }
    let grid = Grid::linspace(-4.0, 4.0, 321).unwrap();
    let pd = population_dist(&spec, &qc()).unwrap();
    let f = pd.marginal_curve(&grid).unwrap();
    let m = grid.len();
    let sk = SkedasticFit {
        grid: grid.clone(),
        v: vec![tau * tau; m],
        v1: vec![0.0; m],
        denom: vec![1.0; m],
        status: vec![PointStatus::Valid; m],
    };
    (dist_fit(&f, &sk).unwrap(), pd)
}

#[test]
fn zero_tau_leaves_distribution_unchanged() {
    let f = fitted(&DgpSpec::catalog("gaussian").unwrap().with_tau(0.0));
    for (a, b) in f.dist.cdf_corr.iter().zip(&f.dist.cdf_x) {
        assert!((a - b).abs() < 1e-12);
    }
    for s in [0.2, 0.5, 0.8] {
        let q = f.dist.quantile_corrected(s).unwrap();
        assert!(!q.fallback);
        assert!((q.value - f.dist.quantile_x(s).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn corrected_cdf_of_normal_convolution() {
    let (d, _) = standard_normal_fit(0.2);
    let phi1 = norm_cdf(1.0);
    let observed = norm_cdf(1.0 / 1.04f64.sqrt());
    assert!((d.cdf_x_at(1.0).unwrap() - observed).abs() < 1e-10);
    let corrected = d.cdf_corrected_at(1.0).unwrap();
    assert!((corrected - phi1).abs() < 1e-3);
    assert!((corrected - phi1).abs() < (observed - phi1).abs());
    assert!(d.quantile_corrected(0.5).unwrap().value.abs() <= 1e-6);
}

#[test]
fn identity_transform_recovers_regression() {
    let spec = DgpSpec::catalog("gaussian").unwrap();
    let f = fitted(&spec);
    let ext = ExternalMarginal::from_spec(&spec);
    for k in [0.0, 0.5, 1.0] {
        let p = rho_ncme(k, &ext, &f.dist, &f.corrected).unwrap();
        assert!((p.value - spec.rho.eval(k)).abs() < 2e-3, "k {k}: {}", p.value);
        assert!((p.target_x - k).abs() < 2e-3);
    }
}

#[test]
fn cubic_transform_composition() {
    let spec = DgpSpec::catalog("ncme-cubic").unwrap();
    let f = fitted(&spec);
    let ext = ExternalMarginal::from_spec(&spec);
    let p = rho_ncme(0.5, &ext, &f.dist, &f.corrected).unwrap();
    assert!((p.value - f.pd.rho_kappa(0.5)).abs() <= 2e-3);
    assert!((f.pd.rho_kappa(0.5) - spec.rho.eval(0.5 + 0.1 * 0.125)).abs() < 1e-15);
    let level = 0.75;
    let q = rho_ncme_quantile(level, &f.dist, &f.corrected).unwrap();
    let target = spec.rho.eval(f.pd.mu(f.pd.quantile_kappa(level).unwrap()));
    assert!((q.value - target).abs() <= 2e-3);
}

#[test]
fn quantile_route_equals_marginal_route() {
    let spec = DgpSpec::catalog("ncme-cubic").unwrap();
    let f = fitted(&spec);
    let ext = ExternalMarginal::from_spec(&spec);
    for level in [0.25, 0.5, 0.75] {
        let k = f.pd.quantile_kappa(level).unwrap();
        let a = rho_ncme(k, &ext, &f.dist, &f.corrected).unwrap();
        let b = rho_ncme_quantile(level, &f.dist, &f.corrected).unwrap();
        assert!((a.value - b.value).abs() < 1e-8);
    }
}

#[test]
fn symmetric_median() {
    let spec = DgpSpec::catalog("symmetric").unwrap();
    let f = fitted(&spec);
    let p = rho_ncme_quantile(0.5, &f.dist, &f.corrected).unwrap();
    assert!((p.value - spec.rho.eval(0.0)).abs() < 1e-6);
}

#[test]
fn out_of_range_levels() {
    let spec = DgpSpec::catalog("gaussian").unwrap();
    let f = fitted(&spec);
    let ext = ExternalMarginal::Normal { mean: 0.0, sd: 1.0 };
    assert!(matches!(rho_ncme(60.0, &ext, &f.dist, &f.corrected), Err(Error::OutOfRange(_))));
    assert!(matches!(rho_ncme(-60.0, &ext, &f.dist, &f.corrected), Err(Error::OutOfRange(_))));
    assert!(matches!(rho_ncme_quantile(0.0, &f.dist, &f.corrected), Err(Error::OutOfRange(_))));
    assert!(matches!(rho_ncme_quantile(1.0, &f.dist, &f.corrected), Err(Error::OutOfRange(_))));
}

#[test]
fn identity_chain_is_exact() {
    let f = fitted(&DgpSpec::catalog("asymmetric").unwrap());
    let mask = f.corrected.mask();
    for level in [0.1, 0.3, 0.6, 0.9] {
        let p = rho_ncme_quantile(level, &f.dist, &f.corrected).unwrap();
        let q = f.dist.quantile_corrected(level).unwrap().value;
        let direct = smeiv::interp::masked(&f.corrected.grid, &f.corrected.rho, &mask, q, smeiv::interp::Method::Cubic).unwrap();
        assert_eq!(p.value, direct);
        assert_eq!(p.target_x, q);
    }
}

#[test]
fn monotone_quantiles_and_bounded_cdf() {
    for id in ["gaussian", "asymmetric", "gaussian-hetero", "ncme-cubic"] {
        for tau in [0.1, 0.3, 0.5] {
            let f = fitted(&DgpSpec::catalog(id).unwrap().with_tau(tau));
            assert!(f.dist.cdf_excursion <= CDF_EXCURSION_TOL, "{id} {tau}: {}", f.dist.cdf_excursion);
            assert!(f.dist.cdf_corr.iter().all(|c| (0.0..=1.0).contains(c)));
            let levels: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
            let qs: Vec<f64> = levels.iter().filter_map(|&s| f.dist.quantile_corrected(s).ok()).map(|q| q.value).collect();
            assert!(qs.windows(2).all(|w| w[1] >= w[0]), "{id} {tau}");
        }
    }
}

#[test]
fn quantile_and_composition_orders() {
    let taus = [0.05, 0.1, 0.2, 0.4];
    for id in ["gaussian", "symmetric", "asymmetric", "ncme-cubic"] {
        let spec = DgpSpec::catalog(id).unwrap();
        let r = tau_sweep(&spec, &taus, SweepMode::Population, &SweepConfig::default()).unwrap();
        let need = spec.order() as f64 - 0.4;
        assert!(r.series("quantile").unwrap().slope.unwrap().slope >= need, "{id}");
        if let Some(s) = r.series("ncme") {
            assert!(s.slope.unwrap().slope >= need);
        }
    }
}

#[test]
fn tabulated_marginal_matches_analytic() {
    let k: Vec<f64> = (0..241).map(|i| -6.0 + i as f64 * 0.05).collect();
    let c: Vec<f64> = k.iter().map(|&v| norm_cdf(v)).collect();
    let tab = ExternalMarginal::tabulated(k, c).unwrap();
    let exact = ExternalMarginal::Normal { mean: 0.0, sd: 1.0 };
    for v in [-1.3, 0.0, 0.77, 2.1] {
        assert!((tab.cdf(v).unwrap() - exact.cdf(v).unwrap()).abs() < 1e-5);
    }
}
