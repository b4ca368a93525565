use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use smeiv::nonparam::*;
use smeiv::{Error, Grid};

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn single_point_kde_is_the_kernel() {
    let g = Grid::new(vec![-1.0, 0.0, 1.0]).unwrap();
    let d = kde(&[0.0], &KernelSpec::gaussian(1.0), &g).unwrap();
    assert!((d.f[1] - phi(0.0)).abs() < 1e-12);
    assert!(d.f1[1].abs() < 1e-12);
}

#[test]
fn two_point_kde_is_symmetric() {
    let g = Grid::new(vec![-1.0, 0.0, 1.0]).unwrap();
    let d = kde(&[-1.0, 1.0], &KernelSpec::gaussian(1.0), &g).unwrap();
    assert!((d.f[1] - phi(1.0)).abs() < 1e-12);
    assert!(d.f1[1].abs() < 1e-12);
}

#[test]
fn kde_errors() {
    let g = Grid::new(vec![-1.0, 0.0, 1.0]).unwrap();
    assert!(matches!(kde(&[], &KernelSpec::gaussian(1.0), &g), Err(Error::EmptyData)));
    assert!(matches!(kde(&[0.0], &KernelSpec::gaussian(0.0), &g), Err(Error::NonpositiveBandwidth(_))));
}

#[test]
fn large_normal_sample_density_at_zero() {
    let data = normal_draws(100_000, 3);
    let h = select_bandwidth(&data, BandwidthMethod::RuleOfThumb, Purpose::Density, KernelFamily::Gaussian).unwrap();
    let g = Grid::new(vec![-0.5, 0.0, 0.5]).unwrap();
    let d = kde(&data, &KernelSpec::gaussian(h), &g).unwrap();
    assert!((d.f[1] - phi(0.0)).abs() < 0.01, "f(0) = {}", d.f[1]);
}

#[test]
fn linear_and_quadratic_reproduction() {
    let x: Vec<f64> = (0..200).map(|i| -2.0 + 4.0 * i as f64 / 199.0).collect();
    let g = Grid::linspace(-1.0, 1.0, 9).unwrap();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let c = local_poly_fit(&x, &y, 2, &KernelSpec::gaussian(0.4), &g).unwrap();
    for (i, &p) in g.points().iter().enumerate() {
        assert!((c.g[i] - (2.0 * p + 1.0)).abs() < 1e-10);
        assert!((c.g1[i] - 2.0).abs() < 1e-10);
        assert!(c.g2[i].abs() < 1e-9);
    }
    let y2: Vec<f64> = x.iter().map(|v| v * v).collect();
    let c = local_poly_fit(&x, &y2, 2, &KernelSpec::gaussian(0.4), &g).unwrap();
    let i = g.index_of(1.0, 1e-12).unwrap();
    assert!((c.g1[i] - 2.0).abs() < 1e-9);
    assert!((c.g2[i] - 2.0).abs() < 1e-9);
}

#[test]
fn noisy_exponential_with_cv_bandwidth() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u = Uniform::new(-2.0, 2.0).unwrap();
    let e = Normal::new(0.0, 0.1).unwrap();
    let x: Vec<f64> = (0..10_000).map(|_| u.sample(&mut rng)).collect();
    let y: Vec<f64> = x.iter().map(|v| (v / 2.0).exp() + e.sample(&mut rng)).collect();
    let h = select_bandwidth(&x, BandwidthMethod::LeastSquaresCv, Purpose::Regression { y: &y, degree: 3 }, KernelFamily::Gaussian)
        .unwrap();
    let g = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let c = local_poly_fit(&x, &y, 3, &KernelSpec::gaussian(h), &g).unwrap();
    assert!((c.g[1] - 0.25f64.exp()).abs() < 0.02, "g(0.5) = {}", c.g[1]);
}

#[test]
fn bandwidth_examples() {
    assert!(matches!(
        select_bandwidth(&[1.0], BandwidthMethod::LeastSquaresCv, Purpose::Density, KernelFamily::Gaussian),
        Err(Error::TooFewObservations { .. })
    ));
    let data = normal_draws(10_000, 5);
    let h = rule_of_thumb(&data, Purpose::Density, KernelFamily::Gaussian).unwrap();
    let expected = 0.7 * robust_scale(&data) * 10_000f64.powf(-1.0 / 9.0);
    assert!((h - expected).abs() < 1e-12);
    assert!((h / (0.7 * 0.3594) - 1.0).abs() < 0.03);
}

fn density_grid(data: &[f64], h: f64) -> Grid {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min) - 5.0 * h;
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 5.0 * h;
    Grid::linspace(lo, hi, 2001).unwrap()
}

fn trapezoid(g: &Grid, f: &[f64]) -> f64 {
    g.points().windows(2).zip(f.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cubic_reproduction(c in prop::array::uniform4(-3.0f64..3.0), h in 0.2f64..1.0, seed in 0u64..1000, deg3 in any::<bool>()) {
        let degree = if deg3 { 3 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(-2.0, 2.0).unwrap();
        let x: Vec<f64> = (0..300).map(|_| u.sample(&mut rng)).collect();
        let c3 = if deg3 { c[3] } else { 0.0 };
        let p = |v: f64| c[0] + c[1] * v + c[2] * v * v + c3 * v * v * v;
        let y: Vec<f64> = x.iter().map(|&v| p(v)).collect();
        let g = Grid::linspace(-1.0, 1.0, 7).unwrap();
        let fit = local_poly_fit(&x, &y, degree, &KernelSpec::gaussian(h), &g).unwrap();
        for (i, &v) in g.points().iter().enumerate() {
            prop_assert!(fit.mask[i]);
            prop_assert!((fit.g[i] - p(v)).abs() < 1e-8);
            prop_assert!((fit.g1[i] - (c[1] + 2.0 * c[2] * v + 3.0 * c3 * v * v)).abs() < 1e-8);
            prop_assert!((fit.g2[i] - (2.0 * c[2] + 6.0 * c3 * v)).abs() < 1e-7);
        }
    }

    #[test]
    fn kde_mass(seed in 0u64..1000, n in 5usize..400, h in 0.05f64..1.5, tri in any::<bool>()) {
        let data: Vec<f64> = normal_draws(n, seed).iter().map(|v| 2.0 * v + 1.0).collect();
        let family = if tri { KernelFamily::EpanechnikovSmoothed } else { KernelFamily::Gaussian };
        let g = density_grid(&data, h);
        let d = kde(&data, &KernelSpec::new(family, h), &g).unwrap();
        prop_assert!(d.f.iter().all(|&v| v >= 0.0));
        prop_assert!((trapezoid(&g, &d.f) - 1.0).abs() < 0.01);
    }

    #[test]
    fn score_derivative_consistency(seed in 0u64..1000, h in 0.3f64..1.0) {
        let data = normal_draws(200, seed);
        let g = Grid::linspace(-1.0, 1.0, 401).unwrap();
        let spec = KernelSpec::gaussian(h).with_inflation(1.0);
        let d = kde(&data, &spec, &g).unwrap();
        let s = score_from_density(&d, default_floor(&d));
        let step = g.points()[1] - g.points()[0];
        for i in 1..g.len() - 1 {
            if s.mask[i - 1] && s.mask[i] && s.mask[i + 1] {
                let num = (s.s[i + 1] - s.s[i - 1]) / (2.0 * step);
                prop_assert!((num - s.s1[i]).abs() < 50.0 * step * step / (h * h * h), "i={} num={} s1={}", i, num, s.s1[i]);
            }
        }
    }

    #[test]
    fn shift_equivariance(seed in 0u64..1000, c in -5.0f64..5.0, h in 0.2f64..1.0) {
        let data = normal_draws(100, seed);
        let shifted: Vec<f64> = data.iter().map(|v| v + c).collect();
        let g = Grid::linspace(-1.5, 1.5, 31).unwrap();
        let gs = Grid::new(g.points().iter().map(|v| v + c).collect()).unwrap();
        let spec = KernelSpec::gaussian(h);
        let (a, b) = (kde(&data, &spec, &g).unwrap(), kde(&shifted, &spec, &gs).unwrap());
        let (sa, sb) = (score_from_density(&a, 1e-6), score_from_density(&b, 1e-6));
        for i in 0..g.len() {
            prop_assert!((a.f[i] - b.f[i]).abs() < 1e-10);
            prop_assert!((a.f1[i] - b.f1[i]).abs() < 1e-9);
            prop_assert!((a.f2[i] - b.f2[i]).abs() < 1e-8);
            prop_assert_eq!(sa.mask[i], sb.mask[i]);
            if sa.mask[i] {
                prop_assert!((sa.s[i] - sb.s[i]).abs() < 1e-7);
            }
        }
    }
}
