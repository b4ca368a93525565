use std::collections::BTreeMap;

use rayon::prelude::*;

use super::spec::{DgpSpec, Instrument, Zeta};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::nonparam::{score_from_density, DensityCurve, RegCurve};
use crate::quadrature::{adaptive_simpson, GaussHermite, QuadratureConfig, QuadratureRule};
use crate::special::{norm_cdf, norm_pdf_derivs, normal_density_derivs};
use crate::wcme::{most_frequent_pair, CurveSet, ZCurves};

/// Population densities below this are treated as outside the support.
pub const POPULATION_DENSITY_FLOOR: f64 = 1e-10;

/// Half-width, in conditional standard deviations, of the integration range in `X*`.
const SUPPORT_SDS: f64 = 12.0;

/// Integrals `[f, f', f'', N, N', N'', F]` of `X | Z = z`, where `N = q·f`
/// and `F` is the conditional CDF.
type Moments = [f64; 7];

fn integrand_at(spec: &DgpSpec, ins: &Instrument, t: f64) -> Moments {
    let f = normal_density_derivs(t, ins.mean, ins.var);
    let r = spec.rho.derivs(t);
    [
        f[0],
        f[1],
        f[2],
        r[0] * f[0],
        r[1] * f[0] + r[0] * f[1],
        r[2] * f[0] + 2.0 * r[1] * f[1] + r[0] * f[2],
        norm_cdf((t - ins.mean) / ins.var.sqrt()),
    ]
}

/// Quadrature engine for the convolution integrals of one specification.
#[derive(Debug, Clone)]
struct Evaluator {
    spec: DgpSpec,
    qc: QuadratureConfig,
    gh: Option<GaussHermite>,
}

impl Evaluator {
    fn new(spec: &DgpSpec, qc: &QuadratureConfig) -> Result<Self> {
        spec.validate()?;
        qc.validate()?;
        if spec.tau > 0.0 && !spec.sigma.is_constant() && spec.zeta != Zeta::StandardNormal {
            // the error density is singular at the support edge and moves with X*
            return Err(Error::Unsupported(
                "population curves for heteroskedastic sigma need a normal zeta".into(),
            ));
        }
        let gh = (qc.rule == QuadratureRule::GaussHermite).then(|| GaussHermite::new(qc.nodes));
        Ok(Self { spec: spec.clone(), qc: *qc, gh })
    }

    fn conditional(&self, ins: &Instrument, x: f64) -> Result<Moments> {
        let spec = &self.spec;
        if spec.tau == 0.0 {
            return Ok(integrand_at(spec, ins, x));
        }
        if spec.sigma.is_constant() {
            // location family: average the X* quantities over x − τcζ(w)
            let scale = spec.tau * spec.sigma.eval(0.0);
            let g = |w: f64| integrand_at(spec, ins, x - scale * spec.zeta.from_normal(w));
            return match &self.gh {
                Some(gh) => Ok(gh.expect_into(g)),
                None => adaptive_simpson(
                    |w| {
                        let phi = norm_pdf_derivs(w)[0];
                        g(w).map(|v| v * phi)
                    },
                    -SUPPORT_SDS,
                    SUPPORT_SDS,
                    &[0.0],
                    16,
                    self.qc.abs_tol,
                ),
            };
        }
        // heteroskedastic normal error: integrate over r = X*
        let sd = ins.var.sqrt();
        let (lo, hi) = (ins.mean - SUPPORT_SDS * sd, ins.mean + SUPPORT_SDS * sd);
        let width = spec.tau * spec.sigma.eval(x);
        let breaks: Vec<f64> = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0].iter().map(|k| x + k * width).collect();
        adaptive_simpson(
            |r| {
                let ts = spec.tau * spec.sigma.eval(r);
                let w = (x - r) / ts;
                let p = norm_pdf_derivs(w);
                let fs = normal_density_derivs(r, ins.mean, ins.var)[0];
                let rho = spec.rho.eval(r);
                let k0 = fs * p[0] / ts;
                let k1 = fs * p[1] / (ts * ts);
                let k2 = fs * p[2] / (ts * ts * ts);
                [k0, k1, k2, rho * k0, rho * k1, rho * k2, fs * norm_cdf(w)]
            },
            lo.min(x - 8.0 * width),
            hi.max(x + 8.0 * width),
            &breaks,
            32,
            self.qc.abs_tol,
        )
    }

    /// Mixture over instrument values.
    fn marginal(&self, x: f64) -> Result<Moments> {
        let mut acc = [0.0; 7];
        for ins in &self.spec.instruments {
            let m = self.conditional(ins, x)?;
            for k in 0..7 {
                acc[k] += ins.prob * m[k];
            }
        }
        Ok(acc)
    }
}

fn curves_from_moments(grid: &Grid, m: &[Moments]) -> ZCurves {
    let len = grid.len();
    let col = |k: usize| m.iter().map(|v| v[k]).collect::<Vec<f64>>();
    let f = DensityCurve { grid: grid.clone(), f: col(0), f1: col(1), f2: col(2), cdf: col(6) };
    let mut q = RegCurve {
        grid: grid.clone(),
        g: vec![0.0; len],
        g1: vec![0.0; len],
        g2: vec![0.0; len],
        mask: vec![false; len],
    };
    for (i, v) in m.iter().enumerate() {
        let [f0, f1, f2, n0, n1, n2, _] = *v;
        if f0 >= POPULATION_DENSITY_FLOOR {
            let g = n0 / f0;
            let g1 = (n1 - g * f1) / f0;
            let g2 = (n2 - 2.0 * g1 * f1 - g * f2) / f0;
            if g.is_finite() && g1.is_finite() && g2.is_finite() {
                q.g[i] = g;
                q.g1[i] = g1;
                q.g2[i] = g2;
                q.mask[i] = true;
            }
        }
    }
    let s = score_from_density(&f, POPULATION_DENSITY_FLOOR);
    ZCurves { q, f, s }
}

/// Exact population `CurveSet` by quadrature, differentiating under the integral sign.
pub fn population_curves(spec: &DgpSpec, grid: &Grid, qc: &QuadratureConfig) -> Result<CurveSet> {
    let ev = Evaluator::new(spec, qc)?;
    let per_point: Vec<Vec<Moments>> = grid
        .points()
        .par_iter()
        .map(|&x| spec.instruments.iter().map(|ins| ev.conditional(ins, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut per_z = BTreeMap::new();
    for (k, ins) in spec.instruments.iter().enumerate() {
        let m: Vec<Moments> = per_point.iter().map(|v| v[k]).collect();
        per_z.insert(ins.label.clone(), curves_from_moments(grid, &m));
    }
    let pooled: Vec<Moments> = per_point
        .iter()
        .map(|v| {
            let mut acc = [0.0; 7];
            for (ins, m) in spec.instruments.iter().zip(v) {
                for k in 0..7 {
                    acc[k] += ins.prob * m[k];
                }
            }
            acc
        })
        .collect();
    let pooled = curves_from_moments(grid, &pooled);
    let weights: BTreeMap<String, f64> = spec.instruments.iter().map(|i| (i.label.clone(), i.prob)).collect();
    CurveSet::new(grid.clone(), per_z, pooled, most_frequent_pair(&weights)?)
}

/// Exact marginal laws of `X`, `X*` and `𝒳*` for one specification.
#[derive(Debug, Clone)]
pub struct PopulationDist {
    ev: Evaluator,
}

pub fn population_dist(spec: &DgpSpec, qc: &QuadratureConfig) -> Result<PopulationDist> {
    Ok(PopulationDist { ev: Evaluator::new(spec, qc)? })
}

const ROOT_TOL: f64 = 1e-12;

/// Safeguarded Newton inversion of a continuous CDF.
fn invert_cdf<F>(p: f64, start: f64, scale: f64, cdf_pdf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(p));
    }
    let (mut lo, mut hi) = (start - scale, start + scale);
    let mut step = scale;
    while cdf_pdf(lo)?.0 > p {
        step *= 2.0;
        lo -= step;
        if step > 1e6 * scale {
            return Err(Error::OutOfRange(p));
        }
    }
    step = scale;
    while cdf_pdf(hi)?.0 < p {
        step *= 2.0;
        hi += step;
        if step > 1e6 * scale {
            return Err(Error::OutOfRange(p));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (c, d) = cdf_pdf(x)?;
        let r = c - p;
        if r == 0.0 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - r / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= ROOT_TOL * (1.0 + x.abs()) || hi - lo <= ROOT_TOL {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

impl PopulationDist {
    pub fn spec(&self) -> &DgpSpec {
        &self.ev.spec
    }

    /// `[f_X, f_X', f_X'']` at `x`.
    pub fn density_x(&self, x: f64) -> Result<[f64; 3]> {
        let m = self.ev.marginal(x)?;
        Ok([m[0], m[1], m[2]])
    }

    pub fn score_x(&self, x: f64) -> Result<f64> {
        let d = self.density_x(x)?;
        Ok(d[1] / d[0])
    }

    pub fn cdf_x(&self, x: f64) -> Result<f64> {
        Ok(self.ev.marginal(x)?[6])
    }

    pub fn quantile_x(&self, p: f64) -> Result<f64> {
        let (m, s) = self.ev.spec.xstar_moments();
        invert_cdf(p, m, s, |x| {
            let v = self.ev.marginal(x)?;
            Ok((v[6], v[0]))
        })
    }

    pub fn cdf_xstar(&self, x: f64) -> f64 {
        self.ev.spec.instruments.iter().map(|i| i.prob * norm_cdf((x - i.mean) / i.var.sqrt())).sum()
    }

    pub fn quantile_xstar(&self, p: f64) -> Result<f64> {
        let (m, s) = self.ev.spec.xstar_moments();
        invert_cdf(p, m, s, |x| Ok((self.cdf_xstar(x), self.ev.spec.xstar_density(x)[0])))
    }

    /// `μ(ϰ)`, the identity when the specification has no transform.
    pub fn mu(&self, k: f64) -> f64 {
        self.ev.spec.ncme_mu.map_or(k, |m| m.eval(k))
    }

    pub fn mu_inverse(&self, x: f64) -> f64 {
        self.ev.spec.ncme_mu.map_or(x, |m| m.inverse(x))
    }

    /// `F_{𝒳*}(ϰ) = F_{X*}(μ(ϰ))`.
    pub fn cdf_kappa(&self, k: f64) -> f64 {
        self.cdf_xstar(self.mu(k))
    }

    pub fn quantile_kappa(&self, p: f64) -> Result<f64> {
        Ok(self.mu_inverse(self.quantile_xstar(p)?))
    }

    /// `ρ_{𝒳*}(ϰ) = ρ(μ(ϰ))`.
    pub fn rho_kappa(&self, k: f64) -> f64 {
        self.ev.spec.rho.eval(self.mu(k))
    }

    /// Marginal density of `X` with derivatives and CDF on a grid.
    pub fn marginal_curve(&self, grid: &Grid) -> Result<DensityCurve> {
        let m: Vec<Moments> = grid.points().par_iter().map(|&x| self.ev.marginal(x)).collect::<Result<_>>()?;
        let col = |k: usize| m.iter().map(|v| v[k]).collect::<Vec<f64>>();
        Ok(DensityCurve { grid: grid.clone(), f: col(0), f1: col(1), f2: col(2), cdf: col(6) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    fn qc() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn zero_tau_reduces_to_truth() {
        let spec = DgpSpec::catalog("gaussian").unwrap().with_tau(0.0);
        let grid = Grid::linspace(-1.0, 2.0, 13).unwrap();
        let cs = population_curves(&spec, &grid, &qc()).unwrap();
        for (i, &x) in grid.points().iter().enumerate() {
            for z in ["0", "1"] {
                assert!((cs.per_z[z].q.g[i] - spec.rho.eval(x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_convolution_scores() {
        let spec = DgpSpec::catalog("gaussian").unwrap().with_tau(0.3);
        let grid = Grid::linspace(-1.0, 2.0, 7).unwrap();
        for rule in [QuadratureRule::GaussHermite, QuadratureRule::AdaptiveSimpson] {
            let cs = population_curves(&spec, &grid, &QuadratureConfig { rule, ..qc() }).unwrap();
            for (i, &x) in grid.points().iter().enumerate() {
                for (z, m) in [("0", 0.0), ("1", 1.0)] {
                    let s = cs.per_z[z].s.s[i];
                    assert!((s + (x - m) / 1.09).abs() < 1e-10, "{rule:?} {x} {z}");
                    assert!((cs.per_z[z].s.s1[i] + 1.0 / 1.09).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn hetero_matches_homoskedastic_when_a_is_zero() {
        let base = DgpSpec::catalog("gaussian").unwrap().with_tau(0.15);
        let het = DgpSpec { sigma: crate::oracle::Sigma::Hetero { a: 0.0 }, ..base.clone() };
        // force the r-domain path by perturbing a by nothing: a = 0 still counts as hetero
        let grid = Grid::linspace(-0.5, 1.5, 5).unwrap();
        let a = population_curves(&base, &grid, &qc()).unwrap();
        let b = population_curves(&het, &grid, &qc()).unwrap();
        for i in 0..grid.len() {
            for z in ["0", "1"] {
                assert!((a.per_z[z].q.g[i] - b.per_z[z].q.g[i]).abs() < 1e-10);
                assert!((a.per_z[z].q.g2[i] - b.per_z[z].q.g2[i]).abs() < 1e-8);
                assert!((a.per_z[z].f.cdf[i] - b.per_z[z].f.cdf[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hetero_chi_square_is_unsupported() {
        let spec = DgpSpec {
            zeta: Zeta::CenteredChiSquare,
            ..DgpSpec::catalog("gaussian-hetero").unwrap()
        };
        let grid = Grid::linspace(0.0, 1.0, 3).unwrap();
        assert!(matches!(population_curves(&spec, &grid, &qc()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closed_form_marginal_cdf() {
        // single-law spec: both instruments N(0,1)
        let spec = DgpSpec::catalog("irrelevant").unwrap();
        let spec = DgpSpec {
            instruments: spec.instruments.iter().map(|i| Instrument { mean: 0.0, ..i.clone() }).collect(),
            ..spec
        };
        let tau = 0.2;
        let d = population_dist(&spec.with_tau(tau), &qc()).unwrap();
        for x in [-1.5, 0.0, 1.0, 2.2] {
            let exact = norm_cdf(x / (1.0 + tau * tau).sqrt());
            assert!((d.cdf_x(x).unwrap() - exact).abs() < 1e-12);
            assert!((d.quantile_x(d.cdf_x(x).unwrap()).unwrap() - x).abs() < 1e-10);
        }
        assert!((d.quantile_xstar(0.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_density_integrates_to_one() {
        let spec = DgpSpec::catalog("asymmetric").unwrap().with_tau(0.4);
        let d = population_dist(&spec, &qc()).unwrap();
        let lo = d.cdf_x(-9.0).unwrap();
        let hi = d.cdf_x(40.0).unwrap();
        assert!(lo < 1e-12 && (hi - 1.0).abs() < 1e-12);
        // the skewed error has a long right tail
        let grid = Grid::linspace(-9.0, 40.0, 9801).unwrap();
        let c = d.marginal_curve(&grid).unwrap();
        let step = grid.points()[1] - grid.points()[0];
        let mass: f64 = c.f.iter().sum::<f64>() * step;
        assert!((mass - 1.0).abs() < 1e-6);
    }
}
