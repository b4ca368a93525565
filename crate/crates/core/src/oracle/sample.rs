use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::spec::{DgpSpec, OUTCOME_NOISE_SD};
use crate::error::{Error, Result};

/// Observed triples `(y, x, z)` plus the latent truth kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<String>,
    /// Latent true covariate `X*`.
    pub xstar: Vec<f64>,
    /// `𝒳* = μ⁻¹(X*)` for specs with a non-classical transform.
    pub varkappa: Option<Vec<f64>>,
}

impl Sample {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Draw `n` observations; equivalent to stream 0 of [`sample_stream`].
pub fn sample(spec: &DgpSpec, n: usize, seed: u64) -> Result<Sample> {
    sample_stream(spec, n, seed, 0)
}

/// Draw `n` observations from the ChaCha stream `(seed, stream)`.
///
/// Each observation consumes, in order: a uniform for the instrument, a
/// normal for `X*`, a normal for `ζ` and a normal for the outcome noise.
pub fn sample_stream(spec: &DgpSpec, n: usize, seed: u64, stream: u64) -> Result<Sample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let cum: Vec<f64> = spec
        .instruments
        .iter()
        .scan(0.0, |acc, i| {
            *acc += i.prob;
            Some(*acc)
        })
        .collect();
    let mut out = Sample {
        y: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        xstar: Vec::with_capacity(n),
        varkappa: spec.ncme_mu.map(|_| Vec::with_capacity(n)),
    };
    for _ in 0..n {
        let u: f64 = rng.random();
        let k = cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1);
        let ins = &spec.instruments[k];
        let w_star: f64 = rng.sample(StandardNormal);
        let w_err: f64 = rng.sample(StandardNormal);
        let w_out: f64 = rng.sample(StandardNormal);
        let xs = ins.mean + ins.var.sqrt() * w_star;
        let eps = spec.tau * spec.sigma.eval(xs) * spec.zeta.from_normal(w_err);
        out.y.push(spec.rho.eval(xs) + OUTCOME_NOISE_SD * w_out);
        out.x.push(xs + eps);
        out.z.push(ins.label.clone());
        out.xstar.push(xs);
        if let (Some(mu), Some(vk)) = (spec.ncme_mu, out.varkappa.as_mut()) {
            vk.push(mu.inverse(xs));
        }
    }
    Ok(out)
}
