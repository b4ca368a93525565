use std::collections::BTreeMap;

use serde::Serialize;

use super::spec::DgpSpec;
use crate::grid::Grid;

/// `(v(x), v'(x))` with `v(x) = τ²σ(x)²`, the conditional variance of `ε` given `X* = x`.
pub fn true_v(spec: &DgpSpec, x: f64) -> (f64, f64) {
    let [s, s1] = spec.sigma.derivs(x);
    let t2 = spec.tau * spec.tau;
    (t2 * s * s, t2 * 2.0 * s * s1)
}

/// Second-order bias `v(ρ's + ½ρ'') + ρ'v'` of the naive regressions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedBias {
    pub grid: Grid,
    /// Bias of `q(·, z)`, using `s_{X*|Z}`.
    pub per_z: BTreeMap<String, Vec<f64>>,
    /// Bias of the pooled `q(·)`, using the marginal score `s_{X*}`.
    pub pooled: Vec<f64>,
}

fn bias(spec: &DgpSpec, x: f64, score: f64) -> f64 {
    let r = spec.rho.derivs(x);
    let (v, v1) = true_v(spec, x);
    v * (r[1] * score + 0.5 * r[2]) + r[1] * v1
}

pub fn predicted_naive_bias(spec: &DgpSpec, grid: &Grid) -> PredictedBias {
    let per_z = spec
        .instruments
        .iter()
        .map(|ins| {
            let b = grid.points().iter().map(|&x| bias(spec, x, -(x - ins.mean) / ins.var)).collect();
            (ins.label.clone(), b)
        })
        .collect();
    let pooled = grid.points().iter().map(|&x| bias(spec, x, spec.xstar_score(x))).collect();
    PredictedBias { grid: grid.clone(), per_z, pooled }
}
