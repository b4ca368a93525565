//! Gauss–Hermite and adaptive Simpson quadrature used by the population oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussHermite,
    AdaptiveSimpson,
}

/// Settings for the population oracle integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: QuadratureRule,
    pub nodes: usize,
    pub abs_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::GaussHermite,
            nodes: 128,
            abs_tol: 1e-11,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rule == QuadratureRule::GaussHermite && self.nodes < 64 {
            return Err(Error::InvalidConfig(format!(
                "gauss_hermite needs at least 64 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol <= 1e-8) {
            return Err(Error::InvalidConfig(format!(
                "abs_tol must lie in (0, 1e-8], got {}",
                self.abs_tol
            )));
        }
        Ok(())
    }
}

/// Gauss–Hermite rule normalised as an expectation under N(0, 1):
/// `E[g(W)] ≈ Σ weights[i] · g(nodes[i])`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Hermite needs at least two nodes");
        // Newton iteration on orthonormal physicists' Hermite polynomials.
        let mut z_nodes = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * z_nodes[0],
                3 => 1.91 * z - 0.91 * z_nodes[1],
                _ => 2.0 * z - z_nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            z_nodes[i] = z;
            z_nodes[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let scale = std::f64::consts::SQRT_2;
        let norm = std::f64::consts::PI.sqrt();
        let mut nodes: Vec<f64> = z_nodes.iter().map(|z| z * scale).collect();
        let mut weights: Vec<f64> = w.iter().map(|w| w / norm).collect();
        // ascending order
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// Vector-valued expectation; `g` accumulates `weight * value` into the buffer.
    pub fn expect_into<const K: usize, F: Fn(f64) -> [f64; K]>(&self, g: F) -> [f64; K] {
        let mut acc = [0.0; K];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = g(x);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        acc
    }
}

/// Vector-valued adaptive Simpson rule with Richardson correction.
///
/// The interval is first cut at `breaks` (which must lie inside `[a, b]`) and
/// into `initial_panels` equal pieces, then bisected until the local error
/// estimate drops below `abs_tol` scaled by the panel's share of the interval.
pub fn adaptive_simpson<const K: usize, F: Fn(f64) -> [f64; K]>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    initial_panels: usize,
    abs_tol: f64,
) -> Result<[f64; K]> {
    const MAX_DEPTH: u32 = 40;
    let total = b - a;
    let mut cuts: Vec<f64> = (0..=initial_panels)
        .map(|i| a + total * i as f64 / initial_panels as f64)
        .collect();
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14 * total);

    let mut acc = [0.0; K];
    let mut comp = [0.0; K];
    struct Panel<const K: usize> {
        a: f64,
        b: f64,
        fa: [f64; K],
        fm: [f64; K],
        fb: [f64; K],
        whole: [f64; K],
        depth: u32,
    }
    let simpson = |fa: &[f64; K], fm: &[f64; K], fb: &[f64; K], h: f64| {
        let mut s = [0.0; K];
        for k in 0..K {
            s[k] = h / 6.0 * (fa[k] + 4.0 * fm[k] + fb[k]);
        }
        s
    };
    let mut stack: Vec<Panel<K>> = Vec::new();
    for w in cuts.windows(2).rev() {
        let (pa, pb) = (w[0], w[1]);
        let fa = f(pa);
        let fb = f(pb);
        let fm = f(0.5 * (pa + pb));
        let whole = simpson(&fa, &fm, &fb, pb - pa);
        stack.push(Panel { a: pa, b: pb, fa, fm, fb, whole, depth: 0 });
    }
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let flm = f(0.5 * (p.a + m));
        let frm = f(0.5 * (m + p.b));
        let left = simpson(&p.fa, &flm, &p.fm, m - p.a);
        let right = simpson(&p.fm, &frm, &p.fb, p.b - m);
        let tol = abs_tol * (p.b - p.a) / total;
        let mut err = 0.0f64;
        for k in 0..K {
            err = err.max((left[k] + right[k] - p.whole[k]).abs());
        }
        if err <= 15.0 * tol || p.depth >= MAX_DEPTH {
            if p.depth >= MAX_DEPTH && err > 15.0 * tol {
                return Err(Error::QuadratureNotConverged(format!(
                    "adaptive Simpson stalled on [{}, {}] with error {err:e}",
                    p.a, p.b
                )));
            }
            for k in 0..K {
                let v = left[k] + right[k] + (left[k] + right[k] - p.whole[k]) / 15.0;
                // Kahan summation keeps the many tiny panels from losing digits.
                let y = v - comp[k];
                let t = acc[k] + y;
                comp[k] = (t - acc[k]) - y;
                acc[k] = t;
            }
        } else {
            stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, depth: p.depth + 1 });
            stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, depth: p.depth + 1 });
        }
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureNotConverged("non-finite integral".into()));
    }
    Ok(acc)
}
