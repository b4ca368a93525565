//! Small measurement error corrections for nonparametric regression with a
//! mismeasured covariate and a discrete instrument.
//!
//! The observed data are triples `(Y, X, Z)` with `X = X* + ε`, `E[ε | X*] = 0`
//! and `ε = τ ξ` for a small scale `τ`. The naive regression `E[Y | X = x]` is
//! biased at order `τ²`. Using two instrument values the crate recovers the
//! conditional variance of the measurement error, `v(x) = V[ε | X* = x]`, and
//! removes the bias up to order `τ⁴` (symmetric errors) or `τ³` (general).
//!
//! Module map:
//!
//! * [`nonparam`]: kernel density and local polynomial estimators with derivatives.
//! * [`oracle`]: synthetic data-generating processes and exact population curves.
//! * [`wcme`]: skedastic recovery `ṽ`, corrected regression `ρ̃` and its variants.
//! * [`ncme`]: corrected CDF / quantile functions and the non-classical estimator.
//! * [`simlab`]: Monte Carlo and τ / n sweep harness.

pub mod error;
pub mod grid;
pub mod interp;
pub mod ncme;
pub mod nonparam;
pub mod numfmt;
pub mod oracle;
pub mod quadrature;
pub mod simlab;
pub mod special;
pub mod wcme;

pub use error::{Error, Result};
pub use grid::Grid;
