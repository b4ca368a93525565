//! Skedastic-function recovery and the corrected regression under weakly
//! classical measurement error.

mod corrected;
mod curves;
mod pipeline;
mod skedastic;

pub use corrected::{best_anchor, rho_tilde, rho_tilde_cme, rho_tilde_known_v, CorrectedCurve};
pub use curves::{most_frequent_pair, CurveSet, ZCurves};
pub use pipeline::{fit_curves, BandwidthChoice, EstimatorSettings, GridSettings};
pub use skedastic::{rank_diagnostic, v_tilde, PointStatus, RankReport, SkedasticFit};

/// Default rank threshold for estimated curves, in units of `q'·Δs`.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-3;
/// Rank threshold used on noise-free population curves.
pub const POPULATION_RANK_THRESHOLD: f64 = 1e-6;
