//! Kernel density and local polynomial estimators with derivatives, score
//! functions and bandwidth selection.

pub mod bandwidth;
pub mod kde;
pub mod kernel;
pub mod locpoly;
pub mod score;

pub use bandwidth::{robust_scale, rule_of_thumb, select_bandwidth, BandwidthMethod, Purpose};
pub use kde::{kde, DensityCurve};
pub use kernel::{KernelFamily, KernelSpec, DEFAULT_DERIVATIVE_INFLATION};
pub use locpoly::{local_poly_fit, RegCurve};
pub use score::{default_floor, score_from_density, ScoreCurve};
