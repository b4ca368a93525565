//! Monte Carlo and sweep harness for the approximation orders in `τ` and the
//! finite-sample comparison in `n`.

mod mc;
mod slope;
mod sweep;

pub use mc::{run_mc, Estimator, McCell, McConfig, McReport, ESTIMATORS};
pub use slope::{fit_loglog_slope, SlopeFit};
pub use sweep::{n_sweep, population_grid, tau_sweep, Series, SweepAxis, SweepConfig, SweepMode, SweepReport, SweepRow, TauRule};
