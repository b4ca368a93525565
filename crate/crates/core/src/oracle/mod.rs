//! Synthetic data-generating processes and their exact population quantities.

mod population;
mod sample;
mod spec;
mod truth;

pub use population::{population_curves, population_dist, PopulationDist, POPULATION_DENSITY_FLOOR};
pub use sample::{sample, sample_stream, Sample};
pub use spec::{DgpSpec, Instrument, Mu, Rho, Sigma, Zeta, CATALOG_IDS, OUTCOME_NOISE_SD};
pub use truth::{predicted_naive_bias, true_v, PredictedBias};
