use std::path::Path;

use serde::{Deserialize, Serialize};
use smeiv::numfmt::format_sig;
use smeiv::oracle::sample;

use crate::config::{self, SpecRef};
use crate::csvio;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub spec: SpecRef,
    /// Overrides the specification's `tau`.
    #[serde(default)]
    pub tau: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { spec: SpecRef::Catalog("gaussian".into()), tau: None }
    }
}

pub fn run(config: Option<&Path>, spec_arg: Option<&str>, n: usize, seed: u64, with_truth: bool, out: Option<&Path>) -> CliResult<()> {
    let cfg: SimulateConfig = config::load(config)?;
    let mut spec = match spec_arg {
        Some(a) => config::spec_from_arg(a)?,
        None => cfg.spec.resolve()?,
    };
    if let Some(t) = cfg.tau {
        spec = spec.with_tau(t);
        spec.validate()?;
    }
    if n == 0 {
        return Err(CliError::input("n must be at least 1"));
    }
    let s = sample(&spec, n, seed)?;
    let kappa = s.varkappa.as_ref().filter(|_| with_truth);
    let mut text = String::from("y,x,z");
    if with_truth {
        text.push_str(",xstar");
        if kappa.is_some() {
            text.push_str(",varkappa");
        }
    }
    text.push('\n');
    for i in 0..s.n() {
        text.push_str(&format!("{},{},{}", format_sig(s.y[i]), format_sig(s.x[i]), s.z[i]));
        if with_truth {
            text.push_str(&format!(",{}", format_sig(s.xstar[i])));
            if let Some(k) = kappa {
                text.push_str(&format!(",{}", format_sig(k[i])));
            }
        }
        text.push('\n');
    }
    csvio::emit(out, &text)
}
