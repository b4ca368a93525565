//! Batch front end: simulate data, fit corrected curves, evaluate the
//! non-classical estimator and run order-verification sweeps.

mod config;
mod csvio;
mod error;
mod fit;
mod ncme_fit;
mod simulate;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use smeiv::simlab::SweepAxis;

use crate::error::{CliError, CliResult};

const EXIT_CODES: &str = "Exit codes: 0 ok, 1 input error, 2 method failure (rank condition), 3 internal.
Numbers are written in decimal with 12 significant digits. Masked values are empty fields.
EIV_THREADS caps the number of worker threads (default: all cores).";

#[derive(Parser)]
#[command(name = "smeiv", version, about = "Small measurement error corrections for nonparametric regression", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Tau,
    N,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from a data-generating specification.
    #[command(after_help = "Output columns: y,x,z  (with --with-truth: y,x,z,xstar[,varkappa])\n\
        varkappa is present only for specifications with a non-classical map.\n\
        Config keys: spec (catalog id or inline object), tau (optional override).")]
    Simulate {
        /// Catalog id or path to a JSON specification. Overrides the config's spec.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the latent covariate columns.
        #[arg(long)]
        with_truth: bool,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate naive and corrected curves from a y,x,z CSV.
    #[command(after_help = "Input columns (by header name): y,x,z. At least 200 rows.\n\
        Writes <out-dir>/curves.csv with columns\n  \
        x,naive_pooled,naive_z1,naive_z2,rho_tilde,rho_tilde_cme,v_tilde,v_tilde_prime,denom,status\n\
        and <out-dir>/diagnostics.json (config hash, effective config, bandwidths, mask counts).")]
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Estimator settings (JSON). Unknown keys are rejected.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Non-classical error estimator at given latent values or quantile levels.
    #[command(after_help = "Output columns: input,level,estimate,target_x,status\n\
        status is ok, fallback, masked or out_of_range.\n\
        The marginal file holds two columns (varkappa, cdf), strictly increasing, optional header.")]
    NcmeFit {
        #[arg(long)]
        data: PathBuf,
        /// CDF of the latent variable as a two-column table. Requires --kappa.
        #[arg(long, requires = "kappa", conflicts_with = "quantiles")]
        marginal: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        kappa: Vec<f64>,
        /// Quantile levels evaluated without an external marginal.
        #[arg(long, value_delimiter = ',')]
        quantiles: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error curves along a tau or n axis with log-log slopes.
    #[command(after_help = "Writes <out-dir>/sweep.csv with columns axis_value,tau,series,x,error\n\
        and <out-dir>/summary.json with slopes and window checks.\n\
        Config keys: sweep (simulation settings), tau_rule (n axis only).")]
    Sweep {
        #[arg(long, value_enum)]
        mode: Axis,
        /// Catalog id or path to a JSON specification.
        #[arg(long)]
        spec: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Monte Carlo instead of population errors (tau axis).
        #[arg(long)]
        mc: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("EIV_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::input(format!("EIV_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Simulate { spec, config, n, seed, with_truth, out } => {
            simulate::run(config.as_deref(), spec.as_deref(), n, seed, with_truth, out.as_deref())
        }
        Command::Fit { data, config, out_dir } => fit::run(&data, config.as_deref(), &out_dir),
        Command::NcmeFit { data, marginal, kappa, quantiles, config, out } => {
            let request = match &marginal {
                Some(path) => ncme_fit::Request::Marginal { path, kappa: &kappa },
                None if !quantiles.is_empty() => ncme_fit::Request::Quantiles(&quantiles),
                None => return Err(CliError::input("give either --marginal with --kappa, or --quantiles")),
            };
            ncme_fit::run(&data, config.as_deref(), request, out.as_deref())
        }
        Command::Sweep { mode, spec, values, mc, config, out_dir } => {
            let axis = match mode {
                Axis::Tau => SweepAxis::Tau,
                Axis::N => SweepAxis::N,
            };
            sweep::run(axis, &spec, &values, mc, config.as_deref(), &out_dir)
        }
    }
}

fn main() -> ExitCode {
    // usage errors are input errors; clap's own default exit code would read as a method failure
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
