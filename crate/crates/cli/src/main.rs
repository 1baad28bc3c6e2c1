//! `stablegw`: command-line frontend for the conductance, dimension and
//! tree simulations.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::FileConfig;
use output::Format;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "STABLEGW_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_WARNINGS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FAILURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "stablegw", version, about = "Harmonic measure on critical stable Galton-Watson trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: $STABLEGW_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file. For `gamma` this is the pool file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the conductance law and optionally save the pool.
    Gamma(PoolArgs),
    /// Estimate the dimension constant.
    Beta(BetaArgs),
    /// Residuals of the Laplace-transform differential equation.
    Ode(OdeArgs),
    /// C₁ identity, moment identity, κ consistency and C₀.
    Identities(IdentitiesArgs),
    /// Conditioned discrete trees: entropy, conductance moments, level sizes.
    Discrete(DiscreteArgs),
    /// Coupling across α and the conductance-mean scan.
    Couple(CoupleArgs),
    /// Continuous-time tree statistics against closed forms.
    Ctgw(CtgwArgs),
    /// Speed functional and its denominator across α.
    Speed(SpeedArgs),
    /// Run the acceptance battery.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct PoolArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Load a saved pool instead of solving.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Frozen,
    Fresh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BetaMethod {
    Value,
    Formula1,
    Formula2,
    /// The κ-weighted estimator with κ replaced by 1 (a sensitivity guard).
    Unweighted,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct BetaArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub method: BetaMethod,
    /// Composite samples for the ratio estimators.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Composites in the κ table.
    #[arg(long)]
    pub kappa_table: Option<usize>,
    /// Build the κ table from an independently solved pool.
    #[arg(long)]
    pub independent_pool: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OdeArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_delimiter = ',')]
    pub ell: Option<Vec<f64>>,
    /// Also evaluate the all-ones control pool.
    #[arg(long)]
    pub control: bool,
}

#[derive(Args, Debug, Clone)]
pub struct IdentitiesArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Points for the κ consistency check.
    #[arg(long, value_delimiter = ',')]
    pub r_list: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kappa_table: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DiscreteScan {
    /// Entropy of harmonic measure over ln n.
    Dimension,
    /// Scaled conductance moments.
    Moments,
    /// Level sizes against the survival probabilities.
    Levels,
    /// One reduced tree as CSV.
    Dump,
}

#[derive(Args, Debug, Clone)]
pub struct DiscreteArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<u32>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, value_enum, default_value = "dimension")]
    pub scan: DiscreteScan,
    /// Moment exponents for `--scan moments` (default 1 and (α+1)/2).
    #[arg(long, value_delimiter = ',')]
    pub exponents: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Points of the uniform grid for the coupling check.
    #[arg(long, default_value_t = 10_000)]
    pub grid_points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CtgwArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Height of the level.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub u: Option<Vec<f64>>,
    /// Print one tree as CSV instead of statistics.
    #[arg(long)]
    pub dump: bool,
    /// With `--dump`, use the bounded height scale `1 − e^{−z}`.
    #[arg(long)]
    pub delta: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SpeedArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Run the per-α criteria at this α only.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reduced sample sizes.
    #[arg(long)]
    pub quick: bool,
}

/// Thread count from flag, config file, environment, in that order.
fn thread_count(flag: Option<usize>, file: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(n) = flag.or(file) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        _ => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let file = match cli.global.config.as_deref().map(FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match thread_count(cli.global.threads, file.threads) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FAILURE);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    ExitCode::from(commands::run(&cli, &file))
}
