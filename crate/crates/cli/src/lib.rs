//! `mgstd` command line: simulate, select parameters, decompose, build the
//! averaged vector field.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mgstd_core::{ArrowSet, Error, Interpolation};

pub use config::{MuStar, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 usage, 3 data, 4 numeric or selection failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::InvalidParameter(_)) => 2,
            CliError::Core(
                Error::Parse { .. }
                | Error::OutOfDomain { .. }
                | Error::ZeroVariance { .. }
                | Error::DegenerateCovariance { .. }
                | Error::Empty(_)
                | Error::Io(_)
                | Error::Json(_),
            ) => 3,
            CliError::Core(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mgstd", version, about = "Morse graphs and MGSTD vector fields from time series")]
pub struct Cli {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark dataset from a builtin SDE
    Simulate(SourceArgs),
    /// Threshold curve, selected threshold and grid-size coverage report
    Select(SelectArgs),
    /// Morse graph for one parameter set (DOT and JSON)
    Morse(MorseArgs),
    /// Shift-averaged vector field (TSV)
    Vectorfield(FieldArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Dataset file (CSV, or raw f64 rows with a JSON sidecar)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Builtin model: dw1d or saddle2d
    #[arg(long)]
    pub model: Option<String>,
    /// Experiment preset: D1 or D2
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the preset's number of simulated series
    #[arg(long)]
    pub n_series: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Grid shift, one value per axis
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ThresholdArgs {
    /// Transition threshold, or "auto"
    #[arg(long)]
    pub mu_star: Option<MuStar>,
    /// Size ratio bound A for automatic selection
    #[arg(long = "ratio-bound", visible_alias = "a")]
    pub ratio_bound: Option<f64>,
    /// Largest threshold tried by automatic selection
    #[arg(long)]
    pub mu_max: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long = "ratio-bound", visible_alias = "a")]
    pub ratio_bound: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<u64>,
    /// Average the selected threshold over the grid-shift sweep
    #[arg(long)]
    pub sweep_delta: bool,
    #[arg(long)]
    pub shift_increment: Option<f64>,
    /// Candidate grid sizes for the coverage report
    #[arg(long, value_delimiter = ',')]
    pub h_candidates: Option<Vec<f64>>,
    /// Occupancy band for the coverage mean
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [10u64, 20])]
    pub band: Vec<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MorseArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[arg(long)]
    pub shift_increment: Option<f64>,
    #[arg(long, value_parser = parse_interp)]
    pub interp: Option<Interpolation>,
    #[arg(long, value_parser = parse_arrows)]
    pub arrows: Option<ArrowSet>,
}

fn parse_interp(s: &str) -> Result<Interpolation, String> {
    match s {
        "source-major" => Ok(Interpolation::SourceMajor),
        "target-major" => Ok(Interpolation::TargetMajor),
        _ => Err(format!("expected source-major or target-major, got {s:?}")),
    }
}

fn parse_arrows(s: &str) -> Result<ArrowSet, String> {
    match s {
        "reduced" => Ok(ArrowSet::Reduced),
        "full-order" => Ok(ArrowSet::FullOrder),
        _ => Err(format!("expected reduced or full-order, got {s:?}")),
    }
}

/// What a command wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Cli {
    fn flag_config(&self) -> RunConfig {
        let mut c = RunConfig {
            out: self.out.clone(),
            jobs: self.jobs,
            seed: self.seed,
            ..Default::default()
        };
        let source = |c: &mut RunConfig, s: &SourceArgs| {
            c.input = s.input.clone();
            c.model = s.model.clone();
            c.preset = s.preset.clone();
            c.n_series = s.n_series;
        };
        let grid = |c: &mut RunConfig, g: &GridArgs| {
            c.h = g.h;
            c.rho = g.rho;
            c.delta = g.delta.clone();
        };
        match &self.command {
            Command::Simulate(s) => source(&mut c, s),
            Command::Select(a) => {
                source(&mut c, &a.source);
                grid(&mut c, &a.grid);
                c.ratio_bound = a.ratio_bound;
                c.mu_max = a.mu_max;
                c.sweep_increment = match (a.sweep_delta, a.shift_increment) {
                    (_, Some(inc)) => Some(inc),
                    (true, None) => Some(config::DEFAULT_SHIFT_INCREMENT),
                    (false, None) => None,
                };
            }
            Command::Morse(a) => {
                source(&mut c, &a.source);
                grid(&mut c, &a.grid);
                c.mu_star = a.threshold.mu_star;
                c.ratio_bound = a.threshold.ratio_bound;
                c.mu_max = a.threshold.mu_max;
            }
            Command::Vectorfield(a) => {
                source(&mut c, &a.source);
                c.h = a.h;
                c.rho = a.rho;
                c.mu_star = a.threshold.mu_star;
                c.ratio_bound = a.threshold.ratio_bound;
                c.mu_max = a.threshold.mu_max;
                c.sweep_increment = a.shift_increment;
                c.interp = a.interp;
                c.arrows = a.arrows;
            }
        }
        c
    }

    /// Config file overlaid with flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let cfg = base.overlay(self.flag_config());
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = cli.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {:?} workers: {e}", cfg.jobs)))?;
    pool.install(|| match &cli.command {
        Command::Simulate(_) => commands::cmd_simulate(&cfg),
        Command::Select(a) => commands::cmd_select(&cfg, a.h_candidates.as_deref(), (a.band[0], a.band[1])),
        Command::Morse(_) => commands::cmd_morse(&cfg),
        Command::Vectorfield(_) => commands::cmd_vectorfield(&cfg),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli)
}
