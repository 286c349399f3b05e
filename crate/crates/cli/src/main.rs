use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 2).
    Config(String),
    /// Failure while running (exit 1).
    Runtime(String),
    /// The wall-clock cap stopped a run; artifacts were written (exit 3).
    WallTime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::WallTime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::WallTime(m) => write!(f, "wall-time cap reached: {m}"),
        }
    }
}

impl From<vdbf::Error> for CliError {
    fn from(e: vdbf::Error) -> Self {
        match e {
            vdbf::Error::InvalidConfig(_)
            | vdbf::Error::InvalidModel(_)
            | vdbf::Error::InvalidLattice(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vdbf",
    version,
    about = "Variational double bracket flow on Pauli-string Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and extrapolate its energy to zero variance.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one flow per threshold and extrapolate to zero discarded weight.
    Sweep {
        config: PathBuf,
        /// Thresholds, comma separated; defaults to the config's [sweep] block.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Integrate the continuous flow for several projector orders.
    Flow {
        config: PathBuf,
        /// Projector orders, comma separated; defaults to the config's [flow] block.
        #[arg(long = "k", value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long)]
        ds: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Energy error used for the steps-to-threshold report.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Connected spin-spin correlations in a finished run's state.
    Correlate {
        run_dir: PathBuf,
        /// 1-based site pairs such as `1-2,1-3`.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        /// Pair this 1-based site with every other site.
        #[arg(long)]
        from: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        obs_clip: f64,
    },
    /// Re-fit a finished run's iterations with different window rules.
    Extrapolate {
        run_dir: PathBuf,
        #[arg(long)]
        min_window: Option<usize>,
        #[arg(long)]
        literal_r_squared: bool,
        #[arg(long)]
        per_site_score: bool,
        /// Fit raw instead of corrected energies and variances.
        #[arg(long)]
        raw: bool,
        /// Also write the report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Command-line values that replace config-file entries.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub n_rots: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub conv_thresh: Option<f64>,
    #[arg(long)]
    pub gen_clip: Option<f64>,
    #[arg(long)]
    pub no_track_variance: bool,
    #[arg(long)]
    pub variance_stride: Option<usize>,
    /// Seconds.
    #[arg(long)]
    pub max_wall_time: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => commands::run(&config, &overrides),
        Command::Sweep {
            config,
            epsilons,
            overrides,
        } => commands::sweep(&config, &epsilons, &overrides),
        Command::Flow {
            config,
            k,
            ds,
            steps,
            threshold,
            output_dir,
        } => commands::flow(&config, &k, ds, steps, threshold, output_dir),
        Command::Correlate {
            run_dir,
            pairs,
            from,
            obs_clip,
        } => commands::correlate(&run_dir, &pairs, from, obs_clip),
        Command::Extrapolate {
            run_dir,
            min_window,
            literal_r_squared,
            per_site_score,
            raw,
            output,
        } => commands::extrapolate(
            &run_dir,
            min_window,
            literal_r_squared,
            per_site_score,
            raw,
            output,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
