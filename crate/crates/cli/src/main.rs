//! `episim`: data analysis, forecasting, calibration and projection for the
//! agent-based epidemic model.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use episim_core::Indicator;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "episim",
    version,
    about = "Agent-based epidemic modelling pipeline"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Region configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Caps the worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Sarima,
    Hw,
    Linreg,
    Auto,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seasonality, autocorrelation, trend and stationarity diagnostics.
    Analyze {
        #[arg(long, default_value = "new_tests")]
        indicator: Indicator,
        #[arg(long, default_value_t = 28)]
        max_lag: usize,
        /// Rolling correlation window against new diagnoses.
        #[arg(long, default_value_t = 28)]
        window: usize,
        /// Trend smoothness of the Hodrick-Prescott filter.
        #[arg(long, default_value_t = episim_core::data::DEFAULT_HP_LAMBDA)]
        lambda: f64,
    },
    /// Forecasts one indicator.
    Forecast {
        #[arg(long, default_value = "new_tests")]
        indicator: Indicator,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = ModelChoice::Auto)]
        model: ModelChoice,
    },
    /// Runs the model over the dataset's testing history.
    Simulate {
        /// Disease parameters file, e.g. from `calibrate`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Days to simulate; defaults to the dataset length.
        #[arg(long)]
        days: Option<usize>,
        /// Ensemble size.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Fits the model window by window.
    Calibrate {
        /// Days per calibration window.
        #[arg(long)]
        window_length: Option<usize>,
        /// Objective evaluations per window.
        #[arg(long)]
        trials: Option<usize>,
        /// Simulations averaged per evaluation.
        #[arg(long)]
        ensemble_size: Option<usize>,
        /// Objective evaluations in flight at once.
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Simulates history plus a forecast horizon and summarises the ensemble.
    Project {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Forecast days after the last observation.
        #[arg(long)]
        horizon: Option<usize>,
        /// Ensemble size.
        #[arg(long)]
        runs: Option<usize>,
        /// Transmission multiplier applied from the first forecast day.
        #[arg(long)]
        beta_multiplier: Option<f64>,
    },
    /// Checks a config and prints it with every default filled in.
    ValidateConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

impl Cli {
    fn config_path(&self) -> Result<&PathBuf, CliError> {
        self.common
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("--config is required".into()))
    }
}
