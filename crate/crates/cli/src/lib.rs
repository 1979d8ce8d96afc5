// SPDX-License-Identifier: MIT OR Apache-2.0

//! Batch front end for the `srkit` library.

pub mod commands;
pub mod config;
pub mod output;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Estimator, Format, HeadStartMode, ProcedureName, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for numerical failures, 2 for usage errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<srkit::error::Error> for CliError {
    fn from(e: srkit::error::Error) -> Self {
        use srkit::error::Error;
        match e {
            Error::Config(_) | Error::UnsupportedModel { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "srkit", version, about = "Shiryaev-Roberts detection procedures: operating characteristics, calibration and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Find the threshold that gives each target ARL.
    Calibrate,
    /// Conditional delay curves and summaries.
    Oc,
    /// Operating characteristics for a list of target ARLs.
    Table,
    /// Asymptotic constants and stationary-law summaries.
    Constants,
    /// Monte Carlo estimates with solver cross-checks.
    Simulate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Oc => "oc",
            Command::Table => "table",
            Command::Constants => "constants",
            Command::Simulate => "simulate",
        }
    }
}

/// Flags override the corresponding fields of the config file.
#[derive(Debug, Default, clap::Args)]
pub struct Flags {
    /// JSON config file, or a JSON output whose embedded config to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// beta, gaussian or exponential.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Model parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub model_param: Option<Vec<f64>>,
    /// Target ARLs, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Procedures, comma separated: sr, sr-r, srp.
    #[arg(long, global = true)]
    pub procedure: Option<String>,
    /// zero, mu_A, equalizer or value:<r>.
    #[arg(long, global = true)]
    pub head_start: Option<String>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub nu_max: Option<usize>,
    #[arg(long, global = true)]
    pub runs: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub step_cap: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub changepoint: Option<u64>,
    #[arg(long, global = true)]
    pub stadd_changepoint: Option<u64>,
    /// arl, add, stadd, martingale; comma separated.
    #[arg(long, global = true)]
    pub estimators: Option<String>,
    #[arg(long, global = true)]
    pub series_cap: Option<u64>,
    #[arg(long, global = true)]
    pub mc_paths: Option<u64>,
    #[arg(long, global = true)]
    pub constants_seed: Option<u64>,
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    #[arg(long, global = true)]
    pub varkappa: Option<f64>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

fn split_list<T: std::str::FromStr<Err = CliError>>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

impl std::str::FromStr for Estimator {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "arl" => Ok(Estimator::Arl),
            "add" => Ok(Estimator::Add),
            "stadd" => Ok(Estimator::Stadd),
            "martingale" => Ok(Estimator::Martingale),
            other => Err(CliError::Usage(format!(
                "unknown estimator '{other}'; expected arl, add, stadd or martingale"
            ))),
        }
    }
}

/// Loads the config file, if any, and applies flag overrides.
pub fn resolve_config(flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &flags.model {
        cfg.model = m.clone();
    }
    if let Some(p) = &flags.model_param {
        cfg.model_params = p.clone();
    }
    if let Some(g) = &flags.gamma {
        cfg.gamma = g.clone();
        cfg.threshold = None;
    }
    if let Some(a) = flags.threshold {
        if flags.gamma.is_none() {
            cfg.gamma.clear();
        }
        cfg.threshold = Some(a);
    }
    if let Some(p) = &flags.procedure {
        cfg.procedures = Some(split_list::<ProcedureName>(p)?);
    }
    if let Some(h) = &flags.head_start {
        cfg.head_start = h.parse::<HeadStartMode>()?;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = flags.$flag { cfg.$field = v; })*
        };
    }
    set!(grid_n => grid_n, nu_max => nu_max, runs => runs, jobs => parallel_width,
         changepoint => changepoint, series_cap => series_cap, mc_paths => mc_paths,
         constants_seed => constants_seed, format => format);
    macro_rules! set_opt {
        ($($flag:ident),*) => {
            $(if let Some(v) = flags.$flag { cfg.$flag = Some(v); })*
        };
    }
    set_opt!(seed, step_cap, stadd_changepoint, zeta, varkappa);
    if let Some(e) = &flags.estimators {
        cfg.estimators = split_list::<Estimator>(e)?;
    }
    if let Some(o) = &flags.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    let inner = match value.get(output::VERSION_KEY) {
        Some(_) => value.get("config").cloned().unwrap_or(serde_json::Value::Null),
        None => value,
    };
    serde_json::from_value(inner)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.flags)?;
    cfg.validate()?;
    let report = commands::dispatch(cli.command, &cfg)?;
    output::emit(&report, &cfg)
}
