// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: a JSON file, overridden field by field by flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Procedure names accepted on the command line and in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureName {
    Sr,
    SrR,
    Srp,
}

impl FromStr for ProcedureName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sr" => Ok(ProcedureName::Sr),
            "sr_r" | "srr" => Ok(ProcedureName::SrR),
            "srp" => Ok(ProcedureName::Srp),
            other => Err(CliError::Usage(format!(
                "unknown procedure '{other}'; expected one of sr, sr-r, srp"
            ))),
        }
    }
}

/// How SR-r picks its head start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum HeadStartMode {
    Zero,
    /// Mean of the quasi-stationary law at the threshold in use.
    MuA,
    /// Root of `C_r = C_∞`.
    Equalizer,
    Value(f64),
}

impl FromStr for HeadStartMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        match s {
            "zero" => Ok(HeadStartMode::Zero),
            "mu_A" | "mu_a" => Ok(HeadStartMode::MuA),
            "equalizer" => Ok(HeadStartMode::Equalizer),
            _ => {
                let value = s.strip_prefix("value:").ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown head start '{s}'; expected zero, mu_A, equalizer or value:<r>"
                    ))
                })?;
                let r: f64 = value
                    .parse()
                    .map_err(|_| CliError::Usage(format!("head start value '{value}' is not a number")))?;
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(CliError::Usage(format!("head start must be >= 0, got {r}")));
                }
                Ok(HeadStartMode::Value(r))
            }
        }
    }
}

impl fmt::Display for HeadStartMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadStartMode::Zero => write!(f, "zero"),
            HeadStartMode::MuA => write!(f, "mu_A"),
            HeadStartMode::Equalizer => write!(f, "equalizer"),
            HeadStartMode::Value(r) => write!(f, "value:{r}"),
        }
    }
}

impl TryFrom<String> for HeadStartMode {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<HeadStartMode> for String {
    fn from(m: HeadStartMode) -> String {
        m.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Monte Carlo estimators run by `simulate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Arl,
    Add,
    Stadd,
    Martingale,
}

/// Fully resolved configuration, embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    pub model_params: Vec<f64>,
    /// `None` selects every procedure; an explicit empty list is an error.
    pub procedures: Option<Vec<ProcedureName>>,
    /// Target ARLs. Exclusive with `threshold`.
    pub gamma: Vec<f64>,
    pub threshold: Option<f64>,
    pub head_start: HeadStartMode,
    pub grid_n: usize,
    pub nu_max: usize,
    pub runs: u64,
    /// Master seed for `simulate`; required there.
    pub seed: Option<u64>,
    pub step_cap: Option<u64>,
    pub parallel_width: usize,
    /// Changepoint for the conditional-delay estimator.
    pub changepoint: u64,
    /// Changepoint of the multi-cyclic experiment; `None` means 20 × ARL.
    pub stadd_changepoint: Option<u64>,
    pub estimators: Vec<Estimator>,
    pub series_cap: u64,
    pub mc_paths: u64,
    pub constants_seed: u64,
    /// Supplied overshoot constants; both or neither.
    pub zeta: Option<f64>,
    pub varkappa: Option<f64>,
    pub x_max: f64,
    /// Thresholds for the quasi-stationary mean table of `constants`.
    pub mu_thresholds: Vec<f64>,
    /// Output location; not embedded in outputs.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_GAMMAS: [f64; 5] = [50.0, 100.0, 500.0, 1000.0, 10000.0];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: "beta".into(),
            model_params: Vec::new(),
            procedures: None,
            gamma: Vec::new(),
            threshold: None,
            head_start: HeadStartMode::MuA,
            grid_n: srkit::oc::DEFAULT_GRID_N,
            nu_max: srkit::oc::DEFAULT_NU_MAX,
            runs: 100_000,
            seed: None,
            step_cap: None,
            parallel_width: 1,
            changepoint: 0,
            stadd_changepoint: None,
            estimators: vec![Estimator::Arl, Estimator::Add, Estimator::Stadd, Estimator::Martingale],
            series_cap: 10_000,
            mc_paths: 100_000,
            constants_seed: 1,
            zeta: None,
            varkappa: None,
            x_max: srkit::asymptotics::DEFAULT_X_MAX,
            mu_thresholds: vec![10.0, 100.0, 1000.0, 10000.0],
            out: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn procedures(&self) -> Result<Vec<ProcedureName>, CliError> {
        match &self.procedures {
            None => Ok(vec![ProcedureName::Sr, ProcedureName::Srp, ProcedureName::SrR]),
            Some(list) if list.is_empty() => {
                Err(CliError::Usage("procedure list is empty".into()))
            }
            Some(list) => Ok(list.clone()),
        }
    }

    /// Checks ranges shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.gamma.is_empty() && self.threshold.is_some() {
            return Err(CliError::Usage("set either gamma or threshold, not both".into()));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 1.0 && g.is_finite())) {
            return Err(CliError::Usage(format!("gamma must exceed 1, got {g}")));
        }
        if let Some(a) = self.threshold {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::Usage(format!("threshold must be positive, got {a}")));
            }
        }
        if self.grid_n < 8 {
            return Err(CliError::Usage(format!("grid_n must be at least 8, got {}", self.grid_n)));
        }
        if self.nu_max < 1 {
            return Err(CliError::Usage("nu_max must be at least 1".into()));
        }
        if self.parallel_width < 1 {
            return Err(CliError::Usage("parallel_width must be at least 1".into()));
        }
        if self.zeta.is_some() != self.varkappa.is_some() {
            return Err(CliError::Usage("supply both zeta and varkappa, or neither".into()));
        }
        self.procedures()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_start_round_trip() {
        for s in ["zero", "mu_A", "equalizer", "value:2.5"] {
            let m: HeadStartMode = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("value:-1".parse::<HeadStartMode>().is_err());
        assert!("middle".parse::<HeadStartMode>().is_err());
    }

    #[test]
    fn procedure_names() {
        assert_eq!("SR-r".parse::<ProcedureName>().unwrap(), ProcedureName::SrR);
        assert_eq!("srp".parse::<ProcedureName>().unwrap(), ProcedureName::Srp);
        assert!("cusum".parse::<ProcedureName>().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = RunConfig::default();
        c.gamma = vec![100.0];
        c.head_start = HeadStartMode::Value(1.5);
        c.seed = Some(3);
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.procedures = Some(vec![]);
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.gamma = vec![100.0];
        c.threshold = Some(42.0);
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.zeta = Some(0.4);
        assert!(c.validate().is_err());
    }
}
