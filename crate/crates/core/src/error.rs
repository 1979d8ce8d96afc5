// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The model does not provide what the requested computation needs
    /// (for example a likelihood-ratio density for kernel discretization).
    #[error("unsupported model '{model}': {reason}")]
    UnsupportedModel { model: String, reason: String },

    #[error("ill-conditioned system (estimated spectral radius {spectral_radius:.6}): {reason}")]
    Conditioning { spectral_radius: f64, reason: String },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("head-start design failed: {0}")]
    Design(String),

    /// The truncated domain is too short for the tail of a stationary law.
    #[error("insufficient resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
