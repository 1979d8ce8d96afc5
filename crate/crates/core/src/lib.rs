// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shiryaev-Roberts change detection.
//!
//! The crate implements the Shiryaev-Roberts statistic
//! `R_{n+1} = (1 + R_n) Λ_{n+1}` started from zero (SR), from a fixed head
//! start `r` (SR-r), or from a draw of the quasi-stationary distribution
//! (SRP), and evaluates the three procedures two independent ways:
//!
//! * [`oc`]: exact operating characteristics from integral equations
//!   discretized on a quadrature grid ([`numerics`]);
//! * [`montecarlo`]: direct simulation of the detectors in [`detectors`].
//!
//! [`asymptotics`] holds the large-threshold approximations and the
//! constants they need.

pub mod asymptotics;
pub mod detectors;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod oc;

pub use error::{Error, Result};
pub use model::{ChangepointModel, CustomModel, KlNumber, Regime};

/// Random generator used for every simulation in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;
