// SPDX-License-Identifier: MIT OR Apache-2.0

//! Streaming Shiryaev-Roberts detectors.
//!
//! All three procedures share the recursion `R_{n+1} = (1 + R_n) Λ_{n+1}`
//! and stop at the first `n ≥ 1` with `R_n ≥ A`. They differ only in `R_0`:
//! zero (SR), a fixed head start `r` (SR-r), or a draw from the
//! quasi-stationary distribution (SRP).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ChangepointModel;
use crate::oc::QuasiStationary;
use crate::SimRng;

/// One step of the SR recursion: `(1 + statistic) · lambda`.
pub fn sr_step(statistic: f64, lambda: f64) -> Result<f64> {
    if !(statistic >= 0.0) || !(lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "SR step needs nonnegative inputs, got R = {statistic}, lambda = {lambda}"
        )));
    }
    Ok((1.0 + statistic) * lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorState {
    /// `R_0`: `r` for SR-r, the sampled value for SRP, 0 for SR.
    pub head_start: f64,
    /// `R_n`.
    pub statistic: f64,
    /// `n`.
    pub step: u64,
    /// `A`.
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StoppingRecord {
    pub stop_time: u64,
    pub final_statistic: f64,
    /// `log R_T − log A`.
    pub overshoot_log: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Continue,
    Stop(StoppingRecord),
}

/// How `R_0` is chosen.
#[derive(Clone, Copy, Debug)]
pub enum Start<'a> {
    Zero,
    HeadStart(f64),
    QuasiStationary(&'a QuasiStationary),
}

/// A push-based SR-family detector: feed observations, get continue/stop.
#[derive(Clone, Debug)]
pub struct Detector {
    model: ChangepointModel,
    state: DetectorState,
    stopped: Option<StoppingRecord>,
}

impl Detector {
    /// A detector with `R_0 = head_start`; requires `0 ≤ head_start < threshold`.
    pub fn new(model: &ChangepointModel, threshold: f64, head_start: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must be positive and finite, got {threshold}"
            )));
        }
        if !(head_start >= 0.0) || head_start >= threshold {
            return Err(Error::Config(format!(
                "head start must satisfy 0 <= r < A = {threshold}, got {head_start}"
            )));
        }
        Ok(Detector {
            model: model.clone(),
            state: DetectorState {
                head_start,
                statistic: head_start,
                step: 0,
                threshold,
            },
            stopped: None,
        })
    }

    /// Resolves `start` (drawing `R_0` from `rng` for SRP) and builds the
    /// detector.
    pub fn with_start(
        model: &ChangepointModel,
        threshold: f64,
        start: Start<'_>,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let head_start = match start {
            Start::Zero => 0.0,
            Start::HeadStart(r) => r,
            Start::QuasiStationary(q) => {
                let rel = (q.threshold() - threshold).abs() / threshold;
                if rel > 1e-12 {
                    return Err(Error::Config(format!(
                        "quasi-stationary law was computed for A = {}, detector uses A = {threshold}",
                        q.threshold()
                    )));
                }
                q.sample(rng)
            }
        };
        Self::new(model, threshold, head_start)
    }

    pub fn state(&self) -> DetectorState {
        self.state
    }

    pub fn stopped(&self) -> Option<StoppingRecord> {
        self.stopped
    }

    /// Feeds one observation.
    pub fn observe(&mut self, x: f64) -> Result<Step> {
        let lambda = self.model.likelihood_ratio(x)?;
        Ok(self.observe_lr(lambda))
    }

    /// Feeds one likelihood ratio directly. After a stop, further input is
    /// ignored and the stop is reported again.
    pub fn observe_lr(&mut self, lambda: f64) -> Step {
        if let Some(rec) = self.stopped {
            return Step::Stop(rec);
        }
        self.state.statistic = (1.0 + self.state.statistic) * lambda;
        self.state.step += 1;
        if self.state.statistic >= self.state.threshold {
            let rec = StoppingRecord {
                stop_time: self.state.step,
                final_statistic: self.state.statistic,
                overshoot_log: self.state.statistic.ln() - self.state.threshold.ln(),
            };
            self.stopped = Some(rec);
            Step::Stop(rec)
        } else {
            Step::Continue
        }
    }
}

/// Outcome of [`run_detector`] on a finite stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunOutcome {
    Stopped(StoppingRecord),
    /// The stream ended first; `steps` observations were consumed.
    Exhausted { steps: u64 },
}

/// Runs a detector over `stream` until it stops or the stream ends.
pub fn run_detector(
    model: &ChangepointModel,
    start: Start<'_>,
    threshold: f64,
    stream: impl IntoIterator<Item = f64>,
    rng: &mut SimRng,
) -> Result<RunOutcome> {
    let mut det = Detector::with_start(model, threshold, start, rng)?;
    for x in stream {
        if let Step::Stop(rec) = det.observe(x)? {
            return Ok(RunOutcome::Stopped(rec));
        }
    }
    Ok(RunOutcome::Exhausted {
        steps: det.state().step,
    })
}
