// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo estimators of SR-family operating characteristics.
//!
//! Every run draws from its own generator seeded by `hash(seed, run_index)`,
//! and per-run results are reduced in run order, so estimates are
//! bit-identical for any `parallel_width`.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::Start;
use crate::error::{Error, Result};
use crate::model::{ChangepointModel, Regime};
use crate::SimRng;

/// Censoring fraction at or above which an estimate is flagged.
pub const CENSOR_FLAG_FRACTION: f64 = 1e-3;
/// Acceptance fraction below which conditional-delay estimates warn.
pub const LOW_ACCEPTANCE: f64 = 0.01;
/// Default step cap as a multiple of the threshold.
pub const DEFAULT_CAP_FACTOR: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_runs: u64,
    pub seed: u64,
    /// Maximum steps per run; `None` means `100·A`.
    pub step_cap: Option<u64>,
    pub parallel_width: usize,
}

impl McConfig {
    pub fn new(n_runs: u64, seed: u64) -> Self {
        McConfig {
            n_runs,
            seed,
            step_cap: None,
            parallel_width: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_runs < 2 {
            return Err(Error::Config(format!(
                "n_runs must be at least 2, got {}",
                self.n_runs
            )));
        }
        if self.parallel_width == 0 {
            return Err(Error::Config("parallel_width must be at least 1".into()));
        }
        if self.step_cap == Some(0) {
            return Err(Error::Config("step_cap must be positive".into()));
        }
        Ok(())
    }

    fn cap(&self, threshold: f64) -> u64 {
        self.step_cap
            .unwrap_or_else(|| (DEFAULT_CAP_FACTOR * threshold).ceil().max(1.0) as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Runs contributing to `mean`.
    pub n_runs: u64,
    /// Runs truncated by the step cap (excluded from `mean`).
    pub censored: u64,
    /// Censoring reached [`CENSOR_FLAG_FRACTION`] of all runs.
    pub flagged: bool,
}

impl McEstimate {
    /// Sample mean and standard error of `values`, with `censored` extra
    /// runs that produced no value.
    pub fn from_samples(values: &[f64], censored: u64) -> Self {
        let n = values.len();
        let mean = if n > 0 {
            values.iter().sum::<f64>() / n as f64
        } else {
            f64::NAN
        };
        let std_error = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        let total = n as u64 + censored;
        McEstimate {
            mean,
            std_error,
            n_runs: n as u64,
            censored,
            flagged: total == 0 || censored as f64 >= CENSOR_FLAG_FRACTION * total as f64,
        }
    }

    /// `(mean − reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.std_error
    }
}

/// A conditional-delay estimate with its acceptance fraction `P(T > ν)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AddEstimate {
    pub delay: McEstimate,
    pub acceptance: f64,
    pub warning: Option<String>,
}

/// Paired estimates of `E T` and `E R_T − r` from the same runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub stop_time: McEstimate,
    pub terminal_minus_head_start: McEstimate,
    /// Per-run `T − (R_T − r)`.
    pub difference: McEstimate,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` under master seed `seed`.
pub fn run_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub(crate) fn run_all<T, F>(cfg: &McConfig, run: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    let one = |i: u64| {
        let mut rng = SimRng::seed_from_u64(run_seed(cfg.seed, i));
        run(&mut rng)
    };
    if cfg.parallel_width == 1 {
        return (0..cfg.n_runs).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_width)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..cfg.n_runs).into_par_iter().map(one).collect())
}

fn draw_lr(model: &ChangepointModel, regime: Regime, rng: &mut SimRng) -> Result<f64> {
    model.likelihood_ratio(model.sample(regime, rng))
}

fn initial_statistic(
    start: Start<'_>,
    threshold: f64,
    rng: &mut SimRng,
) -> Result<f64> {
    let r = match start {
        Start::Zero => 0.0,
        Start::HeadStart(r) => r,
        Start::QuasiStationary(q) => {
            if (q.threshold() - threshold).abs() > 1e-12 * threshold {
                return Err(Error::Config(format!(
                    "quasi-stationary law was computed for A = {}, simulation uses A = {threshold}",
                    q.threshold()
                )));
            }
            q.sample(rng)
        }
    };
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::Config(format!(
            "threshold must be positive and finite, got {threshold}"
        )));
    }
    if !(r >= 0.0) || r >= threshold {
        return Err(Error::Config(format!(
            "head start must satisfy 0 <= r < A = {threshold}, got {r}"
        )));
    }
    Ok(r)
}

/// Stop time and terminal statistic, or `None` if censored.
type Run = Option<(u64, f64)>;

/// Runs one detector whose observation `n` is post-change iff `n > change`.
fn single_run(
    model: &ChangepointModel,
    start: Start<'_>,
    threshold: f64,
    change: u64,
    cap: u64,
    rng: &mut SimRng,
) -> Result<(f64, Run)> {
    let r0 = initial_statistic(start, threshold, rng)?;
    let mut stat = r0;
    for n in 1..=cap {
        let regime = if n > change { Regime::Post } else { Regime::Pre };
        stat = (1.0 + stat) * draw_lr(model, regime, rng)?;
        if stat >= threshold {
            return Ok((r0, Some((n, stat))));
        }
    }
    Ok((r0, None))
}

fn collect_times(runs: &[(f64, Run)], offset: u64) -> McEstimate {
    let mut vals = Vec::with_capacity(runs.len());
    let mut censored = 0;
    for (_, run) in runs {
        match run {
            Some((t, _)) => vals.push((t - offset) as f64),
            None => censored += 1,
        }
    }
    McEstimate::from_samples(&vals, censored)
}

/// Average run length to false alarm under pure pre-change data.
pub fn estimate_arl(
    model: &ChangepointModel,
    start: Start<'_>,
    threshold: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let cap = cfg.cap(threshold);
    let runs = run_all(cfg, |rng| single_run(model, start, threshold, u64::MAX, cap, rng))?;
    Ok(collect_times(&runs, 0))
}

/// Largest changepoint accepted by [`estimate_add`] at threshold `A`:
/// `⌈5 log A⌉`, at least 1.
pub fn max_direct_changepoint(threshold: f64) -> u64 {
    (5.0 * threshold.max(1.0).ln()).ceil().max(1.0) as u64
}

/// Conditional delay `E_ν(T − ν | T > ν)` by rejection.
pub fn estimate_add(
    model: &ChangepointModel,
    start: Start<'_>,
    threshold: f64,
    changepoint: u64,
    cfg: &McConfig,
) -> Result<AddEstimate> {
    let limit = max_direct_changepoint(threshold);
    if changepoint > limit {
        return Err(Error::Config(format!(
            "changepoint {changepoint} exceeds the direct-simulation limit {limit} at A = {threshold}; use the solver for late changes"
        )));
    }
    let cap = changepoint + cfg.cap(threshold);
    let runs = run_all(cfg, |rng| single_run(model, start, threshold, changepoint, cap, rng))?;
    let mut vals = Vec::with_capacity(runs.len());
    let mut censored = 0;
    let mut rejected = 0u64;
    for (_, run) in &runs {
        match run {
            Some((t, _)) if *t <= changepoint => rejected += 1,
            Some((t, _)) => vals.push((t - changepoint) as f64),
            None => censored += 1,
        }
    }
    let acceptance = 1.0 - rejected as f64 / cfg.n_runs as f64;
    let warning = (acceptance < LOW_ACCEPTANCE).then(|| {
        format!("acceptance fraction {acceptance:.3e} below {LOW_ACCEPTANCE}; estimate is inefficient")
    });
    Ok(AddEstimate {
        delay: McEstimate::from_samples(&vals, censored),
        acceptance,
        warning,
    })
}

/// Stationary delay of the multi-cyclic SR procedure: restart from zero
/// after each false alarm, record the first alarm after `far_changepoint`.
pub fn estimate_stadd(
    model: &ChangepointModel,
    threshold: f64,
    far_changepoint: u64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    initial_statistic(Start::Zero, threshold, &mut SimRng::seed_from_u64(0))?;
    let cap = far_changepoint + cfg.cap(threshold);
    let runs = run_all(cfg, |rng| -> Result<Option<u64>> {
        let mut stat = 0.0;
        for n in 1..=cap {
            let regime = if n > far_changepoint { Regime::Post } else { Regime::Pre };
            stat = (1.0 + stat) * draw_lr(model, regime, rng)?;
            if stat >= threshold {
                if n > far_changepoint {
                    return Ok(Some(n - far_changepoint));
                }
                stat = 0.0;
            }
        }
        Ok(None)
    })?;
    let vals: Vec<f64> = runs.iter().flatten().map(|&d| d as f64).collect();
    let censored = runs.iter().filter(|r| r.is_none()).count() as u64;
    Ok(McEstimate::from_samples(&vals, censored))
}

/// Paired check of `E_∞ T = E_∞ R_T − r` for SR-r.
pub fn verify_martingale(
    model: &ChangepointModel,
    threshold: f64,
    head_start: f64,
    cfg: &McConfig,
) -> Result<MartingaleCheck> {
    let cap = cfg.cap(threshold);
    let runs = run_all(cfg, |rng| {
        single_run(model, Start::HeadStart(head_start), threshold, u64::MAX, cap, rng)
    })?;
    let mut times = Vec::with_capacity(runs.len());
    let mut terminal = Vec::with_capacity(runs.len());
    let mut diff = Vec::with_capacity(runs.len());
    let mut censored = 0;
    for (r0, run) in &runs {
        match run {
            Some((t, rt)) => {
                times.push(*t as f64);
                terminal.push(rt - r0);
                diff.push(*t as f64 - (rt - r0));
            }
            None => censored += 1,
        }
    }
    Ok(MartingaleCheck {
        stop_time: McEstimate::from_samples(&times, censored),
        terminal_minus_head_start: McEstimate::from_samples(&terminal, censored),
        difference: McEstimate::from_samples(&diff, censored),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, seed: u64) -> McConfig {
        McConfig::new(n, seed)
    }

    #[test]
    fn run_seeds_differ_and_are_stable() {
        assert_eq!(run_seed(7, 3), run_seed(7, 3));
        assert_ne!(run_seed(7, 3), run_seed(7, 4));
        assert_ne!(run_seed(7, 3), run_seed(8, 3));
    }

    #[test]
    fn estimate_from_samples() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(!e.flagged);
        assert!(McEstimate::from_samples(&[1.0, 2.0], 1).flagged);
    }

    #[test]
    fn reproducible_and_width_independent() {
        let m = ChangepointModel::Beta;
        let a = estimate_arl(&m, Start::Zero, 20.0, &cfg(2000, 11)).unwrap();
        let b = estimate_arl(&m, Start::Zero, 20.0, &cfg(2000, 11)).unwrap();
        let mut wide = cfg(2000, 11);
        wide.parallel_width = 3;
        let c = estimate_arl(&m, Start::Zero, 20.0, &wide).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = estimate_arl(&m, Start::Zero, 20.0, &cfg(2000, 12)).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn zero_head_start_equals_sr() {
        let m = ChangepointModel::Beta;
        let c = cfg(1000, 5);
        let a = estimate_arl(&m, Start::Zero, 30.0, &c).unwrap();
        let b = estimate_arl(&m, Start::HeadStart(0.0), 30.0, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_change_before_first_observation_accepts_everything() {
        let m = ChangepointModel::Beta;
        let e = estimate_add(&m, Start::HeadStart(2.0), 30.0, 0, &cfg(1000, 1)).unwrap();
        assert_eq!(e.acceptance, 1.0);
        assert!(e.warning.is_none());
        assert_eq!(e.delay.n_runs, 1000);
    }

    #[test]
    fn stadd_without_prechange_cycles_equals_add_at_zero() {
        let m = ChangepointModel::Beta;
        let c = cfg(1000, 9);
        let s = estimate_stadd(&m, 42.0, 0, &c).unwrap();
        let d = estimate_add(&m, Start::Zero, 42.0, 0, &c).unwrap();
        assert_eq!(s, d.delay);
    }

    #[test]
    fn late_changepoint_rejected() {
        let m = ChangepointModel::Beta;
        let lim = max_direct_changepoint(42.0);
        assert_eq!(lim, 19);
        assert!(matches!(
            estimate_add(&m, Start::Zero, 42.0, lim + 1, &cfg(10, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn tiny_cap_flags_censoring() {
        let m = ChangepointModel::Beta;
        let mut c = cfg(500, 3);
        c.step_cap = Some(2);
        let e = estimate_arl(&m, Start::Zero, 42.0, &c).unwrap();
        assert!(e.censored > 0);
        assert!(e.flagged);
        assert_eq!(e.n_runs + e.censored, 500);
    }

    #[test]
    fn invalid_config_and_head_start() {
        let m = ChangepointModel::Beta;
        assert!(estimate_arl(&m, Start::Zero, 10.0, &cfg(1, 0)).is_err());
        assert!(estimate_arl(&m, Start::HeadStart(10.0), 10.0, &cfg(10, 0)).is_err());
        let mut c = cfg(10, 0);
        c.parallel_width = 0;
        assert!(estimate_arl(&m, Start::Zero, 10.0, &c).is_err());
    }

    #[test]
    fn paired_difference_is_per_run() {
        let m = ChangepointModel::Beta;
        let chk = verify_martingale(&m, 21.0, 0.0, &cfg(10_000, 21)).unwrap();
        let gap = chk.stop_time.mean - chk.terminal_minus_head_start.mean;
        assert!((chk.difference.mean - gap).abs() < 1e-9);
        assert_eq!(chk.difference.n_runs, 10_000);
        assert!(chk.difference.z_score(0.0).abs() < 4.0);
    }
}
