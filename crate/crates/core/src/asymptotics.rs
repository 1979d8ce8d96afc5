// SPDX-License-Identifier: MIT OR Apache-2.0

//! Large-threshold approximations and the constants they depend on.
//!
//! * `ζ` (limiting `E e^{-overshoot}`) and `ϰ` (limiting expected overshoot)
//!   of the log-likelihood random walk `S_k`, from their series
//!   representations with Monte Carlo terms;
//! * the limit laws of `R_n` under `P_∞` and of
//!   `V_n = (1 + V_{n-1}) / Λ_n` under `P_0`, as unit-eigenvalue
//!   eigen-measures on `[0, x_max]` with a `1/x` tail beyond;
//! * `C_r = E log(1 + r + V_∞)` and `C_∞ = E log(1 + R_∞ + V_∞)`;
//! * `E_∞T ≈ A/ζ − r` and `SADD ≈ (log A + ϰ − C)/I`;
//! * the two head-start rules (quasi-stationary mean, `C_r = C_∞`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChangepointModel, Regime};
use crate::montecarlo::{run_all, run_seed, McConfig};
use crate::numerics::roots::bisect;
use crate::numerics::{DiscretizedOperator, Grid};
use crate::oc::ThresholdAnalysis;
use crate::SimRng;

/// Once a walk is this far on the far side of zero, the remaining series
/// terms are below `e^{-40}` and the path is stopped.
pub const NEGLIGIBLE_LEVEL: f64 = 40.0;
/// Default right end of the stationary-law grid.
pub const DEFAULT_X_MAX: f64 = 1e6;
/// Tail mass beyond `x_max` above which the laws are rejected.
pub const MAX_TAIL_MASS: f64 = 0.05;
const EIGEN_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    SeriesMc,
    Quadrature,
    MonteCarlo,
    Supplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub provenance: Provenance,
}

impl Estimate {
    fn exact(value: f64, provenance: Provenance) -> Self {
        Estimate {
            value,
            std_error: None,
            provenance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvershootConfig {
    /// Maximum number of series terms per path.
    pub series_cap: u64,
    /// Paths per regime.
    pub mc_paths: u64,
    pub seed: u64,
    pub parallel_width: usize,
}

impl OvershootConfig {
    pub fn new(series_cap: u64, mc_paths: u64, seed: u64) -> Self {
        OvershootConfig {
            series_cap,
            mc_paths,
            seed,
            parallel_width: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvershootConstants {
    pub zeta: Estimate,
    pub varkappa: Estimate,
    /// Paths that reached `series_cap` before leaving the relevant region.
    pub capped_paths: u64,
    /// Longest path, in steps.
    pub longest_path: u64,
}

struct PostPath {
    below_zero: f64,
    negative_part: f64,
    first_step: f64,
    steps: u64,
    capped: bool,
}

struct PrePath {
    above_zero: f64,
    steps: u64,
    capped: bool,
}

/// `ζ = exp{−Σ_k [P_0(S_k ≤ 0) + P_∞(S_k > 0)]/k} / I` and
/// `ϰ = E_0 S_1² / (2 E_0 S_1) − Σ_k E_0[S_k⁻]/k`.
///
/// Each path contributes its own series sums; standard errors come from the
/// spread of those sums across paths.
pub fn overshoot_constants(
    model: &ChangepointModel,
    cfg: &OvershootConfig,
) -> Result<OvershootConstants> {
    if cfg.series_cap < 1000 {
        return Err(Error::Config(format!(
            "series_cap must be at least 1000, got {}",
            cfg.series_cap
        )));
    }
    if cfg.mc_paths < 10_000 {
        return Err(Error::Config(format!(
            "mc_paths must be at least 10000, got {}",
            cfg.mc_paths
        )));
    }
    let kl = model.kl_number();
    if !(kl.value > 0.0) {
        return Err(model.unsupported("KL number is not positive"));
    }
    let mc = |seed| McConfig {
        n_runs: cfg.mc_paths,
        seed,
        step_cap: None,
        parallel_width: cfg.parallel_width,
    };
    let cap = cfg.series_cap;

    let post = run_all(&mc(run_seed(cfg.seed, u64::MAX)), |rng: &mut SimRng| {
        let mut s = 0.0;
        let mut p = PostPath {
            below_zero: 0.0,
            negative_part: 0.0,
            first_step: 0.0,
            steps: cap,
            capped: true,
        };
        for k in 1..=cap {
            let z = model.sample_log_lr(Regime::Post, rng);
            if k == 1 {
                p.first_step = z;
            }
            s += z;
            if s <= 0.0 {
                p.below_zero += 1.0 / k as f64;
                p.negative_part += -s / k as f64;
            } else if s > NEGLIGIBLE_LEVEL {
                p.steps = k;
                p.capped = false;
                break;
            }
        }
        Ok(p)
    })?;
    let pre = run_all(&mc(run_seed(cfg.seed, u64::MAX - 1)), |rng: &mut SimRng| {
        let mut s = 0.0;
        let mut p = PrePath {
            above_zero: 0.0,
            steps: cap,
            capped: true,
        };
        for k in 1..=cap {
            s += model.sample_log_lr(Regime::Pre, rng);
            if s > 0.0 {
                p.above_zero += 1.0 / k as f64;
            } else if s < -NEGLIGIBLE_LEVEL {
                p.steps = k;
                p.capped = false;
                break;
            }
        }
        Ok(p)
    })?;

    let n = cfg.mc_paths as f64;
    let mean_var = |xs: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var / n)
    };

    // Leading fraction: quadrature when the model has a Λ density, otherwise
    // the first increments of the post-change paths (delta method).
    let (leading, leading_influence): (f64, Option<Vec<f64>>) =
        match (model.log_lr_moment(Regime::Post, 1), model.log_lr_moment(Regime::Post, 2)) {
            (Ok(m1), Ok(m2)) => (m2 / (2.0 * m1), None),
            _ => {
                let m1 = post.iter().map(|p| p.first_step).sum::<f64>() / n;
                let m2 = post.iter().map(|p| p.first_step.powi(2)).sum::<f64>() / n;
                let infl = post
                    .iter()
                    .map(|p| {
                        let z = p.first_step;
                        (z * z - m2) / (2.0 * m1) - m2 * (z - m1) / (2.0 * m1 * m1)
                    })
                    .collect();
                (m2 / (2.0 * m1), Some(infl))
            }
        };

    let (neg_mean, _) = mean_var(&mut post.iter().map(|p| p.negative_part));
    let varkappa_se = match &leading_influence {
        None => mean_var(&mut post.iter().map(|p| p.negative_part)).1.sqrt(),
        Some(infl) => mean_var(
            &mut post
                .iter()
                .zip(infl)
                .map(|(p, i)| i - p.negative_part),
        )
        .1
        .sqrt(),
    };
    let (below_mean, below_var) = mean_var(&mut post.iter().map(|p| p.below_zero));
    let (above_mean, above_var) = mean_var(&mut pre.iter().map(|p| p.above_zero));
    let series = below_mean + above_mean;
    let zeta = (-series).exp() / kl.value;
    let zeta_se = zeta * (below_var + above_var + (kl.std_error / kl.value).powi(2)).sqrt();

    let capped = post.iter().filter(|p| p.capped).count() + pre.iter().filter(|p| p.capped).count();
    let longest = post
        .iter()
        .map(|p| p.steps)
        .chain(pre.iter().map(|p| p.steps))
        .max()
        .unwrap_or(0);

    Ok(OvershootConstants {
        zeta: Estimate {
            value: zeta,
            std_error: Some(zeta_se),
            provenance: Provenance::SeriesMc,
        },
        varkappa: Estimate {
            value: leading - neg_mean,
            std_error: Some(varkappa_se),
            provenance: Provenance::SeriesMc,
        },
        capped_paths: capped as u64,
        longest_path: longest,
    })
}

/// A limit law on `[0, ∞)` held as node masses on `[0, x_max]` plus a
/// `1/x` tail of mass `tail_mass` beyond.
#[derive(Clone, Debug)]
pub struct LimitLaw {
    op: DiscretizedOperator,
    eigenvalue: f64,
    masses: Vec<f64>,
    density: Vec<f64>,
    tail_mass: f64,
    iterations: usize,
}

impl LimitLaw {
    fn solve(op: DiscretizedOperator) -> Result<Self> {
        let pair = op.leading_eigenpair(EIGEN_MAX_ITER)?;
        let tail_mass = (1.0 - pair.eigenvalue).max(0.0);
        if tail_mass >= MAX_TAIL_MASS {
            return Err(Error::Resolution(format!(
                "mass {tail_mass:.3} escapes beyond x_max = {}; increase x_max",
                op.grid().upper()
            )));
        }
        let keep = 1.0 - tail_mass;
        Ok(LimitLaw {
            eigenvalue: pair.eigenvalue,
            masses: pair.masses.iter().map(|m| m * keep).collect(),
            density: pair.density.iter().map(|d| d * keep).collect(),
            tail_mass,
            iterations: pair.iterations,
            op,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.op.grid().upper()
    }

    pub fn nodes(&self) -> &[f64] {
        self.op.grid().nodes()
    }

    /// Node masses; they sum to `1 − tail_mass`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Probability beyond `x_max`, estimated from the per-step leakage
    /// `1 − λ` of the truncated operator.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Distribution function, by one application of the transition law to
    /// the node masses on `[0, x_max]` and the `1/x` tail beyond.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let x_max = self.x_max();
        if x >= x_max {
            return 1.0 - self.tail_mass * x_max / x;
        }
        let inner: f64 = self
            .nodes()
            .iter()
            .zip(&self.masses)
            .map(|(&y, &m)| m * self.op.transition_cdf(y, x))
            .sum();
        inner / self.eigenvalue
    }

    /// `E h(X)` with `h` on the tail approximated by its value at the
    /// conditional tail mean of `log X`, i.e. `h(e · x_max)`.
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        let body: f64 = self.nodes().iter().zip(&self.masses).map(|(&x, &m)| m * h(x)).sum();
        body + self.tail_mass * h(std::f64::consts::E * self.x_max())
    }
}

/// Stationary law `Q_st` of `R_n` under `P_∞` and the limit law `Q̃` of
/// `V_n` under `P_0`.
#[derive(Clone, Debug)]
pub struct StationaryLaws {
    pub stationary: LimitLaw,
    pub reciprocal: LimitLaw,
}

/// Solves `q = K q` for both limit laws on a log-graded grid over
/// `[0, x_max]`. `Q̃` uses the reciprocal post-change recursion
/// `V_n = (1 + V_{n-1}) / Λ_n`, which has the same `P_0` law as `V_n`.
pub fn stationary_laws(
    model: &ChangepointModel,
    x_max: f64,
    grid_n: usize,
) -> Result<StationaryLaws> {
    if !(x_max > 1.0 && x_max.is_finite()) {
        return Err(Error::Config(format!(
            "x_max must be finite and above 1, got {x_max}"
        )));
    }
    let grid = Grid::new(x_max, grid_n)?;
    let stationary = LimitLaw::solve(DiscretizedOperator::forward(model, Regime::Pre, &grid)?)?;
    let reciprocal =
        LimitLaw::solve(DiscretizedOperator::reciprocal(model, Regime::Post, &grid)?)?;
    Ok(StationaryLaws {
        stationary,
        reciprocal,
    })
}

/// Argument of [`constant_c`]: a head start `r`, or the stationary start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCorrection {
    HeadStart(f64),
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantValue {
    pub value: f64,
    pub provenance: Provenance,
    /// Quadrature value, when stationary laws were supplied.
    pub quadrature: Option<f64>,
}

/// `C_r = ((1+r)/r) log(1+r)` for the beta model, with `C_0 = 1`.
pub fn beta_c_at(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 + 0.5 * r
    } else {
        (1.0 + r) * r.ln_1p() / r
    }
}

/// `C_∞ = π²/6` for the beta model.
pub const BETA_C_INFINITY: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

impl StationaryLaws {
    /// `C_r = ∫ log(1 + r + y) dQ̃(y)`.
    pub fn c_at(&self, r: f64) -> f64 {
        self.reciprocal.expect(|y| (1.0 + r + y).ln())
    }

    /// `C_∞ = ∫∫ log(1 + x + y) dQ_st(x) dQ̃(y)`.
    pub fn c_infinity(&self) -> f64 {
        self.stationary.expect(|x| self.c_at(x))
    }
}

/// `C_r` or `C_∞`. The beta model returns its closed form, with the
/// quadrature value alongside when `laws` is given; other models need
/// `laws`.
pub fn constant_c(
    model: &ChangepointModel,
    at: LogCorrection,
    laws: Option<&StationaryLaws>,
) -> Result<ConstantValue> {
    if let LogCorrection::HeadStart(r) = at {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("head start must be >= 0, got {r}")));
        }
    }
    let quadrature = laws.map(|l| match at {
        LogCorrection::HeadStart(r) => l.c_at(r),
        LogCorrection::Stationary => l.c_infinity(),
    });
    match model {
        ChangepointModel::Beta => Ok(ConstantValue {
            value: match at {
                LogCorrection::HeadStart(r) => beta_c_at(r),
                LogCorrection::Stationary => BETA_C_INFINITY,
            },
            provenance: Provenance::ClosedForm,
            quadrature,
        }),
        _ => match quadrature {
            Some(value) => Ok(ConstantValue {
                value,
                provenance: Provenance::Quadrature,
                quadrature,
            }),
            None => Err(Error::Config(format!(
                "model '{}' has no closed-form C constants; stationary laws are required",
                model.name()
            ))),
        },
    }
}

/// How `C_r` is evaluated for arbitrary `r`.
#[derive(Clone, Debug)]
enum HeadStartCorrection {
    BetaClosedForm,
    Law { nodes: Vec<f64>, masses: Vec<f64>, tail_mass: f64, x_max: f64 },
}

/// All constants entering the approximations, with provenance.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticConstants {
    pub model: String,
    pub kl: Estimate,
    pub zeta: Estimate,
    pub varkappa: Estimate,
    pub c_zero: Estimate,
    pub c_infinity: Estimate,
    #[serde(skip)]
    correction: HeadStartCorrection,
}

impl AsymptoticConstants {
    /// Combines overshoot constants with the `C` constants of `model`.
    /// Beta uses closed forms; other built-ins need `laws`.
    pub fn assemble(
        model: &ChangepointModel,
        zeta: Estimate,
        varkappa: Estimate,
        laws: Option<&StationaryLaws>,
    ) -> Result<Self> {
        if !(zeta.value > 0.0 && zeta.value < 1.0) {
            return Err(Error::Domain(format!("zeta must lie in (0, 1), got {}", zeta.value)));
        }
        if !(varkappa.value > 0.0) {
            return Err(Error::Domain(format!(
                "varkappa must be positive, got {}",
                varkappa.value
            )));
        }
        let kl_raw = model.kl_number();
        let kl = Estimate {
            value: kl_raw.value,
            std_error: (kl_raw.std_error > 0.0).then_some(kl_raw.std_error),
            provenance: if kl_raw.std_error > 0.0 {
                Provenance::MonteCarlo
            } else if model.is_builtin() && matches!(model, ChangepointModel::Beta | ChangepointModel::Gaussian { .. } | ChangepointModel::Exponential { .. }) {
                Provenance::ClosedForm
            } else {
                Provenance::Quadrature
            },
        };
        let c0 = constant_c(model, LogCorrection::HeadStart(0.0), laws)?;
        let cinf = constant_c(model, LogCorrection::Stationary, laws)?;
        if c0.value > cinf.value {
            return Err(Error::Domain(format!(
                "C_0 = {} exceeds C_inf = {}",
                c0.value, cinf.value
            )));
        }
        let correction = match (model, laws) {
            (ChangepointModel::Beta, _) => HeadStartCorrection::BetaClosedForm,
            (_, Some(l)) => HeadStartCorrection::Law {
                nodes: l.reciprocal.nodes().to_vec(),
                masses: l.reciprocal.masses().to_vec(),
                tail_mass: l.reciprocal.tail_mass(),
                x_max: l.reciprocal.x_max(),
            },
            (_, None) => unreachable!("constant_c already required laws"),
        };
        Ok(AsymptoticConstants {
            model: model.name(),
            kl,
            zeta,
            varkappa,
            c_zero: Estimate::exact(c0.value, c0.provenance),
            c_infinity: Estimate::exact(cinf.value, cinf.provenance),
            correction,
        })
    }

    /// Estimates everything for `model`: overshoot constants by series MC,
    /// `C` constants by closed form (beta) or quadrature.
    pub fn compute(
        model: &ChangepointModel,
        overshoot: &OvershootConfig,
        x_max: f64,
        grid_n: usize,
    ) -> Result<Self> {
        let ov = overshoot_constants(model, overshoot)?;
        let laws = match model {
            ChangepointModel::Beta => None,
            _ => Some(stationary_laws(model, x_max, grid_n)?),
        };
        Self::assemble(model, ov.zeta, ov.varkappa, laws.as_ref())
    }

    /// `C_r`.
    pub fn c_at(&self, r: f64) -> f64 {
        match &self.correction {
            HeadStartCorrection::BetaClosedForm => beta_c_at(r),
            HeadStartCorrection::Law {
                nodes,
                masses,
                tail_mass,
                x_max,
            } => {
                let body: f64 = nodes
                    .iter()
                    .zip(masses)
                    .map(|(&y, &m)| m * (1.0 + r + y).ln())
                    .sum();
                body + tail_mass * (1.0 + r + std::f64::consts::E * x_max).ln()
            }
        }
    }
}

/// Which procedure an ARL approximation is for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArlApprox {
    /// SR-r; `0` gives SR.
    HeadStart(f64),
    /// SRP, given the quasi-stationary mean `μ_A`.
    QuasiStationary { mean: f64 },
}

/// `E_∞T ≈ A/ζ − r` (SR-r) or `A/ζ − μ_A` (SRP).
pub fn approx_arl(kind: ArlApprox, threshold: f64, zeta: f64) -> f64 {
    let shift = match kind {
        ArlApprox::HeadStart(r) => r,
        ArlApprox::QuasiStationary { mean } => mean,
    };
    threshold / zeta - shift
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayApprox {
    Sr,
    DesignedHeadStart,
    Srp,
    LowerBound,
}

/// Where an approximation is evaluated: at a threshold, or at a target ARL
/// `γ` (then `A = γζ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Threshold(f64),
    Arl(f64),
}

/// `SADD ≈ (log A + ϰ − C)/I` with `C = C_0` for SR and `C_∞` otherwise.
pub fn approx_sadd(kind: DelayApprox, level: Level, constants: &AsymptoticConstants) -> f64 {
    let a = match level {
        Level::Threshold(a) => a,
        Level::Arl(gamma) => gamma * constants.zeta.value,
    };
    let c = match kind {
        DelayApprox::Sr => constants.c_zero.value,
        _ => constants.c_infinity.value,
    };
    (a.ln() + constants.varkappa.value - c) / constants.kl.value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadStartRule {
    QuasiMean,
    Equalizer,
}

/// Root of `C_r = C_∞` by bisection on `[1e-6, r_hi]`, doubling `r_hi`
/// from 10 up to `1e6` until the bracket holds a sign change.
pub fn equalizer_head_start(c_at: impl Fn(f64) -> f64, c_infinity: f64) -> Result<f64> {
    let g = |r: f64| c_at(r) - c_infinity;
    let lo = 1e-6;
    let mut hi = 10.0;
    while g(hi) < 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    bisect(g, lo, hi, 1e-10)
}

/// Head start by `rule`: `μ_A` of the quasi-stationary law at the analysis
/// threshold, or the equalizer root (independent of `A`).
pub fn design_head_start(
    rule: HeadStartRule,
    analysis: &ThresholdAnalysis,
    constants: &AsymptoticConstants,
) -> Result<f64> {
    match rule {
        HeadStartRule::QuasiMean => Ok(analysis.quasi_stationary()?.mean()),
        HeadStartRule::Equalizer => {
            equalizer_head_start(|r| constants.c_at(r), constants.c_infinity.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::sync::OnceLock;

    fn beta_laws() -> &'static StationaryLaws {
        static LAWS: OnceLock<StationaryLaws> = OnceLock::new();
        LAWS.get_or_init(|| stationary_laws(&ChangepointModel::Beta, DEFAULT_X_MAX, 2048).unwrap())
    }

    fn reference() -> AsymptoticConstants {
        AsymptoticConstants::assemble(
            &ChangepointModel::Beta,
            Estimate::exact(0.426, Provenance::Supplied),
            Estimate::exact(1.255, Provenance::Supplied),
            None,
        )
        .unwrap()
    }

    #[test]
    fn beta_closed_form_constants() {
        assert_eq!(beta_c_at(0.0), 1.0);
        assert!((beta_c_at(1.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((BETA_C_INFINITY - 1.644_934_066_848_226).abs() < 1e-15);
        let c = constant_c(&ChangepointModel::Beta, LogCorrection::Stationary, None).unwrap();
        assert_eq!(c.provenance, Provenance::ClosedForm);
        assert!(c.quadrature.is_none());
    }

    #[test]
    fn beta_laws_match_closed_form() {
        let laws = beta_laws();
        for law in [&laws.stationary, &laws.reciprocal] {
            let total: f64 = law.masses().iter().sum::<f64>() + law.tail_mass();
            assert!((total - 1.0).abs() < 1e-6);
            assert!(law.masses().iter().all(|&m| m >= 0.0));
            assert!(law.tail_mass() > 0.0 && law.tail_mass() < 1e-5);
            let mut worst: f64 = 0.0;
            for i in 0..=4000 {
                let x = (i as f64 / 4000.0 * (0.5 * law.x_max()).ln_1p()).exp_m1();
                worst = worst.max((law.cdf(x) - x / (1.0 + x)).abs());
            }
            assert!(worst < 1e-3, "sup error {worst}");
        }
    }

    #[test]
    fn stationary_tail_is_reciprocal() {
        let law = &beta_laws().stationary;
        for x in [10.0, 20.0, 50.0] {
            let tail = 1.0 - law.cdf(x);
            assert!((tail * x - 1.0).abs() < 0.15, "x = {x}: {tail}");
        }
    }

    #[test]
    fn quadrature_constants_match_closed_forms() {
        let laws = beta_laws();
        for r in [0.0, 0.5, 1.0, 2.0, 5.0] {
            assert!((laws.c_at(r) - beta_c_at(r)).abs() < 5e-3, "r = {r}");
        }
        assert!((laws.c_infinity() - BETA_C_INFINITY).abs() < 5e-3);
        let c = constant_c(&ChangepointModel::Beta, LogCorrection::HeadStart(2.0), Some(laws))
            .unwrap();
        assert_eq!(c.value, beta_c_at(2.0));
        assert!((c.quadrature.unwrap() - c.value).abs() < 5e-3);
    }

    #[test]
    fn equalizer_root_two_ways() {
        let closed = equalizer_head_start(beta_c_at, BETA_C_INFINITY).unwrap();
        assert!((closed - 1.98).abs() < 0.01, "{closed}");
        let laws = beta_laws();
        let quad = equalizer_head_start(|r| laws.c_at(r), laws.c_infinity()).unwrap();
        assert!((quad - closed).abs() < 5e-3 * 4.0, "{quad} vs {closed}");
        assert!(matches!(
            equalizer_head_start(|_| 2.0, 1.0),
            Err(Error::Design(_))
        ));
    }

    #[test]
    fn approximations() {
        let k = reference();
        assert!((approx_arl(ArlApprox::HeadStart(0.0), 42.0, 0.426) - 42.0 / 0.426).abs() < 1e-12);
        let srp = approx_arl(ArlApprox::QuasiStationary { mean: 2.603 }, 43.0, 0.426);
        assert!((srp / 98.431 - 1.0).abs() < 5e-3);
        let sr = approx_sadd(DelayApprox::Sr, Level::Arl(100.0), &k);
        assert!((sr / 4.005 - 1.0).abs() < 5e-3);
        let gap = sr - approx_sadd(DelayApprox::DesignedHeadStart, Level::Arl(100.0), &k);
        assert!((gap - (BETA_C_INFINITY - 1.0)).abs() < 1e-12);
        let at43 = approx_sadd(DelayApprox::Srp, Level::Threshold(43.0), &k);
        assert!((at43 - 3.371).abs() < 1e-3);
    }

    #[test]
    fn overshoot_requires_desk_scale_inputs() {
        let m = ChangepointModel::Beta;
        assert!(overshoot_constants(&m, &OvershootConfig::new(100, 10_000, 1)).is_err());
        assert!(overshoot_constants(&m, &OvershootConfig::new(1000, 100, 1)).is_err());
    }

    /// Overshoot of the post-change walk over a high level, simulated
    /// directly: returns the means of `e^{-overshoot}` and of the overshoot
    /// with their standard errors.
    fn direct_overshoot(paths: u64, level: f64, seed: u64) -> [(f64, f64); 2] {
        let m = ChangepointModel::Beta;
        let mut rng = SimRng::seed_from_u64(seed);
        let (mut e, mut e2, mut o, mut o2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..paths {
            let mut s = 0.0;
            while s < level {
                s += m.sample_log_lr(Regime::Post, &mut rng);
            }
            let ov = s - level;
            e += (-ov).exp();
            e2 += (-2.0 * ov).exp();
            o += ov;
            o2 += ov * ov;
        }
        let n = paths as f64;
        let stat = |s1: f64, s2: f64| (s1 / n, ((s2 / n - (s1 / n).powi(2)) / n).sqrt());
        [stat(e, e2), stat(o, o2)]
    }

    #[test]
    fn series_constants_agree_with_direct_overshoot() {
        let m = ChangepointModel::Beta;
        let ov = overshoot_constants(&m, &OvershootConfig::new(1000, 50_000, 4)).unwrap();
        assert!(ov.zeta.value > 0.0 && ov.zeta.value < 1.0);
        assert_eq!(ov.capped_paths, 0);
        let [zeta, kappa] = direct_overshoot(50_000, 40.0, 99);
        for (est, (direct, se)) in [(ov.zeta, zeta), (ov.varkappa, kappa)] {
            let combined = (est.std_error.unwrap().powi(2) + se * se).sqrt();
            assert!((est.value - direct).abs() < 4.0 * combined, "{est:?} vs {direct} ± {se}");
        }
        let again = overshoot_constants(&m, &OvershootConfig::new(1000, 50_000, 4)).unwrap();
        assert_eq!(ov, again);
    }

    #[test]
    fn gaussian_constants_by_quadrature() {
        let m = ChangepointModel::gaussian(1.0).unwrap();
        let laws = stationary_laws(&m, DEFAULT_X_MAX, 1024).unwrap();
        let k = AsymptoticConstants::assemble(
            &m,
            Estimate::exact(0.5, Provenance::Supplied),
            Estimate::exact(1.0, Provenance::Supplied),
            Some(&laws),
        )
        .unwrap();
        assert_eq!(k.c_infinity.provenance, Provenance::Quadrature);
        assert!(k.c_zero.value < k.c_infinity.value);
        assert!((k.c_at(0.0) - k.c_zero.value).abs() < 1e-12);
        assert!(constant_c(&m, LogCorrection::Stationary, None).is_err());
    }
}
