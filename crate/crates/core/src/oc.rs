// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact operating characteristics from the integral equations of the
//! detection statistic.
//!
//! For a threshold `A` and a head start `r`:
//!
//! * `φ_j(r) = E_j T_A^r` solves `φ_j(r) = 1 + ∫_0^A φ_j(x) ∂/∂x F_j(x/(1+r)) dx`;
//! * `δ_ν(r) = E_ν[(T_A^r − ν)^+]` and `p_ν(r) = P_∞(T_A^r > ν)` follow by
//!   iterating the pre-change operator from `δ_0 = φ_0`, `p_0 = 1`;
//! * the conditional delay is `E_ν(T − ν | T > ν) = δ_ν(r) / p_ν(r)`;
//! * the quasi-stationary law `Q_A` is the leading eigen-measure of the
//!   pre-change operator, and SRP characteristics are `∫ φ_j dQ_A`;
//! * the lower bound is `J(T_A) = ψ(0)/φ_∞(0)` with `ψ = φ_0 + T_∞ ψ`.
//!
//! Values off the grid use Nyström interpolation: a solution of
//! `u = b + T u` is evaluated at any `r` as `b(r) + Σ_i w_i k(r, x_i) u_i`.

use std::sync::{Arc, OnceLock};

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChangepointModel, Regime};
use crate::numerics::operator::dot;
use crate::numerics::roots::bracketed_root;
use crate::numerics::{DiscretizedOperator, FredholmSolver, Grid};
use crate::SimRng;

/// Default number of grid nodes.
pub const DEFAULT_GRID_N: usize = 2048;
/// Default horizon of delay curves.
pub const DEFAULT_NU_MAX: usize = 200;
/// Relative change below which successive delays count as stationary.
pub const STATIONARITY_RTOL: f64 = 1e-6;
/// Number of successive small changes that declare the tail stationary.
pub const STATIONARITY_RUN: usize = 5;
/// Relative ARL tolerance of threshold calibration.
pub const CALIBRATION_RTOL: f64 = 1e-4;

const EIGEN_MAX_ITERATIONS: usize = 100_000;

/// How the SR-r head start is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum HeadStart {
    /// A fixed value `r`.
    Fixed(f64),
    /// `r = μ_A`, the mean of the quasi-stationary law at the threshold in use.
    QuasiMean,
}

/// The three members of the Shiryaev-Roberts family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "head_start")]
pub enum Procedure {
    /// `R_0 = 0`.
    Sr,
    /// `R_0 = r`.
    SrR(HeadStart),
    /// `R_0 ~ Q_A`.
    Srp,
}

impl Procedure {
    pub fn label(&self) -> String {
        match self {
            Procedure::Sr => "SR".into(),
            Procedure::SrR(HeadStart::Fixed(r)) => format!("SR-r(r={r})"),
            Procedure::SrR(HeadStart::QuasiMean) => "SR-r(r=mu_A)".into(),
            Procedure::Srp => "SRP".into(),
        }
    }
}

/// Where the supremum of the conditional delay curve sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgmaxKind {
    AtZero,
    Interior,
    AtInfinity,
}

/// Conditional delays `E_ν(T − ν | T > ν)` and survival `P_∞(T > ν)` for
/// `ν = 0, 1, …`.
#[derive(Clone, Debug, Serialize)]
pub struct DelayCurve {
    pub delays: Vec<f64>,
    pub survival: Vec<f64>,
    /// Index from which the curve was declared stationary, if it was.
    pub stationary_from: Option<usize>,
    /// Limit value `ADD_∞`: the stationary value, or the last computed one.
    pub tail: f64,
    /// Set when the survival probability underflowed and the curve stopped
    /// early.
    pub truncated: bool,
}

impl DelayCurve {
    /// `sup_ν` over the computed points and the tail, and where it sits.
    pub fn supremum(&self) -> (f64, ArgmaxKind) {
        let first = self.delays[0];
        let stationary_from = self.stationary_from.unwrap_or(self.delays.len());
        let interior_max = self.delays[1..stationary_from.max(1)]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let tail = self.tail;
        let sup = first.max(interior_max).max(tail);
        let kind = if first >= interior_max && first >= tail {
            ArgmaxKind::AtZero
        } else if tail >= interior_max {
            ArgmaxKind::AtInfinity
        } else {
            ArgmaxKind::Interior
        };
        (sup, kind)
    }
}

/// Quasi-stationary distribution `Q_A` of the SR statistic.
#[derive(Clone, Debug)]
pub struct QuasiStationary {
    threshold: f64,
    eigenvalue: f64,
    mean: f64,
    model: ChangepointModel,
    nodes: Vec<f64>,
    masses: Vec<f64>,
    /// `(x, Q_A(x))` at 0, the nodes, and `A`; drives inverse-cdf sampling.
    table: Vec<(f64, f64)>,
}

impl QuasiStationary {
    fn from_operator(op: &DiscretizedOperator) -> Result<Self> {
        let pair = op.leading_eigenpair(EIGEN_MAX_ITERATIONS)?;
        let nodes = op.grid().nodes().to_vec();
        let mean = dot(&pair.masses, &nodes);
        let mut qs = QuasiStationary {
            threshold: op.grid().upper(),
            eigenvalue: pair.eigenvalue,
            mean,
            model: op.model().clone(),
            nodes,
            masses: pair.masses,
            table: Vec::new(),
        };
        let mut table = Vec::with_capacity(qs.nodes.len() + 2);
        table.push((0.0, 0.0));
        let mut last = 0.0f64;
        for &x in &qs.nodes {
            last = last.max(qs.cdf(x));
            table.push((x, last));
        }
        table.push((qs.threshold, 1.0));
        qs.table = table;
        Ok(qs)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `λ_A`: the per-step survival rate in the quasi-stationary regime.
    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    /// `μ_A = ∫ x dQ_A(x)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature masses of `Q_A` at the grid nodes (sum to one).
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `Q_A(x) = λ_A^{-1} ∫ F_∞(x/(1+y)) dQ_A(y)` for `0 ≤ x ≤ A`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.threshold {
            return 1.0;
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.masses)
            .map(|(&y, &m)| m * self.model.cdf_lr_unchecked(Regime::Pre, x / (1.0 + y)))
            .sum();
        (s / self.eigenvalue).min(1.0)
    }

    /// `∫ h dQ_A` by the grid quadrature.
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.masses)
            .map(|(&x, &m)| m * h(x))
            .sum()
    }

    /// Inverse-cdf draw with linear interpolation between tabulated points.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.sample(Open01);
        let idx = self.table.partition_point(|&(_, c)| c < u);
        if idx == 0 {
            return 0.0;
        }
        if idx >= self.table.len() {
            return self.table[self.table.len() - 1].0;
        }
        let (x0, c0) = self.table[idx - 1];
        let (x1, c1) = self.table[idx];
        let x = if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x1
        };
        // The support is [0, A).
        x.min(self.threshold * (1.0 - f64::EPSILON))
    }
}

/// Summary of one procedure at one threshold.
#[derive(Clone, Debug, Serialize)]
pub struct OcResult {
    pub procedure: Procedure,
    pub threshold: f64,
    /// Resolved head start: 0 for SR, `r` for SR-r, `μ_A` for SRP.
    pub head_start: f64,
    pub arl_false_alarm: f64,
    pub delay_curve: Vec<f64>,
    pub survival: Vec<f64>,
    pub sadd: f64,
    pub argmax: ArgmaxKind,
    pub add_infinity: f64,
    /// `J(T_A)`; present for SR only.
    pub lower_bound: Option<f64>,
}

/// Everything computable from the integral equations at one threshold.
///
/// Solutions are computed on first use and cached.
pub struct ThresholdAnalysis {
    model: ChangepointModel,
    threshold: f64,
    pre: Arc<DiscretizedOperator>,
    post: Arc<DiscretizedOperator>,
    pre_solver: OnceLock<FredholmSolver>,
    phi_pre: OnceLock<Vec<f64>>,
    phi_post: OnceLock<Vec<f64>>,
    psi: OnceLock<Vec<f64>>,
    quasi: OnceLock<QuasiStationary>,
}

impl ThresholdAnalysis {
    pub fn new(model: &ChangepointModel, threshold: f64, grid_n: usize) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::Domain(format!(
                "threshold must be positive and finite, got {threshold}"
            )));
        }
        let grid = Grid::new(threshold, grid_n)?;
        let pre = DiscretizedOperator::forward(model, Regime::Pre, &grid)?;
        let post = DiscretizedOperator::forward(model, Regime::Post, &grid)?;
        Ok(ThresholdAnalysis {
            model: model.clone(),
            threshold,
            pre: Arc::new(pre),
            post: Arc::new(post),
            pre_solver: OnceLock::new(),
            phi_pre: OnceLock::new(),
            phi_post: OnceLock::new(),
            psi: OnceLock::new(),
            quasi: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &ChangepointModel {
        &self.model
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn grid(&self) -> &Grid {
        self.pre.grid()
    }

    pub fn pre_operator(&self) -> &DiscretizedOperator {
        &self.pre
    }

    pub fn post_operator(&self) -> &DiscretizedOperator {
        &self.post
    }

    fn check_head_start(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r < self.threshold) {
            return Err(Error::Config(format!(
                "head start must satisfy 0 <= r < A = {}, got {r}",
                self.threshold
            )));
        }
        Ok(())
    }

    fn pre_solver(&self) -> Result<&FredholmSolver> {
        if let Some(s) = self.pre_solver.get() {
            return Ok(s);
        }
        let solver = FredholmSolver::new(self.pre.clone())?;
        Ok(self.pre_solver.get_or_init(|| solver))
    }

    fn cached(
        cell: &OnceLock<Vec<f64>>,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<&Vec<f64>> {
        if let Some(v) = cell.get() {
            return Ok(v);
        }
        let v = compute()?;
        Ok(cell.get_or_init(|| v))
    }

    /// `φ_∞` at the grid nodes.
    pub fn arl_curve(&self) -> Result<&[f64]> {
        Self::cached(&self.phi_pre, || {
            self.pre_solver()?.solve(&vec![1.0; self.pre.len()])
        })
        .map(Vec::as_slice)
    }

    /// `φ_0` at the grid nodes.
    pub fn post_change_arl_curve(&self) -> Result<&[f64]> {
        Self::cached(&self.phi_post, || {
            FredholmSolver::new(self.post.clone())?.solve(&vec![1.0; self.post.len()])
        })
        .map(Vec::as_slice)
    }

    /// `E_∞ T_A^r = φ_∞(r)`.
    pub fn arl(&self, r: f64) -> Result<f64> {
        self.check_head_start(r)?;
        Ok(1.0 + self.pre.apply_at(r, self.arl_curve()?))
    }

    /// `E_0 T_A^r = φ_0(r)`.
    pub fn post_change_arl(&self, r: f64) -> Result<f64> {
        self.check_head_start(r)?;
        Ok(1.0 + self.post.apply_at(r, self.post_change_arl_curve()?))
    }

    pub fn quasi_stationary(&self) -> Result<&QuasiStationary> {
        if let Some(q) = self.quasi.get() {
            return Ok(q);
        }
        let q = QuasiStationary::from_operator(&self.pre)?;
        Ok(self.quasi.get_or_init(|| q))
    }

    fn resolve_head_start(&self, procedure: Procedure) -> Result<f64> {
        Ok(match procedure {
            Procedure::Sr => 0.0,
            Procedure::SrR(HeadStart::Fixed(r)) => r,
            Procedure::SrR(HeadStart::QuasiMean) | Procedure::Srp => {
                self.quasi_stationary()?.mean()
            }
        })
    }

    /// ARL to false alarm of a procedure at this threshold.
    pub fn procedure_arl(&self, procedure: Procedure) -> Result<f64> {
        match procedure {
            Procedure::Srp => {
                let phi = self.arl_curve()?;
                Ok(dot(self.quasi_stationary()?.masses(), phi))
            }
            other => self.arl(self.resolve_head_start(other)?),
        }
    }

    /// Runs the `δ`/`p` recursions from head start `r` up to `nu_max`,
    /// stopping early once the curve is stationary.
    pub fn delay_curve(&self, r: f64, nu_max: usize) -> Result<DelayCurve> {
        self.check_head_start(r)?;
        if nu_max < 1 {
            return Err(Error::Config("nu_max must be at least 1".into()));
        }
        let row = self.pre.row_at(r);
        let delta0 = self.post_change_arl(r)?;
        let mut delta = self.post_change_arl_curve()?.to_vec();
        let mut surv = vec![1.0; self.pre.len()];
        self.iterate_delays(delta0, 1.0, nu_max, |d, p| {
            let out = (dot(&row, d), dot(&row, p));
            out
        }, &mut delta, &mut surv)
    }

    /// The `Q_A`-mixed delay curve of the SRP procedure.
    pub fn srp_delay_curve(&self, nu_max: usize) -> Result<DelayCurve> {
        if nu_max < 1 {
            return Err(Error::Config("nu_max must be at least 1".into()));
        }
        let masses = self.quasi_stationary()?.masses().to_vec();
        let mut delta = self.post_change_arl_curve()?.to_vec();
        let mut surv = vec![1.0; self.pre.len()];
        let delta0 = dot(&masses, &delta);
        // The mixture evaluates E_Q[δ_ν(R_0)] at step ν from the grid vectors
        // after ν applications, so the evaluator receives updated vectors.
        self.iterate_delays_mixed(delta0, &masses, nu_max, &mut delta, &mut surv)
    }

    fn iterate_delays(
        &self,
        delta0: f64,
        p0: f64,
        nu_max: usize,
        eval: impl Fn(&[f64], &[f64]) -> (f64, f64),
        delta: &mut Vec<f64>,
        surv: &mut Vec<f64>,
    ) -> Result<DelayCurve> {
        let mut curve = CurveBuilder::new(delta0 / p0, p0);
        for _ in 1..=nu_max {
            let (d, p) = eval(delta, surv);
            if curve.push(d, p) {
                break;
            }
            *delta = self.pre.apply(delta);
            *surv = self.pre.apply(surv);
        }
        Ok(curve.finish())
    }

    fn iterate_delays_mixed(
        &self,
        delta0: f64,
        masses: &[f64],
        nu_max: usize,
        delta: &mut Vec<f64>,
        surv: &mut Vec<f64>,
    ) -> Result<DelayCurve> {
        let mut curve = CurveBuilder::new(delta0, 1.0);
        for _ in 1..=nu_max {
            *delta = self.pre.apply(delta);
            *surv = self.pre.apply(surv);
            if curve.push(dot(masses, delta), dot(masses, surv)) {
                break;
            }
        }
        Ok(curve.finish())
    }

    /// `J(T_A) = ψ(0)/φ_∞(0)`.
    pub fn lower_bound(&self) -> Result<f64> {
        let psi = Self::cached(&self.psi, || {
            self.pre_solver()?.solve(self.post_change_arl_curve()?)
        })?;
        let psi0 = self.post_change_arl(0.0)? + self.pre.apply_at(0.0, psi);
        Ok(psi0 / self.arl(0.0)?)
    }

    /// Supremum of the conditional delay curve from head start `r`.
    pub fn sadd(&self, r: f64) -> Result<(f64, ArgmaxKind)> {
        Ok(self.delay_curve(r, DEFAULT_NU_MAX)?.supremum())
    }

    /// Full characteristics of a procedure at this threshold.
    pub fn characteristics(&self, procedure: Procedure, nu_max: usize) -> Result<OcResult> {
        let head_start = self.resolve_head_start(procedure)?;
        let arl = self.procedure_arl(procedure)?;
        match procedure {
            Procedure::Srp => {
                let curve = self.srp_delay_curve(nu_max)?;
                let e0 = curve.delays[0];
                Ok(OcResult {
                    procedure,
                    threshold: self.threshold,
                    head_start,
                    arl_false_alarm: arl,
                    delay_curve: curve.delays,
                    survival: curve.survival,
                    sadd: e0,
                    argmax: ArgmaxKind::AtZero,
                    add_infinity: e0,
                    lower_bound: None,
                })
            }
            _ => {
                let curve = self.delay_curve(head_start, nu_max)?;
                let (sadd, argmax) = curve.supremum();
                let lower_bound = if procedure == Procedure::Sr {
                    Some(self.lower_bound()?)
                } else {
                    None
                };
                Ok(OcResult {
                    procedure,
                    threshold: self.threshold,
                    head_start,
                    arl_false_alarm: arl,
                    sadd,
                    argmax,
                    add_infinity: curve.tail,
                    delay_curve: curve.delays,
                    survival: curve.survival,
                    lower_bound,
                })
            }
        }
    }
}

struct CurveBuilder {
    delays: Vec<f64>,
    survival: Vec<f64>,
    calm: usize,
    stationary_from: Option<usize>,
    truncated: bool,
}

impl CurveBuilder {
    fn new(d0: f64, p0: f64) -> Self {
        CurveBuilder {
            delays: vec![d0],
            survival: vec![p0],
            calm: 0,
            stationary_from: None,
            truncated: false,
        }
    }

    /// Adds `(δ_ν, p_ν)`; returns true when the curve is complete.
    fn push(&mut self, delta: f64, p: f64) -> bool {
        if !(p >= 1e-300) {
            self.truncated = true;
            return true;
        }
        let value = delta / p;
        let prev = *self.delays.last().unwrap();
        self.delays.push(value);
        self.survival.push(p);
        if (value - prev).abs() < STATIONARITY_RTOL * value.abs() {
            self.calm += 1;
        } else {
            self.calm = 0;
        }
        if self.calm >= STATIONARITY_RUN {
            self.stationary_from = Some(self.delays.len() - 1 - STATIONARITY_RUN);
            return true;
        }
        false
    }

    fn finish(self) -> DelayCurve {
        let tail = *self.delays.last().unwrap();
        DelayCurve {
            delays: self.delays,
            survival: self.survival,
            stationary_from: self.stationary_from,
            tail,
            truncated: self.truncated,
        }
    }
}

/// Result of [`calibrate_threshold`].
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub procedure: Procedure,
    pub target_arl: f64,
    pub threshold: f64,
    pub achieved_arl: f64,
    pub evaluations: usize,
}

/// Finds `A` such that the procedure's ARL to false alarm equals `gamma`
/// within [`CALIBRATION_RTOL`], by safeguarded secant steps on
/// `log A ↦ log ARL(A)` inside an expanding bracket.
pub fn calibrate_threshold(
    model: &ChangepointModel,
    procedure: Procedure,
    gamma: f64,
    grid_n: usize,
) -> Result<Calibration> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("target ARL must exceed 1, got {gamma}")));
    }
    if let Procedure::SrR(HeadStart::Fixed(r)) = procedure {
        if !(r >= 0.0) {
            return Err(Error::Config(format!("head start must be nonnegative, got {r}")));
        }
    }
    let mut evaluations = 0usize;
    let mut last = (f64::NAN, f64::NAN);
    let mut eval = |log_a: f64| -> Result<f64> {
        let a = log_a.exp();
        if let Procedure::SrR(HeadStart::Fixed(r)) = procedure {
            if r >= a {
                // Below the head start the alarm is immediate.
                return Ok(-gamma.ln());
            }
        }
        evaluations += 1;
        let analysis = ThresholdAnalysis::new(model, a, grid_n)?;
        let arl = analysis.procedure_arl(procedure)?;
        last = (a, arl);
        Ok(arl.ln() - gamma.ln())
    };

    // ARL(A) >= A - r for every head start, and ARL ~ A/ζ with ζ < 1.
    let start_hi = match procedure {
        Procedure::SrR(HeadStart::Fixed(r)) => gamma + r,
        _ => gamma,
    }
    .max(1e-3);
    let mut lo = (gamma * 0.2).max(1e-3).ln();
    let mut hi = start_hi.ln();
    let mut f_lo = eval(lo)?;
    let mut expansions = 0;
    while f_lo > 0.0 {
        hi = lo;
        lo -= 2.0;
        f_lo = eval(lo)?;
        expansions += 1;
        if expansions > 20 {
            return Err(Error::Calibration(format!(
                "no threshold below gives ARL under {gamma}"
            )));
        }
    }
    let mut f_hi = eval(hi)?;
    expansions = 0;
    while f_hi < 0.0 {
        lo = hi;
        hi += 1.0;
        f_hi = eval(hi)?;
        expansions += 1;
        if expansions > 20 {
            return Err(Error::Calibration(format!(
                "no threshold up to {} reaches ARL {gamma}",
                hi.exp()
            )));
        }
    }
    let tol = CALIBRATION_RTOL;
    let log_a = bracketed_root(&mut eval, lo, hi, 1e-12, 200, |_, f| f.abs() < 0.5 * tol)?;
    // The last evaluation is the accepted one unless the bracket endpoint
    // itself satisfied the tolerance.
    let (threshold, achieved_arl) = if (last.0.ln() - log_a).abs() < 1e-15 {
        last
    } else {
        let analysis = ThresholdAnalysis::new(model, log_a.exp(), grid_n)?;
        evaluations += 1;
        (log_a.exp(), analysis.procedure_arl(procedure)?)
    };
    Ok(Calibration {
        procedure,
        target_arl: gamma,
        threshold,
        achieved_arl,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn beta(a: f64, n: usize) -> ThresholdAnalysis {
        ThresholdAnalysis::new(&ChangepointModel::Beta, a, n).unwrap()
    }

    #[test]
    fn head_start_outside_range_is_rejected() {
        let an = beta(10.0, 128);
        assert!(matches!(an.arl(10.0), Err(Error::Config(_))));
        assert!(matches!(an.arl(-1.0), Err(Error::Config(_))));
        assert!(matches!(an.delay_curve(1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn stopping_times_are_at_least_one() {
        for a in [0.5, 3.0, 42.0] {
            let an = beta(a, 256);
            assert!(an.post_change_arl_curve().unwrap().iter().all(|&v| v >= 1.0));
            assert!(an.arl_curve().unwrap().iter().all(|&v| v >= 1.0));
        }
    }

    #[test]
    fn survival_starts_at_one_and_decreases() {
        let an = beta(21.0, 512);
        for r in [0.0, 2.0, 15.0] {
            let c = an.delay_curve(r, 60).unwrap();
            assert_eq!(c.survival[0], 1.0);
            assert!(c.survival.windows(2).all(|w| w[1] <= w[0]));
            assert!((c.delays[0] - an.post_change_arl(r).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn qsd_cdf_is_a_distribution_on_zero_a() {
        let an = beta(20.0, 512);
        let q = an.quasi_stationary().unwrap();
        assert_eq!(q.cdf(0.0), 0.0);
        assert!((q.cdf(20.0 - 1e-9) - 1.0).abs() < 1e-6);
        let mut prev = 0.0;
        for i in 0..=200 {
            let c = q.cdf(20.0 * i as f64 / 200.0);
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        assert!(q.mean() > 0.0 && q.mean() < 20.0);
    }

    #[test]
    fn qsd_eigenvalue_is_subunit() {
        for a in [0.5, 10.0, 100.0] {
            let lambda = beta(a, 512).quasi_stationary().unwrap().eigenvalue();
            assert!(lambda > 0.0 && lambda < 1.0, "A = {a}: {lambda}");
        }
    }

    #[test]
    fn qsd_dominates_stationary_cdf() {
        let an = beta(50.0, 1024);
        let q = an.quasi_stationary().unwrap();
        for &x in q.nodes() {
            assert!(q.cdf(x) >= x / (1.0 + x) - 1e-9, "x = {x}");
        }
    }

    #[test]
    fn qsd_samples_stay_in_support() {
        let an = beta(10.0, 256);
        let q = an.quasi_stationary().unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = q.sample(&mut rng);
            assert!((0.0..10.0).contains(&x));
        }
    }

    #[test]
    fn supremum_classification() {
        let mk = |delays: Vec<f64>, from| DelayCurve {
            tail: *delays.last().unwrap(),
            survival: vec![1.0; delays.len()],
            delays,
            stationary_from: from,
            truncated: false,
        };
        assert_eq!(mk(vec![4.0, 3.5, 3.4, 3.4], Some(2)).supremum().1, ArgmaxKind::AtZero);
        assert_eq!(mk(vec![3.0, 3.3, 3.5, 3.5], Some(2)).supremum().1, ArgmaxKind::AtInfinity);
        assert_eq!(mk(vec![3.0, 3.9, 3.5, 3.5], Some(2)).supremum(), (3.9, ArgmaxKind::Interior));
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        let m = ChangepointModel::Beta;
        assert!(calibrate_threshold(&m, Procedure::Sr, 1.0, 128).is_err());
        assert!(calibrate_threshold(&m, Procedure::Sr, f64::NAN, 128).is_err());
    }
}
