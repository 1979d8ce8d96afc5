// SPDX-License-Identifier: MIT OR Apache-2.0

//! Changepoint models: a pre-change density `f`, a post-change density `g`,
//! and everything the rest of the toolkit derives from them.
//!
//! The likelihood ratio of one observation is `Λ = g(X)/f(X)`. Its two
//! distribution functions `F_∞(t) = P_∞(Λ ≤ t)` and `F_0(t) = P_0(Λ ≤ t)`
//! drive every integral operator in [`crate::numerics`]. Built-in models
//! carry these in closed form; a [`CustomModel`] estimates them from
//! samples, which is enough for simulation but not for kernel
//! discretization.
//!
//! All observations are scalar. The toolkit assumes `Λ` has a continuous
//! distribution (non-arithmetic log-likelihood ratio); this is not checked
//! for custom models.

use std::fmt;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::integrate;
use crate::SimRng;

/// Which side of the change an observation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Before the change, density `f`, measure `P_∞`.
    Pre,
    /// After the change, density `g`, measure `P_0`.
    Post,
}

/// Kullback-Leibler number `I = E_0 log Λ` with its standard error
/// (zero when known in closed form).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlNumber {
    pub value: f64,
    pub std_error: f64,
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut SimRng) -> f64 + Send + Sync>;

/// A user-supplied model. `Λ` is computed from the two densities; the
/// likelihood-ratio cdfs and `I` are estimated from simulated draws at
/// construction time.
pub struct CustomModel {
    name: String,
    pre_density: Density,
    post_density: Density,
    pre_sampler: Sampler,
    post_sampler: Sampler,
    sorted_lr_pre: Vec<f64>,
    sorted_lr_post: Vec<f64>,
    kl: KlNumber,
}

impl CustomModel {
    /// Builds the model and runs `n_draws` draws per regime (seeded) to
    /// estimate `F_∞`, `F_0` and `I`.
    pub fn new(
        name: impl Into<String>,
        pre_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        post_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pre_sampler: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
        post_sampler: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
        n_draws: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_draws < 2 {
            return Err(Error::Config("custom model needs at least 2 draws".into()));
        }
        let mut model = CustomModel {
            name: name.into(),
            pre_density: Arc::new(pre_density),
            post_density: Arc::new(post_density),
            pre_sampler: Arc::new(pre_sampler),
            post_sampler: Arc::new(post_sampler),
            sorted_lr_pre: Vec::new(),
            sorted_lr_post: Vec::new(),
            kl: KlNumber {
                value: f64::NAN,
                std_error: f64::NAN,
            },
        };
        let mut rng = SimRng::seed_from_u64(seed);
        let draw = |sampler: &Sampler, rng: &mut SimRng| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n_draws);
            for _ in 0..n_draws {
                out.push(model.lr(sampler(rng))?);
            }
            Ok(out)
        };
        let mut pre = draw(&model.pre_sampler, &mut rng)?;
        let mut post = draw(&model.post_sampler, &mut rng)?;

        let logs: Vec<f64> = post.iter().map(|l| l.ln()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if !(mean > 0.0) {
            return Err(Error::UnsupportedModel {
                model: model.name.clone(),
                reason: format!("estimated KL number {mean} is not positive"),
            });
        }
        pre.sort_by(f64::total_cmp);
        post.sort_by(f64::total_cmp);
        model.sorted_lr_pre = pre;
        model.sorted_lr_post = post;
        model.kl = KlNumber {
            value: mean,
            std_error: (var / n).sqrt(),
        };
        Ok(model)
    }

    fn lr(&self, x: f64) -> Result<f64> {
        let f = (self.pre_density)(x);
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Domain(format!(
                "observation {x} is outside the support of the pre-change density"
            )));
        }
        Ok((self.post_density)(x) / f)
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("name", &self.name)
            .field("kl", &self.kl)
            .finish_non_exhaustive()
    }
}

/// A pre/post-change pair of observation laws.
#[derive(Clone, Debug)]
pub enum ChangepointModel {
    /// `beta(2,1) → beta(1,2)`: `f(x) = 2x`, `g(x) = 2(1-x)` on `[0, 1]`,
    /// so `Λ = 1/x - 1` and `I = 1`.
    Beta,
    /// `N(0,1) → N(shift,1)`.
    Gaussian { shift: f64 },
    /// `Exp(1) → Exp(post_rate)` (rates).
    Exponential { post_rate: f64 },
    Custom(Arc<CustomModel>),
}

/// Names accepted by [`ChangepointModel::from_name`].
pub const BUILTIN_MODELS: &[&str] = &["beta", "gaussian", "exponential"];

impl ChangepointModel {
    pub fn gaussian(shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift != 0.0) {
            return Err(Error::Config(format!(
                "gaussian shift must be finite and nonzero, got {shift}"
            )));
        }
        Ok(ChangepointModel::Gaussian { shift })
    }

    pub fn exponential(post_rate: f64) -> Result<Self> {
        if !(post_rate.is_finite() && post_rate > 0.0 && post_rate != 1.0) {
            return Err(Error::Config(format!(
                "exponential post-change rate must be positive and != 1, got {post_rate}"
            )));
        }
        Ok(ChangepointModel::Exponential { post_rate })
    }

    /// Resolves a built-in model from its name and parameter list.
    ///
    /// `beta` takes no parameters; `gaussian` takes the mean shift
    /// (default 1); `exponential` takes the post-change rate (default 0.5).
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let one_param = |default: f64| -> Result<f64> {
            match params {
                [] => Ok(default),
                [p] => Ok(*p),
                _ => Err(Error::Config(format!(
                    "model '{name}' takes one parameter, got {}",
                    params.len()
                ))),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "beta" => {
                if params.is_empty() {
                    Ok(ChangepointModel::Beta)
                } else {
                    Err(Error::Config("model 'beta' takes no parameters".into()))
                }
            }
            "gaussian" => Self::gaussian(one_param(1.0)?),
            "exponential" => Self::exponential(one_param(0.5)?),
            other => Err(Error::Config(format!(
                "unknown model '{other}'; built-in models are: {}",
                BUILTIN_MODELS.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ChangepointModel::Beta => "beta".to_string(),
            ChangepointModel::Gaussian { shift } => format!("gaussian({shift})"),
            ChangepointModel::Exponential { post_rate } => format!("exponential({post_rate})"),
            ChangepointModel::Custom(m) => m.name.clone(),
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, ChangepointModel::Custom(_))
    }

    /// `Λ(x) = g(x)/f(x)`.
    pub fn likelihood_ratio(&self, x: f64) -> Result<f64> {
        match self {
            ChangepointModel::Beta => {
                if !(x > 0.0 && x <= 1.0) {
                    return Err(Error::Domain(format!(
                        "observation {x} is outside the support (0, 1] of beta(2,1)"
                    )));
                }
                Ok(1.0 / x - 1.0)
            }
            ChangepointModel::Gaussian { shift } => {
                if !x.is_finite() {
                    return Err(Error::Domain(format!("non-finite observation {x}")));
                }
                Ok((shift * x - 0.5 * shift * shift).exp())
            }
            ChangepointModel::Exponential { post_rate } => {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::Domain(format!(
                        "observation {x} is outside the support [0, inf) of Exp(1)"
                    )));
                }
                Ok(post_rate * ((1.0 - post_rate) * x).exp())
            }
            ChangepointModel::Custom(m) => m.lr(x),
        }
    }

    /// `F_∞(t)` for [`Regime::Pre`], `F_0(t)` for [`Regime::Post`].
    pub fn cdf_lr(&self, regime: Regime, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "likelihood-ratio cdf needs t >= 0, got {t}"
            )));
        }
        Ok(self.cdf_lr_unchecked(regime, t))
    }

    pub(crate) fn cdf_lr_unchecked(&self, regime: Regime, t: f64) -> f64 {
        match self {
            ChangepointModel::Beta => match regime {
                Regime::Pre if t < 1.0 => t * (2.0 + t) / ((1.0 + t) * (1.0 + t)),
                Regime::Pre => 1.0 - (1.0 + t).powi(-2),
                Regime::Post => {
                    let s = t / (1.0 + t);
                    s * s
                }
            },
            ChangepointModel::Gaussian { shift } => {
                if t == 0.0 {
                    return 0.0;
                }
                if t.is_infinite() {
                    return 1.0;
                }
                let s = shift.abs();
                let centre = match regime {
                    Regime::Pre => -0.5 * s * s,
                    Regime::Post => 0.5 * s * s,
                };
                normal_cdf((t.ln() - centre) / s)
            }
            ChangepointModel::Exponential { post_rate } => {
                let rho = *post_rate;
                let c = match regime {
                    Regime::Pre => 1.0,
                    Regime::Post => rho,
                };
                if rho < 1.0 {
                    if t <= rho {
                        0.0
                    } else {
                        1.0 - (t / rho).powf(-c / (1.0 - rho))
                    }
                } else if t >= rho {
                    1.0
                } else {
                    (t / rho).powf(c / (rho - 1.0))
                }
            }
            ChangepointModel::Custom(m) => {
                let sorted = match regime {
                    Regime::Pre => &m.sorted_lr_pre,
                    Regime::Post => &m.sorted_lr_post,
                };
                let count = sorted.partition_point(|&v| v <= t);
                count as f64 / sorted.len() as f64
            }
        }
    }

    /// Density of `Λ` under the regime, if the model provides one.
    /// `None` for custom models.
    pub fn pdf_lr(&self, regime: Regime, t: f64) -> Option<f64> {
        if !(t >= 0.0) {
            return Some(0.0);
        }
        match self {
            ChangepointModel::Beta => Some(match regime {
                Regime::Pre => 2.0 * (1.0 + t).powi(-3),
                Regime::Post => 2.0 * t * (1.0 + t).powi(-3),
            }),
            ChangepointModel::Gaussian { shift } => {
                if t == 0.0 || t.is_infinite() {
                    return Some(0.0);
                }
                let s = shift.abs();
                let centre = match regime {
                    Regime::Pre => -0.5 * s * s,
                    Regime::Post => 0.5 * s * s,
                };
                let z = (t.ln() - centre) / s;
                Some(normal_pdf(z) / (s * t))
            }
            ChangepointModel::Exponential { post_rate } => {
                let rho = *post_rate;
                let c = match regime {
                    Regime::Pre => 1.0,
                    Regime::Post => rho,
                };
                Some(if rho < 1.0 {
                    if t <= rho {
                        0.0
                    } else {
                        let a = c / (1.0 - rho);
                        a / rho * (t / rho).powf(-a - 1.0)
                    }
                } else if t >= rho || t == 0.0 {
                    0.0
                } else {
                    let a = c / (rho - 1.0);
                    a / rho * (t / rho).powf(a - 1.0)
                })
            }
            ChangepointModel::Custom(_) => None,
        }
    }

    /// Support of `Λ` as `(lower, upper)`; used to place breakpoints when
    /// integrating against the likelihood-ratio law.
    pub fn lr_support(&self) -> (f64, f64) {
        match self {
            ChangepointModel::Exponential { post_rate } if *post_rate < 1.0 => {
                (*post_rate, f64::INFINITY)
            }
            ChangepointModel::Exponential { post_rate } => (0.0, *post_rate),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn kl_number(&self) -> KlNumber {
        let exact = |value| KlNumber {
            value,
            std_error: 0.0,
        };
        match self {
            ChangepointModel::Beta => exact(1.0),
            ChangepointModel::Gaussian { shift } => exact(0.5 * shift * shift),
            ChangepointModel::Exponential { post_rate } => {
                exact(post_rate.ln() + (1.0 - post_rate) / post_rate)
            }
            ChangepointModel::Custom(m) => m.kl,
        }
    }

    /// One observation from `f` (pre) or `g` (post).
    pub fn sample(&self, regime: Regime, rng: &mut SimRng) -> f64 {
        match self {
            ChangepointModel::Beta => {
                let u: f64 = rng.sample(Open01);
                match regime {
                    Regime::Pre => u.sqrt(),
                    Regime::Post => 1.0 - u.sqrt(),
                }
            }
            ChangepointModel::Gaussian { shift } => {
                let z: f64 = rng.sample(StandardNormal);
                match regime {
                    Regime::Pre => z,
                    Regime::Post => z + shift,
                }
            }
            ChangepointModel::Exponential { post_rate } => {
                let u: f64 = rng.sample(Open01);
                let rate = match regime {
                    Regime::Pre => 1.0,
                    Regime::Post => *post_rate,
                };
                -u.ln() / rate
            }
            ChangepointModel::Custom(m) => match regime {
                Regime::Pre => (m.pre_sampler)(rng),
                Regime::Post => (m.post_sampler)(rng),
            },
        }
    }

    /// One draw of `log Λ` under the regime. Built-ins skip the observation
    /// and draw the log-likelihood ratio directly.
    pub fn sample_log_lr(&self, regime: Regime, rng: &mut SimRng) -> f64 {
        match self {
            ChangepointModel::Beta => {
                // X = sqrt(U) pre-change, 1 - sqrt(U) post-change.
                let s = rng.sample::<f64, _>(Open01).sqrt();
                match regime {
                    Regime::Pre => (1.0 - s).ln() - s.ln(),
                    Regime::Post => s.ln() - (1.0 - s).ln(),
                }
            }
            ChangepointModel::Gaussian { shift } => {
                let z: f64 = rng.sample(StandardNormal);
                let half = 0.5 * shift * shift;
                match regime {
                    Regime::Pre => shift * z - half,
                    Regime::Post => shift * z + half,
                }
            }
            _ => {
                let x = self.sample(regime, rng);
                self.likelihood_ratio(x)
                    .map(f64::ln)
                    .unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    /// `E_j[(log Λ)^power]` by quadrature over the log-likelihood-ratio
    /// density. Requires [`Self::pdf_lr`].
    pub fn log_lr_moment(&self, regime: Regime, power: i32) -> Result<f64> {
        if self.pdf_lr(regime, 1.0).is_none() {
            return Err(self.unsupported("no likelihood-ratio density for quadrature"));
        }
        let (lo, hi) = self.lr_support();
        let z_lo = if lo > 0.0 { lo.ln() } else { -800.0 };
        let z_hi = if hi.is_finite() { hi.ln() } else { 800.0 };
        // Trim to where the law has mass above double-precision noise.
        let tail = 1e-17;
        let mut a = z_lo;
        let mut b = z_hi;
        let cdf_z = |z: f64| self.cdf_lr_unchecked(regime, z.exp());
        if lo == 0.0 {
            a = bisect_level(&cdf_z, -800.0, 0.0, tail);
        }
        if !hi.is_finite() {
            b = bisect_level(&|z| 1.0 - cdf_z(z), 800.0, 0.0, tail);
        }
        let density = |z: f64| {
            let t = z.exp();
            self.pdf_lr(regime, t).unwrap_or(0.0) * t * z.powi(power)
        };
        Ok(integrate(&density, a, b, 4096))
    }

    /// Largest second divided difference of `z ↦ log P_j(log Λ ≤ z)` over
    /// `points` equally spaced `z` where the cdf lies in `[1e-8, 1 − 1e-8]`.
    /// Values `≤ 0` (up to rounding) mean the cdf of `log Λ` is log-concave
    /// on that range.
    pub fn log_cdf_concavity(&self, regime: Regime, points: usize) -> Result<f64> {
        if !self.is_builtin() {
            return Err(self.unsupported("empirical cdf is a step function"));
        }
        if points < 3 {
            return Err(Error::Config(format!(
                "concavity check needs at least 3 points, got {points}"
            )));
        }
        let cdf_z = |z: f64| self.cdf_lr_unchecked(regime, z.exp());
        let (lo, hi) = self.lr_support();
        let level = 1e-8;
        let a = if lo > 0.0 {
            lo.ln()
        } else {
            bisect_level(&cdf_z, -800.0, 0.0, level)
        };
        let b = if hi.is_finite() {
            hi.ln()
        } else {
            bisect_level(&|z| 1.0 - cdf_z(z), 800.0, 0.0, level)
        };
        let a = if cdf_z(a) < level {
            bisect_level(&cdf_z, a, b, level)
        } else {
            a
        };
        let h = (b - a) / (points - 1) as f64;
        let log_f: Vec<f64> = (0..points).map(|i| cdf_z(a + h * i as f64).ln()).collect();
        Ok(log_f
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (h * h))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub(crate) fn unsupported(&self, reason: &str) -> Error {
        Error::UnsupportedModel {
            model: self.name(),
            reason: reason.to_string(),
        }
    }
}

/// Finds `z` between `far` and `near` where the monotone `mass(z)` crosses
/// `level`, assuming `mass(far) < level`.
fn bisect_level(mass: &dyn Fn(f64) -> f64, far: f64, near: f64, level: f64) -> f64 {
    if mass(near) < level {
        return near;
    }
    let (mut out, mut inn) = (far, near);
    for _ in 0..200 {
        let mid = 0.5 * (out + inn);
        if mass(mid) < level {
            out = mid;
        } else {
            inn = mid;
        }
    }
    out
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<ChangepointModel> {
        vec![
            ChangepointModel::Beta,
            ChangepointModel::gaussian(1.0).unwrap(),
            ChangepointModel::gaussian(-0.5).unwrap(),
            ChangepointModel::exponential(0.5).unwrap(),
            ChangepointModel::exponential(2.0).unwrap(),
        ]
    }

    #[test]
    fn beta_likelihood_ratio_values() {
        let m = ChangepointModel::Beta;
        assert_eq!(m.likelihood_ratio(0.5).unwrap(), 1.0);
        assert_eq!(m.likelihood_ratio(1.0).unwrap(), 0.0);
        assert!((m.likelihood_ratio(0.2).unwrap() - 4.0).abs() < 1e-12);
        // g(0.2)/f(0.2) = 2(0.8) / 2(0.2)
        let ratio = (2.0 * 0.8) / (2.0 * 0.2);
        assert!((m.likelihood_ratio(0.2).unwrap() - ratio).abs() < 1e-12);
    }

    #[test]
    fn likelihood_ratio_outside_support_is_domain_error() {
        let m = ChangepointModel::Beta;
        assert!(matches!(m.likelihood_ratio(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.likelihood_ratio(1.5), Err(Error::Domain(_))));
        let e = ChangepointModel::exponential(0.5).unwrap();
        assert!(matches!(e.likelihood_ratio(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_cdf_closed_forms() {
        let m = ChangepointModel::Beta;
        assert_eq!(m.cdf_lr(Regime::Pre, 1.0).unwrap(), 0.75);
        assert_eq!(m.cdf_lr(Regime::Post, 1.0).unwrap(), 0.25);
        for i in 0..100 {
            let t = 50.0 * i as f64 / 99.0;
            let pre = m.cdf_lr(Regime::Pre, t).unwrap();
            assert!((pre - (1.0 - (1.0 + t).powi(-2))).abs() <= 1e-15);
            let post = m.cdf_lr(Regime::Post, t).unwrap();
            assert_eq!(post, (t / (1.0 + t)).powi(2));
        }
    }

    #[test]
    fn cdf_at_zero_and_negative() {
        for m in builtins() {
            for regime in [Regime::Pre, Regime::Post] {
                assert_eq!(m.cdf_lr(regime, 0.0).unwrap(), 0.0, "{}", m.name());
                assert!(matches!(m.cdf_lr(regime, -0.1), Err(Error::Domain(_))));
            }
        }
    }

    #[test]
    fn cdfs_monotone_with_unit_limit() {
        for m in builtins() {
            for regime in [Regime::Pre, Regime::Post] {
                let mut prev = 0.0;
                for i in 0..2000 {
                    let t = (i as f64 * 0.01).exp() - 1.0;
                    let c = m.cdf_lr(regime, t).unwrap();
                    assert!(c >= prev && c <= 1.0);
                    prev = c;
                }
                assert!(m.cdf_lr(regime, 1e12).unwrap() > 1.0 - 1e-6, "{}", m.name());
            }
        }
    }

    #[test]
    fn pdf_matches_numerical_derivative_of_cdf() {
        for m in builtins() {
            let (lo, hi) = m.lr_support();
            for regime in [Regime::Pre, Regime::Post] {
                for i in 1..200 {
                    let t = 0.05 * i as f64;
                    // Stay clear of support endpoints where the density jumps.
                    if (t - lo).abs() < 0.01 || (hi.is_finite() && (t - hi).abs() < 0.01) {
                        continue;
                    }
                    let h = 1e-5;
                    let num = (m.cdf_lr_unchecked(regime, t + h)
                        - m.cdf_lr_unchecked(regime, t - h))
                        / (2.0 * h);
                    let pdf = m.pdf_lr(regime, t).unwrap();
                    assert!(
                        (num - pdf).abs() < 1e-6,
                        "{} {regime:?} t={t}: {num} vs {pdf}",
                        m.name()
                    );
                }
            }
        }
    }

    #[test]
    fn kl_numbers() {
        assert_eq!(ChangepointModel::Beta.kl_number().value, 1.0);
        let g = ChangepointModel::gaussian(0.8).unwrap();
        assert!((g.kl_number().value - 0.32).abs() < 1e-15);
        for m in builtins() {
            let kl = m.kl_number().value;
            assert!(kl > 0.0);
            // Quadrature of E_0 log Λ reproduces the closed form.
            let q = m.log_lr_moment(Regime::Post, 1).unwrap();
            assert!((q - kl).abs() < 1e-8, "{}: {q} vs {kl}", m.name());
        }
    }

    #[test]
    fn from_name_resolves_and_rejects() {
        assert!(matches!(
            ChangepointModel::from_name("beta", &[]).unwrap(),
            ChangepointModel::Beta
        ));
        assert!(matches!(
            ChangepointModel::from_name("Gaussian", &[2.0]).unwrap(),
            ChangepointModel::Gaussian { shift } if shift == 2.0
        ));
        let err = ChangepointModel::from_name("poisson", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("beta") && msg.contains("gaussian") && msg.contains("exponential"));
        assert!(ChangepointModel::from_name("exponential", &[1.0]).is_err());
        assert!(ChangepointModel::from_name("beta", &[1.0]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = ChangepointModel::Beta;
        let draw = |seed| {
            let mut rng = SimRng::seed_from_u64(seed);
            (0..100)
                .map(|_| m.sample(Regime::Pre, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn custom_model_estimates_beta_quantities() {
        let custom = CustomModel::new(
            "beta-custom",
            |x| if (0.0..=1.0).contains(&x) { 2.0 * x } else { 0.0 },
            |x| if (0.0..=1.0).contains(&x) { 2.0 * (1.0 - x) } else { 0.0 },
            |rng| rng.sample::<f64, _>(Open01).sqrt(),
            |rng| 1.0 - rng.sample::<f64, _>(Open01).sqrt(),
            200_000,
            11,
        )
        .unwrap();
        let m = ChangepointModel::Custom(Arc::new(custom));
        let kl = m.kl_number();
        assert!((kl.value - 1.0).abs() < 4.0 * kl.std_error, "{kl:?}");
        let se = (0.75f64 * 0.25 / 200_000.0).sqrt();
        assert!((m.cdf_lr(Regime::Pre, 1.0).unwrap() - 0.75).abs() < 4.0 * se);
        assert!((m.cdf_lr(Regime::Post, 1.0).unwrap() - 0.25).abs() < 4.0 * se);
        assert!(m.pdf_lr(Regime::Pre, 1.0).is_none());
        assert!(matches!(
            m.log_lr_moment(Regime::Post, 1),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn builtin_log_lr_cdfs_are_log_concave() {
        let models = [
            ChangepointModel::Beta,
            ChangepointModel::gaussian(1.0).unwrap(),
            ChangepointModel::gaussian(0.3).unwrap(),
            ChangepointModel::exponential(0.5).unwrap(),
            ChangepointModel::exponential(2.0).unwrap(),
        ];
        for m in &models {
            for regime in [Regime::Pre, Regime::Post] {
                let worst = m.log_cdf_concavity(regime, 2001).unwrap();
                assert!(worst <= 1e-9, "{} {regime:?}: {worst}", m.name());
            }
        }
    }
}
