// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bracketed root finding for monotone scalar maps.

use crate::error::{Error, Result};

/// Finds a root of `f` inside `[lo, hi]` where `f(lo)` and `f(hi)` have
/// opposite signs. Each step takes the secant (regula falsi, Illinois
/// variant) point when it falls well inside the bracket and bisects
/// otherwise. Stops when `done(x, f(x))` holds or the bracket collapses
/// below `x_tol`.
pub fn bracketed_root<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
    done: impl Fn(f64, f64) -> bool,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    if done(lo, f_lo) {
        return Ok(lo);
    }
    if done(hi, f_hi) {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Calibration(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})"
        )));
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let width = hi - lo;
        let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let x = if secant.is_finite()
            && secant > lo + 0.01 * width
            && secant < hi - 0.01 * width
        {
            secant
        } else {
            0.5 * (lo + hi)
        };
        let fx = f(x)?;
        if done(x, fx) || width < x_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Calibration(format!(
        "root not resolved within {max_iter} iterations; bracket [{lo}, {hi}]"
    )))
}

/// Plain bisection to a bracket width of `x_tol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::Design(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})"
        )));
    }
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn bisect_without_sign_change_fails() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(Error::Design(_))));
    }

    #[test]
    fn bracketed_root_on_monotone_map() {
        let mut calls = 0;
        let r = bracketed_root(
            |x: f64| {
                calls += 1;
                Ok(x.ln() - 3.0)
            },
            1.0,
            100.0,
            1e-12,
            100,
            |_, fx| fx.abs() < 1e-10,
        )
        .unwrap();
        assert!((r - 3f64.exp()).abs() < 1e-8);
        assert!(calls < 30, "{calls} evaluations");
    }

    #[test]
    fn bracketed_root_propagates_errors() {
        let r = bracketed_root(
            |_| Err(Error::Domain("boom".into())),
            1.0,
            2.0,
            1e-9,
            10,
            |_, _| false,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
