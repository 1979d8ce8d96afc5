// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::Serialize;

use super::quadrature::{gauss_legendre, PANEL_ORDER};
use crate::error::{Error, Result};

/// Smallest accepted node count.
pub const MIN_NODES: usize = 64;

/// Composite Gauss-Legendre quadrature on `[0, upper]`.
///
/// Panel breakpoints are equally spaced in `log(1 + x)`. The transition
/// kernels of the detection statistic vary on the scale `1 + y`, so this
/// spends nodes where the kernels change fastest while each panel keeps the
/// polynomial exactness of the underlying Gauss-Legendre rule.
#[derive(Clone, Debug, Serialize)]
pub struct Grid {
    upper: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid with `n` nodes, rounded up to a whole number of
    /// [`PANEL_ORDER`]-point panels.
    pub fn new(upper: f64, n: usize) -> Result<Self> {
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(Error::Config(format!(
                "grid upper bound must be positive and finite, got {upper}"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let panels = n.div_ceil(PANEL_ORDER);
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let s_max = upper.ln_1p();
        let breakpoint = |k: usize| {
            if k == panels {
                upper
            } else {
                (s_max * k as f64 / panels as f64).exp_m1()
            }
        };
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for k in 0..panels {
            let (lo, hi) = (breakpoint(k), breakpoint(k + 1));
            let half = 0.5 * (hi - lo);
            let mid = lo + half;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Ok(Grid {
            upper,
            nodes,
            weights,
        })
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_0^upper h(x) dx` by the grid's quadrature.
    pub fn integrate(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum()
    }

    /// Quadrature of a function sampled at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}
