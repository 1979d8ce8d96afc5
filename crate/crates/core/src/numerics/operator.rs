// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nyström discretization of the transition kernels of the detection
//! statistic, Fredholm solves, and the leading eigenpair.
//!
//! Orientation: row `j` of the matrix belongs to the *starting* state
//! `y = node_j`, column `i` to the *target* `x = node_i`, and
//! `matrix[j][i] = weight_i · k(node_j, node_i)`. Applied to a function,
//! `(T u)(y_j) = Σ_i matrix[j][i] u(x_i)`. Measures are carried as node
//! masses `m_j ≈ weight_j · q(y_j)` and evolve by the transpose,
//! `m'_i = Σ_j m_j matrix[j][i]`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use std::sync::Arc;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::{ChangepointModel, Regime};

/// Which recursion the kernel describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recursion {
    /// `x = (1 + y) Λ`; kernel `∂/∂x F(x/(1+y))`.
    Forward,
    /// `x = (1 + y) / Λ`; kernel `-∂/∂x F((1+y)/x)`.
    Reciprocal,
}

#[derive(Clone, Debug)]
pub struct DiscretizedOperator {
    grid: Grid,
    model: ChangepointModel,
    regime: Regime,
    recursion: Recursion,
    matrix: Vec<f64>,
}

impl DiscretizedOperator {
    /// Discretizes `∂/∂x F_j(x/(1+y))` (the one-step law of
    /// `R_{n+1} = (1 + R_n) Λ_{n+1}` under `regime`) on the grid.
    pub fn forward(model: &ChangepointModel, regime: Regime, grid: &Grid) -> Result<Self> {
        Self::build(model, regime, grid, Recursion::Forward)
    }

    /// Discretizes `-∂/∂x F_j((1+y)/x)`, the one-step law of
    /// `V_n = (1 + V_{n-1}) / Λ_n`.
    pub fn reciprocal(model: &ChangepointModel, regime: Regime, grid: &Grid) -> Result<Self> {
        Self::build(model, regime, grid, Recursion::Reciprocal)
    }

    fn build(
        model: &ChangepointModel,
        regime: Regime,
        grid: &Grid,
        recursion: Recursion,
    ) -> Result<Self> {
        if model.pdf_lr(regime, 1.0).is_none() {
            return Err(model.unsupported("kernel discretization needs a likelihood-ratio density"));
        }
        let n = grid.len();
        let mut op = DiscretizedOperator {
            grid: grid.clone(),
            model: model.clone(),
            regime,
            recursion,
            matrix: vec![0.0; n * n],
        };
        let mut matrix = std::mem::take(&mut op.matrix);
        for (j, row) in matrix.chunks_exact_mut(n).enumerate() {
            op.fill_row(grid.nodes()[j], row);
        }
        op.matrix = matrix;
        Ok(op)
    }

    /// Transition density from `y` to `x`.
    pub fn kernel(&self, y: f64, x: f64) -> f64 {
        let pdf = |t: f64| self.model.pdf_lr(self.regime, t).unwrap_or(0.0);
        match self.recursion {
            Recursion::Forward => pdf(x / (1.0 + y)) / (1.0 + y),
            Recursion::Reciprocal => {
                if x <= 0.0 {
                    0.0
                } else {
                    let t = (1.0 + y) / x;
                    pdf(t) * t / x
                }
            }
        }
    }

    /// One-step transition probability `P(next ≤ x | current = y)`.
    pub fn transition_cdf(&self, y: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.recursion {
            Recursion::Forward => self.model.cdf_lr_unchecked(self.regime, x / (1.0 + y)),
            Recursion::Reciprocal => {
                1.0 - self.model.cdf_lr_unchecked(self.regime, (1.0 + y) / x)
            }
        }
    }

    fn fill_row(&self, y: f64, row: &mut [f64]) {
        for ((out, &x), &w) in row.iter_mut().zip(self.grid.nodes()).zip(self.grid.weights()) {
            *out = w * self.kernel(y, x);
        }
    }

    /// The discretized kernel row for an arbitrary starting state `y`, used
    /// for the Nyström (natural) interpolation of solutions off the grid.
    pub fn row_at(&self, y: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.grid.len()];
        self.fill_row(y, &mut row);
        row
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.len();
        &self.matrix[j * n..(j + 1) * n]
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn recursion(&self) -> Recursion {
        self.recursion
    }

    pub fn model(&self) -> &ChangepointModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Entry `(j, i)`: starting state `node_j`, target `node_i`.
    pub fn entry(&self, j: usize, i: usize) -> f64 {
        self.matrix[j * self.grid.len() + i]
    }

    /// `(T u)_j = Σ_i matrix[j][i] u_i`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.len());
        self.matrix
            .chunks_exact(self.len())
            .map(|row| dot(row, u))
            .collect()
    }

    /// Natural interpolation of `T u` at an arbitrary starting state.
    pub fn apply_at(&self, y: f64, u: &[f64]) -> f64 {
        dot(&self.row_at(y), u)
    }

    /// Evolves node masses one step: `m'_i = Σ_j m_j matrix[j][i]`.
    pub fn push_forward(&self, masses: &[f64]) -> Vec<f64> {
        assert_eq!(masses.len(), self.len());
        let n = self.len();
        let mut out = vec![0.0; n];
        for (row, &m) in self.matrix.chunks_exact(n).zip(masses) {
            if m != 0.0 {
                for (o, &r) in out.iter_mut().zip(row) {
                    *o += m * r;
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.len())
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Crude spectral-radius estimate by power iteration on functions;
    /// used for diagnostics only.
    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        let mut u = vec![1.0; self.len()];
        let mut rho = 0.0;
        for _ in 0..iterations {
            let v = self.apply(&u);
            let norm = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if norm == 0.0 {
                return 0.0;
            }
            rho = norm / u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            u = v.into_iter().map(|x| x / norm).collect();
        }
        rho
    }

    fn factor(&self) -> Result<faer::linalg::solvers::PartialPivLu<f64>> {
        let n = self.len();
        let a = Mat::<f64>::from_fn(n, n, |j, i| {
            let t = self.entry(j, i);
            if i == j {
                1.0 - t
            } else {
                -t
            }
        });
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if !(lo > 1e-12 * hi) {
            return Err(Error::Conditioning {
                spectral_radius: self.spectral_radius_estimate(200),
                reason: format!("I - T is numerically singular (pivot ratio {:.3e})", lo / hi),
            });
        }
        Ok(lu)
    }

    /// Solves `u = rhs + T u` once. See [`FredholmSolver::solve`].
    pub fn solve_fredholm(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = self.factor()?;
        solve_checked(self, &lu, rhs)
    }

    /// Leading eigenvalue and eigen-measure of the transpose action, by
    /// power iteration on node masses normalized to unit total mass.
    ///
    /// Stops once successive eigenvalue estimates differ by less than
    /// `1e-12` and the mass residual `‖Tᵀm − λm‖₁` is below `1e-10`.
    pub fn leading_eigenpair(&self, max_iterations: usize) -> Result<Eigenpair> {
        let total: f64 = self.grid.weights().iter().sum();
        let mut masses: Vec<f64> = self.grid.weights().iter().map(|w| w / total).collect();
        let mut eigenvalue = f64::NAN;
        let mut residual = f64::INFINITY;
        for it in 1..=max_iterations {
            let next = self.push_forward(&masses);
            let lambda: f64 = next.iter().sum();
            if !(lambda > 0.0) {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: f64::NAN,
                });
            }
            residual = next
                .iter()
                .zip(&masses)
                .map(|(a, b)| (a - lambda * b).abs())
                .sum();
            let change = (lambda - eigenvalue).abs();
            eigenvalue = lambda;
            masses = next.into_iter().map(|m| m / lambda).collect();
            if change < 1e-12 && residual < 1e-10 {
                let density = masses
                    .iter()
                    .zip(self.grid.weights())
                    .map(|(m, w)| m / w)
                    .collect();
                return Ok(Eigenpair {
                    eigenvalue,
                    masses,
                    density,
                    iterations: it,
                    residual,
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iterations,
            residual,
        })
    }
}

/// LU factorization of `I - T`, reusable across right-hand sides.
pub struct FredholmSolver {
    op: Arc<DiscretizedOperator>,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl FredholmSolver {
    pub fn new(op: Arc<DiscretizedOperator>) -> Result<Self> {
        let lu = op.factor()?;
        Ok(FredholmSolver { op, lu })
    }

    /// Solves `u = rhs + T u`. See [`solve_checked`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_checked(&self.op, &self.lu, rhs)
    }

    pub fn operator(&self) -> &DiscretizedOperator {
        &self.op
    }
}

/// Solves with a factorization of `I - T` and checks the residual
/// `‖u − rhs − T u‖_∞ < 1e-10 ‖u‖_∞`.
fn solve_checked(
    op: &DiscretizedOperator,
    lu: &faer::linalg::solvers::PartialPivLu<f64>,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = op.len();
    if rhs.len() != n {
        return Err(Error::Config(format!(
            "right-hand side has {} values, grid has {n}",
            rhs.len()
        )));
    }
    let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let u: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let tu = op.apply(&u);
    let scale = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let residual = u
        .iter()
        .zip(rhs)
        .zip(&tu)
        .fold(0.0f64, |a, ((u, r), t)| a.max((u - r - t).abs()));
    if scale == 0.0 && residual == 0.0 {
        return Ok(u);
    }
    if !(residual <= 1e-10 * scale) {
        return Err(Error::Conditioning {
            spectral_radius: op.spectral_radius_estimate(200),
            reason: format!(
                "Fredholm residual {residual:.3e} relative to solution scale {scale:.3e}"
            ),
        });
    }
    Ok(u)
}

/// Result of [`DiscretizedOperator::leading_eigenpair`].
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub eigenvalue: f64,
    /// Node masses summing to one.
    pub masses: Vec<f64>,
    /// Density values at the nodes, integrating to one on the grid.
    pub density: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_pre(a: f64, n: usize) -> DiscretizedOperator {
        let grid = Grid::new(a, n).unwrap();
        DiscretizedOperator::forward(&ChangepointModel::Beta, Regime::Pre, &grid).unwrap()
    }

    #[test]
    fn row_sums_match_cdf_at_boundary() {
        let op = beta_pre(43.0, 2048);
        let f = |t: f64| 1.0 - (1.0 + t).powi(-2);
        let at_zero = op.row_at(0.0).iter().sum::<f64>();
        assert!((at_zero - f(43.0)).abs() < 1e-10);
        assert!((at_zero - 0.99948).abs() < 1e-5);
        let at_42 = op.row_at(42.0).iter().sum::<f64>();
        assert!((at_42 - 0.75).abs() < 1e-10);
        for (j, s) in op.row_sums().iter().enumerate() {
            let y = op.grid().nodes()[j];
            assert!((s - f(43.0 / (1.0 + y))).abs() < 1e-8);
            assert!(*s <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn entries_nonnegative_for_builtins() {
        let grid = Grid::new(20.0, 128).unwrap();
        for m in [
            ChangepointModel::Beta,
            ChangepointModel::gaussian(1.0).unwrap(),
            ChangepointModel::exponential(0.5).unwrap(),
            ChangepointModel::exponential(2.0).unwrap(),
        ] {
            for regime in [Regime::Pre, Regime::Post] {
                for op in [
                    DiscretizedOperator::forward(&m, regime, &grid).unwrap(),
                    DiscretizedOperator::reciprocal(&m, regime, &grid).unwrap(),
                ] {
                    assert!(op.matrix.iter().all(|&v| v >= 0.0 && v.is_finite()));
                }
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let op = beta_pre(10.0, 128);
        let u = op.solve_fredholm(&vec![0.0; op.len()]).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fredholm_residual_small() {
        let op = beta_pre(21.0, 512);
        let rhs = vec![1.0; op.len()];
        let u = op.solve_fredholm(&rhs).unwrap();
        let tu = op.apply(&u);
        let scale = u.iter().cloned().fold(0.0, f64::max);
        for i in 0..u.len() {
            assert!((u[i] - 1.0 - tu[i]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn stochastic_kernel_is_rejected_as_singular() {
        // On a long grid the pre-change kernel is almost stochastic; scaling
        // it up past one makes I - T singular or indefinite.
        let mut op = beta_pre(5.0, 64);
        for v in op.matrix.iter_mut() {
            *v *= 1.0 / 0.9;
        }
        // Force an exact unit eigenvalue: rows sum to one.
        let n = op.len();
        for j in 0..n {
            let s: f64 = op.matrix[j * n..(j + 1) * n].iter().sum();
            for v in &mut op.matrix[j * n..(j + 1) * n] {
                *v /= s;
            }
        }
        let err = op.solve_fredholm(&vec![1.0; n]).unwrap_err();
        match err {
            Error::Conditioning { spectral_radius, .. } => {
                assert!((spectral_radius - 1.0).abs() < 1e-6)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eigenpair_is_subunit_and_nonnegative() {
        for a in [5.0, 43.0] {
            let op = beta_pre(a, 512);
            let e = op.leading_eigenpair(10_000).unwrap();
            assert!(e.eigenvalue > 0.0 && e.eigenvalue < 1.0);
            assert!(e.masses.iter().all(|&m| m >= 0.0));
            assert!((e.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(e.residual < 1e-8);
        }
    }

    #[test]
    fn eigenpair_reports_non_convergence() {
        let op = beta_pre(43.0, 128);
        assert!(matches!(
            op.leading_eigenpair(2),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn custom_models_cannot_be_discretized() {
        use rand::Rng;
        let custom = crate::model::CustomModel::new(
            "u",
            |_| 1.0,
            |x| 2.0 * x,
            |rng| rng.random::<f64>(),
            |rng| rng.random::<f64>().sqrt(),
            100,
            1,
        )
        .unwrap();
        let m = ChangepointModel::Custom(std::sync::Arc::new(custom));
        let grid = Grid::new(5.0, 64).unwrap();
        assert!(matches!(
            DiscretizedOperator::forward(&m, Regime::Pre, &grid),
            Err(Error::UnsupportedModel { .. })
        ));
    }
}
