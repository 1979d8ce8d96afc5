// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared numerical machinery: quadrature grids, kernel discretization,
//! Fredholm solves, leading eigenpairs, and bracketed root finding.

pub mod grid;
pub mod operator;
pub mod quadrature;
pub mod roots;

pub use grid::Grid;
pub use operator::{DiscretizedOperator, Eigenpair, FredholmSolver, Recursion};
