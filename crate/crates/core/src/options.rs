//! Solver options and the per-solve report.

use serde::Serialize;

use crate::linsolve::DEFAULT_REL_TOL;

/// Options shared by the unconstrained and active-set solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Complementarity parameter `c > 0` in the active-set predictors.
    pub c: f64,
    /// Feasibility tolerance of the stopping rule (maximal nodal violation).
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of every inner linear solve.
    pub linear_tol: f64,
    /// Each element is split into `subdivisions^2` pieces for load vectors.
    pub subdivisions: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-5,
            max_iter: 100,
            linear_tol: DEFAULT_REL_TOL,
            subdivisions: 1,
        }
    }
}

/// Sizes of the lower and upper active sets used in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActiveSetSizes {
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of linear solves performed by the active-set loop.
    pub iterations: usize,
    pub active_history: Vec<ActiveSetSizes>,
    /// `max(tol_+, tol_-)` of the final iterate.
    pub feasibility_violation: f64,
    /// Max-norm of the linear optimality residual `F_1`.
    pub equation_residual: f64,
    /// Max-norm of the complementarity residual `F_2`.
    pub complementarity_residual: f64,
    pub linear_iterations: usize,
    pub tol: f64,
    pub c: f64,
}
