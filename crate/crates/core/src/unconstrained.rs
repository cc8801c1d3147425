//! The unconstrained problem `(M + rho K) u = u_target` on interior nodes.

use crate::error::Result;
use crate::field::ScalarField;
use crate::linsolve::pcg_jacobi;
use crate::mesh::Mesh;
use crate::options::SolverOptions;
use crate::problem::DiscreteProblem;

/// Interior solution of `(M + rho K) u = u_target` and the CG iteration count.
pub fn solve_unconstrained_discrete(problem: &DiscreteProblem<'_>, linear_tol: f64) -> Result<(Vec<f64>, usize)> {
    let max_iter = 10 * problem.dofs().max(1);
    let out = pcg_jacobi(&problem.system, &problem.load, None, linear_tol, max_iter)?;
    Ok((out.x, out.iterations))
}

/// Full nodal solution, zero on the boundary.
pub fn solve_unconstrained(mesh: &Mesh, rho: f64, target: &dyn ScalarField, opts: &SolverOptions) -> Result<Vec<f64>> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    let (u, _) = solve_unconstrained_discrete(&problem, opts.linear_tol)?;
    Ok(problem.extend(&u))
}
