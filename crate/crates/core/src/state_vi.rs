//! Pointwise state constraints `g_- <= u <= g_+`, solved by the primal-dual
//! active set method (equivalently, semi-smooth Newton on the
//! complementarity system).
//!
//! With `lambda = (M + rho K) u - u_target` the discrete optimality system is
//!
//! ```text
//! F1 = (M + rho K) u - lambda - u_target = 0
//! F2 = lambda - min(0, lambda + c (g_+ - u)) - max(0, lambda + c (g_- - u)) = 0
//! ```
//!
//! Each iteration splits the nodes by the predictors `y_+- = lambda + c (g_+- - u)`
//! into an inactive set (`lambda = 0`) and two active sets (`u = g_+-`), then
//! solves the resulting linear system. Active rows are eliminated so that the
//! remaining system stays SPD.

use crate::active_set::{sizes, Safeguard};
use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::linsolve::pcg_jacobi;
use crate::mesh::Mesh;
use crate::options::{SolveReport, SolverOptions};
use crate::problem::DiscreteProblem;
use crate::sparse::{norm_inf, CsrMatrix};
use crate::unconstrained::solve_unconstrained_discrete;

pub use crate::active_set::{complementarity_norm, feasibility_violation, partition, Activity};

/// Box-constrained quadratic program `min 1/2 u^T A u - b^T u` with
/// `lower <= u <= upper`, in the form consumed by the active-set loop.
#[derive(Debug, Clone, Copy)]
pub struct BoxQp<'a> {
    pub system: &'a CsrMatrix,
    pub load: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl BoxQp<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.load.len();
        if self.system.nrows() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(invalid("dimension mismatch in box-constrained problem"));
        }
        if let Some(k) = (0..n).find(|&k| !(self.lower[k] < self.upper[k])) {
            return Err(invalid(format!(
                "infeasible barriers at index {k}: lower {} >= upper {}",
                self.lower[k], self.upper[k]
            )));
        }
        Ok(())
    }

    /// One linear solve for a fixed partition: `u = bound` on active
    /// indices, `lambda = 0` on inactive ones, and `A u - lambda = b`.
    /// Returns `(u, lambda, cg_iterations)`.
    pub fn solve_partition(
        &self,
        part: &[Activity],
        warm: Option<&[f64]>,
        linear_tol: f64,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let n = self.load.len();
        let mut u = vec![0.0; n];
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for k in 0..n {
            match part[k] {
                Activity::Inactive => free.push(k),
                Activity::Lower => {
                    u[k] = self.lower[k];
                    fixed.push(k);
                }
                Activity::Upper => {
                    u[k] = self.upper[k];
                    fixed.push(k);
                }
            }
        }
        let mut cg_iters = 0;
        if !free.is_empty() {
            let a_ff = self.system.principal_submatrix(&free);
            let a_fa = self.system.submatrix(&free, &fixed);
            let ua: Vec<f64> = fixed.iter().map(|&k| u[k]).collect();
            let coupling = a_fa.mul_vec(&ua);
            let rhs: Vec<f64> = free.iter().zip(&coupling).map(|(&k, c)| self.load[k] - c).collect();
            let x0: Option<Vec<f64>> = warm.map(|w| free.iter().map(|&k| w[k]).collect());
            let out = pcg_jacobi(&a_ff, &rhs, x0.as_deref(), linear_tol, 10 * free.len())?;
            cg_iters = out.iterations;
            for (&k, v) in free.iter().zip(out.x) {
                u[k] = v;
            }
        }
        let au = self.system.mul_vec(&u);
        let mut lambda = vec![0.0; n];
        for &k in &fixed {
            lambda[k] = au[k] - self.load[k];
        }
        Ok((u, lambda, cg_iters))
    }

    /// One active-set update from an arbitrary iterate `(u, lambda)`.
    pub fn update(&self, u: &[f64], lambda: &[f64], c: f64, linear_tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let part = partition(u, lambda, self.lower, self.upper, c);
        let (u, l, _) = self.solve_partition(&part, Some(u), linear_tol)?;
        Ok((u, l))
    }

    /// Max-norm of `A u - lambda - b`.
    pub fn equation_residual(&self, u: &[f64], lambda: &[f64]) -> f64 {
        let au = self.system.mul_vec(u);
        (0..u.len()).fold(0.0, |m, k| m.max((au[k] - lambda[k] - self.load[k]).abs()))
    }

    /// Run the active-set iteration from `(u0, 0)`.
    ///
    /// Stops once the partition repeats and the feasibility violation is
    /// below `opts.tol`; a repeated partition means the last solve is a
    /// fixed point, so the complementarity system then holds exactly.
    /// Stagnating iterations fall back to single-index changes, see
    /// [`Safeguard`].
    pub fn solve(&self, u0: Vec<f64>, opts: &SolverOptions) -> Result<BoxQpSolution> {
        self.validate()?;
        if !(opts.c > 0.0) {
            return Err(invalid(format!(
                "complementarity parameter must be positive, got {}",
                opts.c
            )));
        }
        let n = self.load.len();
        let mut u = u0;
        let mut lambda = vec![0.0; n];
        let mut guard = Safeguard::new(Safeguard::DEFAULT_PATIENCE);
        let mut part = partition(&u, &lambda, self.lower, self.upper, opts.c);
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut linear_iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            let (un, ln, it) = self.solve_partition(&part, Some(&u), opts.linear_tol)?;
            u = un;
            lambda = ln;
            linear_iterations += it;
            iterations += 1;
            history.push(sizes(&part));
            let proposal = partition(&u, &lambda, self.lower, self.upper, opts.c);
            if proposal == part && feasibility_violation(&u, self.lower, self.upper) < opts.tol {
                converged = true;
                break;
            }
            part = guard.next(&part, proposal);
        }
        let report = SolveReport {
            converged,
            iterations,
            active_history: history,
            feasibility_violation: feasibility_violation(&u, self.lower, self.upper),
            equation_residual: self.equation_residual(&u, &lambda),
            complementarity_residual: complementarity_norm(&u, &lambda, self.lower, self.upper, opts.c),
            linear_iterations,
            tol: opts.tol,
            c: opts.c,
        };
        Ok(BoxQpSolution {
            u,
            lambda,
            partition: part,
            report,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BoxQpSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub partition: Vec<Activity>,
    pub report: SolveReport,
}

/// Result of a state-constrained solve.
#[derive(Debug, Clone)]
pub struct StateViSolution {
    /// Full nodal state, zero on the boundary.
    pub u: Vec<f64>,
    /// Interior multiplier `lambda = (M + rho K) u - u_target`.
    pub lambda: Vec<f64>,
    pub report: SolveReport,
    /// Interior positions (into `interior`) held at the lower bound.
    pub active_minus: Vec<usize>,
    /// Interior positions held at the upper bound.
    pub active_plus: Vec<usize>,
    pub interior: Vec<usize>,
    /// Coordinates of the interior nodes, in `interior` order.
    pub interior_points: Vec<[f64; 2]>,
    pub rho: f64,
}

impl StateViSolution {
    pub fn u_interior(&self) -> Vec<f64> {
        self.interior.iter().map(|&i| self.u[i]).collect()
    }
}

/// Solve the state-constrained problem on `mesh`, with barriers sampled at
/// the nodes. Starts from the unconstrained solution and `lambda = 0`.
pub fn solve_state_constrained(
    mesh: &Mesh,
    rho: f64,
    target: &dyn ScalarField,
    g_minus: &dyn ScalarField,
    g_plus: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<StateViSolution> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    solve_state_discrete(&problem, g_minus, g_plus, opts)
}

pub fn solve_state_discrete(
    problem: &DiscreteProblem<'_>,
    g_minus: &dyn ScalarField,
    g_plus: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<StateViSolution> {
    let lower = problem.sample(g_minus);
    let upper = problem.sample(g_plus);
    let qp = BoxQp {
        system: &problem.system,
        load: &problem.load,
        lower: &lower,
        upper: &upper,
    };
    qp.validate()?;
    let (u0, _) = solve_unconstrained_discrete(problem, opts.linear_tol)?;
    let sol = qp.solve(u0, opts)?;
    let pick = |a: Activity| -> Vec<usize> {
        sol.partition
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == a)
            .map(|(k, _)| k)
            .collect()
    };
    Ok(StateViSolution {
        u: problem.extend(&sol.u),
        active_minus: pick(Activity::Lower),
        active_plus: pick(Activity::Upper),
        lambda: sol.lambda,
        report: sol.report,
        interior_points: problem.interior.iter().map(|&i| problem.mesh.nodes()[i]).collect(),
        interior: problem.interior.clone(),
        rho: problem.rho,
    })
}

/// Max over interior nodes of
/// `|lambda_k - min(0, lambda_k + c (g_+ - u_k)) - max(0, lambda_k + c (g_- - u_k))|`.
pub fn complementarity_residual(sol: &StateViSolution, g_minus: &dyn ScalarField, g_plus: &dyn ScalarField) -> f64 {
    let lower: Vec<f64> = sol.interior_points.iter().map(|p| g_minus.eval(p[0], p[1])).collect();
    let upper: Vec<f64> = sol.interior_points.iter().map(|p| g_plus.eval(p[0], p[1])).collect();
    complementarity_norm(&sol.u_interior(), &sol.lambda, &lower, &upper, sol.report.c)
}

/// Largest multiplier magnitude, used to scale residual checks.
pub fn multiplier_scale(sol: &StateViSolution) -> f64 {
    1.0 + norm_inf(&sol.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::constant;
    use crate::targets::{preset_constraints, ConstraintSpec, Preset, Target};

    fn g1() -> (crate::field::Field, crate::field::Field) {
        match preset_constraints(Preset::G1, 40.0) {
            ConstraintSpec::State { lower, upper } => (lower, upper),
            _ => unreachable!(),
        }
    }

    #[test]
    fn huge_barriers_reproduce_unconstrained_solution() {
        let m = Mesh::structured(16).unwrap();
        let t = Target::U1.as_field();
        let rho = m.spacing().powi(2);
        let opts = SolverOptions::default();
        let sol = solve_state_constrained(
            &m,
            rho,
            t.as_ref(),
            constant(-1e9).as_ref(),
            constant(1e9).as_ref(),
            &opts,
        )
        .unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.iterations, 1);
        assert!(sol.lambda.iter().all(|&l| l == 0.0));
        let free = crate::unconstrained::solve_unconstrained(&m, rho, t.as_ref(), &opts).unwrap();
        for (a, b) in sol.u.iter().zip(&free) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            complementarity_residual(&sol, constant(-1e9).as_ref(), constant(1e9).as_ref()),
            0.0
        );
    }

    #[test]
    fn infeasible_barriers_rejected() {
        let m = Mesh::structured(4).unwrap();
        let t = Target::U1.as_field();
        let r = solve_state_constrained(
            &m,
            0.01,
            t.as_ref(),
            constant(0.5).as_ref(),
            constant(0.5).as_ref(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn g1_solution_feasible_and_complementary() {
        let m = Mesh::structured(32).unwrap();
        let t = Target::U1.as_field();
        let (lo, up) = g1();
        let opts = SolverOptions::default();
        let sol =
            solve_state_constrained(&m, m.spacing().powi(2), t.as_ref(), lo.as_ref(), up.as_ref(), &opts).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report);
        assert!(sol.report.feasibility_violation < opts.tol);
        assert!(!sol.active_plus.is_empty());
        for (k, p) in sol.interior_points.iter().enumerate() {
            let u = sol.u[sol.interior[k]];
            assert!(u <= up.eval(p[0], p[1]) + 1e-5 && u >= -1e-5);
        }
        for &k in &sol.active_plus {
            assert!(sol.lambda[k] <= opts.tol);
        }
        assert!(complementarity_residual(&sol, lo.as_ref(), up.as_ref()) <= 1e-8 * multiplier_scale(&sol));
        assert!(sol.report.equation_residual <= 1e-8 * norm_inf(&sol.lambda).max(1e-3));
    }

    #[test]
    fn constrained_objective_dominates_unconstrained() {
        let m = Mesh::structured(12).unwrap();
        let t = Target::U1.as_field();
        let p = DiscreteProblem::new(&m, m.spacing().powi(2), t.as_ref(), 1).unwrap();
        let (free, _) = solve_unconstrained_discrete(&p, 1e-12).unwrap();
        let (lo, up) = g1();
        let sol = solve_state_discrete(&p, lo.as_ref(), up.as_ref(), &SolverOptions::default()).unwrap();
        assert!(!sol.active_plus.is_empty());
        assert!(p.objective(&sol.u_interior()) > p.objective(&free));
    }

    #[test]
    fn mirror_symmetry() {
        let m = Mesh::structured(16).unwrap();
        let t = Target::U1.as_field();
        let (lo, up) = g1();
        let sol = solve_state_constrained(
            &m,
            m.spacing().powi(2),
            t.as_ref(),
            lo.as_ref(),
            up.as_ref(),
            &SolverOptions {
                linear_tol: 1e-14,
                ..Default::default()
            },
        )
        .unwrap();
        let np = 17;
        for j in 0..np {
            for i in 0..np {
                assert!((sol.u[j * np + i] - sol.u[i * np + j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fixed_point_independent_of_c() {
        let m = Mesh::structured(16).unwrap();
        let t = Target::U2 { k: 40.0 }.as_field();
        let (lo, up) = g1();
        let solve = |c: f64| {
            let opts = SolverOptions {
                c,
                linear_tol: 1e-14,
                subdivisions: 4,
                ..Default::default()
            };
            solve_state_constrained(&m, m.spacing().powi(2), t.as_ref(), lo.as_ref(), up.as_ref(), &opts).unwrap()
        };
        let base = solve(1.0);
        assert!(base.report.converged);
        for c in [0.1, 100.0] {
            let other = solve(c);
            assert!(other.report.converged);
            for (a, b) in base.u.iter().zip(&other.u) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn iteration_limit_reports_nonconvergence() {
        let m = Mesh::structured(16).unwrap();
        let t = Target::U2 { k: 40.0 }.as_field();
        let (lo, up) = g1();
        let opts = SolverOptions {
            max_iter: 1,
            ..Default::default()
        };
        let sol =
            solve_state_constrained(&m, m.spacing().powi(2), t.as_ref(), lo.as_ref(), up.as_ref(), &opts).unwrap();
        assert!(!sol.report.converged);
        assert_eq!(sol.report.iterations, 1);
    }
}
