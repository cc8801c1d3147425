//! Brute-force reference solutions for small instances, used by the test
//! suites and by `eocp verify`.
//!
//! Both constrained problems are strictly convex quadratic programs, so
//! exactly one partition of the indices into inactive, lower-active and
//! upper-active satisfies the KKT conditions. The enumeration oracles try
//! all `3^n` partitions with dense elimination and return that one.

use std::f64::consts::PI;

use rand::Rng;

use crate::control_vi::{bound_moments, solve_control_discrete};
use crate::error::{invalid, Error, Result};
use crate::field::{field, Field, ScalarField};
use crate::linsolve::dense_solve;
use crate::mesh::Mesh;
use crate::options::SolverOptions;
use crate::problem::DiscreteProblem;
use crate::state_vi::{solve_state_discrete, BoxQp};

/// Largest problem the enumeration oracles accept (`3^12 = 531441` solves).
pub const MAX_ENUMERATION_DIM: usize = 12;

fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn scale_of(v: &[f64]) -> f64 {
    v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Calls `visit` with every partition of `n` indices, stopping early when it
/// returns `Some`.
fn enumerate<T>(n: usize, mut visit: impl FnMut(&[u8]) -> Option<T>) -> Option<T> {
    let mut code = vec![0u8; n];
    loop {
        if let Some(t) = visit(&code) {
            return Some(t);
        }
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            code[i] += 1;
            if code[i] < 3 {
                break;
            }
            code[i] = 0;
            i += 1;
        }
    }
}

/// KKT point of `min 1/2 u^T A u - b^T u` subject to `lower <= u <= upper`
/// by exhaustive enumeration. Returns `(u, lambda)` with `lambda = A u - b`
/// on active indices and zero elsewhere.
pub fn enumerate_box_qp(a: &[Vec<f64>], b: &[f64], lower: &[f64], upper: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    if n > MAX_ENUMERATION_DIM {
        return Err(invalid(format!(
            "enumeration limited to {MAX_ENUMERATION_DIM} unknowns"
        )));
    }
    let tol = 1e-11 * (scale_of(b) + scale_of(lower) + scale_of(upper));
    enumerate(n, |code| {
        let mut u = vec![0.0; n];
        let free: Vec<usize> = (0..n).filter(|&k| code[k] == 0).collect();
        for k in 0..n {
            match code[k] {
                1 => u[k] = lower[k],
                2 => u[k] = upper[k],
                _ => {}
            }
        }
        if !free.is_empty() {
            let sub: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| a[i][j]).collect()).collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| b[i] - (0..n).filter(|&j| code[j] != 0).map(|j| a[i][j] * u[j]).sum::<f64>())
                .collect();
            let x = dense_solve(sub, rhs).ok()?;
            for (&k, v) in free.iter().zip(x) {
                u[k] = v;
            }
        }
        let r = dense_mul(a, &u);
        let mut lambda = vec![0.0; n];
        for k in 0..n {
            let ok = match code[k] {
                0 => u[k] >= lower[k] - tol && u[k] <= upper[k] + tol,
                1 => {
                    lambda[k] = r[k] - b[k];
                    lambda[k] >= -tol
                }
                _ => {
                    lambda[k] = r[k] - b[k];
                    lambda[k] <= tol
                }
            };
            if !ok {
                return None;
            }
        }
        Some((u, lambda))
    })
    .ok_or_else(|| Error::SolverFailure {
        iterations: 3usize.pow(n as u32),
        residual: f64::NAN,
    })
}

/// KKT point of `min 1/2 u^T A u - b^T u` subject to
/// `lower <= K u <= upper` by exhaustive enumeration. Returns `(u, w)` with
/// `K w = A u - b`.
pub fn enumerate_flux_qp(
    a: &[Vec<f64>],
    k: &[Vec<f64>],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    if n > MAX_ENUMERATION_DIM {
        return Err(invalid(format!(
            "enumeration limited to {MAX_ENUMERATION_DIM} unknowns"
        )));
    }
    let tol = 1e-11 * (scale_of(b) + scale_of(lower) + scale_of(upper));
    enumerate(n, |code| {
        let act: Vec<usize> = (0..n).filter(|&i| code[i] != 0).collect();
        let dim = n + act.len();
        let mut m = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            m[i][..n].copy_from_slice(&a[i]);
            rhs[i] = b[i];
        }
        for (r, &i) in act.iter().enumerate() {
            for j in 0..n {
                m[n + r][j] = k[i][j];
                m[j][n + r] = k[i][j];
            }
            rhs[n + r] = if code[i] == 1 { lower[i] } else { upper[i] };
        }
        let x = dense_solve(m, rhs).ok()?;
        let u = x[..n].to_vec();
        let mut w = vec![0.0; n];
        for (r, &i) in act.iter().enumerate() {
            w[i] = -x[n + r];
        }
        let flux = dense_mul(k, &u);
        for i in 0..n {
            let ok = match code[i] {
                0 => flux[i] >= lower[i] - tol && flux[i] <= upper[i] + tol,
                1 => w[i] >= -tol,
                _ => w[i] <= tol,
            };
            if !ok {
                return None;
            }
        }
        Some((u, w))
    })
    .ok_or_else(|| Error::SolverFailure {
        iterations: 3usize.pow(n as u32),
        residual: f64::NAN,
    })
}

/// One semi-smooth Newton step for the state-constrained system
///
/// ```text
/// F1 = A u - lambda - b
/// F2 = lambda - min(0, lambda + c (upper - u)) - max(0, lambda + c (lower - u))
/// ```
///
/// built from the explicit slant derivative
/// `[[A, -I], [c D, I - D]]` with `D` the indicator of the active
/// predictors, and solved densely.
pub fn newton_step_dense(
    a: &[Vec<f64>],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    c: f64,
    u: &[f64],
    lambda: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    let au = dense_mul(a, u);
    let mut jac = vec![vec![0.0; 2 * n]; 2 * n];
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        jac[i][..n].copy_from_slice(&a[i]);
        jac[i][n + i] = -1.0;
        rhs[i] = -(au[i] - lambda[i] - b[i]);
        let y_plus = lambda[i] + c * (upper[i] - u[i]);
        let y_minus = lambda[i] + c * (lower[i] - u[i]);
        let d = if y_plus < 0.0 || y_minus > 0.0 { 1.0 } else { 0.0 };
        jac[n + i][i] = c * d;
        jac[n + i][n + i] = 1.0 - d;
        rhs[n + i] = -(lambda[i] - y_plus.min(0.0) - y_minus.max(0.0));
    }
    let delta = dense_solve(jac, rhs)?;
    Ok((
        (0..n).map(|i| u[i] + delta[i]).collect(),
        (0..n).map(|i| lambda[i] + delta[n + i]).collect(),
    ))
}

/// Random `sum a_kl sin(k pi x) sin(l pi y)` over `1 <= k, l <= modes` with
/// coefficients decaying like `1/(k l)`, scaled to `amplitude`.
pub fn random_smooth_field<R: Rng>(rng: &mut R, modes: usize, amplitude: f64) -> Field {
    let mut terms = Vec::new();
    for k in 1..=modes {
        for l in 1..=modes {
            let a: f64 = rng.gen_range(-1.0..1.0) * amplitude / (k * l) as f64;
            terms.push((a, k as f64 * PI, l as f64 * PI));
        }
    }
    field(move |x, y| terms.iter().map(|(a, p, q)| a * (p * x).sin() * (q * y).sin()).sum())
}

/// A random state-constrained instance: target, lower and upper barrier with
/// `lower < upper` everywhere.
pub fn random_state_instance<R: Rng>(rng: &mut R) -> (Field, Field, Field) {
    let target = random_smooth_field(rng, 3, 1.5);
    let base = random_smooth_field(rng, 2, 0.2);
    let width = random_smooth_field(rng, 2, 0.2);
    let lo_shift: f64 = rng.gen_range(-0.4..-0.05);
    let gap: f64 = rng.gen_range(0.1..0.6);
    let base2 = base.clone();
    let lower = field(move |x, y| lo_shift + base.eval(x, y));
    let upper = field(move |x, y| lo_shift + base2.eval(x, y) + gap + width.eval(x, y).abs());
    (target, lower, upper)
}

/// A random control-constrained instance: target and bound functions with
/// `lower < upper` everywhere.
pub fn random_control_instance<R: Rng>(rng: &mut R) -> (Field, Field, Field) {
    let target = random_smooth_field(rng, 3, 1.5);
    let wiggle = random_smooth_field(rng, 2, 2.0);
    let lo: f64 = rng.gen_range(-12.0..-1.0);
    let hi: f64 = rng.gen_range(1.0..12.0);
    let w2 = wiggle.clone();
    let lower = field(move |x, y| lo + wiggle.eval(x, y) - 1.0);
    let upper = field(move |x, y| hi + w2.eval(x, y) + 1.0);
    (target, lower, upper)
}

/// Deviation of an active-set solution from the enumeration oracle, in the
/// max norm over interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDeviation {
    pub state: f64,
    pub multiplier: f64,
    /// `1 + |multiplier|_inf` of the oracle solution.
    pub multiplier_scale: f64,
    pub iterations: usize,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Solve a state-constrained instance with the active-set method and
/// compare against the enumeration oracle.
pub fn check_state_instance(
    mesh: &Mesh,
    rho: f64,
    target: &dyn ScalarField,
    lower: &dyn ScalarField,
    upper: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<OracleDeviation> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    let sol = solve_state_discrete(&problem, lower, upper, opts)?;
    let (u, lambda) = enumerate_box_qp(
        &problem.system.to_dense(),
        &problem.load,
        &problem.sample(lower),
        &problem.sample(upper),
    )?;
    Ok(OracleDeviation {
        state: max_diff(&sol.u_interior(), &u),
        multiplier: max_diff(&sol.lambda, &lambda),
        multiplier_scale: 1.0 + lambda.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        iterations: sol.report.iterations,
    })
}

/// Control-constrained counterpart of [`check_state_instance`].
pub fn check_control_instance(
    mesh: &Mesh,
    rho: f64,
    target: &dyn ScalarField,
    lower: &dyn ScalarField,
    upper: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<OracleDeviation> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    let sol = solve_control_discrete(&problem, lower, upper, opts)?;
    let (lo, up) = bound_moments(&problem, lower, upper)?;
    let (u, w) = enumerate_flux_qp(
        &problem.system.to_dense(),
        &problem.stiffness.to_dense(),
        &problem.load,
        &lo,
        &up,
    )?;
    Ok(OracleDeviation {
        state: max_diff(&sol.u_interior(), &u),
        multiplier: max_diff(&sol.w, &w),
        multiplier_scale: 1.0 + w.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        iterations: sol.report.iterations,
    })
}

/// Difference between one active-set update and one dense semi-smooth
/// Newton step from a random iterate of a random state-constrained instance
/// on `mesh`.
pub fn check_newton_step<R: Rng>(rng: &mut R, mesh: &Mesh, rho: f64) -> Result<f64> {
    let (target, lower, upper) = random_state_instance(rng);
    let problem = DiscreteProblem::new(mesh, rho, target.as_ref(), 1)?;
    let lo = problem.sample(lower.as_ref());
    let up = problem.sample(upper.as_ref());
    let n = problem.dofs();
    let u: Vec<f64> = (0..n).map(|k| rng.gen_range(lo[k] - 0.3..up[k] + 0.3)).collect();
    let scale = scale_of(&problem.load);
    let lambda: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let c = rng.gen_range(0.1..10.0);
    let qp = BoxQp {
        system: &problem.system,
        load: &problem.load,
        lower: &lo,
        upper: &up,
    };
    let (u1, l1) = qp.update(&u, &lambda, c, 1e-15)?;
    let (u2, l2) = newton_step_dense(&problem.system.to_dense(), &problem.load, &lo, &up, c, &u, &lambda)?;
    Ok(max_diff(&u1, &u2).max(max_diff(&l1, &l2)))
}
