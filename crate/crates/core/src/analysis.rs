//! Error norms against analytic fields, convergence orders, and the
//! convergence study harness.

use std::time::Instant;

use serde::Serialize;

use crate::assembly::p1_gradients;
use crate::control_vi::solve_control_discrete;
use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::mesh::{coarse_fine_pair, Mesh};
use crate::options::{SolveReport, SolverOptions};
use crate::problem::{DiscreteProblem, RhoChoice};
use crate::quadrature::{for_each_point, QuadratureRule};
use crate::recovery::{control_dual_error, reconstruct_control, OUTER_TOL};
use crate::state_vi::solve_state_discrete;
use crate::targets::{ConstraintSpec, Target};
use crate::unconstrained::solve_unconstrained_discrete;

/// `||u_h - exact||_{L2}` for the full nodal vector `u`, with every element
/// split into `subdivisions^2` pieces before applying `rule`.
pub fn l2_error(u: &[f64], mesh: &Mesh, exact: &dyn ScalarField, rule: &QuadratureRule, subdivisions: usize) -> f64 {
    let mut acc = 0.0;
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let verts = mesh.vertices(e);
        for_each_point(&verts, rule, subdivisions, |bary, p, w| {
            let uh = bary[0] * u[nodes[0]] + bary[1] * u[nodes[1]] + bary[2] * u[nodes[2]];
            let d = uh - exact.eval(p[0], p[1]);
            acc += w * d * d;
        });
    }
    acc.sqrt()
}

/// `||grad u_h - exact_gradient||_{L2}`.
pub fn h1_seminorm_error(
    u: &[f64],
    mesh: &Mesh,
    exact_gradient: &dyn Fn(f64, f64) -> [f64; 2],
    rule: &QuadratureRule,
    subdivisions: usize,
) -> f64 {
    let mut acc = 0.0;
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let verts = mesh.vertices(e);
        // the structured mesh has no degenerate elements
        let (grads, _) = p1_gradients(&verts, e).expect("degenerate element");
        let mut gh = [0.0; 2];
        for k in 0..3 {
            gh[0] += u[nodes[k]] * grads[k][0];
            gh[1] += u[nodes[k]] * grads[k][1];
        }
        for_each_point(&verts, rule, subdivisions, |_, p, w| {
            let g = exact_gradient(p[0], p[1]);
            acc += w * ((gh[0] - g[0]).powi(2) + (gh[1] - g[1]).powi(2));
        });
    }
    acc.sqrt()
}

/// `eoc_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i)` for `i >= 1`. Entries
/// involving a zero or non-finite error are NaN.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(invalid("eoc needs at least two errors and as many mesh sizes"));
    }
    if hs.iter().any(|&h| !(h > 0.0)) {
        return Err(invalid("mesh sizes must be positive"));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            if e[0] > 0.0 && e[1] > 0.0 && e[0].is_finite() && e[1].is_finite() {
                (e[0] / e[1]).ln() / (h[0] / h[1]).ln()
            } else {
                f64::NAN
            }
        })
        .collect())
}

/// Least-squares slope of `log e` against `log x`.
pub fn loglog_slope(xs: &[f64], errors: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Result of one solve at a fixed mesh and `rho`.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    /// Full nodal state.
    pub u: Vec<f64>,
    /// Interior multiplier: `lambda` for state, `w` for control constraints.
    pub multiplier: Option<Vec<f64>>,
    pub interior: Vec<usize>,
    /// `None` for unconstrained solves.
    pub report: Option<SolveReport>,
    pub linear_iterations: usize,
}

impl LevelSolution {
    pub fn converged(&self) -> bool {
        self.report.as_ref().map_or(true, |r| r.converged)
    }

    pub fn newton_iterations(&self) -> usize {
        self.report.as_ref().map_or(0, |r| r.iterations)
    }
}

/// Dispatch on the constraint mode.
pub fn solve_configuration(
    mesh: &Mesh,
    rho: f64,
    target: &dyn ScalarField,
    constraint: &ConstraintSpec,
    opts: &SolverOptions,
) -> Result<LevelSolution> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    match constraint {
        ConstraintSpec::None => {
            let (u, its) = solve_unconstrained_discrete(&problem, opts.linear_tol)?;
            Ok(LevelSolution {
                u: problem.extend(&u),
                multiplier: None,
                interior: problem.interior.clone(),
                report: None,
                linear_iterations: its,
            })
        }
        ConstraintSpec::State { lower, upper } => {
            let sol = solve_state_discrete(&problem, lower.as_ref(), upper.as_ref(), opts)?;
            Ok(LevelSolution {
                u: sol.u,
                multiplier: Some(sol.lambda),
                interior: sol.interior,
                linear_iterations: sol.report.linear_iterations,
                report: Some(sol.report),
            })
        }
        ConstraintSpec::Control { lower, upper } => {
            let sol = solve_control_discrete(&problem, lower.as_ref(), upper.as_ref(), opts)?;
            Ok(LevelSolution {
                u: sol.u,
                multiplier: Some(sol.w),
                interior: sol.interior,
                linear_iterations: 0,
                report: Some(sol.report),
            })
        }
    }
}

/// Settings of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyOptions {
    pub solver: SolverOptions,
    #[serde(skip)]
    pub rho: RhoChoice,
    /// Also reconstruct the control on the mesh with `n / coarse_ratio`
    /// cells per side and measure its discrete dual-norm error.
    pub coarse_ratio: Option<usize>,
    /// Record wall-clock times; off by default to keep tables reproducible.
    pub timings: bool,
}

impl StudyOptions {
    /// Defaults with the quadrature refinement suited to `target`.
    pub fn for_target(target: Target) -> Self {
        Self {
            solver: SolverOptions {
                subdivisions: target.default_subdivisions(),
                ..Default::default()
            },
            rho: RhoChoice::HSquared,
            coarse_ratio: None,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n: usize,
    /// Grid spacing `1/n`.
    pub h: f64,
    pub rho: f64,
    pub dofs: usize,
    pub err_l2: f64,
    /// NaN when the target has no square-integrable gradient.
    pub err_h1: f64,
    /// NaN on the first row.
    pub eoc_l2: f64,
    pub eoc_h1: f64,
    pub newton_iters: usize,
    pub wall_ms: u128,
    pub converged: bool,
    /// Discrete dual-norm error of the reconstructed control, when requested.
    pub control_err: Option<f64>,
    pub eoc_control: Option<f64>,
    /// Error message when the level failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub target: String,
    pub constraint: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged && r.failure.is_none())
    }

    pub fn errors_l2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.err_l2).collect()
    }
}

fn study_row(
    level: usize,
    n: usize,
    target: Target,
    constraint: &ConstraintSpec,
    opts: &StudyOptions,
) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let mesh = Mesh::structured(n)?;
    let rho = opts.rho.resolve(&mesh);
    let field = target.as_field();
    let sol = solve_configuration(&mesh, rho, field.as_ref(), constraint, &opts.solver)?;
    let rule = QuadratureRule::degree5();
    let s = opts.solver.subdivisions;
    let err_l2 = l2_error(&sol.u, &mesh, field.as_ref(), &rule, s);
    let err_h1 = match target {
        Target::U3 => f64::NAN,
        t => h1_seminorm_error(&sol.u, &mesh, &|x, y| t.gradient(x, y).unwrap_or([0.0, 0.0]), &rule, s),
    };
    let control_err = match (opts.coarse_ratio, target.exact_control()) {
        (Some(ratio), Ok(z)) => {
            if ratio == 0 || n % ratio != 0 || n / ratio == 0 {
                return Err(invalid(format!("cannot coarsen n = {n} by {ratio}")));
            }
            let nc = n / ratio;
            let coarse = Mesh::structured(nc)?;
            if ratio != 4 {
                return Err(invalid("control recovery uses the pairing h = H/4"));
            }
            let rec = reconstruct_control(&sol.u, &mesh, &coarse, OUTER_TOL)?;
            Some(control_dual_error(&rec.z, &mesh, &coarse, z.as_ref(), s)?)
        }
        _ => None,
    };
    Ok(ConvergenceRow {
        level,
        n,
        h: mesh.spacing(),
        rho,
        dofs: sol.interior.len(),
        err_l2,
        err_h1,
        eoc_l2: f64::NAN,
        eoc_h1: f64::NAN,
        newton_iters: sol.newton_iterations(),
        wall_ms: if opts.timings { start.elapsed().as_millis() } else { 0 },
        converged: sol.converged(),
        control_err,
        eoc_control: None,
        failure: None,
    })
}

/// Solve on every level and tabulate errors and orders. A failing level is
/// kept as a row with NaN errors and the failure message.
pub fn run_convergence_study(
    target: Target,
    constraint: &ConstraintSpec,
    levels: &[usize],
    opts: &StudyOptions,
) -> Result<ConvergenceTable> {
    if levels.is_empty() {
        return Err(invalid("no levels given"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("levels must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for (level, &n) in levels.iter().enumerate() {
        let row = match study_row(level, n, target, constraint, opts) {
            Ok(r) => r,
            Err(e @ Error::InvalidArgument(_)) => return Err(e),
            Err(e) => ConvergenceRow {
                level,
                n,
                h: 1.0 / n as f64,
                rho: f64::NAN,
                dofs: (n.max(1) - 1).pow(2),
                err_l2: f64::NAN,
                err_h1: f64::NAN,
                eoc_l2: f64::NAN,
                eoc_h1: f64::NAN,
                newton_iters: 0,
                wall_ms: 0,
                converged: false,
                control_err: None,
                eoc_control: None,
                failure: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    if rows.len() >= 2 {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let l2 = eoc(&rows.iter().map(|r| r.err_l2).collect::<Vec<_>>(), &hs)?;
        let h1 = eoc(&rows.iter().map(|r| r.err_h1).collect::<Vec<_>>(), &hs)?;
        let ctrl = eoc(
            &rows
                .iter()
                .map(|r| r.control_err.unwrap_or(f64::NAN))
                .collect::<Vec<_>>(),
            &hs,
        )?;
        for i in 1..rows.len() {
            rows[i].eoc_l2 = l2[i - 1];
            rows[i].eoc_h1 = h1[i - 1];
            if rows[i].control_err.is_some() {
                rows[i].eoc_control = Some(ctrl[i - 1]);
            }
        }
    }
    Ok(ConvergenceTable {
        target: target.name().to_string(),
        constraint: constraint.mode().to_string(),
        rows,
    })
}

/// Coarse/fine pair with `h = H/4` for a fine mesh with `n` cells per side.
pub fn recovery_pair(n: usize) -> Result<(Mesh, Mesh)> {
    if n % 4 != 0 || n == 0 {
        return Err(invalid(format!("fine resolution {n} is not divisible by 4")));
    }
    coarse_fine_pair(n / 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::interpolate;
    use std::f64::consts::PI;

    #[test]
    fn eoc_arithmetic() {
        let r = eoc(&[0.1, 0.025], &[0.2, 0.1]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-12);
        let r = eoc(&[0.1, 0.05], &[0.2, 0.1]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
        let r = eoc(&[0.3, 0.3, 0.3], &[0.4, 0.2, 0.1]).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        assert!(eoc(&[0.1, 0.0], &[0.2, 0.1]).unwrap()[0].is_nan());
        assert!(eoc(&[0.1], &[0.2]).is_err());
        assert!(eoc(&[0.1, 0.2], &[0.2]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1e-1, 1e-2, 1e-3];
        let es: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &es) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn l2_error_of_exactly_represented_function() {
        let m = Mesh::structured(8).unwrap();
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - 3.0 * y;
        let u = interpolate(&m, &f);
        assert!(l2_error(&u, &m, &f, &QuadratureRule::degree5(), 1) < 1e-13);
        let g = |_: f64, _: f64| [2.0, -3.0];
        assert!(h1_seminorm_error(&u, &m, &g, &QuadratureRule::degree5(), 1) < 1e-12);
    }

    #[test]
    fn norms_of_smooth_target() {
        let m = Mesh::structured(32).unwrap();
        let zero = vec![0.0; m.num_nodes()];
        let l2 = l2_error(&zero, &m, &|x, y| Target::U1.eval(x, y), &QuadratureRule::degree5(), 1);
        assert!((l2 - 0.5).abs() < 1e-6);
        let h1 = h1_seminorm_error(
            &zero,
            &m,
            &|x, y| Target::U1.gradient(x, y).unwrap(),
            &QuadratureRule::degree5(),
            1,
        );
        assert!((h1 - PI / 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn interpolation_error_ratio() {
        let err = |n: usize| {
            let m = Mesh::structured(n).unwrap();
            let u = interpolate(&m, &|x: f64, y: f64| Target::U1.eval(x, y));
            l2_error(&u, &m, &|x, y| Target::U1.eval(x, y), &QuadratureRule::degree5(), 1)
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 3.6 && ratio < 4.4, "{ratio}");
    }

    #[test]
    fn h1_error_mirror_invariant() {
        let m = Mesh::structured(8).unwrap();
        let u = interpolate(&m, &|x: f64, y: f64| x * x * y);
        let v = interpolate(&m, &|x: f64, y: f64| y * y * x);
        let gu = |x: f64, y: f64| [2.0 * x * y, x * x];
        let gv = |x: f64, y: f64| [y * y, 2.0 * x * y];
        let rule = QuadratureRule::degree5();
        let a = h1_seminorm_error(&u, &m, &gu, &rule, 1);
        let b = h1_seminorm_error(&v, &m, &gv, &rule, 1);
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn small_unconstrained_study() {
        let opts = StudyOptions::for_target(Target::U1);
        let t = run_convergence_study(Target::U1, &ConstraintSpec::None, &[8, 16, 32], &opts).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows[0].eoc_l2.is_nan());
        assert!(t.rows[2].eoc_l2 > 1.7);
        for r in &t.rows {
            assert_eq!(r.rho, r.h * r.h);
            assert!(r.err_l2 <= 0.5 + 1e-6);
            assert_eq!(r.newton_iters, 0);
        }
    }

    #[test]
    fn inactive_state_constraints_reproduce_unconstrained_table() {
        let opts = StudyOptions::for_target(Target::U1);
        let a = run_convergence_study(Target::U1, &ConstraintSpec::None, &[8, 16], &opts).unwrap();
        let b = run_convergence_study(Target::U1, &ConstraintSpec::inactive_state(), &[8, 16], &opts).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.err_l2 - y.err_l2).abs() < 1e-10);
            assert!((x.err_h1 - y.err_h1).abs() < 1e-10);
        }
    }

    #[test]
    fn descending_levels_rejected() {
        let opts = StudyOptions::for_target(Target::U1);
        assert!(run_convergence_study(Target::U1, &ConstraintSpec::None, &[16, 8], &opts).is_err());
    }

    #[test]
    fn rough_target_has_no_gradient_error() {
        let opts = StudyOptions::for_target(Target::U3);
        let t = run_convergence_study(Target::U3, &ConstraintSpec::None, &[4, 8], &opts).unwrap();
        assert!(t.rows.iter().all(|r| r.err_h1.is_nan() && r.err_l2 > 0.0));
    }

    #[test]
    fn control_error_recorded_on_request() {
        let mut opts = StudyOptions::for_target(Target::U1);
        opts.coarse_ratio = Some(4);
        let t = run_convergence_study(Target::U1, &ConstraintSpec::None, &[16, 32], &opts).unwrap();
        assert!(t.rows.iter().all(|r| r.control_err.is_some()));
        assert!(t.rows[1].eoc_control.unwrap() > 0.0);
    }
}
