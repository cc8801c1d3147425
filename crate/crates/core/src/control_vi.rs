//! Weak control constraints `f_-,i <= (K u)_i <= f_+,i`, where `f_+-,i` are
//! the moments of the bound functions against the hat functions.
//!
//! The multiplier `w` is defined by `K w = (M + rho K) u - u_target`. Each
//! active-set iteration fixes `w_i = 0` on inactive rows and
//! `(K u)_i = f_+-,i` on active rows. With `v = -w_A` the resulting linear
//! system is the symmetric saddle point problem
//!
//! ```text
//! [ M + rho K   K_{:,A} ] [u]   [u_target]
//! [ K_{A,:}        0    ] [v] = [f_A     ]
//! ```
//!
//! which is solved by sparse LU. Eliminating `u` instead would lead to a
//! system with `K^{-1}` on both sides whose condition number grows like
//! `h^-4`.

use crate::active_set::{complementarity_norm, feasibility_violation, partition, sizes, Activity, Safeguard};
use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::linsolve::{sparse_lu_solve, SparseCholesky, SparseLu, SpdInverse};
use crate::mesh::Mesh;
use crate::options::{SolveReport, SolverOptions};
use crate::problem::DiscreteProblem;
use crate::sparse::{dot, norm_inf};
use crate::unconstrained::solve_unconstrained_discrete;

/// Result of a control-constrained solve.
#[derive(Debug, Clone)]
pub struct ControlViSolution {
    /// Full nodal state, zero on the boundary.
    pub u: Vec<f64>,
    /// Interior multiplier with `K w = (M + rho K) u - u_target`.
    pub w: Vec<f64>,
    /// Interior flux `K u`.
    pub flux: Vec<f64>,
    pub report: SolveReport,
    /// Interior positions with flux at the lower bound.
    pub active_minus: Vec<usize>,
    /// Interior positions with flux at the upper bound.
    pub active_plus: Vec<usize>,
    pub interior: Vec<usize>,
    pub rho: f64,
    /// Quadrature subdivisions used for the bound moments.
    pub subdivisions: usize,
}

impl ControlViSolution {
    pub fn u_interior(&self) -> Vec<f64> {
        self.interior.iter().map(|&i| self.u[i]).collect()
    }
}

/// Bound moments; equal bounds are allowed, crossing bounds are not.
pub fn bound_moments(
    problem: &DiscreteProblem<'_>,
    f_minus: &dyn ScalarField,
    f_plus: &dyn ScalarField,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lower = problem.moments(f_minus);
    let upper = problem.moments(f_plus);
    if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] <= upper[k])) {
        return Err(invalid(format!(
            "crossing control bounds at interior node {k}: {} > {}",
            lower[k], upper[k]
        )));
    }
    Ok((lower, upper))
}

/// Solve the control-constrained problem on `mesh`. Starts from the
/// unconstrained solution and `w = 0`.
pub fn solve_control_constrained(
    mesh: &Mesh,
    rho: f64,
    target: &dyn ScalarField,
    f_minus: &dyn ScalarField,
    f_plus: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<ControlViSolution> {
    let problem = DiscreteProblem::new(mesh, rho, target, opts.subdivisions)?;
    solve_control_discrete(&problem, f_minus, f_plus, opts)
}

pub fn solve_control_discrete(
    problem: &DiscreteProblem<'_>,
    f_minus: &dyn ScalarField,
    f_plus: &dyn ScalarField,
    opts: &SolverOptions,
) -> Result<ControlViSolution> {
    let (lower, upper) = bound_moments(problem, f_minus, f_plus)?;
    let (u0, _) = solve_unconstrained_discrete(problem, opts.linear_tol)?;
    let qp = FluxQp {
        system: &problem.system,
        stiffness: &problem.stiffness,
        load: &problem.load,
        lower: &lower,
        upper: &upper,
    };
    let sol = qp.solve(u0, opts)?;
    let pick = |a: Activity| -> Vec<usize> { (0..sol.partition.len()).filter(|&k| sol.partition[k] == a).collect() };
    Ok(ControlViSolution {
        u: problem.extend(&sol.u),
        active_minus: pick(Activity::Lower),
        active_plus: pick(Activity::Upper),
        flux: problem.stiffness.mul_vec(&sol.u),
        w: sol.w,
        report: sol.report,
        interior: problem.interior.clone(),
        rho: problem.rho,
        subdivisions: problem.subdivisions,
    })
}

/// `min 1/2 u^T A u - b^T u` subject to `lower <= K u <= upper`.
#[derive(Debug, Clone, Copy)]
pub struct FluxQp<'a> {
    pub system: &'a crate::sparse::CsrMatrix,
    pub stiffness: &'a crate::sparse::CsrMatrix,
    pub load: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

/// Relative tolerance on residuals and duality measure of the interior
/// point fallback.
const IPM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FluxQpSolution {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub partition: Vec<Activity>,
    pub report: SolveReport,
}

impl FluxQp<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.load.len();
        if self.system.nrows() != n || self.stiffness.nrows() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(invalid("dimension mismatch in control-constrained problem"));
        }
        Ok(())
    }

    /// Linear solve for a fixed partition. Returns `(u, w)`.
    pub fn solve_partition(&self, part: &[Activity]) -> Result<(Vec<f64>, Vec<f64>)> {
        let fixed: Vec<usize> = (0..part.len()).filter(|&k| part[k] != Activity::Inactive).collect();
        let values: Vec<f64> = fixed
            .iter()
            .map(|&k| {
                if part[k] == Activity::Lower {
                    self.lower[k]
                } else {
                    self.upper[k]
                }
            })
            .collect();
        self.solve_face(&fixed, &values)
    }

    /// Minimize over `u` with `(K u)_k = value` for the listed rows, leaving
    /// the other rows free. Returns `(u, w)` with `w` zero on free rows.
    fn solve_face(&self, fixed: &[usize], values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.load.len();
        let mut entries: Vec<(usize, usize, f64)> = self.system.triplets().collect();
        let mut rhs = self.load.to_vec();
        for (r, (&k, &v)) in fixed.iter().zip(values).enumerate() {
            for (j, a) in self.stiffness.row(k) {
                entries.push((n + r, j, a));
                entries.push((j, n + r, a));
            }
            rhs.push(v);
        }
        let x = sparse_lu_solve(n + fixed.len(), &entries, &rhs)?;
        let mut w = vec![0.0; n];
        for (r, &k) in fixed.iter().enumerate() {
            w[k] = -x[n + r];
        }
        Ok((x[..n].to_vec(), w))
    }

    /// Partition from the flux predictors. Where both bounds coincide the
    /// two active labels describe the same constraint and are merged into
    /// `Lower`.
    pub fn partition(&self, u: &[f64], w: &[f64], c: f64) -> Vec<Activity> {
        let flux = self.stiffness.mul_vec(u);
        let mut p = partition(&flux, w, self.lower, self.upper, c);
        for (k, a) in p.iter_mut().enumerate() {
            if *a == Activity::Upper && self.lower[k] == self.upper[k] {
                *a = Activity::Lower;
            }
        }
        p
    }

    /// One active-set update from an arbitrary iterate `(u, w)`.
    pub fn update(&self, u: &[f64], w: &[f64], c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.solve_partition(&self.partition(u, w, c))
    }

    /// Max-norm of `A u - K w - b`.
    pub fn equation_residual(&self, u: &[f64], w: &[f64]) -> f64 {
        let au = self.system.mul_vec(u);
        let kw = self.stiffness.mul_vec(w);
        (0..u.len()).fold(0.0, |m, k| m.max((au[k] - kw[k] - self.load[k]).abs()))
    }

    /// Primal-dual interior point method (Mehrotra predictor-corrector) for
    /// the same problem, used when the block update stagnates. Rows with
    /// coinciding bounds are kept as equality constraints. Returns `(u, w)`.
    fn interior_point(&self, u_start: &[f64], max_iter: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let n = self.load.len();
        let rows: Vec<usize> = (0..n).filter(|&k| self.lower[k] < self.upper[k]).collect();
        let eq: Vec<usize> = (0..n).filter(|&k| self.lower[k] == self.upper[k]).collect();
        let m = rows.len();
        let dim = n + eq.len();
        let mut u = u_start.to_vec();
        let flux = self.stiffness.mul_vec(&u);
        let qscale = norm_inf(&flux)
            .max(norm_inf(self.lower).min(norm_inf(self.upper)))
            .max(1e-300);
        let zscale = norm_inf(self.load).max(1e-300);
        let mut s1 = vec![0.0; m];
        let mut s2 = vec![0.0; m];
        for (r, &k) in rows.iter().enumerate() {
            let theta = (0.25 * (self.upper[k] - self.lower[k])).min(0.1 * qscale);
            s1[r] = (flux[k] - self.lower[k]).max(theta);
            s2[r] = (self.upper[k] - flux[k]).max(theta);
        }
        let mut z1 = vec![zscale; m];
        let mut z2 = vec![zscale; m];
        let mut y = vec![0.0; eq.len()];
        let mut iterations = 0;
        loop {
            let flux = self.stiffness.mul_vec(&u);
            // K w = A u - b with w = z1 - z2 on inequality rows, y on equality rows
            let mut w = vec![0.0; n];
            for (r, &k) in rows.iter().enumerate() {
                w[k] = z1[r] - z2[r];
            }
            for (e, &k) in eq.iter().enumerate() {
                w[k] = y[e];
            }
            let kw = self.stiffness.mul_vec(&w);
            let au = self.system.mul_vec(&u);
            let rd: Vec<f64> = (0..n).map(|k| au[k] - self.load[k] - kw[k]).collect();
            let rp1: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(r, &k)| flux[k] - self.lower[k] - s1[r])
                .collect();
            let rp2: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(r, &k)| self.upper[k] - flux[k] - s2[r])
                .collect();
            let re: Vec<f64> = eq.iter().map(|&k| flux[k] - self.lower[k]).collect();
            let mu = if m == 0 {
                0.0
            } else {
                (dot(&s1, &z1) + dot(&s2, &z2)) / (2 * m) as f64
            };
            let primal = norm_inf(&rp1).max(norm_inf(&rp2)).max(norm_inf(&re));
            // the gap alone collapsing means the residuals sit at roundoff
            let small_gap = mu <= IPM_TOL * qscale * zscale;
            if (norm_inf(&rd) <= IPM_TOL * zscale && primal <= IPM_TOL * qscale && small_gap)
                || mu <= 1e-8 * IPM_TOL * qscale * zscale
                || iterations == max_iter
            {
                return Ok((u, w, iterations));
            }
            // reduced matrix [[A + B^T D B, K_E^T], [K_E, 0]]
            let d: Vec<f64> = (0..m).map(|r| z1[r] / s1[r] + z2[r] / s2[r]).collect();
            let mut entries: Vec<(usize, usize, f64)> = self.system.triplets().collect();
            for (r, &k) in rows.iter().enumerate() {
                let row: Vec<(usize, f64)> = self.stiffness.row(k).collect();
                for &(i, a) in &row {
                    for &(j, b) in &row {
                        entries.push((i, j, d[r] * a * b));
                    }
                }
            }
            for (e, &k) in eq.iter().enumerate() {
                for (j, a) in self.stiffness.row(k) {
                    entries.push((n + e, j, a));
                    entries.push((j, n + e, a));
                }
            }
            let lu = SparseLu::new(dim, &entries)?;
            iterations += 1;
            // solve for a complementarity target (rc1, rc2) and return (du, ds1, ds2, dz1, dz2, dy)
            let newton = |rc1: &[f64], rc2: &[f64]| -> Result<[Vec<f64>; 6]> {
                let g: Vec<f64> = (0..m)
                    .map(|r| rc1[r] / s1[r] - z1[r] / s1[r] * rp1[r] - rc2[r] / s2[r] + z2[r] / s2[r] * rp2[r])
                    .collect();
                let mut bg = vec![0.0; n];
                for (r, &k) in rows.iter().enumerate() {
                    bg[k] = g[r];
                }
                let kbg = self.stiffness.mul_vec(&bg);
                let mut rhs: Vec<f64> = (0..n).map(|k| -rd[k] + kbg[k]).collect();
                rhs.extend(re.iter().map(|v| -v));
                let x = lu.solve(&rhs)?;
                let du = x[..n].to_vec();
                let dy: Vec<f64> = x[n..].iter().map(|v| -v).collect();
                let kdu = self.stiffness.mul_vec(&du);
                let ds1: Vec<f64> = rows.iter().enumerate().map(|(r, &k)| kdu[k] + rp1[r]).collect();
                let ds2: Vec<f64> = rows.iter().enumerate().map(|(r, &k)| -kdu[k] + rp2[r]).collect();
                let dz1: Vec<f64> = (0..m).map(|r| (rc1[r] - z1[r] * ds1[r]) / s1[r]).collect();
                let dz2: Vec<f64> = (0..m).map(|r| (rc2[r] - z2[r] * ds2[r]) / s2[r]).collect();
                Ok([du, ds1, ds2, dz1, dz2, dy])
            };
            let max_step = |v: &[f64], dv: &[f64]| -> f64 {
                v.iter()
                    .zip(dv)
                    .filter(|(_, &d)| d < 0.0)
                    .fold(1.0f64, |a, (&x, &d)| a.min(-x / d))
            };
            let rc1: Vec<f64> = (0..m).map(|r| -s1[r] * z1[r]).collect();
            let rc2: Vec<f64> = (0..m).map(|r| -s2[r] * z2[r]).collect();
            let [_, as1, as2, az1, az2, _] = newton(&rc1, &rc2)?;
            let ap = max_step(&s1, &as1).min(max_step(&s2, &as2));
            let ad = max_step(&z1, &az1).min(max_step(&z2, &az2));
            let mu_aff = if m == 0 {
                0.0
            } else {
                (0..m)
                    .map(|r| {
                        (s1[r] + ap * as1[r]) * (z1[r] + ad * az1[r]) + (s2[r] + ap * as2[r]) * (z2[r] + ad * az2[r])
                    })
                    .sum::<f64>()
                    / (2 * m) as f64
            };
            let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
            let rc1: Vec<f64> = (0..m).map(|r| sigma * mu - s1[r] * z1[r] - as1[r] * az1[r]).collect();
            let rc2: Vec<f64> = (0..m).map(|r| sigma * mu - s2[r] * z2[r] - as2[r] * az2[r]).collect();
            let [du, ds1, ds2, dz1, dz2, dy] = newton(&rc1, &rc2)?;
            let ap = (0.995 * max_step(&s1, &ds1).min(max_step(&s2, &ds2))).min(1.0);
            let ad = (0.995 * max_step(&z1, &dz1).min(max_step(&z2, &dz2))).min(1.0);
            for k in 0..n {
                u[k] += ap * du[k];
            }
            for r in 0..m {
                s1[r] += ap * ds1[r];
                s2[r] += ap * ds2[r];
                z1[r] += ad * dz1[r];
                z2[r] += ad * dz2[r];
            }
            for e in 0..eq.len() {
                y[e] += ad * dy[e];
            }
        }
    }

    /// Run the active-set iteration from `(u0, 0)` with the same stopping
    /// rule as the state-constrained solver.
    ///
    /// The flux constraints couple neighbouring unknowns through `K`, and
    /// the block update can cycle. When the number of changing indices
    /// stagnates, the problem is solved by the interior point method and the
    /// active-set iteration is restarted from that point, where it settles
    /// within a few steps. `iterations` counts every linear solve of either
    /// kind; `active_history` lists active-set steps only.
    pub fn solve(&self, u0: Vec<f64>, opts: &SolverOptions) -> Result<FluxQpSolution> {
        self.validate()?;
        if !(opts.c > 0.0) {
            return Err(invalid(format!(
                "complementarity parameter must be positive, got {}",
                opts.c
            )));
        }
        let n = self.load.len();
        let mut u = u0;
        let mut w = vec![0.0; n];
        let mut guard = Safeguard::new(Safeguard::DEFAULT_PATIENCE);
        let mut part = self.partition(&u, &w, opts.c);
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut converged = false;
        let mut stalled = false;
        while iterations < opts.max_iter {
            let (un, wn) = self.solve_partition(&part)?;
            u = un;
            w = wn;
            iterations += 1;
            history.push(sizes(&part));
            let proposal = self.partition(&u, &w, opts.c);
            let flux = self.stiffness.mul_vec(&u);
            if proposal == part && feasibility_violation(&flux, self.lower, self.upper) < opts.tol {
                converged = true;
                break;
            }
            if !guard.allows_block_step(&part, &proposal) {
                stalled = true;
                break;
            }
            part = proposal;
        }
        if stalled {
            // interior point solution, then the block update again from there
            let (ui, wi, its) = self.interior_point(&u, opts.max_iter - iterations)?;
            iterations += its;
            u = ui;
            w = wi;
            part = self.partition(&u, &w, opts.c);
            let mut guard = Safeguard::new(Safeguard::DEFAULT_PATIENCE);
            while iterations < opts.max_iter {
                let (un, wn) = self.solve_partition(&part)?;
                u = un;
                w = wn;
                iterations += 1;
                history.push(sizes(&part));
                let proposal = self.partition(&u, &w, opts.c);
                let flux = self.stiffness.mul_vec(&u);
                if proposal == part && feasibility_violation(&flux, self.lower, self.upper) < opts.tol {
                    converged = true;
                    break;
                }
                part = guard.next(&part, proposal);
            }
        }
        let flux = self.stiffness.mul_vec(&u);
        let report = SolveReport {
            converged,
            iterations,
            active_history: history,
            feasibility_violation: feasibility_violation(&flux, self.lower, self.upper),
            equation_residual: self.equation_residual(&u, &w),
            complementarity_residual: complementarity_norm(&flux, &w, self.lower, self.upper, opts.c),
            linear_iterations: 0,
            tol: opts.tol,
            c: opts.c,
        };
        Ok(FluxQpSolution {
            u,
            w,
            partition: part,
            report,
        })
    }
}

/// Max over interior nodes of
/// `|w_i - min(0, w_i + c (f_+,i - (Ku)_i)) - max(0, w_i + c (f_-,i - (Ku)_i))|`.
pub fn control_complementarity_residual(
    sol: &ControlViSolution,
    mesh: &Mesh,
    f_minus: &dyn ScalarField,
    f_plus: &dyn ScalarField,
) -> Result<f64> {
    let moments = |f: &dyn ScalarField| {
        crate::assembly::restrict_vector(
            &crate::assembly::assemble_load(mesh, f, &crate::quadrature::QuadratureRule::degree5(), sol.subdivisions),
            &sol.interior,
        )
    };
    if mesh.num_nodes() != sol.u.len() {
        return Err(invalid("solution does not belong to this mesh"));
    }
    Ok(complementarity_norm(
        &sol.flux,
        &sol.w,
        &moments(f_minus),
        &moments(f_plus),
        sol.report.c,
    ))
}

/// `w` from a state alone, by `K w = (M + rho K) u - u_target`.
pub fn multiplier_from_state(problem: &DiscreteProblem<'_>, u_interior: &[f64]) -> Result<Vec<f64>> {
    let mut r = problem.system.mul_vec(u_interior);
    for (ri, b) in r.iter_mut().zip(&problem.load) {
        *ri -= b;
    }
    SparseCholesky::new(&problem.stiffness)?.solve(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::constant;
    use crate::sparse::norm_inf;
    use crate::targets::{preset_constraints, ConstraintSpec, Preset, Target};

    fn bounds(p: Preset) -> (crate::field::Field, crate::field::Field) {
        match preset_constraints(p, 40.0) {
            ConstraintSpec::Control { lower, upper } => (lower, upper),
            _ => unreachable!(),
        }
    }

    #[test]
    fn huge_bounds_give_unconstrained_solution() {
        let m = Mesh::structured(8).unwrap();
        let t = Target::U1.as_field();
        let opts = SolverOptions::default();
        let rho = m.spacing().powi(2);
        let sol = solve_control_constrained(
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
        assert!(sol.w.iter().all(|&v| v == 0.0));
        let free = crate::unconstrained::solve_unconstrained(&m, rho, t.as_ref(), &opts).unwrap();
        for (a, b) in sol.u.iter().zip(&free) {
            assert!((a - b).abs() < 1e-9);
        }
        let r = control_complementarity_residual(&sol, &m, constant(-1e9).as_ref(), constant(1e9).as_ref()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn crossing_bounds_rejected() {
        let m = Mesh::structured(4).unwrap();
        let t = Target::U1.as_field();
        let r = solve_control_constrained(
            &m,
            0.01,
            t.as_ref(),
            constant(1.0).as_ref(),
            constant(-1.0).as_ref(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn f1_solution_satisfies_kkt() {
        let m = Mesh::structured(32).unwrap();
        let t = Target::U1.as_field();
        let (lo, up) = bounds(Preset::F1);
        let opts = SolverOptions::default();
        let sol =
            solve_control_constrained(&m, m.spacing().powi(2), t.as_ref(), lo.as_ref(), up.as_ref(), &opts).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report);
        assert!(sol.report.feasibility_violation < opts.tol);
        assert!(!sol.active_plus.is_empty());
        for &k in &sol.active_plus {
            assert!(sol.w[k] <= opts.tol);
        }
        for &k in &sol.active_minus {
            assert!(sol.w[k] >= -opts.tol);
        }
        let scale = 1.0 + norm_inf(&sol.w);
        let r = control_complementarity_residual(&sol, &m, lo.as_ref(), up.as_ref()).unwrap();
        assert!(r <= 1e-8 * scale, "{r}");
        assert!(sol.report.equation_residual <= 1e-8 * scale);
    }

    #[test]
    fn multiplier_matches_definition() {
        let m = Mesh::structured(16).unwrap();
        let t = Target::U1.as_field();
        let (lo, up) = bounds(Preset::F2);
        let p = DiscreteProblem::new(&m, m.spacing().powi(2), t.as_ref(), 1).unwrap();
        let sol = solve_control_discrete(&p, lo.as_ref(), up.as_ref(), &SolverOptions::default()).unwrap();
        let w = multiplier_from_state(&p, &sol.u_interior()).unwrap();
        for (a, b) in w.iter().zip(&sol.w) {
            assert!((a - b).abs() < 1e-8 * (1.0 + norm_inf(&sol.w)));
        }
    }

    #[test]
    fn equal_bounds_pin_the_flux() {
        // f4 lower and upper moments coincide wherever z2 <= 0 on a whole patch
        let m = Mesh::structured(32).unwrap();
        let t = Target::U2 { k: 40.0 }.as_field();
        let (lo, up) = bounds(Preset::F4);
        let opts = SolverOptions {
            subdivisions: 4,
            ..Default::default()
        };
        let sol =
            solve_control_constrained(&m, m.spacing().powi(2), t.as_ref(), lo.as_ref(), up.as_ref(), &opts).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report);
        assert!(sol.report.feasibility_violation < opts.tol);
    }

    #[test]
    fn constructed_violation_detected() {
        let m = Mesh::structured(8).unwrap();
        let t = Target::U1.as_field();
        let mut sol = solve_control_constrained(
            &m,
            0.01,
            t.as_ref(),
            constant(-1e9).as_ref(),
            constant(1e9).as_ref(),
            &SolverOptions::default(),
        )
        .unwrap();
        sol.w[3] = 1.0;
        let r = control_complementarity_residual(&sol, &m, constant(-1e9).as_ref(), constant(1e9).as_ref()).unwrap();
        assert!(r > 0.0);
    }
}
