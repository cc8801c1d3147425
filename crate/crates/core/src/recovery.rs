//! Piecewise constant control on a coarse mesh from a fine-mesh state.
//!
//! With `B` the mixed mass matrix `B[j, l] = int_{T_l} phi_j` (interior fine
//! nodes against coarse elements) and `K` the fine interior stiffness matrix,
//! the coefficients `z` solve the Schur complement system
//! `B^T K^{-1} B z = B^T u`. The auxiliary state is `p = K^{-1} B z`.

use crate::assembly::{assemble_mixed_mass, assemble_stiffness, restrict_matrix, restrict_rows};
use crate::error::{invalid, Result};
use crate::linsolve::{pcg, PcgInverse, SparseCholesky, SpdInverse};
use crate::mesh::{interior_indices, Mesh};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Inner tolerance when the inner solves are iterative.
pub const INNER_TOL: f64 = 1e-12;
/// Default tolerance of the outer CG on the Schur system.
pub const OUTER_TOL: f64 = 1e-10;

/// How `K^{-1}` is applied inside the Schur operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerSolver {
    /// Sparse Cholesky factorization, computed once.
    #[default]
    Cholesky,
    /// Jacobi-PCG at `INNER_TOL` for every application.
    Pcg,
}

/// The operator `y -> B^T K^{-1} B y` on coarse element vectors.
pub struct SchurOperator<'a> {
    mixed: CsrMatrix,
    inverse: Box<dyn SpdInverse + 'a>,
}

impl<'a> SchurOperator<'a> {
    /// `stiffness` and `mixed` are restricted to interior fine nodes.
    pub fn new(stiffness: &'a CsrMatrix, mixed: CsrMatrix, inner: InnerSolver) -> Result<Self> {
        if mixed.nrows() != stiffness.nrows() {
            return Err(invalid("mixed mass rows do not match the stiffness matrix"));
        }
        let inverse: Box<dyn SpdInverse + 'a> = match inner {
            InnerSolver::Cholesky => Box::new(SparseCholesky::new(stiffness)?),
            InnerSolver::Pcg => Box::new(PcgInverse::new(stiffness, INNER_TOL)?),
        };
        Ok(Self { mixed, inverse })
    }

    pub fn dim(&self) -> usize {
        self.mixed.ncols()
    }

    pub fn mixed(&self) -> &CsrMatrix {
        &self.mixed
    }

    /// `K^{-1} B y`
    pub fn lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inverse.solve(&self.mixed.mul_vec(y))
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mixed.mul_vec_transpose(&self.lift(y)?))
    }
}

/// Reconstructed control.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// One coefficient per coarse element.
    pub z: Vec<f64>,
    /// Full fine nodal vector `p = K^{-1} B z`, zero on the boundary.
    pub p: Vec<f64>,
    pub outer_iterations: usize,
    /// `||B^T (u - p)|| / ||B^T u||`
    pub relative_residual: f64,
}

/// Solve the Schur system for the full nodal fine state `u`. Returns the
/// element coefficients and the auxiliary state.
pub fn reconstruct_control(u: &[f64], fine: &Mesh, coarse: &Mesh, rel_tol: f64) -> Result<Reconstruction> {
    reconstruct_control_with(u, fine, coarse, rel_tol, InnerSolver::default())
}

pub fn reconstruct_control_with(
    u: &[f64],
    fine: &Mesh,
    coarse: &Mesh,
    rel_tol: f64,
    inner: InnerSolver,
) -> Result<Reconstruction> {
    if u.len() != fine.num_nodes() {
        return Err(invalid(format!(
            "state has {} entries, fine mesh has {} nodes",
            u.len(),
            fine.num_nodes()
        )));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid(format!("relative tolerance {rel_tol} outside (0,1)")));
    }
    let interior = interior_indices(fine);
    let stiffness = restrict_matrix(&assemble_stiffness(fine)?, &interior);
    let mixed = restrict_rows(&assemble_mixed_mass(fine, coarse)?, &interior);
    let schur = SchurOperator::new(&stiffness, mixed, inner)?;
    let u_int: Vec<f64> = interior.iter().map(|&i| u[i]).collect();
    let rhs = schur.mixed().mul_vec_transpose(&u_int);
    let nh = schur.dim();
    let out = pcg(
        |x, y| {
            y.copy_from_slice(&schur.apply(x)?);
            Ok(())
        },
        |r, z| z.copy_from_slice(r),
        &rhs,
        None,
        rel_tol,
        10 * nh.max(1) + 50,
        None,
    )?;
    let p_int = schur.lift(&out.x)?;
    let bp = schur.mixed().mul_vec_transpose(&p_int);
    let diff: Vec<f64> = rhs.iter().zip(&bp).map(|(a, b)| a - b).collect();
    let rn = norm2(&rhs);
    let relative_residual = if rn == 0.0 { 0.0 } else { norm2(&diff) / rn };
    Ok(Reconstruction {
        z: out.x,
        p: crate::assembly::extend_by_zero(&p_int, &interior, fine.num_nodes()),
        outer_iterations: out.iterations,
        relative_residual,
    })
}

/// `sqrt(b^T K^{-1} b)`, the discrete dual norm of the functional with
/// interior moments `b`.
pub fn discrete_dual_norm(moments: &[f64], stiffness: &CsrMatrix, rel_tol: f64) -> Result<f64> {
    if moments.len() != stiffness.nrows() {
        return Err(invalid("dimension mismatch in dual norm"));
    }
    if moments.iter().all(|&b| b == 0.0) {
        return Ok(0.0);
    }
    let x = PcgInverse::new(stiffness, rel_tol)?.solve(moments)?;
    Ok(dot(moments, &x).max(0.0).sqrt())
}

/// Discrete dual norm of `z_H - z` on the fine mesh, where `z_H` is
/// piecewise constant on `coarse` and `z` is analytic. Moments of the
/// difference are taken against the fine interior hat functions.
pub fn control_dual_error(
    z: &[f64],
    fine: &Mesh,
    coarse: &Mesh,
    exact: &dyn crate::field::ScalarField,
    subdivisions: usize,
) -> Result<f64> {
    let interior = interior_indices(fine);
    let stiffness = restrict_matrix(&assemble_stiffness(fine)?, &interior);
    let mixed = restrict_rows(&assemble_mixed_mass(fine, coarse)?, &interior);
    if z.len() != mixed.ncols() {
        return Err(invalid("control vector does not match the coarse mesh"));
    }
    let exact_moments = crate::assembly::restrict_vector(
        &crate::assembly::assemble_load(fine, exact, &crate::quadrature::QuadratureRule::degree5(), subdivisions),
        &interior,
    );
    let zh = mixed.mul_vec(z);
    let b: Vec<f64> = zh.iter().zip(&exact_moments).map(|(a, e)| a - e).collect();
    Ok(dot(&b, &SparseCholesky::new(&stiffness)?.solve(&b)?).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::interpolate;
    use crate::linsolve::dense_solve;
    use crate::mesh::coarse_fine_pair;
    use crate::options::SolverOptions;
    use crate::targets::Target;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn operator_parts(n_coarse: usize) -> (Mesh, Mesh, CsrMatrix, CsrMatrix) {
        let (coarse, fine) = coarse_fine_pair(n_coarse).unwrap();
        let interior = interior_indices(&fine);
        let k = restrict_matrix(&assemble_stiffness(&fine).unwrap(), &interior);
        let b = restrict_rows(&assemble_mixed_mass(&fine, &coarse).unwrap(), &interior);
        (coarse, fine, k, b)
    }

    #[test]
    fn zero_state_gives_zero_control() {
        let (coarse, fine) = coarse_fine_pair(2).unwrap();
        let r = reconstruct_control(&vec![0.0; fine.num_nodes()], &fine, &coarse, OUTER_TOL).unwrap();
        assert!(r.z.iter().all(|&v| v == 0.0));
        assert!(r.p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_coarse_cell_against_dense_schur_matrix() {
        let (coarse, fine, k, b) = operator_parts(1);
        let u = interpolate(&fine, &|x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y));
        let interior = interior_indices(&fine);
        let u_int: Vec<f64> = interior.iter().map(|&i| u[i]).collect();
        // dense K^{-1} B, one column per coarse element
        let kd = k.to_dense();
        let cols: Vec<Vec<f64>> = (0..b.ncols())
            .map(|l| dense_solve(kd.clone(), (0..b.nrows()).map(|j| b.get(j, l)).collect()).unwrap())
            .collect();
        let s: Vec<Vec<f64>> = (0..b.ncols())
            .map(|i| (0..b.ncols()).map(|l| b.mul_vec_transpose(&cols[l])[i]).collect())
            .collect();
        let z_ref = dense_solve(s, b.mul_vec_transpose(&u_int)).unwrap();
        for inner in [InnerSolver::Cholesky, InnerSolver::Pcg] {
            let r = reconstruct_control_with(&u, &fine, &coarse, 1e-13, inner).unwrap();
            for (a, e) in r.z.iter().zip(&z_ref) {
                assert!((a - e).abs() <= 1e-10 * e.abs().max(1.0), "{a} vs {e}");
            }
        }
    }

    #[test]
    fn schur_operator_is_spd() {
        let (_, _, k, b) = operator_parts(4);
        let s = SchurOperator::new(&k, b, InnerSolver::Cholesky).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nh = s.dim();
        for _ in 0..50 {
            let y1: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y2: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s1 = s.apply(&y1).unwrap();
            let s2 = s.apply(&y2).unwrap();
            assert!(dot(&y1, &s1) > 0.0);
            let scale = dot(&y1, &s1).abs() + dot(&y2, &s2).abs();
            assert!((dot(&y2, &s1) - dot(&y1, &s2)).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn perturbed_galerkin_orthogonality() {
        let (coarse, fine) = coarse_fine_pair(4).unwrap();
        let u = interpolate(&fine, &|x: f64, y: f64| (PI * x).sin() * (PI * y).sin());
        let r = reconstruct_control(&u, &fine, &coarse, OUTER_TOL).unwrap();
        let interior = interior_indices(&fine);
        let b = restrict_rows(&assemble_mixed_mass(&fine, &coarse).unwrap(), &interior);
        let diff: Vec<f64> = interior.iter().map(|&i| r.p[i] - u[i]).collect();
        let bu: Vec<f64> = b.mul_vec_transpose(&interior.iter().map(|&i| u[i]).collect::<Vec<_>>());
        let moments = b.mul_vec_transpose(&diff);
        assert!(norm2(&moments) <= 2.0 * OUTER_TOL * norm2(&bu));
        assert!(r.relative_residual <= OUTER_TOL);
    }

    #[test]
    fn symmetric_state_gives_symmetric_control() {
        let (coarse, fine) = coarse_fine_pair(4).unwrap();
        let u = interpolate(&fine, &|x: f64, y: f64| x * y * (1.0 - x) * (1.0 - y) * (1.0 + x + y));
        let r = reconstruct_control(&u, &fine, &coarse, 1e-12).unwrap();
        // the mirror of element 2c (lower right) is element 2c'+1 in the
        // transposed cell; the diagonal split is invariant under x <-> y
        let n = 4;
        for j in 0..n {
            for i in 0..n {
                let a = r.z[2 * (j * n + i)];
                let b = r.z[2 * (i * n + j) + 1];
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dual_norm_identities() {
        let (_, _, k, _) = operator_parts(2);
        assert_eq!(discrete_dual_norm(&vec![0.0; k.nrows()], &k, 1e-12).unwrap(), 0.0);
        let x: Vec<f64> = (0..k.nrows()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let b = k.mul_vec(&x);
        let n = discrete_dual_norm(&b, &k, 1e-13).unwrap();
        assert!((n - k.quadratic_form(&x).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn dual_norm_of_smooth_control() {
        let m = Mesh::structured(64).unwrap();
        let interior = interior_indices(&m);
        let k = restrict_matrix(&assemble_stiffness(&m).unwrap(), &interior);
        let z = |x: f64, y: f64| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
        let b = crate::assembly::restrict_vector(
            &crate::assembly::assemble_load(&m, &z, &crate::quadrature::QuadratureRule::degree5(), 1),
            &interior,
        );
        let n = discrete_dual_norm(&b, &k, 1e-12).unwrap();
        let exact = PI / 2f64.sqrt();
        assert!((n - exact).abs() < 0.02 * exact, "{n}");
    }

    #[test]
    fn reconstructed_control_approximates_exact_control() {
        let mut errs = Vec::new();
        for nc in [4, 8] {
            let (coarse, fine) = coarse_fine_pair(nc).unwrap();
            let t = Target::U1.as_field();
            let rho = fine.spacing().powi(2);
            let u =
                crate::unconstrained::solve_unconstrained(&fine, rho, t.as_ref(), &SolverOptions::default()).unwrap();
            let r = reconstruct_control(&u, &fine, &coarse, OUTER_TOL).unwrap();
            let z = Target::U1.exact_control().unwrap();
            errs.push(control_dual_error(&r.z, &fine, &coarse, z.as_ref(), 1).unwrap());
        }
        assert!(errs[1] < errs[0], "{errs:?}");
    }
}
