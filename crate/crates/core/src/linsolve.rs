//! Linear solvers: Jacobi-preconditioned conjugate gradients, sparse direct
//! factorizations, and a dense Gaussian elimination used as a fallback and
//! reference on small systems.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{invalid, Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Default relative tolerance for inner linear solves.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Result of a conjugate gradient run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - Ax|| / ||b||` of the recursively updated residual.
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for an abstract SPD operator.
///
/// Stops once `||b - A x||_2 <= rel_tol ||b||_2`. `monitor` sees every
/// iterate, starting with the initial guess at iteration 0.
pub fn pcg<A, P>(
    mut apply: A,
    precond: P,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
    mut monitor: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<CgOutcome>
where
    A: FnMut(&[f64], &mut [f64]) -> Result<()>,
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ap = vec![0.0; n];
    let mut r = b.to_vec();
    if x0.is_some() {
        apply(&x, &mut ap)?;
        for (ri, api) in r.iter_mut().zip(&ap) {
            *ri -= api;
        }
    }
    if let Some(m) = monitor.as_mut() {
        m(0, &x);
    }
    let mut rnorm = norm2(&r);
    if rnorm <= rel_tol * bnorm {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: rnorm / bnorm,
        });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(m) = monitor.as_mut() {
            m(it, &x);
        }
        rnorm = norm2(&r);
        if rnorm <= rel_tol * bnorm {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: rnorm / bnorm,
            });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: rnorm / bnorm,
    })
}

/// Inverse diagonal for Jacobi preconditioning; rejects non-positive
/// diagonals since the matrix cannot then be SPD.
pub fn jacobi_inverse(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(invalid(format!("non-positive diagonal entry {d} in row {i}")))
            }
        })
        .collect()
}

/// Jacobi-PCG solve of `A x = b`, optionally warm started.
pub fn pcg_jacobi(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(invalid("dimension mismatch in linear solve"));
    }
    let inv = jacobi_inverse(a)?;
    pcg(
        |x, y| {
            a.mul_vec_into(x, y);
            Ok(())
        },
        |r, z| {
            for i in 0..r.len() {
                z[i] = inv[i] * r[i];
            }
        },
        b,
        x0,
        rel_tol,
        max_iter,
        None,
    )
}

/// Solve the SPD system `A x = b` to `||b - Ax|| <= rel_tol ||b||`.
/// Returns the solution and the iteration count.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid(format!("relative tolerance {rel_tol} outside (0,1)")));
    }
    let out = pcg_jacobi(a, b, None, rel_tol, max_iter)?;
    Ok((out.x, out.iterations))
}

/// `A^{-1} (B y)` with the inner solve at `rel_tol`.
pub fn apply_inverse(a: &CsrMatrix, b: &CsrMatrix, y: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    if b.ncols() != y.len() || b.nrows() != a.nrows() {
        return Err(invalid("dimension mismatch in apply_inverse"));
    }
    let rhs = b.mul_vec(y);
    Ok(solve_spd(a, &rhs, rel_tol, 10 * a.nrows().max(1))?.0)
}

/// Solvers for a fixed SPD matrix that get applied to many right-hand sides.
pub trait SpdInverse {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
}

/// Jacobi-PCG at a fixed tolerance.
pub struct PcgInverse<'a> {
    matrix: &'a CsrMatrix,
    inv_diag: Vec<f64>,
    rel_tol: f64,
    max_iter: usize,
}

impl<'a> PcgInverse<'a> {
    pub fn new(matrix: &'a CsrMatrix, rel_tol: f64) -> Result<Self> {
        Ok(Self {
            inv_diag: jacobi_inverse(matrix)?,
            matrix,
            rel_tol,
            max_iter: 10 * matrix.nrows().max(1),
        })
    }
}

impl SpdInverse for PcgInverse<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let inv = &self.inv_diag;
        let out = pcg(
            |x, y| {
                self.matrix.mul_vec_into(x, y);
                Ok(())
            },
            |r, z| {
                for i in 0..r.len() {
                    z[i] = inv[i] * r[i];
                }
            },
            b,
            None,
            self.rel_tol,
            self.max_iter,
            None,
        )?;
        Ok(out.x)
    }
}

fn to_faer(n: usize, entries: impl Iterator<Item = (usize, usize, f64)>) -> Result<SparseColMat<usize, f64>> {
    let t: Vec<Triplet<usize, usize, f64>> = entries.map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| Error::Factorization(format!("{e:?}")))
}

/// Sparse Cholesky factorization of an SPD matrix.
pub struct SparseCholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let m = to_faer(n, a.triplets())?;
        let llt = m
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::Factorization(e.to_string()))?;
        Ok(Self { n, llt })
    }
}

impl SpdInverse for SparseCholesky {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(invalid("dimension mismatch in Cholesky solve"));
        }
        let mut rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        Ok((0..self.n).map(|i| rhs[i]).collect())
    }
}

/// Sparse LU factorization of a square, possibly indefinite matrix given as
/// triplets; duplicates are summed.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let m = to_faer(n, entries.iter().copied())?;
        let lu = m.sp_lu().map_err(|e| Error::Factorization(e.to_string()))?;
        Ok(Self { n, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(invalid("dimension mismatch in LU solve"));
        }
        let mut rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[i]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("singular system".into()));
        }
        Ok(x)
    }
}

/// One-shot sparse LU solve.
pub fn sparse_lu_solve(n: usize, entries: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::new(n, entries)?.solve(b)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(invalid("dense system must be square"));
    }
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        if a[piv][k].abs() <= 1e-14 * scale {
            return Err(Error::Factorization(format!("singular pivot in column {k}")));
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}
