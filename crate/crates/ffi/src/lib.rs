//! C interface to the `eocp` solvers.
//!
//! Meshes and solutions are opaque handles created and destroyed through
//! this interface. Every fallible function returns an [`EocpStatus`]; on
//! failure a description is available from [`eocp_last_error_message`] on
//! the same thread. Panics are caught at the boundary and reported as
//! [`EocpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eocp::analysis::{solve_configuration, LevelSolution};
use eocp::mesh::Mesh;
use eocp::options::SolverOptions;
use eocp::recovery::{reconstruct_control, OUTER_TOL};
use eocp::targets::{preset_constraints, ConstraintSpec, Preset, Target};
use eocp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EocpStatus {
    Ok = 0,
    InvalidArgument = 1,
    SolverFailure = 2,
    /// The active-set iteration stopped at its iteration limit; the
    /// solution handle is still produced.
    NotConverged = 3,
    NullPointer = 4,
    Unsupported = 5,
    Panic = 6,
}

/// Values of [`EocpConfig::target`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EocpTarget {
    U1 = 0,
    U2 = 1,
    U3 = 2,
}

/// Values of [`EocpConfig::constraints`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EocpConstraints {
    None = 0,
    G1 = 1,
    G2 = 2,
    F1 = 3,
    F2 = 4,
    F3 = 5,
    F4 = 6,
    F5 = 7,
}

/// Problem and solver settings. Obtain defaults from
/// [`eocp_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EocpConfig {
    /// One of [`EocpTarget`].
    pub target: u32,
    /// Steepness of the plateau target.
    pub k: f64,
    /// One of [`EocpConstraints`].
    pub constraints: u32,
    /// Regularization parameter; a value `<= 0` selects `rho = h^2`.
    pub rho: f64,
    pub c: f64,
    pub tol: f64,
    pub max_iter: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EocpSolveInfo {
    pub converged: bool,
    pub iterations: usize,
    pub dofs: usize,
    pub rho: f64,
    pub feasibility_violation: f64,
}

pub struct EocpMesh {
    mesh: Mesh,
}

pub struct EocpSolution {
    mesh: Mesh,
    sol: LevelSolution,
    rho: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: EocpStatus, msg: impl Into<String>) -> EocpStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> EocpStatus {
    let status = match e {
        Error::InvalidArgument(_) | Error::DegenerateElement { .. } => EocpStatus::InvalidArgument,
        Error::Unsupported(_) => EocpStatus::Unsupported,
        _ => EocpStatus::SolverFailure,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> EocpStatus) -> EocpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EocpStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn target_of(cfg: &EocpConfig) -> Result<Target, EocpStatus> {
    match cfg.target {
        0 => Ok(Target::U1),
        1 => Ok(Target::U2 { k: cfg.k }),
        2 => Ok(Target::U3),
        t => Err(fail(EocpStatus::InvalidArgument, format!("unknown target {t}"))),
    }
}

fn constraints_of(cfg: &EocpConfig) -> Result<ConstraintSpec, EocpStatus> {
    let preset = match cfg.constraints {
        0 => return Ok(ConstraintSpec::None),
        1 => Preset::G1,
        2 => Preset::G2,
        3 => Preset::F1,
        4 => Preset::F2,
        5 => Preset::F3,
        6 => Preset::F4,
        7 => Preset::F5,
        c => {
            return Err(fail(
                EocpStatus::InvalidArgument,
                format!("unknown constraint preset {c}"),
            ))
        }
    };
    Ok(preset_constraints(preset, cfg.k))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eocp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn eocp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fill `out` with the default settings: target u1, no constraints,
/// `rho = h^2`, `c = 1`, `tol = 1e-5`, 100 iterations.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `EocpConfig`.
#[no_mangle]
pub unsafe extern "C" fn eocp_config_default(out: *mut EocpConfig) -> EocpStatus {
    guard(|| {
        if out.is_null() {
            return fail(EocpStatus::NullPointer, "config pointer is NULL");
        }
        let d = SolverOptions::default();
        out.write(EocpConfig {
            target: EocpTarget::U1 as u32,
            k: eocp::targets::DEFAULT_K,
            constraints: EocpConstraints::None as u32,
            rho: 0.0,
            c: d.c,
            tol: d.tol,
            max_iter: d.max_iter as u32,
        });
        EocpStatus::Ok
    })
}

/// Structured mesh of the unit square with `n` cells per side.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn eocp_mesh_new(n: usize, out: *mut *mut EocpMesh) -> EocpStatus {
    guard(|| {
        if out.is_null() {
            return fail(EocpStatus::NullPointer, "output pointer is NULL");
        }
        out.write(ptr::null_mut());
        match Mesh::structured(n) {
            Ok(mesh) => {
                out.write(Box::into_raw(Box::new(EocpMesh { mesh })));
                EocpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `mesh` must be NULL or a handle from [`eocp_mesh_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eocp_mesh_free(mesh: *mut EocpMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of mesh nodes, 0 for NULL.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eocp_mesh_num_nodes(mesh: *const EocpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_nodes())
}

/// Number of triangles, 0 for NULL.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eocp_mesh_num_elements(mesh: *const EocpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_elements())
}

/// Solve the configured problem on `mesh`. On [`EocpStatus::Ok`] and
/// [`EocpStatus::NotConverged`] a solution handle is stored in `out`;
/// otherwise `out` is set to NULL.
///
/// # Safety
/// `mesh` and `config` must be NULL or valid; `out` must be NULL or point to
/// writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn eocp_solve(
    mesh: *const EocpMesh,
    config: *const EocpConfig,
    out: *mut *mut EocpSolution,
) -> EocpStatus {
    guard(|| {
        if out.is_null() {
            return fail(EocpStatus::NullPointer, "output pointer is NULL");
        }
        out.write(ptr::null_mut());
        let (Some(mesh), Some(cfg)) = (mesh.as_ref(), config.as_ref()) else {
            return fail(EocpStatus::NullPointer, "mesh or config is NULL");
        };
        if !(cfg.k > 0.0 && cfg.k.is_finite()) {
            return fail(
                EocpStatus::InvalidArgument,
                format!("k must be positive, got {}", cfg.k),
            );
        }
        if !(cfg.c > 0.0 && cfg.tol > 0.0 && cfg.c.is_finite() && cfg.tol.is_finite()) || cfg.max_iter == 0 {
            return fail(EocpStatus::InvalidArgument, "c, tol and max_iter must be positive");
        }
        if cfg.rho.is_nan() {
            return fail(EocpStatus::InvalidArgument, "rho is NaN");
        }
        let target = match target_of(cfg) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec = match constraints_of(cfg) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let rho = if cfg.rho > 0.0 {
            cfg.rho
        } else {
            mesh.mesh.spacing().powi(2)
        };
        let opts = SolverOptions {
            c: cfg.c,
            tol: cfg.tol,
            max_iter: cfg.max_iter as usize,
            subdivisions: target.default_subdivisions(),
            ..Default::default()
        };
        let f = target.as_field();
        match solve_configuration(&mesh.mesh, rho, f.as_ref(), &spec, &opts) {
            Ok(sol) => {
                let converged = sol.converged();
                out.write(Box::into_raw(Box::new(EocpSolution {
                    mesh: mesh.mesh.clone(),
                    sol,
                    rho,
                })));
                if converged {
                    EocpStatus::Ok
                } else {
                    fail(EocpStatus::NotConverged, "active-set iteration limit reached")
                }
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sol` must be NULL or a handle from [`eocp_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eocp_solution_free(sol: *mut EocpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn eocp_solution_info(sol: *const EocpSolution, out: *mut EocpSolveInfo) -> EocpStatus {
    guard(|| {
        let (Some(s), false) = (sol.as_ref(), out.is_null()) else {
            return fail(EocpStatus::NullPointer, "solution or output is NULL");
        };
        out.write(EocpSolveInfo {
            converged: s.sol.converged(),
            iterations: s.sol.newton_iterations(),
            dofs: s.sol.interior.len(),
            rho: s.rho,
            feasibility_violation: s.sol.report.as_ref().map_or(0.0, |r| r.feasibility_violation),
        });
        EocpStatus::Ok
    })
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> EocpStatus {
    if buf.is_null() {
        return fail(EocpStatus::NullPointer, "buffer is NULL");
    }
    if len != values.len() {
        return fail(
            EocpStatus::InvalidArgument,
            format!("buffer holds {len} values, {} required", values.len()),
        );
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
    EocpStatus::Ok
}

/// Copy the nodal state (one value per mesh node) into `buf`.
///
/// # Safety
/// `sol` must be NULL or a live handle; `buf` must be NULL or hold `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn eocp_solution_state(sol: *const EocpSolution, buf: *mut f64, len: usize) -> EocpStatus {
    guard(|| match sol.as_ref() {
        Some(s) => copy_out(&s.sol.u, buf, len),
        None => fail(EocpStatus::NullPointer, "solution is NULL"),
    })
}

/// Copy the multiplier (`lambda` for state, `w` for control constraints),
/// extended by zero to every mesh node. Unconstrained solutions have none
/// and return [`EocpStatus::Unsupported`].
///
/// # Safety
/// As for [`eocp_solution_state`].
#[no_mangle]
pub unsafe extern "C" fn eocp_solution_multiplier(sol: *const EocpSolution, buf: *mut f64, len: usize) -> EocpStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(EocpStatus::NullPointer, "solution is NULL");
        };
        match &s.sol.multiplier {
            Some(m) => {
                let full = eocp::assembly::extend_by_zero(m, &s.sol.interior, s.mesh.num_nodes());
                copy_out(&full, buf, len)
            }
            None => fail(EocpStatus::Unsupported, "unconstrained solutions have no multiplier"),
        }
    })
}

/// Recover the piecewise constant control on `coarse` (one value per coarse
/// element) from the state of `sol`. The solution mesh must refine `coarse`.
///
/// # Safety
/// `sol` and `coarse` must be NULL or live handles; `z` must be NULL or
/// hold `len` writable doubles; `outer_iterations` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn eocp_reconstruct_control(
    sol: *const EocpSolution,
    coarse: *const EocpMesh,
    z: *mut f64,
    len: usize,
    outer_iterations: *mut usize,
) -> EocpStatus {
    guard(|| {
        let (Some(s), Some(c)) = (sol.as_ref(), coarse.as_ref()) else {
            return fail(EocpStatus::NullPointer, "solution or coarse mesh is NULL");
        };
        if z.is_null() {
            return fail(EocpStatus::NullPointer, "buffer is NULL");
        }
        if len != c.mesh.num_elements() {
            return fail(
                EocpStatus::InvalidArgument,
                format!("buffer holds {len} values, {} required", c.mesh.num_elements()),
            );
        }
        match reconstruct_control(&s.sol.u, &s.mesh, &c.mesh, OUTER_TOL) {
            Ok(rec) => {
                if !outer_iterations.is_null() {
                    outer_iterations.write(rec.outer_iterations);
                }
                copy_out(&rec.z, z, len)
            }
            Err(e) => from_error(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn version_matches_crate() {
        let v = unsafe { CStr::from_ptr(eocp_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, EocpStatus::Panic);
        let msg = unsafe { CStr::from_ptr(eocp_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn error_mapping() {
        assert_eq!(
            from_error(Error::InvalidArgument("x".into())),
            EocpStatus::InvalidArgument
        );
        assert_eq!(
            from_error(Error::SolverFailure {
                iterations: 1,
                residual: 1.0
            }),
            EocpStatus::SolverFailure
        );
        assert_eq!(from_error(Error::Unsupported("x".into())), EocpStatus::Unsupported);
    }
}
