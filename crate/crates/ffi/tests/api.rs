use std::ffi::CStr;
use std::ptr;

use eocp_ffi::*;

fn default_config() -> EocpConfig {
    let mut cfg = std::mem::MaybeUninit::<EocpConfig>::uninit();
    assert_eq!(unsafe { eocp_config_default(cfg.as_mut_ptr()) }, EocpStatus::Ok);
    unsafe { cfg.assume_init() }
}

fn mesh(n: usize) -> *mut EocpMesh {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { eocp_mesh_new(n, &mut m) }, EocpStatus::Ok);
    m
}

fn last_error() -> String {
    let p = eocp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_state_constrained_and_recover_control() {
    let fine = mesh(32);
    let coarse = mesh(8);
    assert_eq!(unsafe { eocp_mesh_num_nodes(fine) }, 33 * 33);
    assert_eq!(unsafe { eocp_mesh_num_elements(coarse) }, 128);

    let cfg = EocpConfig {
        constraints: EocpConstraints::G1 as u32,
        ..default_config()
    };
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { eocp_solve(fine, &cfg, &mut sol) }, EocpStatus::Ok);
    assert!(eocp_last_error_message().is_null());

    let mut info = EocpSolveInfo::default();
    assert_eq!(unsafe { eocp_solution_info(sol, &mut info) }, EocpStatus::Ok);
    assert!(info.converged);
    assert_eq!(info.dofs, 31 * 31);
    assert!((info.rho - 1.0 / 1024.0).abs() < 1e-15);

    let mut u = vec![0.0; 33 * 33];
    assert_eq!(
        unsafe { eocp_solution_state(sol, u.as_mut_ptr(), u.len()) },
        EocpStatus::Ok
    );
    // g1 caps the state at half the target
    assert!(u.iter().all(|&v| (-1e-12..=0.5 + 1e-12).contains(&v)));
    let mut lambda = vec![0.0; 33 * 33];
    assert_eq!(
        unsafe { eocp_solution_multiplier(sol, lambda.as_mut_ptr(), lambda.len()) },
        EocpStatus::Ok
    );
    assert!(lambda.iter().any(|&l| l < 0.0));

    let mut z = vec![0.0; 128];
    let mut its = 0usize;
    assert_eq!(
        unsafe { eocp_reconstruct_control(sol, coarse, z.as_mut_ptr(), z.len(), &mut its) },
        EocpStatus::Ok
    );
    assert!(its > 0);
    assert!(z.iter().all(|v| v.is_finite()));

    unsafe {
        eocp_solution_free(sol);
        eocp_mesh_free(fine);
        eocp_mesh_free(coarse);
    }
}

#[test]
fn invalid_input_is_reported() {
    let m = mesh(8);
    let mut sol = ptr::null_mut();

    let bad = EocpConfig {
        target: 9,
        ..default_config()
    };
    assert_eq!(unsafe { eocp_solve(m, &bad, &mut sol) }, EocpStatus::InvalidArgument);
    assert!(sol.is_null());
    assert!(last_error().contains("unknown target"));

    let bad = EocpConfig {
        constraints: 42,
        ..default_config()
    };
    assert_eq!(unsafe { eocp_solve(m, &bad, &mut sol) }, EocpStatus::InvalidArgument);

    let bad = EocpConfig {
        tol: 0.0,
        ..default_config()
    };
    assert_eq!(unsafe { eocp_solve(m, &bad, &mut sol) }, EocpStatus::InvalidArgument);

    let cfg = default_config();
    assert_eq!(
        unsafe { eocp_solve(ptr::null(), &cfg, &mut sol) },
        EocpStatus::NullPointer
    );
    assert_eq!(unsafe { eocp_solve(m, &cfg, ptr::null_mut()) }, EocpStatus::NullPointer);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { eocp_mesh_new(0, &mut out) }, EocpStatus::InvalidArgument);
    assert!(out.is_null());

    assert_eq!(unsafe { eocp_solve(m, &cfg, &mut sol) }, EocpStatus::Ok);
    let mut short = vec![0.0; 3];
    assert_eq!(
        unsafe { eocp_solution_state(sol, short.as_mut_ptr(), short.len()) },
        EocpStatus::InvalidArgument
    );
    let mut buf = vec![0.0; 81];
    assert_eq!(
        unsafe { eocp_solution_multiplier(sol, buf.as_mut_ptr(), buf.len()) },
        EocpStatus::Unsupported
    );
    // a 3x3 mesh is not refined by the 8x8 solution mesh
    let odd = mesh(3);
    let mut z = vec![0.0; 18];
    assert_eq!(
        unsafe { eocp_reconstruct_control(sol, odd, z.as_mut_ptr(), z.len(), ptr::null_mut()) },
        EocpStatus::InvalidArgument
    );
    unsafe {
        eocp_solution_free(sol);
        eocp_mesh_free(odd);
        eocp_mesh_free(m);
        eocp_mesh_free(ptr::null_mut());
        eocp_solution_free(ptr::null_mut());
    }
}

#[test]
fn nonconvergence_still_returns_solution() {
    let m = mesh(32);
    let cfg = EocpConfig {
        target: EocpTarget::U2 as u32,
        constraints: EocpConstraints::F4 as u32,
        max_iter: 2,
        ..default_config()
    };
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { eocp_solve(m, &cfg, &mut sol) }, EocpStatus::NotConverged);
    assert!(!sol.is_null());
    let mut info = EocpSolveInfo::default();
    assert_eq!(unsafe { eocp_solution_info(sol, &mut info) }, EocpStatus::Ok);
    assert!(!info.converged);
    assert_eq!(info.iterations, 2);
    unsafe {
        eocp_solution_free(sol);
        eocp_mesh_free(m);
    }
}
