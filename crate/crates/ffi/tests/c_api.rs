use std::ffi::{c_char, CStr, CString};
use std::ptr;

use empc_ffi::*;

const TOY: &str = include_str!("../../core/data/toy_z_ge_1.json");

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        empc_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

unsafe fn toy_qp() -> *mut EmpcQp {
    let json = CString::new(TOY).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(empc_problem_from_json(json.as_ptr(), &mut p), EmpcStatus::Ok);
    let mut qp = ptr::null_mut();
    assert_eq!(empc_qp_build(p, &mut qp), EmpcStatus::Ok);
    empc_problem_free(p);
    qp
}

#[test]
fn toy_solve_round_trip() {
    unsafe {
        let qp = toy_qp();
        let (mut nz, mut nt, mut pt) = (0, 0, 0);
        assert_eq!(empc_qp_dims(qp, &mut nz, &mut nt, &mut pt), EmpcStatus::Ok);
        assert_eq!((nz, nt, pt), (1, 2, 1));

        let theta = [1.0, 0.0];
        let mut r = ptr::null_mut();
        assert_eq!(empc_solve(qp, theta.as_ptr(), 2, ptr::null(), 0, &mut r), EmpcStatus::Ok);
        let mut st = EmpcSolveStatus::Infeasible;
        assert_eq!(empc_result_status(r, &mut st), EmpcStatus::Ok);
        assert_eq!(st, EmpcSolveStatus::Optimal);

        let mut z = [0.0; 1];
        let mut n = 0;
        assert_eq!(empc_result_z(r, z.as_mut_ptr(), 1, &mut n), EmpcStatus::Ok);
        assert_eq!(n, 1);
        assert!((z[0] - 1.0).abs() < 1e-12);

        let mut hex = [0 as c_char; 8];
        assert_eq!(empc_result_active_set(r, hex.as_mut_ptr(), hex.len()), EmpcStatus::Ok);
        assert_eq!(CStr::from_ptr(hex.as_ptr()).to_str().unwrap(), "0x1");

        let mut k = 0;
        assert_eq!(empc_result_kkt_solves(r, &mut k), EmpcStatus::Ok);
        assert_eq!(k, 1);

        empc_result_free(r);
        empc_qp_free(qp);
    }
}

#[test]
fn warm_start_from_hex() {
    unsafe {
        let qp = toy_qp();
        let warm = CString::new("0x1").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(empc_solve(qp, [1.0, 0.0].as_ptr(), 2, warm.as_ptr(), 0, &mut r), EmpcStatus::Ok);
        let mut u = [0.0; 1];
        assert_eq!(empc_result_u_first(r, u.as_mut_ptr(), 1, ptr::null_mut()), EmpcStatus::Ok);
        assert!((u[0] - 1.0).abs() < 1e-12);
        empc_result_free(r);

        let bad = CString::new("0x2").unwrap();
        assert_eq!(empc_solve(qp, [1.0, 0.0].as_ptr(), 2, bad.as_ptr(), 0, &mut r), EmpcStatus::Invalid);
        empc_qp_free(qp);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(empc_problem_from_json(ptr::null(), &mut p), EmpcStatus::NullPointer);
        let junk = CString::new("{").unwrap();
        assert_eq!(empc_problem_from_json(junk.as_ptr(), &mut p), EmpcStatus::Json);
        assert!(last_error().contains("JSON"));

        let qp = toy_qp();
        let mut r = ptr::null_mut();
        assert_eq!(empc_solve(qp, [1.0].as_ptr(), 1, ptr::null(), 0, &mut r), EmpcStatus::Dimension);
        assert!(last_error().contains("expected 2"));

        assert_eq!(empc_solve(qp, [1.0, 0.0].as_ptr(), 2, ptr::null(), 0, &mut r), EmpcStatus::Ok);
        let mut tiny = [0 as c_char; 2];
        assert_eq!(empc_result_active_set(r, tiny.as_mut_ptr(), 2), EmpcStatus::BufferTooSmall);
        let mut z = [0.0; 1];
        assert_eq!(empc_result_z(r, z.as_mut_ptr(), 0, ptr::null_mut()), EmpcStatus::BufferTooSmall);
        empc_result_free(r);
        empc_qp_free(qp);

        // freeing null is a no-op
        empc_problem_free(ptr::null_mut());
        empc_qp_free(ptr::null_mut());
        empc_result_free(ptr::null_mut());
    }
}

#[test]
fn beam_problem_dimensions() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(empc_beam_build(10, 0.0, &mut p), EmpcStatus::Ok);
        let mut qp = ptr::null_mut();
        assert_eq!(empc_qp_build(p, &mut qp), EmpcStatus::Ok);
        let (mut nz, mut nt, mut pt) = (0, 0, 0);
        empc_qp_dims(qp, &mut nz, &mut nt, &mut pt);
        assert_eq!((nz, nt, pt), (20, 38, 58));

        let theta = vec![0.0; nt];
        let mut r = ptr::null_mut();
        assert_eq!(empc_solve(qp, theta.as_ptr(), nt, ptr::null(), 0, &mut r), EmpcStatus::Ok);
        let mut u = [1.0; 2];
        empc_result_u_first(r, u.as_mut_ptr(), 2, ptr::null_mut());
        assert_eq!(u, [0.0, 0.0]);
        empc_result_free(r);
        empc_qp_free(qp);
        empc_problem_free(p);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/empc.h");
    for f in [
        "empc_last_error_message",
        "empc_problem_from_json",
        "empc_beam_build",
        "empc_problem_free",
        "empc_qp_build",
        "empc_qp_free",
        "empc_qp_dims",
        "empc_solve",
        "empc_result_free",
        "empc_result_status",
        "empc_result_z",
        "empc_result_u_first",
        "empc_result_active_set",
        "empc_result_kkt_solves",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}
