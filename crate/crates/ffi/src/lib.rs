//! C interface. Every function returns an `EmpcStatus` code; on failure the
//! message is kept per thread and read back with `empc_last_error_message`.
//! Handles are opaque and released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use empc_core::beam::{build_benchmark_problem, BenchmarkConfig};
use empc_core::linalg::Vector;
use empc_core::solver::{self, ActiveSet, SolveResult, SolveStatus, Tolerances};
use empc_core::{lifting, Error, LiftedQP, Parameter, ProblemDefinition};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmpcStatus {
    Ok = 0,
    NullPointer = 1,
    Invalid = 2,
    Dimension = 3,
    NotCoercive = 4,
    Json = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmpcSolveStatus {
    Optimal = 0,
    Infeasible = 1,
    BudgetExhausted = 2,
}

pub struct EmpcProblem(ProblemDefinition);

pub struct EmpcQp(LiftedQP);

pub struct EmpcResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn code_of(e: &Error) -> EmpcStatus {
    match e {
        Error::Dimension { .. } => EmpcStatus::Dimension,
        Error::NotCoercive { .. } => EmpcStatus::NotCoercive,
        Error::Json(_) => EmpcStatus::Json,
        Error::Invalid(_) => EmpcStatus::Invalid,
        _ => EmpcStatus::Other,
    }
}

fn guard<F: FnOnce() -> Result<(), (EmpcStatus, String)>>(f: F) -> EmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmpcStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside empc");
            EmpcStatus::Panic
        }
    }
}

fn core<T>(r: empc_core::Result<T>) -> Result<T, (EmpcStatus, String)> {
    r.map_err(|e| (code_of(&e), e.to_string()))
}

fn null(what: &str) -> (EmpcStatus, String) {
    (EmpcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EmpcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EmpcStatus::Invalid, format!("{what} is not valid UTF-8")))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (EmpcStatus, String)> {
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((
            EmpcStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the last error message of this thread, NUL-terminated and truncated
/// to `len - 1` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn empc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a problem from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn empc_problem_from_json(json: *const c_char, out: *mut *mut EmpcProblem) -> EmpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let p = core(ProblemDefinition::from_json(text))?;
        *out = Box::into_raw(Box::new(EmpcProblem(p)));
        Ok(())
    })
}

/// Builds the beam benchmark problem with default settings except the
/// horizon and, when `h > 0`, the sampling period.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn empc_beam_build(horizon: usize, h: f64, out: *mut *mut EmpcProblem) -> EmpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = BenchmarkConfig {
            horizon,
            ..BenchmarkConfig::default()
        };
        if h > 0.0 {
            cfg.h = h;
        }
        let p = core(build_benchmark_problem(&cfg))?;
        *out = Box::into_raw(Box::new(EmpcProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn empc_problem_free(p: *mut EmpcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Condenses a problem into its parametric QP.
///
/// # Safety
/// `p` must be a live problem handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn empc_qp_build(p: *const EmpcProblem, out: *mut *mut EmpcQp) -> EmpcStatus {
    guard(|| {
        if p.is_null() {
            return Err(null("problem"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let qp = core(lifting::build(&(*p).0))?;
        *out = Box::into_raw(Box::new(EmpcQp(qp)));
        Ok(())
    })
}

/// # Safety
/// `qp` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn empc_qp_free(qp: *mut EmpcQp) {
    if !qp.is_null() {
        drop(Box::from_raw(qp));
    }
}

/// Decision-vector length, parameter length and constraint count. Any output
/// pointer may be null.
///
/// # Safety
/// `qp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn empc_qp_dims(
    qp: *const EmpcQp,
    nz: *mut usize,
    ntheta: *mut usize,
    p_tilde: *mut usize,
) -> EmpcStatus {
    guard(|| {
        if qp.is_null() {
            return Err(null("qp"));
        }
        let q = &(*qp).0;
        if !nz.is_null() {
            *nz = q.nz();
        }
        if !ntheta.is_null() {
            *ntheta = q.dims.ntheta();
        }
        if !p_tilde.is_null() {
            *p_tilde = q.p_tilde();
        }
        Ok(())
    })
}

/// Solves for the stacked parameter `theta = (x, u_prev)`. `warm_hex` may be
/// null for a cold start; `budget = 0` keeps the default KKT-solve budget.
/// A successful call yields a result even when the status is not optimal.
///
/// # Safety
/// `qp` must be a live handle, `theta` must point to `theta_len` doubles and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn empc_solve(
    qp: *const EmpcQp,
    theta: *const f64,
    theta_len: usize,
    warm_hex: *const c_char,
    budget: usize,
    out: *mut *mut EmpcResult,
) -> EmpcStatus {
    guard(|| {
        if qp.is_null() {
            return Err(null("qp"));
        }
        if theta.is_null() && theta_len > 0 {
            return Err(null("theta"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let q = &(*qp).0;
        if theta_len != q.dims.ntheta() {
            return Err((
                EmpcStatus::Dimension,
                format!("theta has {theta_len} entries, expected {}", q.dims.ntheta()),
            ));
        }
        let th = Vector::from_column_slice(std::slice::from_raw_parts(theta, theta_len));
        let param = Parameter::from_stacked(&th, q.dims.nx);
        let warm = if warm_hex.is_null() {
            ActiveSet::empty(q.p_tilde())
        } else {
            let s = c_str(warm_hex, "warm_hex")?;
            ActiveSet::from_hex(q.p_tilde(), s)
                .ok_or_else(|| (EmpcStatus::Invalid, format!("bad warm-start mask {s:?}")))?
        };
        let mut tol = Tolerances::for_qp(q);
        if budget > 0 {
            tol.max_kkt_solves = budget;
        }
        let res = core(solver::solve(q, &param, &warm, &tol))?;
        *out = Box::into_raw(Box::new(EmpcResult(res)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn empc_result_free(r: *mut EmpcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle and `status` valid.
#[no_mangle]
pub unsafe extern "C" fn empc_result_status(r: *const EmpcResult, status: *mut EmpcSolveStatus) -> EmpcStatus {
    guard(|| {
        if r.is_null() || status.is_null() {
            return Err(null("argument"));
        }
        *status = match (*r).0.status {
            SolveStatus::Optimal => EmpcSolveStatus::Optimal,
            SolveStatus::Infeasible => EmpcSolveStatus::Infeasible,
            SolveStatus::BudgetExhausted => EmpcSolveStatus::BudgetExhausted,
        };
        Ok(())
    })
}

/// Copies `z*` (empty unless optimal). `written` receives the length.
///
/// # Safety
/// `buf` must hold `len` doubles; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn empc_result_z(r: *const EmpcResult, buf: *mut f64, len: usize, written: *mut usize) -> EmpcStatus {
    guard(|| {
        if r.is_null() {
            return Err(null("result"));
        }
        let z = (*r).0.z_star.as_slice();
        if !written.is_null() {
            *written = z.len();
        }
        copy_out(z, buf, len)
    })
}

/// Copies the first input of the optimal sequence.
///
/// # Safety
/// As for `empc_result_z`.
#[no_mangle]
pub unsafe extern "C" fn empc_result_u_first(
    r: *const EmpcResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> EmpcStatus {
    guard(|| {
        if r.is_null() {
            return Err(null("result"));
        }
        let u = (*r).0.u_first.as_slice();
        if !written.is_null() {
            *written = u.len();
        }
        copy_out(u, buf, len)
    })
}

/// Writes the active set as a NUL-terminated hex mask such as `0x1`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn empc_result_active_set(r: *const EmpcResult, buf: *mut c_char, len: usize) -> EmpcStatus {
    guard(|| {
        if r.is_null() || buf.is_null() {
            return Err(null("argument"));
        }
        let hex = (*r).0.active_set.to_hex();
        if len < hex.len() + 1 {
            return Err((EmpcStatus::BufferTooSmall, format!("need {} bytes", hex.len() + 1)));
        }
        ptr::copy_nonoverlapping(hex.as_ptr() as *const c_char, buf, hex.len());
        *buf.add(hex.len()) = 0;
        Ok(())
    })
}

/// Number of KKT systems solved by the search.
///
/// # Safety
/// `r` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn empc_result_kkt_solves(r: *const EmpcResult, out: *mut usize) -> EmpcStatus {
    guard(|| {
        if r.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        *out = (*r).0.stats.kkt_solves;
        Ok(())
    })
}
