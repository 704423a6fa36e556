//! C ABI over the `tmts` library.
//!
//! Eigensolutions live behind the opaque `TmtsEigen` handle; every fallible
//! call returns a `TmtsStatus` and leaves a message retrievable with
//! `tmts_last_error_message` on the calling thread. Panics are caught at the
//! boundary and reported as `TMTS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tmts::entanglement::{entanglement_record, entropy_from_decomposition, reduced_density, von_neumann_entropy};
use tmts::model::build_hamiltonian;
use tmts::solver::{eigensolve_sym, solve_certified};
use tmts::{BasisSpec, EigenResult, Error, ModelParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TmtsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    BufferTooSmall = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Model parameters, mirroring `ModelParams`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TmtsParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub theta: f64,
    pub a: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub coupling: f64,
}

impl From<TmtsParams> for ModelParams {
    fn from(p: TmtsParams) -> Self {
        ModelParams {
            omega_x: p.omega_x,
            omega_y: p.omega_y,
            theta: p.theta,
            a: p.a,
            eps_a: p.eps_a,
            eps_b: p.eps_b,
            coupling: p.coupling,
        }
    }
}

impl From<ModelParams> for TmtsParams {
    fn from(p: ModelParams) -> Self {
        TmtsParams {
            omega_x: p.omega_x,
            omega_y: p.omega_y,
            theta: p.theta,
            a: p.a,
            eps_a: p.eps_a,
            eps_b: p.eps_b,
            coupling: p.coupling,
        }
    }
}

/// Entanglement data of one eigenstate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TmtsEntanglement {
    pub k: usize,
    pub energy: f64,
    pub s_vn: f64,
    pub s_ab: f64,
    pub dp_ab: f64,
    /// |S_vN from the reduced density - S_vN from (S_AB, dP_AB)|
    pub identity_deviation: f64,
}

/// Opaque eigensolution handle.
pub struct TmtsEigen {
    inner: EigenResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> TmtsStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::MemoryBudget { .. }
        | Error::LengthMismatch { .. }
        | Error::Config { .. } => TmtsStatus::InvalidArgument,
        Error::OutOfRange { .. } => TmtsStatus::OutOfRange,
        Error::Io(_) | Error::OutputDir { .. } | Error::CorruptCache { .. } => TmtsStatus::Io,
        _ => TmtsStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (TmtsStatus, String)>) -> TmtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TmtsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TmtsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TmtsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TmtsStatus, String) {
    (TmtsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn eigen_ref<'a>(e: *const TmtsEigen) -> Result<&'a EigenResult, (TmtsStatus, String)> {
    e.as_ref().map(|h| &h.inner).ok_or_else(|| null("eigen handle"))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (TmtsStatus, String)> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err((
            TmtsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tmts_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn tmts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Writes the default model parameters into `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `TmtsParams`.
#[no_mangle]
pub unsafe extern "C" fn tmts_params_default(out: *mut TmtsParams) -> TmtsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ModelParams::default().into();
        Ok(())
    })
}

/// Diagonalizes the Hamiltonian in the matched basis with `n_x`, `n_y`
/// quanta per mode. No convergence certification.
///
/// # Safety
/// `params` must point to a valid `TmtsParams`; `out` to writable storage
/// for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn tmts_solve(
    params: *const TmtsParams,
    n_x: usize,
    n_y: usize,
    out: *mut *mut TmtsEigen,
) -> TmtsStatus {
    guard(|| {
        let p: ModelParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let basis = BasisSpec::matched(&p, n_x, n_y);
        let h = build_hamiltonian(&p, &basis).map_err(lib)?;
        let inner = eigensolve_sym(&h, &basis).map_err(lib)?;
        *out = Box::into_raw(Box::new(TmtsEigen { inner }));
        Ok(())
    })
}

/// Like `tmts_solve`, certified against an eigenvalue-only solve with
/// `ladder_step` fewer quanta per mode at drift tolerance `tol`.
///
/// # Safety
/// As for `tmts_solve`.
#[no_mangle]
pub unsafe extern "C" fn tmts_solve_certified(
    params: *const TmtsParams,
    n_x: usize,
    n_y: usize,
    ladder_step: usize,
    tol: f64,
    out: *mut *mut TmtsEigen,
) -> TmtsStatus {
    guard(|| {
        let p: ModelParams = (*params.as_ref().ok_or_else(|| null("params"))?).into();
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let basis = BasisSpec::matched(&p, n_x, n_y);
        let lower = BasisSpec::matched(&p, n_x.saturating_sub(ladder_step), n_y.saturating_sub(ladder_step));
        let (inner, _) =
            solve_certified(&p, &basis, &lower, tol, tmts::model::DEFAULT_MEMORY_BUDGET_MB).map_err(lib)?;
        *out = Box::into_raw(Box::new(TmtsEigen { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `e` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_free(e: *mut TmtsEigen) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of eigenpairs (2 (N_x+1)(N_y+1)); 0 for a null handle.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_dim(e: *const TmtsEigen) -> usize {
    e.as_ref().map_or(0, |h| h.inner.dim())
}

/// Highest certified index, or -1 when uncertified or nothing converged.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_converged_upto(e: *const TmtsEigen) -> i64 {
    e.as_ref()
        .and_then(|h| h.inner.converged_upto())
        .map_or(-1, |k| k as i64)
}

/// Copies all eigenvalues (ascending) into `buf` of capacity `len`.
///
/// # Safety
/// `e` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_energies(e: *const TmtsEigen, buf: *mut f64, len: usize) -> TmtsStatus {
    guard(|| copy_out(eigen_ref(e)?.energies(), buf, len))
}

/// Copies eigenvector `k` as [C_A; C_B] into `buf` of capacity `len`.
///
/// # Safety
/// `e` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_state(e: *const TmtsEigen, k: usize, buf: *mut f64, len: usize) -> TmtsStatus {
    guard(|| {
        let eig = eigen_ref(e)?;
        if k >= eig.dim() {
            return Err(lib(Error::OutOfRange {
                start: k,
                end: k + 1,
                limit: eig.dim(),
            }));
        }
        copy_out(eig.state(k), buf, len)
    })
}

/// Entanglement entropy and its decomposition for eigenstate `k`.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tmts_eigen_entanglement(
    e: *const TmtsEigen,
    k: usize,
    out: *mut TmtsEntanglement,
) -> TmtsStatus {
    guard(|| {
        let eig = eigen_ref(e)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if k >= eig.dim() {
            return Err(lib(Error::OutOfRange {
                start: k,
                end: k + 1,
                limit: eig.dim(),
            }));
        }
        let (r, dev) = entanglement_record(eig, k).map_err(lib)?;
        *out = TmtsEntanglement {
            k: r.k,
            energy: r.energy,
            s_vn: r.s_vn,
            s_ab: r.s_ab,
            dp_ab: r.dp_ab,
            identity_deviation: dev,
        };
        Ok(())
    })
}

/// Von Neumann entropy (nats) of the electronic reduced density of a pure
/// state with components `c1`, `c2` of length `len` each.
///
/// # Safety
/// `c1` and `c2` must be valid for `len` reads; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tmts_entropy_of_state(
    c1: *const f64,
    c2: *const f64,
    len: usize,
    out: *mut f64,
) -> TmtsStatus {
    guard(|| {
        if c1.is_null() || c2.is_null() {
            return Err(null("coefficients"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (a, b) = (std::slice::from_raw_parts(c1, len), std::slice::from_raw_parts(c2, len));
        *out = von_neumann_entropy(&reduced_density(a, b).map_err(lib)?);
        Ok(())
    })
}

/// Entropy from the surface overlap and population difference.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tmts_entropy_from_decomposition(s_ab: f64, dp_ab: f64, out: *mut f64) -> TmtsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = entropy_from_decomposition(s_ab, dp_ab).map_err(lib)?;
        Ok(())
    })
}
