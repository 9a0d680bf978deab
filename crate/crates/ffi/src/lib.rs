//! C ABI over the `kronfilter` estimators.
//!
//! Every fallible call returns a [`KfStatus`]; on failure a message is kept
//! per thread and can be read with [`kf_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Matrices are column-major.
//!
//! ```c
//! KfDataset *ds = NULL;
//! KfEstimate *est = NULL;
//! if (kf_dataset_new(x, m, n, y, &ds) != KF_STATUS_OK) puts(kf_last_error());
//! kf_alo_select(ds, 3, 4, 2, 1e-8, 1e2, &est);
//! kf_estimate_filter(est, w, m);
//! kf_estimate_free(est);
//! kf_dataset_free(ds);
//! ```

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kronfilter::alo;
use kronfilter::als::{self, AlsConfig};
use kronfilter::ridge;
use kronfilter::tensor_ops::{self, KroneckerShape};
use kronfilter::{DataSet, Error};
use nalgebra::{DMatrix, DVector};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Singular = 4,
    /// A leave-one-out leverage reached 1.
    Leverage = 5,
    SearchFailed = 6,
    NonFinite = 7,
    /// Output buffer length does not match the result.
    BufferSize = 8,
    Panic = 9,
    Other = 10,
}

/// Samples `x` (M×N) and responses `y` (N).
pub struct KfDataset(DataSet);

/// A fitted filter with its factors and the α it was fitted at.
pub struct KfEstimate {
    shape: KroneckerShape,
    alpha: f64,
    j_alo: f64,
    u1: DMatrix<f64>,
    u2: DMatrix<f64>,
    w: DVector<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KfStatus {
    match e {
        Error::NotDivisible { .. } | Error::Dimension(_) | Error::InvalidShape(_) => KfStatus::Dimension,
        Error::InvalidArgument(_) | Error::Config(_) | Error::NonStationary(_) => KfStatus::InvalidArgument,
        Error::Singular | Error::AlsSolve { .. } => KfStatus::Singular,
        Error::DegenerateLeverage { .. } | Error::AloLeverage { .. } => KfStatus::Leverage,
        Error::SearchFailed { .. } => KfStatus::SearchFailed,
        Error::NonFinite(_) | Error::NonFinitePress { .. } => KfStatus::NonFinite,
        _ => KfStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (KfStatus, String)>) -> KfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            KfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (KfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (KfStatus, String) {
    (KfStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (KfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out(src: &[f64], dst: *mut f64, len: usize, what: &str) -> Result<(), (KfStatus, String)> {
    if dst.is_null() {
        return Err(null(what));
    }
    if len != src.len() {
        return Err((
            KfStatus::BufferSize,
            format!("{what} holds {len} values, result has {}", src.len()),
        ));
    }
    std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
    Ok(())
}

unsafe fn dataset<'a>(ds: *const KfDataset) -> Result<&'a DataSet, (KfStatus, String)> {
    ds.as_ref().map(|d| &d.0).ok_or_else(|| null("dataset"))
}

unsafe fn estimate<'a>(est: *const KfEstimate) -> Result<&'a KfEstimate, (KfStatus, String)> {
    est.as_ref().ok_or_else(|| null("estimate"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (KfStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `x` (`m × n`, column-major) and `y` (`n`) into a new dataset.
///
/// # Safety
/// `x` must point to `m * n` doubles, `y` to `n` doubles, `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kf_dataset_new(
    x: *const f64,
    m: usize,
    n: usize,
    y: *const f64,
    out: *mut *mut KfDataset,
) -> KfStatus {
    guard(|| {
        let len = m.checked_mul(n).ok_or((KfStatus::Dimension, "m * n overflows".to_string()))?;
        let xs = slice(x, len, "x")?;
        let ys = slice(y, n, "y")?;
        let d = DataSet::new(DMatrix::from_column_slice(m, n, xs), DVector::from_column_slice(ys)).map_err(lib_err)?;
        put(out, KfDataset(d))
    })
}

/// # Safety
/// `ds` must be NULL or a handle from [`kf_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_dataset_free(ds: *mut KfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Exact leave-one-out error of the full-rank ridge filter at `alpha`.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_press_loocv(ds: *const KfDataset, alpha: f64, out: *mut f64) -> KfStatus {
    guard(|| {
        let v = ridge::press_loocv(dataset(ds)?, alpha).map_err(lib_err)?;
        write_out(&[v], out, 1, "out")
    })
}

/// Full-rank ridge filter at `alpha` into `w` (length M).
///
/// # Safety
/// `ds` must be a live dataset handle and `w` must hold `w_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kf_ridge_solve(ds: *const KfDataset, alpha: f64, w: *mut f64, w_len: usize) -> KfStatus {
    guard(|| {
        let d = dataset(ds)?;
        let sol = ridge::ridge_solve(&ridge::empirical_moments(d), alpha).map_err(lib_err)?;
        write_out(sol.as_slice(), w, w_len, "w")
    })
}

/// α minimizing PRESS over `[lo, hi]`, and the PRESS value there.
///
/// # Safety
/// `ds` must be a live dataset handle; `alpha_out` and `press_out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_ridge_select(
    ds: *const KfDataset,
    lo: f64,
    hi: f64,
    alpha_out: *mut f64,
    press_out: *mut f64,
) -> KfStatus {
    guard(|| {
        let (a, p) = ridge::select_alpha_ridge(dataset(ds)?, (lo, hi)).map_err(lib_err)?;
        write_out(&[a], alpha_out, 1, "alpha_out")?;
        write_out(&[p], press_out, 1, "press_out")
    })
}

fn shape(m1: usize, m2: usize, r: usize) -> Result<KroneckerShape, (KfStatus, String)> {
    KroneckerShape::new(m1, m2, r).map_err(lib_err)
}

fn als_config(iterations: usize) -> AlsConfig {
    AlsConfig {
        iterations: if iterations == 0 { AlsConfig::default().iterations } else { iterations },
        ..AlsConfig::default()
    }
}

fn to_estimate(shape: KroneckerShape, res: &als::AlsResult, j_alo: f64) -> KfEstimate {
    let (_, w) = tensor_ops::reconstruct(&res.factors);
    KfEstimate {
        shape,
        alpha: res.alpha,
        j_alo,
        u1: res.factors.u1.clone(),
        u2: res.factors.u2.clone(),
        w,
    }
}

/// Rank-`r` factor model at a fixed `alpha` by alternating least squares.
/// `iterations = 0` uses the default count. The ALO metric of the fit is
/// stored when it exists and is NaN otherwise.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_als_fit(
    ds: *const KfDataset,
    m1: usize,
    m2: usize,
    r: usize,
    alpha: f64,
    iterations: usize,
    out: *mut *mut KfEstimate,
) -> KfStatus {
    guard(|| {
        let d = dataset(ds)?;
        let s = shape(m1, m2, r)?;
        let res = als::als_run(d, &s, alpha, &als_config(iterations), None).map_err(lib_err)?;
        let j = alo::alo_metric(d, &res).map_or(f64::NAN, |e| e.j_alo);
        put(out, to_estimate(s, &res, j))
    })
}

/// Rank-`r` factor model with α chosen by minimizing the ALO metric over
/// `[lo, hi]`.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_alo_select(
    ds: *const KfDataset,
    m1: usize,
    m2: usize,
    r: usize,
    lo: f64,
    hi: f64,
    out: *mut *mut KfEstimate,
) -> KfStatus {
    guard(|| {
        let d = dataset(ds)?;
        let s = shape(m1, m2, r)?;
        let sel = alo::select_alpha_alo(d, &s, &AlsConfig::default(), (lo, hi)).map_err(lib_err)?;
        put(out, to_estimate(s, &sel.final_solution, sel.j_alo_at_min))
    })
}

/// # Safety
/// `est` must be NULL or a handle returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_free(est: *mut KfEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// # Safety
/// `est` must be a live estimate handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_shape(est: *const KfEstimate, m1: *mut usize, m2: *mut usize, r: *mut usize) -> KfStatus {
    guard(|| {
        let e = estimate(est)?;
        for (p, v, what) in [(m1, e.shape.m1, "m1"), (m2, e.shape.m2, "m2"), (r, e.shape.r, "r")] {
            if p.is_null() {
                return Err(null(what));
            }
            *p = v;
        }
        Ok(())
    })
}

/// # Safety
/// `est` must be a live estimate handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_alpha(est: *const KfEstimate, out: *mut f64) -> KfStatus {
    guard(|| write_out(&[estimate(est)?.alpha], out, 1, "out"))
}

/// ALO metric at the estimate's α (NaN when undefined).
///
/// # Safety
/// `est` must be a live estimate handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_alo(est: *const KfEstimate, out: *mut f64) -> KfStatus {
    guard(|| write_out(&[estimate(est)?.j_alo], out, 1, "out"))
}

/// Filter `w = vec(U1 U2ᵀ)` into a buffer of length `M1·M2`.
///
/// # Safety
/// `est` must be a live estimate handle and `w` must hold `w_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_filter(est: *const KfEstimate, w: *mut f64, w_len: usize) -> KfStatus {
    guard(|| write_out(estimate(est)?.w.as_slice(), w, w_len, "w"))
}

/// Factor matrices, column-major: `u1` is `M1 × R`, `u2` is `M2 × R`.
///
/// # Safety
/// `est` must be a live estimate handle; `u1`, `u2` must hold `u1_len`,
/// `u2_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kf_estimate_factors(
    est: *const KfEstimate,
    u1: *mut f64,
    u1_len: usize,
    u2: *mut f64,
    u2_len: usize,
) -> KfStatus {
    guard(|| {
        let e = estimate(est)?;
        write_out(e.u1.as_slice(), u1, u1_len, "u1")?;
        write_out(e.u2.as_slice(), u2, u2_len, "u2")
    })
}
