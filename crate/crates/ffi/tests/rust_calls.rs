//! Status codes, error messages and buffer contracts through the Rust
//! view of the C functions.

use std::ffi::CStr;
use std::ptr;

use kronfilter_ffi::*;

fn last_error() -> String {
    let p = kf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn data(m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..m * n).map(|k| ((k * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let y: Vec<f64> = (0..n).map(|j| x[j * m] - 0.5 * x[j * m + 1]).collect();
    (x, y)
}

#[test]
fn dataset_errors() {
    let (x, y) = data(4, 10);
    let mut ds = ptr::null_mut();
    let st = unsafe { kf_dataset_new(ptr::null(), 4, 10, y.as_ptr(), &mut ds) };
    assert_eq!(st, KfStatus::NullPointer);
    assert!(last_error().contains("x"));
    assert!(ds.is_null());

    let st = unsafe { kf_dataset_new(x.as_ptr(), 4, 0, y.as_ptr(), &mut ds) };
    assert_ne!(st, KfStatus::Ok);

    let st = unsafe { kf_dataset_new(x.as_ptr(), 4, 10, y.as_ptr(), ptr::null_mut()) };
    assert_eq!(st, KfStatus::NullPointer);
}

#[test]
fn press_matches_library() {
    let (x, y) = data(4, 30);
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { kf_dataset_new(x.as_ptr(), 4, 30, y.as_ptr(), &mut ds) }, KfStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { kf_press_loocv(ds, 0.1, &mut v) }, KfStatus::Ok);
    let d = kronfilter::DataSet::new(
        nalgebra::DMatrix::from_column_slice(4, 30, &x),
        nalgebra::DVector::from_column_slice(&y),
    )
    .unwrap();
    assert_eq!(v, kronfilter::ridge::press_loocv(&d, 0.1).unwrap());

    assert_eq!(unsafe { kf_press_loocv(ds, -1.0, &mut v) }, KfStatus::InvalidArgument);

    let mut w = [0.0; 4];
    assert_eq!(unsafe { kf_ridge_solve(ds, 1e-6, w.as_mut_ptr(), 4) }, KfStatus::Ok);
    assert!((w[0] - 1.0).abs() < 1e-4 && (w[1] + 0.5).abs() < 1e-4);
    assert_eq!(unsafe { kf_ridge_solve(ds, 1e-6, w.as_mut_ptr(), 3) }, KfStatus::BufferSize);

    let (mut a, mut p) = (0.0, 0.0);
    assert_eq!(unsafe { kf_ridge_select(ds, 1e-8, 1e2, &mut a, &mut p) }, KfStatus::Ok);
    assert!((1e-8..=1e2).contains(&a) && p.is_finite());
    assert_eq!(unsafe { kf_ridge_select(ds, 1.0, 0.1, &mut a, &mut p) }, KfStatus::InvalidArgument);
    unsafe { kf_dataset_free(ds) };
}

#[test]
fn estimates_and_shape_errors() {
    let (x, y) = data(6, 60);
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { kf_dataset_new(x.as_ptr(), 6, 60, y.as_ptr(), &mut ds) }, KfStatus::Ok);

    let mut est = ptr::null_mut();
    assert_eq!(unsafe { kf_als_fit(ds, 4, 2, 1, 1e-3, 0, &mut est) }, KfStatus::Dimension);
    assert_eq!(unsafe { kf_als_fit(ds, 2, 3, 3, 1e-3, 0, &mut est) }, KfStatus::Dimension);

    assert_eq!(unsafe { kf_als_fit(ds, 2, 3, 2, 1e-3, 0, &mut est) }, KfStatus::Ok);
    let (mut m1, mut m2, mut r) = (0, 0, 0);
    assert_eq!(unsafe { kf_estimate_shape(est, &mut m1, &mut m2, &mut r) }, KfStatus::Ok);
    assert_eq!((m1, m2, r), (2, 3, 2));
    let mut alpha = 0.0;
    assert_eq!(unsafe { kf_estimate_alpha(est, &mut alpha) }, KfStatus::Ok);
    assert_eq!(alpha, 1e-3);

    let (mut u1, mut u2, mut w) = ([0.0; 4], [0.0; 6], [0.0; 6]);
    assert_eq!(
        unsafe { kf_estimate_factors(est, u1.as_mut_ptr(), 4, u2.as_mut_ptr(), 6) },
        KfStatus::Ok
    );
    assert_eq!(unsafe { kf_estimate_filter(est, w.as_mut_ptr(), 6) }, KfStatus::Ok);
    // w = vec(U1 U2ᵀ), column-major.
    for j in 0..3 {
        for i in 0..2 {
            let v = u1[i] * u2[j] + u1[2 + i] * u2[3 + j];
            assert!((w[j * 2 + i] - v).abs() < 1e-12);
        }
    }
    unsafe { kf_estimate_free(est) };

    let mut est = ptr::null_mut();
    assert_eq!(unsafe { kf_alo_select(ds, 2, 3, 1, 1e-8, 1e2, &mut est) }, KfStatus::Ok);
    let mut j = 0.0;
    assert_eq!(unsafe { kf_estimate_alo(est, &mut j) }, KfStatus::Ok);
    assert!(j.is_finite() && j >= 0.0);
    unsafe { kf_estimate_free(est) };

    assert_eq!(unsafe { kf_estimate_alpha(ptr::null(), &mut alpha) }, KfStatus::NullPointer);
    unsafe {
        kf_estimate_free(ptr::null_mut());
        kf_dataset_free(ds);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(kf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
