use std::ffi::{c_char, c_int, CStr, CString};
use std::process::Command;
use std::ptr;

use kfp::cell::{CorrectorOptions, CorrectorSet};
use kfp::spectral::{CosineTerm, Friction, Model, Potential};
use kfp_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { kfp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0, "no error recorded");
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn cosine_model(amplitude: f64) -> *mut KfpModel {
    let k = [1i32];
    let a = [amplitude];
    let mut m = ptr::null_mut();
    let st = unsafe { kfp_model_new(1, k.as_ptr(), a.as_ptr(), ptr::null(), 1, ptr::null(), &mut m) };
    assert_eq!(st, KfpStatus::Ok);
    m
}

#[test]
fn free_model_diffusivity_is_inverse_friction() {
    let fric = [2.0, 0.5, 0.5, 1.0];
    let mut m = ptr::null_mut();
    let st = unsafe { kfp_model_new(2, ptr::null(), ptr::null(), ptr::null(), 0, fric.as_ptr(), &mut m) };
    assert_eq!(st, KfpStatus::Ok);
    assert_eq!(unsafe { kfp_model_dim(m) }, 2);

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { kfp_correctors_build(m, 2, 4, 8, 1e-12, &mut c) }, KfpStatus::Ok);
    let mut a = [0.0; 4];
    assert_eq!(unsafe { kfp_correctors_diffusivity(c, a.as_mut_ptr(), 4) }, KfpStatus::Ok);
    let det = 2.0 * 1.0 - 0.25;
    let inv = [1.0 / det, -0.5 / det, -0.5 / det, 2.0 / det];
    for (x, y) in a.iter().zip(inv) {
        assert!((x - y).abs() < 1e-10, "{a:?} vs {inv:?}");
    }
    unsafe {
        kfp_correctors_free(c);
        kfp_model_free(m);
    }
}

#[test]
fn cosine_model_matches_rust_api() {
    let m = cosine_model(1.0);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { kfp_correctors_build(m, 2, 16, 64, 1e-10, &mut c) }, KfpStatus::Ok);
    let mut a = [0.0];
    assert_eq!(unsafe { kfp_correctors_diffusivity(c, a.as_mut_ptr(), 1) }, KfpStatus::Ok);

    let model = Model::new(
        Potential::new(1, vec![CosineTerm { k: vec![1], amplitude: 1.0, phase: 0.0 }]).unwrap(),
        Friction::identity(1),
    )
    .unwrap();
    let direct = CorrectorSet::build(&model, &CorrectorOptions::new(2, 16, 64).with_tol(1e-10)).unwrap();
    assert_eq!(a[0], direct.diffusivity()[(0, 0)]);
    assert!(a[0] > 0.0 && a[0] < 1.0);

    let alpha = [2u32];
    let mut coef = 0.0;
    assert_eq!(unsafe { kfp_correctors_macro_coefficient(c, alpha.as_ptr(), 1, &mut coef) }, KfpStatus::Ok);
    assert_eq!(coef, direct.abar(&[2]));
    let alpha = [4u32];
    assert_eq!(
        unsafe { kfp_correctors_macro_coefficient(c, alpha.as_ptr(), 1, &mut coef) },
        KfpStatus::InvalidArgument
    );
    unsafe {
        kfp_correctors_free(c);
        kfp_model_free(m);
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.kfpc").to_str().unwrap()).unwrap();
    let m = cosine_model(0.5);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { kfp_correctors_build(m, 2, 8, 32, 1e-10, &mut c) }, KfpStatus::Ok);
    assert_eq!(unsafe { kfp_correctors_save(c, path.as_ptr()) }, KfpStatus::Ok);

    let mut back = ptr::null_mut();
    assert_eq!(unsafe { kfp_correctors_load(m, 2, 8, 32, 1e-10, path.as_ptr(), &mut back) }, KfpStatus::Ok);
    let (mut a, mut b) = ([0.0], [0.0]);
    unsafe {
        kfp_correctors_diffusivity(c, a.as_mut_ptr(), 1);
        kfp_correctors_diffusivity(back, b.as_mut_ptr(), 1);
    }
    assert_eq!(a, b);

    let mut wrong = ptr::null_mut();
    let st = unsafe { kfp_correctors_load(m, 2, 8, 16, 1e-10, path.as_ptr(), &mut wrong) };
    assert_eq!(st, KfpStatus::CacheInvalid);
    assert!(wrong.is_null());
    assert!(!last_error().is_empty());

    let missing = CString::new(dir.path().join("none.kfpc").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { kfp_correctors_load(m, 2, 8, 32, 1e-10, missing.as_ptr(), &mut wrong) },
        KfpStatus::Io
    );
    unsafe {
        kfp_correctors_free(back);
        kfp_correctors_free(c);
        kfp_model_free(m);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { kfp_model_new(4, ptr::null(), ptr::null(), ptr::null(), 0, ptr::null(), &mut m) },
        KfpStatus::InvalidArgument
    );
    assert!(last_error().contains("dimension"));

    let fric = [-1.0];
    assert_eq!(
        unsafe { kfp_model_new(1, ptr::null(), ptr::null(), ptr::null(), 0, fric.as_ptr(), &mut m) },
        KfpStatus::InvalidArgument
    );

    let mut a = [0.0];
    assert_eq!(
        unsafe { kfp_correctors_diffusivity(ptr::null(), a.as_mut_ptr(), 1) },
        KfpStatus::NullPointer
    );
    assert!(last_error().contains("null"));

    let toml = CString::new("[model]\ndim = 2\nfriction = [[1.0, 0.0], [0.0, 1.0]]\n").unwrap();
    assert_eq!(unsafe { kfp_model_from_toml(toml.as_ptr(), &mut m) }, KfpStatus::Ok);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { kfp_correctors_build(m, 1, 2, 4, 1e-12, &mut c) }, KfpStatus::Ok);
    assert_eq!(
        unsafe { kfp_correctors_diffusivity(c, a.as_mut_ptr(), 1) },
        KfpStatus::BufferTooSmall
    );

    // A successful call clears the message.
    let mut b = [0.0; 4];
    assert_eq!(unsafe { kfp_correctors_diffusivity(c, b.as_mut_ptr(), 4) }, KfpStatus::Ok);
    assert_eq!(unsafe { kfp_last_error_message(ptr::null_mut(), 0) }, 0);

    let bad = CString::new("[model]\ndim = 1\nnoise = 3\n").unwrap();
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { kfp_model_from_toml(bad.as_ptr(), &mut m2) }, KfpStatus::InvalidArgument);
    assert!(m2.is_null());
    unsafe {
        kfp_correctors_free(c);
        kfp_model_free(m);
        kfp_model_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates_to_buffer() {
    let mut m = ptr::null_mut();
    unsafe { kfp_model_new(0, ptr::null(), ptr::null(), ptr::null(), 0, ptr::null(), &mut m) };
    let full = unsafe { kfp_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 5];
    assert_eq!(unsafe { kfp_last_error_message(buf.as_mut_ptr(), 5) }, full);
    assert_eq!(buf[4], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 4);
}

#[test]
fn langevin_ensemble_free_model() {
    let mut m = ptr::null_mut();
    unsafe { kfp_model_new(1, ptr::null(), ptr::null(), ptr::null(), 0, ptr::null(), &mut m) };
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { kfp_langevin_run(m, 40.0, 4000, 9, &mut e) }, KfpStatus::Ok);
    let n = unsafe { kfp_ensemble_times(e, ptr::null_mut(), 0) };
    let mut times = vec![0.0; n];
    unsafe { kfp_ensemble_times(e, times.as_mut_ptr(), n) };
    assert_eq!(*times.last().unwrap(), 40.0);

    let (mut est, mut se) = ([0.0], [0.0]);
    assert_eq!(
        unsafe { kfp_ensemble_diffusivity(e, est.as_mut_ptr(), se.as_mut_ptr(), 1) },
        KfpStatus::Ok
    );
    assert!(se[0] > 0.0);
    assert!((est[0] - 1.0).abs() < 4.0 * se[0] + 0.05, "{est:?} +- {se:?}");
    unsafe {
        kfp_ensemble_free(e);
        kfp_model_free(m);
    }
}

#[test]
fn identity_suite_passes() {
    let mut passed: c_int = 0;
    assert_eq!(unsafe { kfp_poly_selftest(&mut passed) }, KfpStatus::Ok);
    assert_eq!(passed, 1);
    let v = unsafe { CStr::from_ptr(kfp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/kfp.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in [
        "kfp_last_error_message",
        "kfp_model_new",
        "kfp_correctors_build",
        "kfp_correctors_diffusivity",
        "kfp_langevin_run",
        "KFP_STATUS_CACHE_INVALID",
        "typedef struct KfpModel KfpModel",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    match Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).status() {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler; syntax check skipped"),
    }
}
