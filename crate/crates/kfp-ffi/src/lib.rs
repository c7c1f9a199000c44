//! C ABI over `kfp`.
//!
//! Every fallible function returns a [`KfpStatus`]; on failure the message
//! is kept per thread and read back with [`kfp_last_error_message`]. Handles
//! are opaque, created by `*_new`/`*_build`/`*_run`/`*_load` and released by
//! the matching `*_free`, which accepts null.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kfp::cell::{CellError, CorrectorOptions, CorrectorSet};
use kfp::langevin::{estimate_diffusivity, integrate, EnsembleStats, LangevinConfig, LangevinError};
use kfp::persist::cache::{decode, encode, write_atomic};
use kfp::persist::{PersistError, RunConfig};
use kfp::spectral::{CosineTerm, Friction, Model, Potential, SpectralError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KfpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailed = 3,
    SimulationFailed = 4,
    CacheInvalid = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Potential and friction on the unit torus.
pub struct KfpModel {
    inner: Model,
}

/// Solved corrector hierarchy with its macroscopic tensors.
pub struct KfpCorrectors {
    inner: CorrectorSet,
}

/// Statistics of a Langevin ensemble.
pub struct KfpEnsemble {
    inner: EnsembleStats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(KfpStatus, String);

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        let status = match e {
            SpectralError::NoConvergence { .. } | SpectralError::IncompatibleRhs { .. } => KfpStatus::SolverFailed,
            _ => KfpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CellError> for Failure {
    fn from(e: CellError) -> Self {
        let status = match &e {
            CellError::InvalidOrder(_) => KfpStatus::InvalidArgument,
            _ => KfpStatus::SolverFailed,
        };
        Failure(status, e.to_string())
    }
}

impl From<LangevinError> for Failure {
    fn from(e: LangevinError) -> Self {
        let status = match e {
            LangevinError::InvalidInput(_) | LangevinError::StepTooLarge { .. } | LangevinError::NonConstantFriction => {
                KfpStatus::InvalidArgument
            }
            _ => KfpStatus::SimulationFailed,
        };
        Failure(status, e.to_string())
    }
}

impl From<PersistError> for Failure {
    fn from(e: PersistError) -> Self {
        let status = match &e {
            PersistError::CacheInvalid(_) => KfpStatus::CacheInvalid,
            PersistError::Io { .. } => KfpStatus::Io,
            PersistError::Config(_) | PersistError::Spectral(_) => KfpStatus::InvalidArgument,
            _ => KfpStatus::SolverFailed,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(KfpStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(KfpStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, records its error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KfpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KfpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            KfpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    if len < need {
        return Err(Failure(KfpStatus::BufferTooSmall, format!("{name} holds {len} values, need {need}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length plus one. Returns
/// zero when there is no error.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kfp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = (bytes.len() - 1).min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a model from `n_terms` potential terms `amplitude cos(2 pi k.x + phase)`
/// (`wavevectors` holds `n_terms * dim` integers, `phases` may be null) and
/// a `dim * dim` row-major friction matrix (null for the identity).
///
/// # Safety
/// Array arguments must be null or valid for the stated lengths; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_model_new(
    dim: usize,
    wavevectors: *const i32,
    amplitudes: *const f64,
    phases: *const f64,
    n_terms: usize,
    friction: *const f64,
    out: *mut *mut KfpModel,
) -> KfpStatus {
    guard(|| {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("dimension {dim} outside 1..=3")));
        }
        let ks = slice(wavevectors, n_terms * dim, "wavevectors")?;
        let amps = slice(amplitudes, n_terms, "amplitudes")?;
        let phs = if phases.is_null() { None } else { Some(slice(phases, n_terms, "phases")?) };
        let terms = (0..n_terms)
            .map(|t| CosineTerm {
                k: ks[t * dim..(t + 1) * dim].to_vec(),
                amplitude: amps[t],
                phase: phs.map_or(0.0, |p| p[t]),
            })
            .collect();
        let fric = if friction.is_null() {
            Friction::identity(dim)
        } else {
            let a = slice(friction, dim * dim, "friction")?;
            Friction::constant(a.chunks(dim).map(|r| r.to_vec()).collect())?
        };
        let model = Model::new(Potential::new(dim, terms)?, fric)?;
        put(out, KfpModel { inner: model })
    })
}

/// Builds the model of the `[model]` section of a TOML run configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_model_from_toml(toml: *const c_char, out: *mut *mut KfpModel) -> KfpStatus {
    guard(|| {
        let cfg = RunConfig::from_toml(string(toml, "toml")?)?;
        put(out, KfpModel { inner: cfg.model.build()? })
    })
}

/// # Safety
/// `model` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kfp_model_free(model: *mut KfpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Spatial dimension, or zero for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kfp_model_dim(model: *const KfpModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

fn options(order: u32, nx: usize, nv: usize, tol: f64) -> Result<CorrectorOptions, Failure> {
    if order < 1 || nv < 1 || !(tol > 0.0) {
        return Err(invalid("need order >= 1, nv >= 1 and tol > 0"));
    }
    Ok(CorrectorOptions::new(order, nx, nv).with_tol(tol))
}

/// Solves the corrector hierarchy up to `order` on `nx` Fourier and `nv`
/// Hermite modes.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_build(
    model: *const KfpModel,
    order: u32,
    nx: usize,
    nv: usize,
    tol: f64,
    out: *mut *mut KfpCorrectors,
) -> KfpStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let cset = CorrectorSet::build(&model.inner, &options(order, nx, nv, tol)?)?;
        put(out, KfpCorrectors { inner: cset })
    })
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_free(c: *mut KfpCorrectors) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Writes the effective diffusivity, `dim * dim` row-major, into `out`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_diffusivity(c: *const KfpCorrectors, out: *mut f64, len: usize) -> KfpStatus {
    guard(|| {
        let c = deref(c, "correctors")?;
        let a = c.inner.diffusivity();
        let d = a.nrows();
        let buf = out_slice(out, len, d * d, "out")?;
        for i in 0..d {
            for j in 0..d {
                buf[i * d + j] = a[(i, j)];
            }
        }
        Ok(())
    })
}

/// Macroscopic coefficient of the multi-index `alpha` (`dim` entries) with
/// `2 <= |alpha| <= order + 1`.
///
/// # Safety
/// `c` must be a live handle, `alpha` valid for `len` entries, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_macro_coefficient(
    c: *const KfpCorrectors,
    alpha: *const u32,
    len: usize,
    out: *mut f64,
) -> KfpStatus {
    guard(|| {
        let c = deref(c, "correctors")?;
        let a = slice(alpha, len, "alpha")?;
        if len != c.inner.dim() {
            return Err(invalid(format!("alpha has {len} entries, dimension is {}", c.inner.dim())));
        }
        let deg: u32 = a.iter().sum();
        if deg < 2 || deg > c.inner.order() + 1 {
            return Err(invalid(format!("|alpha| = {deg} outside 2..={}", c.inner.order() + 1)));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c.inner.abar(a);
        Ok(())
    })
}

/// Stores the correctors in the binary cache format at `path`.
///
/// # Safety
/// `c` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_save(c: *const KfpCorrectors, path: *const c_char) -> KfpStatus {
    guard(|| {
        let c = deref(c, "correctors")?;
        let path = string(path, "path")?;
        write_atomic(Path::new(path), &encode(&c.inner))?;
        Ok(())
    })
}

/// Loads correctors saved by [`kfp_correctors_save`] for the same model and
/// options; any mismatch or corruption gives `CacheInvalid`.
///
/// # Safety
/// `model` must be a live handle, `path` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_correctors_load(
    model: *const KfpModel,
    order: u32,
    nx: usize,
    nv: usize,
    tol: f64,
    path: *const c_char,
    out: *mut *mut KfpCorrectors,
) -> KfpStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let opts = options(order, nx, nv, tol)?;
        let path = string(path, "path")?;
        let bytes = std::fs::read(path).map_err(|e| Failure(KfpStatus::Io, format!("{path}: {e}")))?;
        let (fields, _) = decode(&bytes, &model.inner, &opts)?;
        let cset = CorrectorSet::from_correctors(&model.inner, &opts, fields)?;
        put(out, KfpCorrectors { inner: cset })
    })
}

/// Integrates `n_traj` Langevin trajectories from rest at the origin up to
/// `t_final`, recording once per unit time, with the default stable step.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_langevin_run(
    model: *const KfpModel,
    t_final: f64,
    n_traj: usize,
    seed: u64,
    out: *mut *mut KfpEnsemble,
) -> KfpStatus {
    guard(|| {
        let model = deref(model, "model")?;
        if n_traj == 0 || !(t_final >= 1.0) {
            return Err(invalid("need n_traj >= 1 and t_final >= 1"));
        }
        let mut cfg = LangevinConfig::for_model(&model.inner, t_final, n_traj, seed);
        cfg.batches = cfg.batches.min(n_traj);
        let stats = integrate(&model.inner, &cfg)?;
        put(out, KfpEnsemble { inner: stats })
    })
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kfp_ensemble_free(e: *mut KfpEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of recorded times; copies up to `len` of them into `out` when it
/// is non-null.
///
/// # Safety
/// `e` must be a live handle; `out` null or writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kfp_ensemble_times(e: *const KfpEnsemble, out: *mut f64, len: usize) -> usize {
    let Some(e) = e.as_ref() else {
        return 0;
    };
    let times = &e.inner.times;
    if !out.is_null() {
        let n = times.len().min(len);
        ptr::copy_nonoverlapping(times.as_ptr(), out, n);
    }
    times.len()
}

/// Einstein estimate of the effective diffusivity and its jackknife
/// standard error, each `dim * dim` row-major.
///
/// # Safety
/// `e` must be a live handle; `estimate` and `se` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kfp_ensemble_diffusivity(
    e: *const KfpEnsemble,
    estimate: *mut f64,
    se: *mut f64,
    len: usize,
) -> KfpStatus {
    guard(|| {
        let e = deref(e, "ensemble")?;
        let d = e.inner.dim;
        let est = out_slice(estimate, len, d * d, "estimate")?;
        let err = out_slice(se, len, d * d, "se")?;
        let r = estimate_diffusivity(&e.inner)?;
        for i in 0..d {
            for j in 0..d {
                est[i * d + j] = r.estimate[(i, j)];
                err[i * d + j] = r.se[(i, j)];
            }
        }
        Ok(())
    })
}

/// Runs the exact polynomial identity suite with default settings and
/// stores 1 in `passed` when every check holds.
///
/// # Safety
/// `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kfp_poly_selftest(passed: *mut c_int) -> KfpStatus {
    guard(|| {
        if passed.is_null() {
            return Err(null("passed"));
        }
        *passed = kfp::poly::identity_suite(&Default::default()).passed() as c_int;
        Ok(())
    })
}
