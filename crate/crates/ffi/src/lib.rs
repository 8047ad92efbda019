//! C ABI over the `ltsf` core crate.
//!
//! Every fallible entry point returns an [`LtsfStatus`]; on failure the
//! message is available from [`ltsf_last_error`] on the same thread.
//! Handles are opaque, owned by the caller and released with the matching
//! `_free` function. Matrices cross the boundary row-major; trajectory
//! buffers are `(count, len, dim)` row-major with the state dimension
//! fastest.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ltsf::baselines::{FitWindows, NLinear, NLinearVariant};
use ltsf::dataio::{load, load_checkpoint, save, DatasetContainer};
use ltsf::dynsys::{generate, GeneratorSpec, System, TrajectorySet};
use ltsf::linode::LinOde;
use ltsf::matexp::{expm, expm_frechet};
use ltsf::numkit::Matrix;
use ltsf::task::Forecaster;
use ltsf::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numerical = 5,
    Panic = 6,
}

/// Dataset split selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtsfSplit {
    Train = 0,
    Test = 1,
}

/// Opaque train/test dataset.
pub struct LtsfDataset(DatasetContainer);

/// Opaque fitted linear baseline.
pub struct LtsfNLinear(NLinear);

/// Opaque latent linear ODE model.
pub struct LtsfLinOde(LinOde);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(LtsfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => LtsfStatus::Io,
            Error::Format(_) | Error::Csv { .. } => LtsfStatus::Format,
            Error::Numerical(_) => LtsfStatus::Numerical,
            Error::Domain(_) | Error::Shape(_) | Error::Config(_) => LtsfStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(LtsfStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Fail {
    Fail(LtsfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LtsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LtsfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LtsfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn checked_len(dims: &[usize]) -> Result<usize, Fail> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| invalid("buffer size overflows"))
}

fn expect_len(got: usize, want: usize, what: &str) -> Result<(), Fail> {
    if got != want {
        return Err(invalid(format!("{what} holds {got} values, expected {want}")));
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ltsf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Generates a synthetic dataset. `traj_len == 0` selects the system default.
///
/// # Safety
/// `system` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_generate(
    system: *const c_char,
    n_train: usize,
    n_test: usize,
    traj_len: usize,
    seed: u64,
    out: *mut *mut LtsfDataset,
) -> LtsfStatus {
    guard(|| {
        let system = System::parse(str_arg(system, "system")?)?;
        let mut spec = GeneratorSpec::new(system).with_counts(n_train, n_test).with_seed(seed);
        if traj_len > 0 {
            spec = spec.with_traj_len(traj_len);
        }
        let (set, _) = generate(&spec, 0)?;
        let (train, test) = set.split_at(n_train);
        let mut meta = std::collections::BTreeMap::new();
        meta.insert("system".to_string(), system.name().to_string());
        meta.insert("seed".to_string(), seed.to_string());
        let c = DatasetContainer::new(system.name(), train, test, meta)?;
        put(out, LtsfDataset(c))
    })
}

/// Loads a dataset file.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_load(path: *const c_char, out: *mut *mut LtsfDataset) -> LtsfStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        put(out, LtsfDataset(load(&path)?))
    })
}

/// Saves a dataset file.
///
/// # Safety
/// `ds` must come from this library and `path` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_save(ds: *const LtsfDataset, path: *const c_char) -> LtsfStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        Ok(save(&ds.0, &path)?)
    })
}

fn split_of(ds: &LtsfDataset, split: LtsfSplit) -> &TrajectorySet {
    match split {
        LtsfSplit::Train => &ds.0.train,
        LtsfSplit::Test => &ds.0.test,
    }
}

/// Writes `(count, len, dim)` of one split into `dims[0..3]`.
///
/// # Safety
/// `ds` must come from this library and `dims` must hold three values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_shape(ds: *const LtsfDataset, split: LtsfSplit, dims: *mut usize) -> LtsfStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        let (n, l, d) = split_of(ds, split).shape();
        std::slice::from_raw_parts_mut(dims, 3).copy_from_slice(&[n, l, d]);
        Ok(())
    })
}

/// Copies one split into `buf`, which must hold exactly `count*len*dim` values.
///
/// # Safety
/// `ds` must come from this library and `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_copy(
    ds: *const LtsfDataset,
    split: LtsfSplit,
    buf: *mut f64,
    len: usize,
) -> LtsfStatus {
    guard(|| {
        let set = split_of(ref_arg(ds, "dataset")?, split);
        expect_len(len, set.data().len(), "buffer")?;
        slice_out(buf, len, "buffer")?.copy_from_slice(set.data());
        Ok(())
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ltsf_dataset_free(ds: *mut LtsfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fits the linear baseline on the training split of `ds`. `variant` 0
/// subtracts the last window state, 1 does not.
///
/// # Safety
/// `ds` must come from this library and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ltsf_nlinear_fit(
    ds: *const LtsfDataset,
    lookback: usize,
    horizon: usize,
    variant: u32,
    lambda: f64,
    out: *mut *mut LtsfNLinear,
) -> LtsfStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        let variant = match variant {
            0 => NLinearVariant::A,
            1 => NLinearVariant::B,
            v => return Err(invalid(format!("unknown variant {v}"))),
        };
        let m = NLinear::fit(&ds.0.train, lookback, horizon, variant, lambda, FitWindows::First)?;
        put(out, LtsfNLinear(m))
    })
}

/// Number of trainable parameters, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ltsf_nlinear_param_count(m: *const LtsfNLinear) -> usize {
    m.as_ref().map_or(0, |m| m.0.count_params())
}

/// Forecast horizon the model was fitted for, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ltsf_nlinear_horizon(m: *const LtsfNLinear) -> usize {
    m.as_ref().map_or(0, |m| m.0.horizon())
}

fn run_forecast(
    model: &dyn Forecaster,
    windows: &[f64],
    batch: usize,
    horizon: usize,
    out: &mut [f64],
) -> Result<(), Fail> {
    let pred = model.forecast(windows, batch, horizon)?;
    out.copy_from_slice(&pred);
    Ok(())
}

/// Forecasts `batch` windows of shape `(lookback, dim)` into `out` of shape
/// `(batch, horizon, dim)`.
///
/// # Safety
/// Buffers must hold `batch*lookback*dim` and `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_nlinear_predict(
    m: *const LtsfNLinear,
    windows: *const f64,
    batch: usize,
    out: *mut f64,
    out_len: usize,
) -> LtsfStatus {
    guard(|| {
        let m = &ref_arg(m, "model")?.0;
        let (l, t, d) = (m.lookback(), m.horizon(), m.dim());
        let windows = slice_arg(windows, checked_len(&[batch, l, d])?, "windows")?;
        expect_len(out_len, checked_len(&[batch, t, d])?, "out")?;
        run_forecast(m, windows, batch, t, slice_out(out, out_len, "out")?)
    })
}

/// Releases a baseline model; null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ltsf_nlinear_free(m: *mut LtsfNLinear) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Loads a latent ODE checkpoint.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ltsf_linode_load(path: *const c_char, out: *mut *mut LtsfLinOde) -> LtsfStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let ckpt = load_checkpoint(&path)?;
        put(out, LtsfLinOde(LinOde::from_checkpoint(&ckpt)?))
    })
}

/// Writes `(lookback, dim)` of the model into `dims[0..2]`.
///
/// # Safety
/// `m` must come from this library and `dims` must hold two values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_linode_shape(m: *const LtsfLinOde, dims: *mut usize) -> LtsfStatus {
    guard(|| {
        let m = &ref_arg(m, "model")?.0;
        if dims.is_null() {
            return Err(null("dims"));
        }
        std::slice::from_raw_parts_mut(dims, 2).copy_from_slice(&[m.lookback(), m.dim()]);
        Ok(())
    })
}

/// Forecasts `horizon` steps for `batch` windows of shape `(lookback, dim)`.
///
/// # Safety
/// Buffers must hold `batch*lookback*dim` and `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_linode_forecast(
    m: *const LtsfLinOde,
    windows: *const f64,
    batch: usize,
    horizon: usize,
    out: *mut f64,
    out_len: usize,
) -> LtsfStatus {
    guard(|| {
        let m = &ref_arg(m, "model")?.0;
        let (l, d) = (m.lookback(), m.dim());
        let windows = slice_arg(windows, checked_len(&[batch, l, d])?, "windows")?;
        expect_len(out_len, checked_len(&[batch, horizon, d])?, "out")?;
        run_forecast(m, windows, batch, horizon, slice_out(out, out_len, "out")?)
    })
}

/// Releases a latent ODE model; null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ltsf_linode_free(m: *mut LtsfLinOde) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

unsafe fn square_in(p: *const f64, n: usize, what: &str) -> Result<Matrix, Fail> {
    Ok(Matrix::from_row_slice(n, n, slice_arg(p, checked_len(&[n, n])?, what)?))
}

unsafe fn square_out(m: &Matrix, p: *mut f64, what: &str) -> Result<(), Fail> {
    let n = m.nrows();
    let out = slice_out(p, n * n, what)?;
    for (i, row) in out.chunks_exact_mut(n).enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    Ok(())
}

/// Matrix exponential of the row-major `n`x`n` matrix `a`.
///
/// # Safety
/// `a` and `out` must hold `n*n` values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_expm(n: usize, a: *const f64, out: *mut f64) -> LtsfStatus {
    guard(|| {
        let a = square_in(a, n, "a")?;
        square_out(&expm(&a)?, out, "out")
    })
}

/// Matrix exponential of `a` and its directional derivative along `e`.
///
/// # Safety
/// All four buffers must hold `n*n` values.
#[no_mangle]
pub unsafe extern "C" fn ltsf_expm_frechet(
    n: usize,
    a: *const f64,
    e: *const f64,
    out_expm: *mut f64,
    out_frechet: *mut f64,
) -> LtsfStatus {
    guard(|| {
        let a = square_in(a, n, "a")?;
        let e = square_in(e, n, "e")?;
        let (x, l) = expm_frechet(&a, &e)?;
        square_out(&x, out_expm, "out_expm")?;
        square_out(&l, out_frechet, "out_frechet")
    })
}
