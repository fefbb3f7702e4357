//! C ABI over `circmode`.
//!
//! Every fallible function returns a [`CmStatus`]; results go through out
//! pointers. Samples and calibration densities are opaque handles owned by
//! the caller and released with the matching `*_free` function. The message
//! of the last error on the calling thread is available from
//! [`cm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use circmode::calibration::{build_calibration, CalibrationDensity, CalibrationOptions};
use circmode::concentration::{critical_concentration, DEFAULT_TOLERANCE};
use circmode::excess_mass::delta_value;
use circmode::rng::stream_rng;
use circmode::testing::{excess_mass_test, watson_test, Method, TestResult};
use circmode::{CircularSample, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidK = 3,
    DegenerateDensity = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmMethod {
    ExcessMass = 0,
    WatsonU2 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CmTestResult {
    pub statistic: f64,
    pub pvalue: f64,
    pub resamples: usize,
    pub k: usize,
    pub method: i32,
    pub seed: u64,
}

/// Opaque sample handle.
pub struct CmSample(CircularSample);

/// Opaque calibration density handle.
pub struct CmCalibration(CalibrationDensity);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CmStatus {
    match e {
        Error::InvalidK { .. } => CmStatus::InvalidK,
        Error::DegenerateDensity | Error::ZeroDensity(_) => CmStatus::DegenerateDensity,
        Error::FitFailure(_) | Error::CollidingNeighborhoods(_) | Error::QuadratureFailure => CmStatus::Numerical,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => CmStatus::Io,
        _ => CmStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), CmStatus>>(f: F) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CmStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, CmStatus>;
}

impl<T> OrStatus<T> for circmode::Result<T> {
    fn or_status(self) -> Result<T, CmStatus> {
        self.map_err(|e| {
            set_error(&e.to_string());
            status_of(&e)
        })
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, CmStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument");
        CmStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), CmStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(CmStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

fn to_c(r: &TestResult) -> CmTestResult {
    CmTestResult {
        statistic: r.statistic,
        pvalue: r.pvalue,
        resamples: r.b,
        k: r.k,
        method: match r.method {
            Method::ExcessMass => CmMethod::ExcessMass as i32,
            Method::WatsonU2 => CmMethod::WatsonU2 as i32,
        },
        seed: r.seed,
    }
}

/// Version string of the library; static, do not free.
#[no_mangle]
pub extern "C" fn cm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a sample from `n` angles in radians.
///
/// # Safety
/// `angles` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_sample_new(angles: *const f64, n: usize, out: *mut *mut CmSample) -> CmStatus {
    guard(|| {
        if angles.is_null() {
            set_error("null angle buffer");
            return Err(CmStatus::NullPointer);
        }
        let values = std::slice::from_raw_parts(angles, n).to_vec();
        let sample = CircularSample::new(values).or_status()?;
        write(out, Box::into_raw(Box::new(CmSample(sample))))
    })
}

/// # Safety
/// `sample` must be null or a handle from [`cm_sample_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_sample_free(sample: *mut CmSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// # Safety
/// `sample` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_sample_len(sample: *const CmSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// The excess-mass statistic for `k` against `k + 1` modes and its
/// maximising level.
///
/// # Safety
/// `sample` must be a live handle; `delta` and `lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_excess_mass_statistic(
    sample: *const CmSample,
    k: usize,
    delta: *mut f64,
    lambda: *mut f64,
) -> CmStatus {
    guard(|| {
        let s = deref(sample)?;
        let (d, l) = delta_value(&s.0, k).or_status()?;
        write(delta, d)?;
        write(lambda, l)
    })
}

/// Largest concentration at which the kernel estimate has at most `k` modes.
///
/// # Safety
/// `sample` must be a live handle; `nu` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_critical_concentration(sample: *const CmSample, k: usize, nu: *mut f64) -> CmStatus {
    guard(|| {
        let s = deref(sample)?;
        let c = critical_concentration(&s.0, k, DEFAULT_TOLERANCE).or_status()?;
        write(nu, c.nu_k)
    })
}

/// Bootstrap test of `k` modes against more than `k`.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_test(
    sample: *const CmSample,
    method: CmMethod,
    k: usize,
    resamples: usize,
    seed: u64,
    out: *mut CmTestResult,
) -> CmStatus {
    guard(|| {
        let s = deref(sample)?;
        let r = match method {
            CmMethod::ExcessMass => excess_mass_test(&s.0, k, resamples, seed),
            CmMethod::WatsonU2 => watson_test(&s.0, k, resamples, seed),
        }
        .or_status()?;
        write(out, to_c(&r))
    })
}

/// Builds the `k`-modal calibration density of a sample.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_calibration_new(sample: *const CmSample, k: usize, out: *mut *mut CmCalibration) -> CmStatus {
    guard(|| {
        let s = deref(sample)?;
        let g = build_calibration(&s.0, k, &CalibrationOptions::default()).or_status()?;
        write(out, Box::into_raw(Box::new(CmCalibration(g))))
    })
}

/// # Safety
/// `g` must be null or a handle from [`cm_calibration_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_calibration_free(g: *mut CmCalibration) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Normalised density at `theta`.
///
/// # Safety
/// `g` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_calibration_eval(g: *const CmCalibration, theta: f64, value: *mut f64) -> CmStatus {
    guard(|| {
        let g = deref(g)?;
        write(value, g.0.eval(theta))
    })
}

/// Fills `out` with `n` draws; the same seed gives the same draws.
///
/// # Safety
/// `g` must be a live handle; `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_calibration_sample(g: *const CmCalibration, seed: u64, n: usize, out: *mut f64) -> CmStatus {
    guard(|| {
        let g = deref(g)?;
        if out.is_null() {
            set_error("null output buffer");
            return Err(CmStatus::NullPointer);
        }
        let mut rng = stream_rng(seed, 0);
        let buf = std::slice::from_raw_parts_mut(out, n);
        for v in buf {
            *v = g.0.draw(&mut rng);
        }
        Ok(())
    })
}
