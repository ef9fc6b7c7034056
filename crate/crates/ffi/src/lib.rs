//! C ABI over `floquet-ep`.
//!
//! Every entry point returns a [`FepStatus`]; on failure the message is kept
//! per thread and read back with [`fep_last_error_message`]. Panics never
//! cross the boundary. State labels are 1-based, 0 meaning undecided.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use floquet_ep::experiments::{run_chirality, ExperimentConfig};
use floquet_ep::floquet::{floquet_spectrum, fold};
use floquet_ep::model::{preset, ModelPreset, PeriodicHamiltonian};
use floquet_ep::propagate::IntegratorSettings;
use floquet_ep::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque periodic Hamiltonian handle.
pub struct FepHamiltonian {
    inner: PeriodicHamiltonian,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: FepStatus, msg: impl Into<String>) -> FepStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> FepStatus {
    let status = if e.is_config_error() {
        FepStatus::ConfigError
    } else {
        FepStatus::NumericError
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> FepStatus) -> FepStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FepStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, FepStatus> {
    if s.is_null() {
        return Err(fail(FepStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(FepStatus::InvalidArgument, "string argument is not UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fep_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a builtin model (`"longhi3"` or `"sqrt2"`) at signed frequency `omega`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_preset_new(
    name: *const c_char,
    omega_cap: f64,
    r0: f64,
    omega: f64,
    out: *mut *mut FepHamiltonian,
) -> FepStatus {
    guard(|| {
        if out.is_null() {
            return fail(FepStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let name = match read_str(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let p = match name {
            "longhi3" => ModelPreset::Longhi3 { omega_cap, r0 },
            "sqrt2" => ModelPreset::Sqrt2 { omega_cap, r0 },
            other => return from_error(Error::UnknownPreset(other.to_string())),
        };
        match preset(p, omega) {
            Ok(h) => {
                *out = Box::into_raw(Box::new(FepHamiltonian { inner: h }));
                FepStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds the model described by an experiment configuration (JSON text) at
/// `+omega_abs` (`direction > 0`) or `-omega_abs` (`direction < 0`).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_hamiltonian_from_config(
    config_json: *const c_char,
    direction: i32,
    out: *mut *mut FepHamiltonian,
) -> FepStatus {
    guard(|| {
        if out.is_null() {
            return fail(FepStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        if direction == 0 {
            return fail(FepStatus::InvalidArgument, "direction must be nonzero");
        }
        let text = match read_str(config_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let built = ExperimentConfig::from_json_str(text)
            .and_then(|cfg| cfg.hamiltonian(direction.signum() as f64 * cfg.omega_abs));
        match built {
            Ok(h) => {
                *out = Box::into_raw(Box::new(FepHamiltonian { inner: h }));
                FepStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fep_hamiltonian_free(h: *mut FepHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Writes the Hilbert-space dimension of `h` to `dim`.
///
/// # Safety
/// `h` must be a live handle and `dim` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_hamiltonian_dim(
    h: *const FepHamiltonian,
    dim: *mut usize,
) -> FepStatus {
    guard(|| {
        if h.is_null() || dim.is_null() {
            return fail(FepStatus::NullPointer, "null argument");
        }
        *dim = (*h).inner.dim();
        FepStatus::Ok
    })
}

/// Folds `lambda` into `[-|omega|/2, |omega|/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_fold(lambda: f64, omega: f64, out: *mut f64) -> FepStatus {
    guard(|| {
        if out.is_null() {
            return fail(FepStatus::NullPointer, "null output");
        }
        if !(omega != 0.0 && omega.is_finite() && lambda.is_finite()) {
            return fail(
                FepStatus::InvalidArgument,
                "lambda must be finite and omega finite and nonzero",
            );
        }
        *out = fold(lambda, omega);
        FepStatus::Ok
    })
}

/// Monodromy quasi-energies of `h` with default integrator settings.
///
/// `quasi_energies` receives `dim` interleaved `(re, im)` pairs, sorted by
/// real part; `len` is its capacity in doubles and must be at least `2 * dim`.
///
/// # Safety
/// `h` must be a live handle; `quasi_energies` must point to `len` writable
/// doubles; `defectivity` and `ep_flag` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fep_spectrum(
    h: *const FepHamiltonian,
    quasi_energies: *mut f64,
    len: usize,
    defectivity: *mut f64,
    ep_flag: *mut bool,
) -> FepStatus {
    guard(|| {
        if h.is_null() || quasi_energies.is_null() || defectivity.is_null() || ep_flag.is_null() {
            return fail(FepStatus::NullPointer, "null argument");
        }
        let h = &(*h).inner;
        if len < 2 * h.dim() {
            return fail(
                FepStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 2 * h.dim()),
            );
        }
        match floquet_spectrum(h, &IntegratorSettings::default()) {
            Ok(a) => {
                for (k, mu) in a.spectrum.quasi_energies.iter().enumerate() {
                    *quasi_energies.add(2 * k) = mu.re;
                    *quasi_energies.add(2 * k + 1) = mu.im;
                }
                *defectivity = a.spectrum.defectivity;
                *ep_flag = a.ep_flag;
                FepStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs both circulation directions of an experiment configuration (JSON
/// text) and reports the 1-based dominant states (0 when undecided).
///
/// # Safety
/// `config_json` must be a NUL-terminated string; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fep_chirality(
    config_json: *const c_char,
    dominant_cw: *mut u32,
    dominant_ccw: *mut u32,
    chiral: *mut bool,
) -> FepStatus {
    guard(|| {
        if dominant_cw.is_null() || dominant_ccw.is_null() || chiral.is_null() {
            return fail(FepStatus::NullPointer, "null output");
        }
        let text = match read_str(config_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let label = |d: Option<usize>| d.map_or(0, |i| i as u32 + 1);
        match ExperimentConfig::from_json_str(text).and_then(|cfg| run_chirality(&cfg)) {
            Ok(r) => {
                *dominant_cw = label(r.dominant_cw);
                *dominant_ccw = label(r.dominant_ccw);
                *chiral = r.chiral;
                FepStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
