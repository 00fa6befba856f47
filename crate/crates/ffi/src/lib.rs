//! C ABI for the riseflight simulation core.
//!
//! Every object crossing the boundary is an opaque handle created and freed
//! by this library. Functions return [`RfStatus`] (or null for constructors)
//! on failure; `rf_last_error_message` retrieves a thread-local description
//! of the most recent error. All entry points catch panics.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use riseflight_core::config::{benchmark_noise, benchmark_scenario, ControllerKind, ScenarioConfig};
use riseflight_core::disturbance::DisturbanceConfig;
use riseflight_core::metrics::compute_metrics;
use riseflight_core::sim::run_scenario;
use riseflight_core::trace::SimTrace;

/// Status codes returned across the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    Diverged = 3,
    IoError = 4,
    InternalPanic = 5,
}

/// Controller selector for benchmark configurations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfController {
    Rise = 0,
    Asmc = 1,
}

/// Opaque scenario configuration handle.
pub struct RfConfig {
    inner: ScenarioConfig,
}

/// Opaque run-trace handle.
pub struct RfTrace {
    inner: SimTrace,
    config: ScenarioConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Returns the description of the most recent error on this thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn guard<T>(label: &str, f: impl FnOnce() -> Option<T>) -> Option<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(_) => {
            set_error(&format!("internal panic in {label}"));
            None
        }
    }
}

/// Creates a benchmark scenario configuration for the chosen controller.
/// `noise_scale = 0` disables the disturbance. Returns null on failure.
#[no_mangle]
pub extern "C" fn rf_config_benchmark(
    controller: RfController,
    noise_scale: f64,
    seed: u64,
) -> *mut RfConfig {
    guard("rf_config_benchmark", || {
        let kind = match controller {
            RfController::Rise => ControllerKind::Rise,
            RfController::Asmc => ControllerKind::Asmc,
        };
        let disturbance = if noise_scale > 0.0 {
            benchmark_noise(seed, noise_scale)
        } else {
            DisturbanceConfig::zero(seed)
        };
        let label = match kind {
            ControllerKind::Rise => "rise",
            ControllerKind::Asmc => "asmc",
        };
        Some(Box::into_raw(Box::new(RfConfig {
            inner: benchmark_scenario(kind, label, disturbance),
        })))
    })
    .unwrap_or(std::ptr::null_mut())
}

/// Parses a scenario configuration from JSON. Returns null on failure.
///
/// # Safety
/// `json` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn rf_config_from_json(json: *const c_char) -> *mut RfConfig {
    if json.is_null() {
        set_error("json pointer is null");
        return std::ptr::null_mut();
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("json is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    guard("rf_config_from_json", || {
        match serde_json::from_str::<ScenarioConfig>(&text) {
            Ok(config) => match config.validate() {
                Ok(()) => Some(Box::into_raw(Box::new(RfConfig { inner: config }))),
                Err(e) => {
                    set_error(&e.to_string());
                    None
                }
            },
            Err(e) => {
                set_error(&e.to_string());
                None
            }
        }
    })
    .unwrap_or(std::ptr::null_mut())
}

/// Serializes a configuration to JSON. Free with `rf_string_free`.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_config_to_json(config: *const RfConfig) -> *mut c_char {
    if config.is_null() {
        set_error("config pointer is null");
        return std::ptr::null_mut();
    }
    let config = &*config;
    guard("rf_config_to_json", || {
        let text = serde_json::to_string_pretty(&config.inner).ok()?;
        CString::new(text).ok().map(CString::into_raw)
    })
    .unwrap_or(std::ptr::null_mut())
}

/// Overrides the disturbance seed of a configuration.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_config_set_seed(config: *mut RfConfig, seed: u64) -> RfStatus {
    if config.is_null() {
        set_error("config pointer is null");
        return RfStatus::InvalidArgument;
    }
    (*config).inner.disturbance.seed = seed;
    RfStatus::Ok
}

/// Overrides the run duration in seconds.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_config_set_duration(config: *mut RfConfig, duration: f64) -> RfStatus {
    if config.is_null() {
        set_error("config pointer is null");
        return RfStatus::InvalidArgument;
    }
    if duration.is_nan() || duration < 0.0 {
        set_error("duration must be >= 0");
        return RfStatus::InvalidArgument;
    }
    (*config).inner.duration = duration;
    RfStatus::Ok
}

/// Runs the scenario to completion. Returns a trace handle, or null with the
/// error recorded (divergence included).
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_run(config: *const RfConfig) -> *mut RfTrace {
    if config.is_null() {
        set_error("config pointer is null");
        return std::ptr::null_mut();
    }
    let config = &*config;
    guard("rf_run", || match run_scenario(&config.inner) {
        Ok(out) => Some(Box::into_raw(Box::new(RfTrace {
            inner: out.trace,
            config: config.inner.clone(),
        }))),
        Err(e) => {
            set_error(&e.to_string());
            None
        }
    })
    .unwrap_or(std::ptr::null_mut())
}

/// Number of logged records in a trace.
///
/// # Safety
/// `trace` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_trace_len(trace: *const RfTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    (*trace).inner.len()
}

/// Copies `(t, x, y, z, mass_estimate)` of record `index` into `out[0..5]`.
///
/// # Safety
/// `trace` must be a live handle; `out` must point to at least 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_trace_sample(
    trace: *const RfTrace,
    index: usize,
    out: *mut f64,
) -> RfStatus {
    if trace.is_null() || out.is_null() {
        set_error("null pointer");
        return RfStatus::InvalidArgument;
    }
    let trace = &*trace;
    match trace.inner.records.get(index) {
        Some(r) => {
            let values = [r.t, r.pos_x, r.pos_y, r.pos_z, r.theta1_hat];
            std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
            RfStatus::Ok
        }
        None => {
            set_error("record index out of range");
            RfStatus::InvalidArgument
        }
    }
}

/// Writes the trace as CSV to `path` (atomic replace).
///
/// # Safety
/// `trace` must be a live handle; `path` a NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn rf_trace_write_csv(
    trace: *const RfTrace,
    path: *const c_char,
) -> RfStatus {
    if trace.is_null() || path.is_null() {
        set_error("null pointer");
        return RfStatus::InvalidArgument;
    }
    let trace = &*trace;
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p.to_owned(),
        Err(_) => {
            set_error("path is not valid UTF-8");
            return RfStatus::InvalidArgument;
        }
    };
    guard("rf_trace_write_csv", || {
        match trace.inner.write_csv(Path::new(&path)) {
            Ok(()) => Some(RfStatus::Ok),
            Err(e) => {
                set_error(&e.to_string());
                Some(RfStatus::IoError)
            }
        }
    })
    .unwrap_or(RfStatus::InternalPanic)
}

/// Computes run metrics and returns them as a JSON string. Free with
/// `rf_string_free`.
///
/// # Safety
/// `trace` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rf_trace_metrics_json(trace: *const RfTrace) -> *mut c_char {
    if trace.is_null() {
        set_error("trace pointer is null");
        return std::ptr::null_mut();
    }
    let trace = &*trace;
    guard("rf_trace_metrics_json", || {
        if trace.inner.is_empty() {
            set_error("trace is empty");
            return None;
        }
        let metrics = compute_metrics(
            &trace.inner,
            trace.config.vehicle.mass,
            trace.config.vehicle.inertia,
            trace.config.metrics_window,
        );
        let text = serde_json::to_string_pretty(&metrics).ok()?;
        CString::new(text).ok().map(CString::into_raw)
    })
    .unwrap_or(std::ptr::null_mut())
}

/// Frees a configuration handle. Null is accepted.
///
/// # Safety
/// `config` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_config_free(config: *mut RfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Frees a trace handle. Null is accepted.
///
/// # Safety
/// `trace` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_trace_free(trace: *mut RfTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Frees a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must be a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
