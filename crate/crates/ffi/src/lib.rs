//! C ABI for the twosir solver.
//!
//! Configurations and simulation records cross the boundary as opaque
//! handles; every fallible call returns a [`TwosirStatus`] and writes
//! its result through an out-pointer. A thread-local buffer keeps the
//! detailed message of the last error for diagnostics.
//!
//! Ownership: every `*_new`/`*_parse`/`twosir_run` result must be
//! released with the matching `*_free`. Handles are not thread-safe;
//! use one per thread or synchronize externally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use twosir::metrics::summarize;
use twosir::model::{Compartment, SimulationConfig};
use twosir::stepper::{run_simulation, SimulationRecord};

/// Opaque simulation configuration handle.
pub struct TwosirConfig {
    inner: SimulationConfig,
}

/// Opaque simulation record handle.
pub struct TwosirRecord {
    inner: SimulationRecord,
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwosirStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidConfig = 2,
    NumericalFailure = 3,
    IoFailure = 4,
    InvalidArgument = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

/// Short static description of a status code.
#[no_mangle]
pub extern "C" fn twosir_status_message(status: TwosirStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        TwosirStatus::Ok => b"ok\0",
        TwosirStatus::NullArgument => b"null argument\0",
        TwosirStatus::InvalidConfig => b"invalid configuration\0",
        TwosirStatus::NumericalFailure => b"numerical failure\0",
        TwosirStatus::IoFailure => b"io failure\0",
        TwosirStatus::InvalidArgument => b"invalid argument\0",
    };
    s.as_ptr() as *const c_char
}

/// Copies the detailed message of this thread's last error into `buf`
/// (NUL-terminated, truncated to `len`); returns the full length of the
/// message not counting the terminator. Passing a null or empty buffer
/// just queries the length.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn twosir_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// New configuration with the built-in baseline values. Never fails.
#[no_mangle]
pub extern "C" fn twosir_config_default() -> *mut TwosirConfig {
    Box::into_raw(Box::new(TwosirConfig {
        inner: SimulationConfig::baseline(),
    }))
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Parses a configuration file (the `key = value` format) into a new
/// handle written to `out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a
/// single pointer write.
#[no_mangle]
pub unsafe extern "C" fn twosir_config_parse(
    path: *const c_char,
    out: *mut *mut TwosirConfig,
) -> TwosirStatus {
    if out.is_null() {
        set_last_error("out pointer is null");
        return TwosirStatus::NullArgument;
    }
    *out = ptr::null_mut();
    let Some(path) = cstr(path) else {
        set_last_error("path is null or not UTF-8");
        return TwosirStatus::NullArgument;
    };
    match twosir::config::parse_config(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(TwosirConfig { inner: cfg }));
            TwosirStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            match e {
                twosir::config::ConfigFileError::Io(_) => TwosirStatus::IoFailure,
                _ => TwosirStatus::InvalidConfig,
            }
        }
    }
}

/// Serializes a configuration to a file in the same format
/// `twosir_config_parse` reads.
///
/// # Safety
/// `cfg` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn twosir_config_write(
    cfg: *const TwosirConfig,
    path: *const c_char,
) -> TwosirStatus {
    let Some(cfg) = cfg.as_ref() else {
        set_last_error("config handle is null");
        return TwosirStatus::NullArgument;
    };
    let Some(path) = cstr(path) else {
        set_last_error("path is null or not UTF-8");
        return TwosirStatus::NullArgument;
    };
    match std::fs::write(path, twosir::serialize_config(&cfg.inner)) {
        Ok(()) => TwosirStatus::Ok,
        Err(e) => {
            set_last_error(format!("cannot write {}: {}", path, e));
            TwosirStatus::IoFailure
        }
    }
}

/// Sets both regions' migration probabilities.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn twosir_config_set_lambda(
    cfg: *mut TwosirConfig,
    lambda_1: f64,
    lambda_2: f64,
) -> TwosirStatus {
    let Some(cfg) = cfg.as_mut() else {
        set_last_error("config handle is null");
        return TwosirStatus::NullArgument;
    };
    if !(0.0..=1.0).contains(&lambda_1) || !(0.0..=1.0).contains(&lambda_2) {
        set_last_error(format!(
            "migration probabilities must lie in [0, 1]: {} / {}",
            lambda_1, lambda_2
        ));
        return TwosirStatus::InvalidArgument;
    }
    cfg.inner.params.lambda_1 = lambda_1;
    cfg.inner.params.lambda_2 = lambda_2;
    TwosirStatus::Ok
}

/// Sets the simulated horizon in days (must stay an integer number of
/// steps; checked when the simulation runs).
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn twosir_config_set_t_final(
    cfg: *mut TwosirConfig,
    t_final: f64,
) -> TwosirStatus {
    let Some(cfg) = cfg.as_mut() else {
        set_last_error("config handle is null");
        return TwosirStatus::NullArgument;
    };
    cfg.inner.t_final = t_final;
    TwosirStatus::Ok
}

/// Releases a configuration handle. Null is a no-op.
///
/// # Safety
/// `cfg` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn twosir_config_free(cfg: *mut TwosirConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the simulation; on success writes a new record handle to `out`.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn twosir_run(
    cfg: *const TwosirConfig,
    out: *mut *mut TwosirRecord,
) -> TwosirStatus {
    if out.is_null() {
        set_last_error("out pointer is null");
        return TwosirStatus::NullArgument;
    }
    *out = ptr::null_mut();
    let Some(cfg) = cfg.as_ref() else {
        set_last_error("config handle is null");
        return TwosirStatus::NullArgument;
    };
    match run_simulation(&cfg.inner) {
        Ok(record) => {
            *out = Box::into_raw(Box::new(TwosirRecord { inner: record }));
            TwosirStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            match e {
                twosir::stepper::SimError::Config(_) => TwosirStatus::InvalidConfig,
                _ => TwosirStatus::NumericalFailure,
            }
        }
    }
}

/// Flat summary of one run, mirroring the sweep-table columns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwosirSummary {
    pub total_population: f64,
    pub total_recovered: f64,
    pub peak_infected: f64,
    pub rest_infected_pct: f64,
    pub lockdown_days: f64,
    pub lockdown_pct: f64,
}

/// Computes the summary metrics of a record.
///
/// # Safety
/// `record` must be a live handle; `out` valid for a struct write.
#[no_mangle]
pub unsafe extern "C" fn twosir_record_summary(
    record: *const TwosirRecord,
    out: *mut TwosirSummary,
) -> TwosirStatus {
    let Some(record) = record.as_ref() else {
        set_last_error("record handle is null");
        return TwosirStatus::NullArgument;
    };
    if out.is_null() {
        set_last_error("out pointer is null");
        return TwosirStatus::NullArgument;
    }
    match summarize(&record.inner) {
        Ok(row) => {
            *out = TwosirSummary {
                total_population: row.total_population,
                total_recovered: row.total_recovered,
                peak_infected: row.peak_infected,
                rest_infected_pct: row.rest_infected_pct,
                lockdown_days: row.lockdown_days,
                lockdown_pct: row.lockdown_pct,
            };
            TwosirStatus::Ok
        }
        Err(e) => {
            set_last_error(e.to_string());
            TwosirStatus::NumericalFailure
        }
    }
}

/// Number of recorded frames (at least 1: the initial state).
///
/// # Safety
/// `record` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn twosir_record_frame_count(record: *const TwosirRecord) -> usize {
    record.as_ref().map_or(0, |r| r.inner.frames.len())
}

/// Writes the per-frame time-series CSV of a record.
///
/// # Safety
/// `record` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn twosir_record_write_timeseries(
    record: *const TwosirRecord,
    path: *const c_char,
) -> TwosirStatus {
    let Some(record) = record.as_ref() else {
        set_last_error("record handle is null");
        return TwosirStatus::NullArgument;
    };
    let Some(path) = cstr(path) else {
        set_last_error("path is null or not UTF-8");
        return TwosirStatus::NullArgument;
    };
    match twosir::io::emit_timeseries(&record.inner, Path::new(path)) {
        Ok(()) => TwosirStatus::Ok,
        Err(e) => {
            set_last_error(e.to_string());
            TwosirStatus::IoFailure
        }
    }
}

/// Writes the space-time heatmap CSV of one compartment ('S', 'I' or 'R').
///
/// # Safety
/// `record` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn twosir_record_write_heatmap(
    record: *const TwosirRecord,
    compartment: c_char,
    path: *const c_char,
) -> TwosirStatus {
    let Some(record) = record.as_ref() else {
        set_last_error("record handle is null");
        return TwosirStatus::NullArgument;
    };
    let Some(path) = cstr(path) else {
        set_last_error("path is null or not UTF-8");
        return TwosirStatus::NullArgument;
    };
    let compartment = match compartment as u8 {
        b'S' | b's' => Compartment::S,
        b'I' | b'i' => Compartment::I,
        b'R' | b'r' => Compartment::R,
        other => {
            set_last_error(format!("unknown compartment selector: {}", other as char));
            return TwosirStatus::InvalidArgument;
        }
    };
    match twosir::io::emit_heatmap(&record.inner, compartment, Path::new(path)) {
        Ok(()) => TwosirStatus::Ok,
        Err(e) => {
            set_last_error(e.to_string());
            TwosirStatus::IoFailure
        }
    }
}

/// Releases a record handle. Null is a no-op.
///
/// # Safety
/// `record` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn twosir_record_free(record: *mut TwosirRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn tmp(name: &str) -> CString {
        let dir = std::env::temp_dir().join("twosir_ffi");
        std::fs::create_dir_all(&dir).unwrap();
        CString::new(dir.join(name).to_str().unwrap()).unwrap()
    }

    #[test]
    fn default_config_runs_and_summarizes() {
        unsafe {
            let cfg = twosir_config_default();
            assert!(!cfg.is_null());
            // shorten the horizon so the test stays fast
            assert_eq!(twosir_config_set_t_final(cfg, 2.0), TwosirStatus::Ok);
            let mut record: *mut TwosirRecord = ptr::null_mut();
            assert_eq!(twosir_run(cfg, &mut record), TwosirStatus::Ok);
            assert!(!record.is_null());
            assert_eq!(twosir_record_frame_count(record), 3); // init + 2 frames

            let mut summary = TwosirSummary {
                total_population: 0.0,
                total_recovered: 0.0,
                peak_infected: 0.0,
                rest_infected_pct: 0.0,
                lockdown_days: 0.0,
                lockdown_pct: 0.0,
            };
            assert_eq!(
                twosir_record_summary(record, &mut summary),
                TwosirStatus::Ok
            );
            assert!((summary.peak_infected - 60.0).abs() < 1.0);
            assert!(summary.lockdown_days > 0.0);

            twosir_record_free(record);
            twosir_config_free(cfg);
        }
    }

    #[test]
    fn parse_round_trip_through_files() {
        unsafe {
            let cfg = twosir_config_default();
            let path = tmp("roundtrip.cfg");
            assert_eq!(twosir_config_write(cfg, path.as_ptr()), TwosirStatus::Ok);
            let mut parsed: *mut TwosirConfig = ptr::null_mut();
            assert_eq!(
                twosir_config_parse(path.as_ptr(), &mut parsed),
                TwosirStatus::Ok
            );
            assert!(!parsed.is_null());
            assert_eq!((*parsed).inner, (*cfg).inner);
            twosir_config_free(parsed);
            twosir_config_free(cfg);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut out: *mut TwosirConfig = ptr::null_mut();
            assert_eq!(
                twosir_config_parse(ptr::null(), &mut out),
                TwosirStatus::NullArgument
            );
            assert_eq!(
                twosir_run(ptr::null(), ptr::null_mut()),
                TwosirStatus::NullArgument
            );
            assert_eq!(twosir_record_frame_count(ptr::null()), 0);
            // frees tolerate null
            twosir_config_free(ptr::null_mut());
            twosir_record_free(ptr::null_mut());
        }
    }

    #[test]
    fn errors_carry_messages() {
        unsafe {
            let mut out: *mut TwosirConfig = ptr::null_mut();
            let missing = tmp("missing_file.cfg");
            let status = twosir_config_parse(missing.as_ptr(), &mut out);
            assert_eq!(status, TwosirStatus::IoFailure);
            let mut buf = vec![0i8; 256];
            let len = twosir_last_error(buf.as_mut_ptr(), buf.len());
            assert!(len > 0);
            let msg = CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned();
            assert!(msg.contains("missing_file.cfg"), "{}", msg);
        }
    }

    #[test]
    fn invalid_lambda_is_rejected() {
        unsafe {
            let cfg = twosir_config_default();
            assert_eq!(
                twosir_config_set_lambda(cfg, 1.5, 0.0),
                TwosirStatus::InvalidArgument
            );
            assert_eq!(twosir_config_set_lambda(cfg, 0.3, 0.4), TwosirStatus::Ok);
            assert_eq!((*cfg).inner.params.lambda_1, 0.3);
            twosir_config_free(cfg);
        }
    }

    #[test]
    fn heatmap_and_timeseries_through_ffi() {
        unsafe {
            let cfg = twosir_config_default();
            twosir_config_set_t_final(cfg, 1.0);
            let mut record: *mut TwosirRecord = ptr::null_mut();
            assert_eq!(twosir_run(cfg, &mut record), TwosirStatus::Ok);
            let ts = tmp("ts.csv");
            let hm = tmp("hm.csv");
            assert_eq!(
                twosir_record_write_timeseries(record, ts.as_ptr()),
                TwosirStatus::Ok
            );
            assert_eq!(
                twosir_record_write_heatmap(record, b'I' as c_char, hm.as_ptr()),
                TwosirStatus::Ok
            );
            assert_eq!(
                twosir_record_write_heatmap(record, b'X' as c_char, hm.as_ptr()),
                TwosirStatus::InvalidArgument
            );
            assert!(
                std::fs::metadata(std::env::temp_dir().join("twosir_ffi/ts.csv"))
                    .unwrap()
                    .len()
                    > 0
            );
            twosir_record_free(record);
            twosir_config_free(cfg);
        }
    }
}
