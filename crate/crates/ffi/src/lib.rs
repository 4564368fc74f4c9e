//! C ABI over `jade-core`.
//!
//! Scenarios and reports are opaque heap handles created and released through
//! this API. Every fallible function returns a [`JadeStatus`]; on failure the
//! message is available from [`jade_last_error_message`] on the same thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`jade_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use jade_core::correlation::CorrelationSequence;
use jade_core::prony::{svd_prony, PronyConfig};
use jade_core::pulse::{generate_pulse, unwrap_phase};
use jade_core::{run_pipeline, JadeError, RunReport, ScenarioConfig};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JadeStatus {
    Ok = 0,
    Io = 1,
    Invalid = 2,
    Parse = 3,
    Estimation = 4,
    RootsNotConverged = 5,
    NullPointer = 6,
    InvalidUtf8 = 7,
    BufferTooSmall = 8,
    OutOfRange = 9,
    Panic = 10,
}

/// Scenario configuration handle.
pub struct JadeScenario {
    config: ScenarioConfig,
}

/// Estimation report handle.
pub struct JadeReport {
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: JadeStatus,
    message: String,
}

impl Failure {
    fn new(status: JadeStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<JadeError> for Failure {
    fn from(e: JadeError) -> Self {
        let status = match &e {
            JadeError::Invalid(_) => JadeStatus::Invalid,
            JadeError::Parse { .. } => JadeStatus::Parse,
            JadeError::Estimation { .. } => JadeStatus::Estimation,
            JadeError::RootsNotConverged { .. } => JadeStatus::RootsNotConverged,
            JadeError::Io(_) => JadeStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> JadeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JadeStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("panic inside jade".into());
            JadeStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(JadeStatus::NullPointer, format!("{name} is null")))
}

unsafe fn non_null_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(JadeStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(JadeStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(JadeStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(JadeStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(JadeStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(JadeStatus::Invalid, "string contains a NUL byte"))
}

fn path_index(report: &RunReport, index: usize) -> Result<usize, Failure> {
    if index < report.angles.len() {
        Ok(index)
    } else {
        Err(Failure::new(
            JadeStatus::OutOfRange,
            format!("path index {index} out of range ({} paths)", report.angles.len()),
        ))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jade_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on the calling thread, or null if no
/// call has failed yet. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn jade_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn jade_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New handle holding the default scenario. Release with [`jade_scenario_free`].
#[no_mangle]
pub extern "C" fn jade_scenario_default() -> *mut JadeScenario {
    Box::into_raw(Box::new(JadeScenario {
        config: ScenarioConfig::default(),
    }))
}

/// Parses a scenario from TOML text into a new handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_from_toml(text: *const c_char, out: *mut *mut JadeScenario) -> JadeStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let config = ScenarioConfig::from_toml_str(c_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(JadeScenario { config }));
        Ok(())
    })
}

/// Reads a scenario TOML file into a new handle.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_from_file(path: *const c_char, out: *mut *mut JadeScenario) -> JadeStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let config = ScenarioConfig::from_file(Path::new(c_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(JadeScenario { config }));
        Ok(())
    })
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_free(scenario: *mut JadeScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_set_seed(scenario: *mut JadeScenario, seed: u64) -> JadeStatus {
    guard(|| {
        non_null_mut(scenario, "scenario")?.config.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_set_snapshots(scenario: *mut JadeScenario, snapshots: usize) -> JadeStatus {
    guard(|| {
        non_null_mut(scenario, "scenario")?.config.snapshots = snapshots;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_set_noise_var(scenario: *mut JadeScenario, noise_var: f64) -> JadeStatus {
    guard(|| {
        non_null_mut(scenario, "scenario")?.config.noise_var = noise_var;
        Ok(())
    })
}

/// Checks the scenario without running it.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_validate(scenario: *const JadeScenario) -> JadeStatus {
    guard(|| Ok(non_null(scenario, "scenario")?.config.validate()?))
}

/// Serializes the scenario as TOML. Free the result with [`jade_string_free`].
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_to_toml(scenario: *const JadeScenario, out: *mut *mut c_char) -> JadeStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        *out = to_c_string(non_null(scenario, "scenario")?.config.to_toml_string())?;
        Ok(())
    })
}

/// Samples the scenario's pulse. The sample count is always stored in
/// `len_out`; the buffers are written only when `capacity` is large enough,
/// otherwise `JADE_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `scenario` must be a live handle, `len_out` valid, and `t_out` and `g_out`
/// must each point to at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn jade_scenario_pulse(
    scenario: *const JadeScenario,
    t_out: *mut f64,
    g_out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> JadeStatus {
    guard(|| {
        let len_out = non_null_mut(len_out, "len_out")?;
        let pulse = generate_pulse(&non_null(scenario, "scenario")?.config.pulse)?;
        *len_out = pulse.len();
        if capacity < pulse.len() {
            return Err(Failure::new(
                JadeStatus::BufferTooSmall,
                format!("pulse needs {} samples, capacity {capacity}", pulse.len()),
            ));
        }
        slice_mut(t_out, pulse.len(), "t_out")?.copy_from_slice(&pulse.t);
        slice_mut(g_out, pulse.len(), "g_out")?.copy_from_slice(&pulse.values);
        Ok(())
    })
}

/// Synthesizes the scenario's records and estimates angles and delays.
/// Release the report with [`jade_report_free`].
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_run(scenario: *const JadeScenario, out: *mut *mut JadeReport) -> JadeStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        let report = run_pipeline(&non_null(scenario, "scenario")?.config)?;
        *out = Box::into_raw(Box::new(JadeReport { report }));
        Ok(())
    })
}

/// Releases a report handle. Null is ignored.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn jade_report_free(report: *mut JadeReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of estimated paths, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jade_report_path_count(report: *const JadeReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.angles.len())
}

/// Angle of path `index` in degrees. Paths are sorted by angle.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_report_theta_deg(report: *const JadeReport, index: usize, out: *mut f64) -> JadeStatus {
    guard(|| {
        let r = &non_null(report, "report")?.report;
        let i = path_index(r, index)?;
        *non_null_mut(out, "out")? = r.angles[i].theta_deg;
        Ok(())
    })
}

/// Median over snapshots of the fitted phase slope of path `index`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_report_slope_median(report: *const JadeReport, index: usize, out: *mut f64) -> JadeStatus {
    guard(|| {
        let r = &non_null(report, "report")?.report;
        let i = path_index(r, index)?;
        *non_null_mut(out, "out")? = r.delays.slope_median[i];
        Ok(())
    })
}

/// Mean over snapshots of the fitted phase slope of path `index`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_report_slope_mean(report: *const JadeReport, index: usize, out: *mut f64) -> JadeStatus {
    guard(|| {
        let r = &non_null(report, "report")?.report;
        let i = path_index(r, index)?;
        *non_null_mut(out, "out")? = r.delays.slope_mean[i];
        Ok(())
    })
}

/// Full report as JSON. Free the result with [`jade_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jade_report_to_json(report: *const JadeReport, out: *mut *mut c_char) -> JadeStatus {
    guard(|| {
        let out = non_null_mut(out, "out")?;
        *out = to_c_string(non_null(report, "report")?.report.to_json())?;
        Ok(())
    })
}

/// Unwraps `len` principal-value phases from `input` into `output`. The two
/// buffers may be the same.
///
/// # Safety
/// `input` and `output` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jade_unwrap_phase(input: *const f64, output: *mut f64, len: usize) -> JadeStatus {
    guard(|| {
        let unwrapped = unwrap_phase(slice(input, len, "input")?);
        slice_mut(output, len, "output")?.copy_from_slice(&unwrapped);
        Ok(())
    })
}

/// Fits `order` exponentials to the correlation lags `0..lags` given as real
/// and imaginary parts. Writes the direction sines and amplitudes, sorted by
/// direction sine, into `s_out` and `amplitude_out` (`order` entries each).
///
/// # Safety
/// `lag_re` and `lag_im` must point to `lags` doubles; `s_out` and
/// `amplitude_out` to `order` doubles.
#[no_mangle]
pub unsafe extern "C" fn jade_svd_prony(
    lag_re: *const f64,
    lag_im: *const f64,
    lags: usize,
    order: usize,
    delta: f64,
    s_out: *mut f64,
    amplitude_out: *mut f64,
) -> JadeStatus {
    guard(|| {
        let re = slice(lag_re, lags, "lag_re")?;
        let im = slice(lag_im, lags, "lag_im")?;
        let c = re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let est = svd_prony(&CorrelationSequence::from_lags(c), &PronyConfig::with_order(order), delta)?;
        slice_mut(s_out, order, "s_out")?.copy_from_slice(&est.s);
        slice_mut(amplitude_out, order, "amplitude_out")?.copy_from_slice(&est.amplitudes);
        Ok(())
    })
}
