//! C ABI over the simulator.
//!
//! Objects are opaque and heap-allocated: create with `*_new`/`jbesim_run`,
//! release with the matching `*_free`. Every fallible call returns a
//! `JbesimStatus`; on failure `jbesim_last_error()` describes what went wrong
//! (per thread, valid until the next failing call).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use jbesim::beaconing::{jb_interval, JbConfig};
use jbesim::controllers::{path_cacc, RemoteVehicleView};
use jbesim::output::write_outputs;
use jbesim::types::VehicleState;
use jbesim::{Density, Error, Experiment, RunMetrics, Scheme, SimConfig, SimTime};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JbesimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Bad configuration value or unparsable TOML.
    Config = 3,
    /// A simulation invariant was violated.
    Simulation = 4,
    Io = 5,
    /// Unknown enum value passed across the boundary.
    InvalidArgument = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JbesimScheme {
    Jb = 0,
    Jbe = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JbesimScenario {
    Slowdown = 0,
    Stopping = 1,
    Stability = 2,
    Baseline = 3,
}

/// Headline numbers of a finished run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JbesimSummary {
    /// Smallest intra-platoon gap (m).
    pub min_distance: f64,
    pub inter_platoon_min_distance: f64,
    /// 1 if any intra-platoon gap closed.
    pub crashed: u8,
    /// Seconds; negative when there was no crash.
    pub crash_time: f64,
    pub avg_cbr: f64,
    pub protocol_failures: u32,
    pub retransmissions: u32,
    pub beacons_sent: u64,
    pub vehicles: u32,
}

/// Inputs for a one-off CACC evaluation with the default gains.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JbesimCaccInput {
    pub ego_speed: f64,
    pub front_speed: f64,
    pub front_acceleration: f64,
    pub leader_speed: f64,
    pub leader_acceleration: f64,
    pub radar_distance: f64,
}

/// Opaque simulation configuration.
pub struct JbesimConfig {
    inner: SimConfig,
}

/// Opaque result of one run.
pub struct JbesimResult {
    inner: RunMetrics,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> JbesimStatus {
    match e {
        Error::Io { .. } | Error::Csv { .. } => JbesimStatus::Io,
        e if e.is_validation() => JbesimStatus::Config,
        _ => JbesimStatus::Simulation,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> JbesimStatus
where
    F: FnOnce() -> Result<(), (JbesimStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JbesimStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside jbesim");
            JbesimStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (JbesimStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (JbesimStatus, String) {
    (JbesimStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (JbesimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (JbesimStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (JbesimStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (JbesimStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the most recent failure on this thread, or "" if none.
#[unsafe(no_mangle)]
pub extern "C" fn jbesim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static version string.
#[unsafe(no_mangle)]
pub extern "C" fn jbesim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML config (NULL or "" for defaults) into `*out`.
///
/// # Safety
/// `toml` must be NULL or a NUL-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_config_new(
    toml: *const c_char,
    out: *mut *mut JbesimConfig,
) -> JbesimStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let inner = if toml.is_null() {
            SimConfig::default()
        } else {
            SimConfig::from_toml_str(str_arg(toml, "toml")?).map_err(lib_err)?
        };
        inner.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JbesimConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or come from `jbesim_config_new`, freed at most once.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_config_free(config: *mut JbesimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `config` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_config_set_seed(
    config: *mut JbesimConfig,
    seed: u64,
) -> JbesimStatus {
    guard(|| {
        mut_arg(config, "config")?.inner.scenario.seed = seed;
        Ok(())
    })
}

/// Layout preset: "desk", "low" or "high".
///
/// # Safety
/// `config` must be a live handle and `density` a NUL-terminated string.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_config_set_density(
    config: *mut JbesimConfig,
    density: *const c_char,
) -> JbesimStatus {
    guard(|| {
        let config = mut_arg(config, "config")?;
        let d: Density = str_arg(density, "density")?
            .parse()
            .map_err(|e: String| (JbesimStatus::Config, e))?;
        config.inner.scenario.apply_density(d);
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_config_set_duration(
    config: *mut JbesimConfig,
    seconds: f64,
) -> JbesimStatus {
    guard(|| {
        let config = mut_arg(config, "config")?;
        let mut next = config.inner.clone();
        next.scenario.duration = seconds;
        next.validate().map_err(lib_err)?;
        config.inner = next;
        Ok(())
    })
}

fn scenario_of(s: i32) -> Option<Experiment> {
    Some(match s {
        0 => Experiment::FollowerSlowdown,
        1 => Experiment::FollowerStopping,
        2 => Experiment::StringStability,
        3 => Experiment::Baseline,
        _ => return None,
    })
}

fn scheme_of(s: i32) -> Option<Scheme> {
    match s {
        0 => Some(Scheme::Jb),
        1 => Some(Scheme::Jbe),
        _ => None,
    }
}

/// Runs one experiment to completion and stores a result handle in `*out`.
/// Enum arguments are plain ints so out-of-range values are caught here.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_run(
    config: *const JbesimConfig,
    scenario: i32,
    scheme: i32,
    out: *mut *mut JbesimResult,
) -> JbesimStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let config = ref_arg(config, "config")?;
        let experiment = scenario_of(scenario).ok_or_else(|| {
            (
                JbesimStatus::InvalidArgument,
                format!("unknown scenario {scenario}"),
            )
        })?;
        let scheme = scheme_of(scheme).ok_or_else(|| {
            (
                JbesimStatus::InvalidArgument,
                format!("unknown scheme {scheme}"),
            )
        })?;
        let inner = jbesim::run(&config.inner, experiment, scheme).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(JbesimResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or come from `jbesim_run`, freed at most once.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_result_free(result: *mut JbesimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_result_summary(
    result: *const JbesimResult,
    out: *mut JbesimSummary,
) -> JbesimStatus {
    guard(|| {
        let m = &ref_arg(result, "result")?.inner;
        let out = mut_arg(out, "out")?;
        *out = JbesimSummary {
            min_distance: m.global_min_distance,
            inter_platoon_min_distance: m.inter_platoon_min_distance,
            crashed: m.crashed() as u8,
            crash_time: m.crash.map_or(-1.0, |c| c.time),
            avg_cbr: m.avg_cbr,
            protocol_failures: m.protocol_failures,
            retransmissions: m.retransmissions,
            beacons_sent: m.beacons_sent,
            vehicles: m.vehicles.len() as u32,
        };
        Ok(())
    })
}

/// Copies up to `capacity` per-second CBR values into `buf` and stores the
/// full series length in `*len`. Pass `buf = NULL` to query the length.
///
/// # Safety
/// `buf` must hold `capacity` doubles when non-NULL; `len` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_result_cbr_series(
    result: *const JbesimResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> JbesimStatus {
    guard(|| {
        let series = &ref_arg(result, "result")?.inner.cbr_series;
        *mut_arg(len, "len")? = series.len();
        if !buf.is_null() {
            let n = capacity.min(series.len());
            std::ptr::copy_nonoverlapping(series.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// Writes the CSV set into `dir` (created if missing).
///
/// # Safety
/// `result` must be a live handle and `dir` a NUL-terminated path.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_result_write(
    result: *const JbesimResult,
    dir: *const c_char,
) -> JbesimStatus {
    guard(|| {
        let m = &ref_arg(result, "result")?.inner;
        let dir = str_arg(dir, "dir")?;
        write_outputs(m, Path::new(dir)).map_err(lib_err)?;
        Ok(())
    })
}

/// Beacon interval (s) for jerk `delta_u` with the default JB parameters.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_jb_interval(delta_u: f64, out: *mut f64) -> JbesimStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        if !delta_u.is_finite() {
            return Err((
                JbesimStatus::InvalidArgument,
                "delta_u must be finite".into(),
            ));
        }
        *out = jb_interval(delta_u, &JbConfig::default());
        Ok(())
    })
}

/// CACC command (m/s^2), before actuator limits, with the default gains.
///
/// # Safety
/// `input` must be readable and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn jbesim_path_cacc(
    input: *const JbesimCaccInput,
    out: *mut f64,
) -> JbesimStatus {
    guard(|| {
        let i = ref_arg(input, "input")?;
        let out = mut_arg(out, "out")?;
        let ego = VehicleState::cruising(0.0, i.ego_speed, 0, 4.0);
        let view = |speed, acceleration| RemoteVehicleView {
            position: 0.0,
            speed,
            acceleration,
            received_at: SimTime::ZERO,
        };
        *out = path_cacc(
            &ego,
            Some(&view(i.front_speed, i.front_acceleration)),
            Some(&view(i.leader_speed, i.leader_acceleration)),
            i.radar_distance,
            &jbesim::controllers::CaccGains::default(),
        )
        .map_err(lib_err)?;
        Ok(())
    })
}
