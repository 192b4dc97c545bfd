//! C ABI for the roadwatch testbed.
//!
//! Objects cross the boundary as opaque handles created by `rw_*_new` /
//! `rw_*_load` style functions and released with the matching `rw_*_free`.
//! Every fallible call returns an [`RwStatus`]; on failure the message is
//! available from [`rw_last_error_message`] on the same thread until the
//! next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use roadwatch::harness::{
    classify_estimated, classify_ground_truth, roadside_estimate, run_experiment, ExperimentConfig,
};
use roadwatch::obs::EstimatedTrace;
use roadwatch::sim::{run_scenario, GroundTruthTrace};
use roadwatch::{trace_io, Behavior, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    Io = 5,
    Rules = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Where kinematics for classification come from.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwPipeline {
    InVehicle = 0,
    Roadside = 1,
}

/// Driver class codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwBehavior {
    Safe = 0,
    Distracted = 1,
    Aggressive = 2,
}

impl From<Behavior> for RwBehavior {
    fn from(b: Behavior) -> Self {
        match b {
            Behavior::Safe => RwBehavior::Safe,
            Behavior::Distracted => RwBehavior::Distracted,
            Behavior::Aggressive => RwBehavior::Aggressive,
        }
    }
}

/// Label of one vehicle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RwLabel {
    pub vehicle_id: u32,
    pub behavior: RwBehavior,
}

/// Headline numbers of an evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RwSummary {
    pub in_vehicle_accuracy: f64,
    pub roadside_accuracy: f64,
    pub tracking_error_rate: f64,
    pub estimation_error_rate: f64,
    pub vehicles: u64,
}

/// Opaque experiment configuration.
pub struct RwConfig(ExperimentConfig);

/// Opaque ground-truth trace.
pub struct RwTrace(GroundTruthTrace);

/// Opaque roadside estimate.
pub struct RwEstimate(EstimatedTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RwStatus {
    match e {
        Error::Config(_) | Error::TomlDe(_) | Error::TomlSer(_) | Error::UnknownMicroBehavior(_) | Error::Behavior(_) => {
            RwStatus::Config
        }
        Error::SingularProjection { .. } | Error::SingularHomography { .. } => RwStatus::Numeric,
        Error::Io(_) | Error::Csv(_) => RwStatus::Io,
        Error::Context { source, .. } => status_of(source),
        Error::NoOverlap => RwStatus::InvalidArgument,
        _ => RwStatus::Rules,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), RwStatusError>) -> RwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RwStatus::Ok,
        Ok(Err(RwStatusError(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RwStatus::Panic
        }
    }
}

struct RwStatusError(RwStatus, String);

impl From<Error> for RwStatusError {
    fn from(e: Error) -> Self {
        RwStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> RwStatusError {
    RwStatusError(RwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, RwStatusError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, RwStatusError> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, RwStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| RwStatusError(RwStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates the default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rw_config_default(out: *mut *mut RwConfig) -> RwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(RwConfig(ExperimentConfig::default())));
        Ok(())
    })
}

/// Parses a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rw_config_from_toml(toml: *const c_char, out: *mut *mut RwConfig) -> RwStatus {
    guard(|| {
        let text = c_str(toml, "toml")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(RwConfig(ExperimentConfig::from_toml_str(text)?)));
        Ok(())
    })
}

/// Sets the master seed, run count and scenarios per run.
///
/// # Safety
/// `cfg` must come from `rw_config_*`.
#[no_mangle]
pub unsafe extern "C" fn rw_config_set_size(cfg: *mut RwConfig, seed: u64, runs: usize, scenarios: usize) -> RwStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        let mut next = cfg.0.clone();
        next.seed = seed;
        next.runs = runs;
        next.scenario_count = scenarios;
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from `rw_config_*` or be null.
#[no_mangle]
pub unsafe extern "C" fn rw_config_free(cfg: *mut RwConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Simulates scenario `index` of run `run`.
///
/// # Safety
/// `cfg` must come from `rw_config_*` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rw_simulate(cfg: *const RwConfig, run: usize, index: usize, out: *mut *mut RwTrace) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let out = out_ptr(out, "out")?;
        let scenarios = cfg.scenarios_for_run(run);
        let s = scenarios.get(index).ok_or_else(|| {
            RwStatusError(RwStatus::InvalidArgument, format!("scenario index {index} out of range"))
        })?;
        *out = Box::into_raw(Box::new(RwTrace(run_scenario(s)?)));
        Ok(())
    })
}

/// Loads a ground-truth trace CSV.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rw_trace_load(path: *const c_char, out: *mut *mut RwTrace) -> RwStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(RwTrace(trace_io::load_ground_truth(Path::new(path))?)));
        Ok(())
    })
}

/// Writes a ground-truth trace CSV.
///
/// # Safety
/// `trace` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rw_trace_save(trace: *const RwTrace, path: *const c_char) -> RwStatus {
    guard(|| {
        let trace = &borrow(trace, "trace")?.0;
        let path = c_str(path, "path")?;
        trace_io::save_ground_truth(Path::new(path), trace)?;
        Ok(())
    })
}

/// Number of records (vehicle-frames); 0 for null.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rw_trace_len(trace: *const RwTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rw_trace_free(trace: *mut RwTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Observes a trace through the configured camera and noise, with the
/// given channel seed, and re-estimates kinematics.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rw_observe(cfg: *const RwConfig, trace: *const RwTrace, seed: u64, out: *mut *mut RwEstimate) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let trace = &borrow(trace, "trace")?.0;
        let out = out_ptr(out, "out")?;
        let (_, est) = roadside_estimate(trace, &cfg.scenario, cfg, seed)?;
        *out = Box::into_raw(Box::new(RwEstimate(est)));
        Ok(())
    })
}

/// Number of estimated records; 0 for null.
///
/// # Safety
/// `est` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rw_estimate_len(est: *const RwEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.0.len())
}

/// # Safety
/// `est` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rw_estimate_free(est: *mut RwEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

unsafe fn write_labels(
    labels: Vec<RwLabel>,
    buf: *mut RwLabel,
    capacity: usize,
    out_len: *mut usize,
) -> Result<(), RwStatusError> {
    let n = out_ptr(out_len, "out_len")?;
    *n = labels.len();
    if labels.len() > capacity {
        return Err(RwStatusError(
            RwStatus::BufferTooSmall,
            format!("need room for {} labels, got {capacity}", labels.len()),
        ));
    }
    if !labels.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(labels.as_ptr(), buf, labels.len());
    }
    Ok(())
}

/// Labels every vehicle of a trace. With `Roadside` the trace is first
/// observed with channel seed `seed`. Writes up to `capacity` labels into
/// `buf` and the required count into `out_len`; returns
/// `BufferTooSmall` (with `out_len` set) if `capacity` is short.
///
/// # Safety
/// Handles must be live; `buf` must hold `capacity` labels.
#[no_mangle]
pub unsafe extern "C" fn rw_classify(
    cfg: *const RwConfig,
    trace: *const RwTrace,
    pipeline: RwPipeline,
    seed: u64,
    buf: *mut RwLabel,
    capacity: usize,
    out_len: *mut usize,
) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let trace = &borrow(trace, "trace")?.0;
        let recognizer = cfg.recognizer(cfg.scenario.speed_limit_mps)?;
        let verdicts = match pipeline {
            RwPipeline::InVehicle => classify_ground_truth(trace, &recognizer)?,
            RwPipeline::Roadside => {
                let (_, est) = roadside_estimate(trace, &cfg.scenario, cfg, seed)?;
                classify_estimated(&est, &recognizer)?
            }
        };
        let labels = verdicts.iter().map(|v| RwLabel { vehicle_id: v.vehicle.0, behavior: v.label.into() }).collect();
        write_labels(labels, buf, capacity, out_len)
    })
}

/// Runs the full experiment and reports headline numbers.
///
/// # Safety
/// `cfg` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rw_evaluate(cfg: *const RwConfig, out: *mut RwSummary) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let out = out_ptr(out, "out")?;
        let r = run_experiment(cfg)?;
        *out = RwSummary {
            in_vehicle_accuracy: r.in_vehicle.accuracy,
            roadside_accuracy: r.roadside.accuracy,
            tracking_error_rate: r.errors.tracking_error_rate(),
            estimation_error_rate: r.errors.estimation_error_rate(),
            vehicles: r.in_vehicle.total(),
        };
        Ok(())
    })
}

/// Projects a ground point through the configured camera.
///
/// # Safety
/// `cfg` must be live; `u` and `v` valid.
#[no_mangle]
pub unsafe extern "C" fn rw_project_to_image(cfg: *const RwConfig, x: f64, y: f64, u: *mut f64, v: *mut f64) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let (u, v) = (out_ptr(u, "u")?, out_ptr(v, "v")?);
        let (pu, pv) = cfg.camera_for(&cfg.scenario)?.project_to_image((x, y))?;
        (*u, *v) = (pu, pv);
        Ok(())
    })
}

/// Maps an image point back to the ground plane.
///
/// # Safety
/// `cfg` must be live; `x` and `y` valid.
#[no_mangle]
pub unsafe extern "C" fn rw_ipm_to_ground(cfg: *const RwConfig, u: f64, v: f64, x: *mut f64, y: *mut f64) -> RwStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let (x, y) = (out_ptr(x, "x")?, out_ptr(y, "y")?);
        let (gx, gy) = cfg.camera_for(&cfg.scenario)?.ipm_to_ground((u, v))?;
        (*x, *y) = (gx, gy);
        Ok(())
    })
}
