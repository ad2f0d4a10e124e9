//! C ABI over the `cotransport` crate.
//!
//! Objects cross the boundary as opaque handles created by `ct_*_new`/`ct_*_load`
//! and released with the matching `ct_*_free`. Every fallible call returns a
//! [`CtStatus`]; on failure [`ct_last_error`] describes the cause for the
//! calling thread. Panics never unwind into C; they surface as
//! [`CtStatus::Panic`].

use cotransport::planning::{
    generate_min_snap, plan_waypoints, Boundary, OccupancyGrid, PlannerConfig, PlanningError, Pose, TrajectorySpec, Waypoint,
};
use cotransport::sim::{build_trajectory, run_scenario, run_to_dir, Metrics, ScenarioConfig, SimError, World};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    NoPath = 5,
    Planning = 6,
    Fault = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Scenario configuration.
pub struct CtScenario(ScenarioConfig);

/// Running simulation.
pub struct CtWorld(World);

/// Piecewise-polynomial reference.
pub struct CtTrajectory(TrajectorySpec);

/// Run summary.
pub struct CtMetrics(Metrics);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtWaypoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Payload state: CoG position, heading, body-frame velocity of `c2`, yaw rate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtPayloadState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub v: f64,
    pub v_lat: f64,
    pub omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtReference {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub theta: f64,
    pub speed: f64,
    pub omega: f64,
}

/// Scalar summary statistics. Missing values read as NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtMetricsSummary {
    pub samples: u64,
    pub rmse_x: f64,
    pub rmse_y: f64,
    pub rmse_theta: f64,
    pub rmse_eta1: f64,
    pub rmse_eta2: f64,
    pub follower_force_rmse_x: f64,
    pub follower_force_rmse_y: f64,
    pub trigger_events: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(CtStatus, String);

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match &e {
            SimError::Config(_) | SimError::Param(_) => CtStatus::Config,
            SimError::Io(_) => CtStatus::Io,
            SimError::Planning(PlanningError::NoPath) => CtStatus::NoPath,
            SimError::Planning(_) => CtStatus::Planning,
            _ => CtStatus::Fault,
        };
        Failure(status, e.to_string())
    }
}

impl From<PlanningError> for Failure {
    fn from(e: PlanningError) -> Self {
        let status = if e == PlanningError::NoPath { CtStatus::NoPath } else { CtStatus::Planning };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (CtStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (CtStatus::Panic, "internal panic".to_string()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn null() -> Failure {
    Failure(CtStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(CtStatus::InvalidArgument, "string is not UTF-8".into()))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn in_arg<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

/// Copies `s` NUL-terminated into `buf` when it fits; returns the length without the NUL.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > s.len() {
        std::ptr::copy_nonoverlapping(s.as_ptr().cast(), buf, s.len());
        *buf.add(s.len()) = 0;
    }
    s.len()
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the calling thread's last error message into `buf` (capacity `cap`,
/// including the terminating NUL). Returns the message length; the copy only
/// happens when `cap` exceeds it.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ct_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, cap))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_load(path: *const c_char, out: *mut *mut CtScenario) -> CtStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cfg = ScenarioConfig::load(Path::new(str_arg(path)?))?;
        cfg.validate()?;
        *out = boxed(CtScenario(cfg));
        Ok(())
    })
}

/// Parses and validates scenario text. Relative paths resolve against the working directory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_parse(text: *const c_char, out: *mut *mut CtScenario) -> CtStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cfg = ScenarioConfig::parse(str_arg(text)?)?;
        cfg.validate()?;
        *out = boxed(CtScenario(cfg));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_set_seed(scenario: *mut CtScenario, seed: u64) -> CtStatus {
    guard(|| {
        out_arg(scenario)?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_free(scenario: *mut CtScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario to completion without writing files.
///
/// # Safety
/// `scenario` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_run(scenario: *const CtScenario, out: *mut *mut CtMetrics) -> CtStatus {
    guard(|| {
        let out = out_arg(out)?;
        let run = run_scenario(&in_arg(scenario)?.0, None)?;
        *out = boxed(CtMetrics(run.metrics));
        Ok(())
    })
}

/// Runs a scenario writing `<name>.csv` and `<name>.metrics.json` into `dir`.
///
/// # Safety
/// `scenario` must be a handle from this library; `dir` a NUL-terminated string.
/// `out` may be null when the metrics are not needed.
#[no_mangle]
pub unsafe extern "C" fn ct_run_to_dir(scenario: *const CtScenario, dir: *const c_char, out: *mut *mut CtMetrics) -> CtStatus {
    guard(|| {
        let run = run_to_dir(&in_arg(scenario)?.0, Path::new(str_arg(dir)?))?;
        if let Some(out) = out.as_mut() {
            *out = boxed(CtMetrics(run.metrics));
        }
        Ok(())
    })
}

/// # Safety
/// `metrics` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_metrics_summary(metrics: *const CtMetrics, out: *mut CtMetricsSummary) -> CtStatus {
    guard(|| {
        let m = &in_arg(metrics)?.0;
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out_arg(out)? = CtMetricsSummary {
            samples: m.samples,
            rmse_x: v(m.rmse_x),
            rmse_y: v(m.rmse_y),
            rmse_theta: v(m.rmse_theta),
            rmse_eta1: v(m.rmse_eta1),
            rmse_eta2: v(m.rmse_eta2),
            follower_force_rmse_x: v(m.follower_force_rmse_x),
            follower_force_rmse_y: v(m.follower_force_rmse_y),
            trigger_events: m.trigger_events,
        };
        Ok(())
    })
}

/// Full metrics as JSON. Writes the length (without NUL) to `len` and copies
/// into `buf` when `cap` is large enough, else returns `BufferTooSmall`.
///
/// # Safety
/// `metrics` must be a handle from this library; `buf` null or `cap` bytes; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_metrics_json(metrics: *const CtMetrics, buf: *mut c_char, cap: usize, len: *mut usize) -> CtStatus {
    guard(|| {
        let json = in_arg(metrics)?.0.to_json();
        let len = out_arg(len)?;
        *len = copy_out(&json, buf, cap);
        if buf.is_null() || cap <= json.len() {
            return Err(Failure(CtStatus::BufferTooSmall, format!("need {} bytes", json.len() + 1)));
        }
        Ok(())
    })
}

/// # Safety
/// `metrics` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ct_metrics_free(metrics: *mut CtMetrics) {
    if !metrics.is_null() {
        drop(Box::from_raw(metrics));
    }
}

/// Creates a world at time zero. The scenario may be freed afterwards.
///
/// # Safety
/// `scenario` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_world_new(scenario: *const CtScenario, out: *mut *mut CtWorld) -> CtStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cfg = &in_arg(scenario)?.0;
        let world = World::new(cfg, build_trajectory(cfg)?)?;
        *out = boxed(CtWorld(world));
        Ok(())
    })
}

/// Advances `ticks` control periods.
///
/// # Safety
/// `world` must be a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ct_world_advance(world: *mut CtWorld, ticks: u64) -> CtStatus {
    guard(|| {
        let w = &mut out_arg(world)?.0;
        for _ in 0..ticks {
            w.advance(&mut |_| {})?;
        }
        Ok(())
    })
}

/// # Safety
/// `world` must be a handle from this library; `t` and `state` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_world_state(world: *const CtWorld, t: *mut f64, state: *mut CtPayloadState) -> CtStatus {
    guard(|| {
        let w = &in_arg(world)?.0;
        let p = w.payload();
        *out_arg(t)? = w.time();
        *out_arg(state)? =
            CtPayloadState { x: p.position.x, y: p.position.y, z: p.position.z, theta: p.theta, v: p.v, v_lat: p.v_lat, omega: p.omega };
        Ok(())
    })
}

/// # Safety
/// `world` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ct_world_free(world: *mut CtWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Rest-to-rest minimum-snap trajectory through `n` waypoints.
///
/// # Safety
/// `waypoints` must point to `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_new(waypoints: *const CtWaypoint, n: usize, altitude: f64, out: *mut *mut CtTrajectory) -> CtStatus {
    guard(|| {
        let out = out_arg(out)?;
        if waypoints.is_null() {
            return Err(null());
        }
        let pts: Vec<Waypoint> = std::slice::from_raw_parts(waypoints, n).iter().map(|w| Waypoint::new(w.x, w.y, w.t)).collect();
        *out = boxed(CtTrajectory(generate_min_snap(&pts, &Boundary::default(), altitude)?));
        Ok(())
    })
}

/// # Safety
/// `traj` must be a handle from this library; `start` and `end` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_span(traj: *const CtTrajectory, start: *mut f64, end: *mut f64) -> CtStatus {
    guard(|| {
        let s = &in_arg(traj)?.0;
        *out_arg(start)? = s.start_time();
        *out_arg(end)? = s.end_time();
        Ok(())
    })
}

/// Reference at time `t`. `previous_heading` resolves the heading where the speed vanishes.
///
/// # Safety
/// `traj` must be a handle from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_sample(traj: *const CtTrajectory, t: f64, previous_heading: f64, out: *mut CtReference) -> CtStatus {
    guard(|| {
        let s = &in_arg(traj)?.0;
        let out = out_arg(out)?;
        if !t.is_finite() || t < s.start_time() || t > s.end_time() {
            return Err(Failure(CtStatus::InvalidArgument, format!("time {t} outside the trajectory")));
        }
        let r = s.sample(t, previous_heading);
        *out = CtReference {
            x: r.position.x,
            y: r.position.y,
            vx: r.velocity.x,
            vy: r.velocity.y,
            ax: r.acceleration.x,
            ay: r.acceleration.y,
            theta: r.theta,
            speed: r.speed,
            omega: r.omega,
        };
        Ok(())
    })
}

/// # Safety
/// `traj` must be a handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_free(traj: *mut CtTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Plans timed waypoints over an occupancy grid given in its text format,
/// with default planner settings. `count` receives the number of waypoints;
/// they are copied only when `cap` suffices, else `BufferTooSmall`.
///
/// # Safety
/// `grid_text` must be NUL-terminated; `out` null or `cap` elements; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_plan(
    grid_text: *const c_char,
    start: CtPose,
    goal: CtPose,
    out: *mut CtWaypoint,
    cap: usize,
    count: *mut usize,
) -> CtStatus {
    guard(|| {
        let count = out_arg(count)?;
        let grid = OccupancyGrid::parse(str_arg(grid_text)?)?;
        let pose = |p: CtPose| Pose::new(p.x, p.y, p.theta);
        let pts = plan_waypoints(&grid, pose(start), pose(goal), &PlannerConfig::default())?;
        *count = pts.len();
        if out.is_null() || cap < pts.len() {
            return Err(Failure(CtStatus::BufferTooSmall, format!("need {} waypoints", pts.len())));
        }
        for (i, p) in pts.iter().enumerate() {
            *out.add(i) = CtWaypoint { x: p.x, y: p.y, t: p.t };
        }
        Ok(())
    })
}
