use super::config::ScenarioConfig;
use super::log::LogWriter;
use super::metrics::{Metrics, MetricsAccumulator};
use super::world::World;
use super::SimError;
use crate::planning::{generate_min_snap, Boundary, DerivativeConstraints, TrajectorySpec, Waypoint};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: Metrics,
    /// Rows written to the log.
    pub rows: u64,
    pub log_path: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
}

/// Rest-to-rest minimum-snap trajectory through the scenario's waypoints.
pub fn build_trajectory(cfg: &ScenarioConfig) -> Result<TrajectorySpec, SimError> {
    let waypoints = cfg.waypoints()?;
    Ok(generate_min_snap(&waypoints, &Boundary::default(), cfg.trajectory.altitude)?)
}

/// Trajectory that leaves `current` at time `t` with matching velocity,
/// acceleration and jerk, then visits `waypoints` (times relative to `t`)
/// and ends at rest.
pub fn switch_spec(current: &TrajectorySpec, t: f64, waypoints: &[[f64; 3]]) -> Result<TrajectorySpec, SimError> {
    let d = |k| current.evaluate(current.clamp_time(t), k);
    let (p, v, a, j) = (d(0)?, d(1)?, d(2)?, d(3)?);
    let mut points = vec![Waypoint::new(p.x, p.y, t)];
    points.extend(waypoints.iter().map(|w| Waypoint::new(w[0], w[1], t + w[2])));
    let start = if t < current.end_time() {
        DerivativeConstraints { velocity: Some(v.xy()), acceleration: Some(a.xy()), jerk: Some(j.xy()) }
    } else {
        DerivativeConstraints::rest()
    };
    let boundary = Boundary { start, end: DerivativeConstraints::rest() };
    Ok(generate_min_snap(&points, &boundary, current.altitude)?)
}

fn should_log(cfg: &ScenarioConfig, step_in_tick: bool, tick: u64) -> bool {
    if cfg.log.substeps {
        true
    } else {
        step_in_tick && tick.is_multiple_of(cfg.log.every as u64)
    }
}

/// Runs a scenario to completion, streaming CSV rows into `log` when given.
///
/// On a fault the rows written so far stay in `log` and the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, log: Option<&mut dyn Write>) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let spec = build_trajectory(cfg)?;
    let mut world = World::new(cfg, spec)?;
    let io = |e: std::io::Error| SimError::Io(e.to_string());
    let mut writer = match log {
        Some(w) => Some(LogWriter::new(w).map_err(io)?),
        None => None,
    };
    let mut acc =
        MetricsAccumulator::new(&cfg.name, cfg.seed, cfg.metrics.start, cfg.leader_gains, cfg.payload, cfg.switch.as_ref().map(|s| s.time));
    if let Some(w) = writer.as_mut() {
        w.write(&world.snapshot()).map_err(io)?;
    }
    let ticks = (cfg.duration / cfg.control_dt() - 1e-9).ceil().max(0.0) as u64;
    let mut switched = false;
    let mut write_error = None;
    let mut result = Ok(());
    for tick in 0..ticks {
        if let Some(sw) = &cfg.switch {
            if !switched && world.time() >= sw.time - 1e-9 {
                switched = true;
                let next = switch_spec(world.trajectory(), world.time(), &sw.waypoints)?;
                world.switch_trajectory(next)?;
            }
        }
        let mut observer = |s: &super::world::Snapshot| {
            acc.push(s);
            if let Some(w) = writer.as_mut() {
                if write_error.is_none() && should_log(cfg, s.control_tick, tick) {
                    if let Err(e) = w.write(s) {
                        write_error = Some(e);
                    }
                }
            }
        };
        if let Err(e) = world.advance(&mut observer) {
            result = Err(e);
            break;
        }
        if let Some(e) = write_error.take() {
            return Err(io(e));
        }
    }
    let rows = writer.as_ref().map_or(0, |w| w.rows());
    if let Some(mut w) = writer {
        w.flush().map_err(io)?;
    }
    result?;
    Ok(RunOutput { metrics: acc.finish(), rows, log_path: None, metrics_path: None })
}

/// Runs a scenario writing `<name>.csv` and `<name>.metrics.json` into `dir`.
pub fn run_to_dir(cfg: &ScenarioConfig, dir: &Path) -> Result<RunOutput, SimError> {
    let io = |p: &Path, e: std::io::Error| SimError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let stem = if cfg.name.is_empty() { "run" } else { cfg.name.as_str() };
    let log_path = dir.join(format!("{stem}.csv"));
    let metrics_path = dir.join(format!("{stem}.metrics.json"));
    let file = File::create(&log_path).map_err(|e| io(&log_path, e))?;
    let mut out = BufWriter::new(file);
    let mut run = run_scenario(cfg, Some(&mut out))?;
    out.flush().map_err(|e| io(&log_path, e))?;
    std::fs::write(&metrics_path, run.metrics.to_json()).map_err(|e| io(&metrics_path, e))?;
    run.log_path = Some(log_path);
    run.metrics_path = Some(metrics_path);
    Ok(run)
}
