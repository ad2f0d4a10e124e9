//! Waypoint search and minimum-snap reference trajectories.

mod grid;
mod hybrid_astar;
mod minsnap;
mod trajectory;

pub use grid::OccupancyGrid;
pub use hybrid_astar::{grid_distance_map, plan_waypoints, PlannerConfig, Pose};
pub use minsnap::{generate_min_snap, snap_cost, Boundary, DerivativeConstraints};
pub use trajectory::{PolySegment, TrajectorySpec, POLY_DEGREE, REST_SPEED};

use serde::{Deserialize, Serialize};

/// A planar waypoint with its arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanningError {
    #[error("no collision-free path between start and goal")]
    NoPath,
    #[error("{0} lies in an occupied or out-of-bounds cell")]
    BlockedEndpoint(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("time {t} is outside the trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("derivative order {0} not supported (max 4)")]
    Order(usize),
    #[error("curvature undefined for a stationary reference")]
    Stationary,
    #[error("grid parse error: {0}")]
    Parse(String),
}
