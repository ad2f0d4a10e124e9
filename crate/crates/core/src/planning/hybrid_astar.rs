use super::{OccupancyGrid, PlanningError, Waypoint};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub heading_bins: usize,
    pub min_turn_radius: f64,
    /// Arc length of one motion primitive, in cells.
    pub step_cells: f64,
    /// Reference speed used to time the waypoints [m/s].
    pub speed: f64,
    pub allow_reverse: bool,
    /// Cost multiplier on reversing primitives.
    pub reverse_penalty: f64,
    pub shortcut: bool,
    /// Allow turning on the spot; `c2` moves like a unicycle and can pivot.
    pub pivot: bool,
    pub max_expansions: usize,
    pub start_time: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            heading_bins: 16,
            min_turn_radius: 1.0,
            step_cells: 1.5,
            speed: 0.5,
            allow_reverse: true,
            reverse_penalty: 1.5,
            shortcut: true,
            pivot: true,
            max_expansions: 500_000,
            start_time: 0.0,
        }
    }
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 8-connected shortest distances [m] from `goal` to every cell; `inf` where unreachable.
///
/// Diagonal moves need both side cells free.
pub fn grid_distance_map(grid: &OccupancyGrid, goal: (i64, i64)) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let r = grid.resolution();
    let mut dist = vec![f64::INFINITY; w * h];
    if grid.occupied(goal.0, goal.1) {
        return dist;
    }
    let idx = |i: i64, j: i64| j as usize * w + i as usize;
    let mut heap = BinaryHeap::new();
    dist[idx(goal.0, goal.1)] = 0.0;
    heap.push(Reverse((0u64, goal.0, goal.1)));
    while let Some(Reverse((bits, i, j))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[idx(i, j)] {
            continue;
        }
        for (di, dj) in NEIGHBORS {
            let (ni, nj) = (i + di, j + dj);
            if grid.occupied(ni, nj) {
                continue;
            }
            if di != 0 && dj != 0 && (grid.occupied(i + di, j) || grid.occupied(i, j + dj)) {
                continue;
            }
            let nd = d + if di != 0 && dj != 0 { SQRT_2 * r } else { r };
            if nd < dist[idx(ni, nj)] {
                dist[idx(ni, nj)] = nd;
                heap.push(Reverse((nd.to_bits(), ni, nj)));
            }
        }
    }
    dist
}

struct Node {
    pose: Pose,
    g: f64,
    parent: Option<usize>,
}

/// Hybrid A* from `start` to `goal`, returning timed waypoints.
///
/// The goal heading is not enforced; the trajectory generator chooses it.
pub fn plan_waypoints(grid: &OccupancyGrid, start: Pose, goal: Pose, cfg: &PlannerConfig) -> Result<Vec<Waypoint>, PlanningError> {
    let positive = |x: f64| x > 0.0;
    if cfg.heading_bins == 0 || ![cfg.min_turn_radius, cfg.speed, cfg.step_cells].into_iter().all(positive) {
        return Err(PlanningError::DegenerateInput("planner settings must be positive".into()));
    }
    if grid.occupied_at(start.x, start.y) {
        return Err(PlanningError::BlockedEndpoint("start"));
    }
    if grid.occupied_at(goal.x, goal.y) {
        return Err(PlanningError::BlockedEndpoint("goal"));
    }
    let path = search(grid, start, goal, cfg)?;
    let path = if cfg.shortcut { shortcut(grid, &path) } else { path };
    Ok(time_waypoints(&path, cfg))
}

fn search(grid: &OccupancyGrid, start: Pose, goal: Pose, cfg: &PlannerConfig) -> Result<Vec<(f64, f64)>, PlanningError> {
    let goal_cell = grid.cell_of(goal.x, goal.y);
    let heuristic_map = grid_distance_map(grid, goal_cell);
    let (w, h) = (grid.width(), grid.height());
    let cell_index = |x: f64, y: f64| {
        let (i, j) = grid.cell_of(x, y);
        j as usize * w + i as usize
    };
    if !heuristic_map[cell_index(start.x, start.y)].is_finite() {
        return Err(PlanningError::NoPath);
    }
    let heuristic = |p: &Pose| {
        let euclid = (p.x - goal.x).hypot(p.y - goal.y);
        euclid.max(heuristic_map[cell_index(p.x, p.y)])
    };
    let bins = cfg.heading_bins;
    let key = |p: &Pose| {
        let b = ((p.theta.rem_euclid(2.0 * PI)) / (2.0 * PI) * bins as f64).floor() as usize % bins;
        cell_index(p.x, p.y) * bins + b
    };

    let r = grid.resolution();
    let ds = cfg.step_cells * r;
    let kappa = 1.0 / cfg.min_turn_radius;
    let mut directions = vec![1.0];
    if cfg.allow_reverse {
        directions.push(-1.0);
    }

    let mut nodes = vec![Node { pose: start, g: 0.0, parent: None }];
    let mut closed = vec![false; w * h * bins];
    let mut best_g = vec![f64::INFINITY; w * h * bins];
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    open.push(Reverse((heuristic(&start).to_bits(), counter, 0usize)));
    best_g[key(&start)] = 0.0;

    let mut expansions = 0;
    while let Some(Reverse((_, _, idx))) = open.pop() {
        let pose = nodes[idx].pose;
        let k = key(&pose);
        if closed[k] {
            continue;
        }
        closed[k] = true;
        expansions += 1;
        if expansions > cfg.max_expansions {
            break;
        }
        if grid.segment_free((pose.x, pose.y), (goal.x, goal.y)) {
            let mut path = vec![(goal.x, goal.y)];
            let mut cur = Some(idx);
            while let Some(c) = cur {
                path.push((nodes[c].pose.x, nodes[c].pose.y));
                cur = nodes[c].parent;
            }
            path.reverse();
            return Ok(path);
        }
        let step = 2.0 * PI / bins as f64;
        let pivots = if cfg.pivot { [step, -step].map(|d| Pose { theta: pose.theta + d, ..pose }).to_vec() } else { Vec::new() };
        let moves = directions
            .iter()
            .flat_map(|&dir| [0.0, kappa, -kappa].map(|c| (dir, c)))
            .filter_map(|(dir, c)| {
                let cost = if dir > 0.0 { ds } else { ds * cfg.reverse_penalty };
                primitive(grid, &pose, dir * ds, c, r).map(|p| (p, cost))
            })
            .chain(pivots.into_iter().map(|p| (p, cfg.min_turn_radius * step)));
        for (next, cost) in moves {
            let nk = key(&next);
            if closed[nk] {
                continue;
            }
            let g = nodes[idx].g + cost;
            if g >= best_g[nk] {
                continue;
            }
            best_g[nk] = g;
            nodes.push(Node { pose: next, g, parent: Some(idx) });
            counter += 1;
            open.push(Reverse(((g + heuristic(&next)).to_bits(), counter, nodes.len() - 1)));
        }
    }
    Err(PlanningError::NoPath)
}

/// Follows an arc of signed length `length`; `None` if it or its chord touches an occupied cell.
///
/// Waypoints join node poses with straight lines, so the chord must be free too.
fn primitive(grid: &OccupancyGrid, from: &Pose, length: f64, curvature: f64, resolution: f64) -> Option<Pose> {
    let n = ((length.abs() / (0.25 * resolution)).ceil() as usize).max(1);
    let mut prev = (from.x, from.y);
    let mut pose = *from;
    for k in 1..=n {
        let s = length * k as f64 / n as f64;
        pose = arc_point(from, s, curvature);
        if !grid.segment_free(prev, (pose.x, pose.y)) {
            return None;
        }
        prev = (pose.x, pose.y);
    }
    grid.segment_free((from.x, from.y), (pose.x, pose.y)).then_some(pose)
}

fn arc_point(from: &Pose, s: f64, curvature: f64) -> Pose {
    if curvature == 0.0 {
        return Pose::new(from.x + s * from.theta.cos(), from.y + s * from.theta.sin(), from.theta);
    }
    let theta = from.theta + s * curvature;
    Pose::new(from.x + (theta.sin() - from.theta.sin()) / curvature, from.y - (theta.cos() - from.theta.cos()) / curvature, theta)
}

/// Greedy line-of-sight pruning.
fn shortcut(grid: &OccupancyGrid, path: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !grid.segment_free(path[i], path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

fn time_waypoints(path: &[(f64, f64)], cfg: &PlannerConfig) -> Vec<Waypoint> {
    let mut t = cfg.start_time;
    let mut out = vec![Waypoint::new(path[0].0, path[0].1, t)];
    for p in &path[1..] {
        let last = out.last().expect("non-empty");
        let d = (p.0 - last.x).hypot(p.1 - last.y);
        if d < 1e-9 {
            continue;
        }
        t += d / cfg.speed;
        out.push(Waypoint::new(p.0, p.1, t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_gives_straight_line() {
        let g = OccupancyGrid::new(10, 10, 1.0).unwrap();
        let w = plan_waypoints(&g, Pose::new(1.5, 5.5, 0.0), Pose::new(8.5, 5.5, 0.0), &PlannerConfig::default()).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[1].t - 14.0).abs() < 1e-12);
    }

    #[test]
    fn wall_gives_no_path() {
        let mut g = OccupancyGrid::new(10, 10, 1.0).unwrap();
        for j in 0..10 {
            g.set(5, j, true);
        }
        let r = plan_waypoints(&g, Pose::new(1.5, 5.5, 0.0), Pose::new(8.5, 5.5, 0.0), &PlannerConfig::default());
        assert_eq!(r, Err(PlanningError::NoPath));
    }

    #[test]
    fn detours_around_obstacle() {
        let mut g = OccupancyGrid::new(12, 12, 1.0).unwrap();
        for j in 0..9 {
            g.set(6, j, true);
        }
        let w = plan_waypoints(&g, Pose::new(1.5, 1.5, 0.0), Pose::new(10.5, 1.5, 0.0), &PlannerConfig::default()).unwrap();
        assert!(w.len() >= 3);
        for pair in w.windows(2) {
            assert!(g.segment_free((pair[0].x, pair[0].y), (pair[1].x, pair[1].y)));
        }
    }

    #[test]
    fn blocked_start_rejected() {
        let mut g = OccupancyGrid::new(4, 4, 1.0).unwrap();
        g.set(0, 0, true);
        let r = plan_waypoints(&g, Pose::new(0.5, 0.5, 0.0), Pose::new(3.5, 3.5, 0.0), &PlannerConfig::default());
        assert_eq!(r, Err(PlanningError::BlockedEndpoint("start")));
    }

    #[test]
    fn arc_point_on_circle() {
        let p = arc_point(&Pose::new(0.0, 0.0, 0.0), PI / 2.0, 1.0);
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12);
    }
}
