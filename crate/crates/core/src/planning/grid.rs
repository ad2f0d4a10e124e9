use super::PlanningError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Occupancy bitmap with its lower-left corner at the world origin.
///
/// Cell `(i, j)` covers `[i r, (i+1) r) x [j r, (j+1) r)` for resolution `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    /// Resolution in micrometres, so the grid stays `Eq`.
    resolution_um: u64,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self, PlanningError> {
        if width == 0 || height == 0 {
            return Err(PlanningError::DegenerateInput("grid dimensions must be nonzero".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(PlanningError::DegenerateInput("grid resolution must be positive".into()));
        }
        Ok(Self { width, height, resolution_um: (resolution * 1e6).round() as u64, cells: vec![false; width * height] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution_um as f64 * 1e-6
    }

    pub fn set(&mut self, i: usize, j: usize, occupied: bool) {
        assert!(i < self.width && j < self.height, "cell ({i}, {j}) outside grid");
        self.cells[j * self.width + i] = occupied;
    }

    /// Out-of-bounds cells count as occupied.
    pub fn occupied(&self, i: i64, j: i64) -> bool {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return true;
        }
        self.cells[j as usize * self.width + i as usize]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        let r = self.resolution();
        ((x / r).floor() as i64, (y / r).floor() as i64)
    }

    pub fn cell_center(&self, i: i64, j: i64) -> (f64, f64) {
        let r = self.resolution();
        ((i as f64 + 0.5) * r, (j as f64 + 0.5) * r)
    }

    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        let (i, j) = self.cell_of(x, y);
        self.occupied(i, j)
    }

    /// True when the straight segment touches no occupied cell.
    ///
    /// Cells are traversed exactly; passing through a shared corner checks
    /// both cells adjacent to it.
    pub fn segment_free(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let r = self.resolution();
        let (mut i, mut j) = self.cell_of(a.0, a.1);
        let (gi, gj) = self.cell_of(b.0, b.1);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let step_i: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_j: i64 = if dy > 0.0 { 1 } else { -1 };
        let next_boundary = |c: i64, step: i64| if step > 0 { (c + 1) as f64 * r } else { c as f64 * r };
        let mut t_max_x = if dx != 0.0 { (next_boundary(i, step_i) - a.0) / dx } else { f64::INFINITY };
        let mut t_max_y = if dy != 0.0 { (next_boundary(j, step_j) - a.1) / dy } else { f64::INFINITY };
        let t_dx = if dx != 0.0 { r / dx.abs() } else { f64::INFINITY };
        let t_dy = if dy != 0.0 { r / dy.abs() } else { f64::INFINITY };
        let limit = (self.width + self.height) * 4 + 8;
        for _ in 0..limit {
            if self.occupied(i, j) {
                return false;
            }
            if (i, j) == (gi, gj) || (t_max_x > 1.0 && t_max_y > 1.0) {
                return !self.occupied(gi, gj);
            }
            if (t_max_x - t_max_y).abs() < 1e-12 {
                if self.occupied(i + step_i, j) || self.occupied(i, j + step_j) {
                    return false;
                }
                i += step_i;
                j += step_j;
                t_max_x += t_dx;
                t_max_y += t_dy;
            } else if t_max_x < t_max_y {
                i += step_i;
                t_max_x += t_dx;
            } else {
                j += step_j;
                t_max_y += t_dy;
            }
        }
        false
    }

    /// Parses `width height resolution` followed by `height` rows of `0`/`1`.
    ///
    /// The first row holds `j = 0`. Characters within a row may be separated by
    /// whitespace. Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, PlanningError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| PlanningError::Parse("missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(PlanningError::Parse(format!("header needs `width height resolution`, got `{header}`")));
        }
        let bad = |what: &str| PlanningError::Parse(format!("invalid {what} in header"));
        let width: usize = fields[0].parse().map_err(|_| bad("width"))?;
        let height: usize = fields[1].parse().map_err(|_| bad("height"))?;
        let resolution: f64 = fields[2].parse().map_err(|_| bad("resolution"))?;
        let mut grid = Self::new(width, height, resolution)?;
        for j in 0..height {
            let row = lines.next().ok_or_else(|| PlanningError::Parse(format!("missing row {j}")))?;
            let bits: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
            if bits.len() != width {
                return Err(PlanningError::Parse(format!("row {j} has {} cells, expected {width}", bits.len())));
            }
            for (i, c) in bits.into_iter().enumerate() {
                match c {
                    '0' => {}
                    '1' => grid.set(i, j, true),
                    other => return Err(PlanningError::Parse(format!("unexpected `{other}` in row {j}"))),
                }
            }
        }
        if lines.next().is_some() {
            return Err(PlanningError::Parse("trailing rows after grid".into()));
        }
        Ok(grid)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.width, self.height, self.resolution());
        for j in 0..self.height {
            for i in 0..self.width {
                s.push(if self.cells[j * self.width + i] { '1' } else { '0' });
            }
            let _ = writeln!(s);
        }
        s
    }
}
