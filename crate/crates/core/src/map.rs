//! 2D occupancy grid environments.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Grid cell index: `col` grows with +x, `row` grows with +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

/// Traversability raster. Cells outside the grid count as obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentMap {
    pub name: String,
    pub resolution: f64,
    pub origin: Vec2,
    width: usize,
    height: usize,
    /// Row-major, `true` = traversable.
    free: Vec<bool>,
}

impl EnvironmentMap {
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vec2,
        free: Vec<bool>,
    ) -> Result<Self> {
        let name = name.into();
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::invalid(format!(
                "map `{name}`: resolution must be > 0"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("map `{name}`: grid is empty")));
        }
        if free.len() != width * height {
            return Err(Error::invalid(format!(
                "map `{name}`: expected {} cells, got {}",
                width * height,
                free.len()
            )));
        }
        if !free.iter().any(|&f| f) {
            return Err(Error::invalid(format!(
                "map `{name}`: no traversable cells"
            )));
        }
        Ok(EnvironmentMap {
            name,
            resolution,
            origin,
            width,
            height,
            free,
        })
    }

    /// Builds a map from rows of text, `#` marking obstacles and anything
    /// else free. The first string is the top row (largest y).
    pub fn from_ascii(name: &str, resolution: f64, origin: Vec2, rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut free = vec![false; width * height];
        for (i, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::invalid(format!("map `{name}`: ragged row {i}")));
            }
            let row = height - 1 - i;
            for (col, ch) in line.chars().enumerate() {
                free[row * width + col] = ch != '#';
            }
        }
        EnvironmentMap::new(name, width, height, resolution, origin, free)
    }

    pub fn open(
        name: &str,
        width: usize,
        height: usize,
        resolution: f64,
        origin: Vec2,
    ) -> Result<Self> {
        EnvironmentMap::new(
            name,
            width,
            height,
            resolution,
            origin,
            vec![true; width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        let rel = p - self.origin;
        let ext = self.extent();
        rel.x >= 0.0 && rel.y >= 0.0 && rel.x < ext.x && rel.y < ext.y
    }

    pub fn traversable_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        cell.col < self.width
            && cell.row < self.height
            && self.free[cell.row * self.width + cell.col]
    }

    pub fn set_free(&mut self, cell: Cell, free: bool) {
        self.free[cell.row * self.width + cell.col] = free;
    }

    /// Signed cell coordinates of a world point (may be outside the grid).
    fn signed_cell(&self, p: Vec2) -> (i64, i64) {
        let rel = (p - self.origin) / self.resolution;
        (rel.x.floor() as i64, rel.y.floor() as i64)
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let (c, r) = self.signed_cell(p);
        (c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height)
            .then(|| Cell::new(c as usize, r as usize))
    }

    pub fn cell_center(&self, cell: Cell) -> Vec2 {
        self.origin
            + Vec2::new(
                (cell.col as f64 + 0.5) * self.resolution,
                (cell.row as f64 + 0.5) * self.resolution,
            )
    }

    pub fn is_free_point(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|c| self.is_free(c))
    }

    fn signed_is_free(&self, c: i64, r: i64) -> bool {
        c >= 0
            && r >= 0
            && (c as usize) < self.width
            && (r as usize) < self.height
            && self.free[r as usize * self.width + c as usize]
    }

    /// Distance from `p` to the closest point of the axis-aligned cell `(c, r)`.
    fn distance_to_cell(&self, p: Vec2, c: i64, r: i64) -> f64 {
        let lo = self.origin + Vec2::new(c as f64 * self.resolution, r as f64 * self.resolution);
        let hi = lo + Vec2::new(self.resolution, self.resolution);
        let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
        let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
        dx.hypot(dy)
    }

    /// Distance from `p` to the nearest non-traversable cell (including the
    /// area outside the grid), searching up to `max_range`. Returns the
    /// distance and the nearest point on that cell, or `None` if nothing
    /// lies within range.
    pub fn nearest_obstacle(&self, p: Vec2, max_range: f64) -> Option<(f64, Vec2)> {
        let (pc, pr) = self.signed_cell(p);
        let reach = (max_range / self.resolution).ceil() as i64 + 1;
        let mut best: Option<(f64, Vec2)> = None;
        for r in (pr - reach)..=(pr + reach) {
            for c in (pc - reach)..=(pc + reach) {
                if self.signed_is_free(c, r) {
                    continue;
                }
                let d = self.distance_to_cell(p, c, r);
                if d <= max_range && best.is_none_or(|(bd, _)| d < bd) {
                    let lo = self.origin
                        + Vec2::new(c as f64 * self.resolution, r as f64 * self.resolution);
                    let hi = lo + Vec2::new(self.resolution, self.resolution);
                    let q = Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
                    best = Some((d, q));
                }
            }
        }
        best
    }

    /// Closest points of every obstacle cell within `max_range` of `p`.
    pub fn obstacle_points_near(&self, p: Vec2, max_range: f64) -> Vec<Vec2> {
        let (pc, pr) = self.signed_cell(p);
        let reach = (max_range / self.resolution).ceil() as i64 + 1;
        let mut out = Vec::new();
        for r in (pr - reach)..=(pr + reach) {
            for c in (pc - reach)..=(pc + reach) {
                if self.signed_is_free(c, r) || self.distance_to_cell(p, c, r) > max_range {
                    continue;
                }
                let lo =
                    self.origin + Vec2::new(c as f64 * self.resolution, r as f64 * self.resolution);
                let hi = lo + Vec2::new(self.resolution, self.resolution);
                out.push(Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y)));
            }
        }
        out
    }

    /// True when any occupied cell lies strictly within `radius` of `center`.
    pub fn disc_collides(&self, center: Vec2, radius: f64) -> bool {
        let (pc, pr) = self.signed_cell(center);
        let reach = (radius / self.resolution).ceil() as i64 + 1;
        for r in (pr - reach)..=(pr + reach) {
            for c in (pc - reach)..=(pc + reach) {
                if !self.signed_is_free(c, r) && self.distance_to_cell(center, c, r) < radius {
                    return true;
                }
            }
        }
        false
    }

    /// Per-cell flag: a disc of `radius` centred on the cell centre is clear.
    pub fn inflated_free(&self, radius: f64) -> Vec<bool> {
        let mut out = vec![false; self.width * self.height];
        for row in 0..self.height {
            for col in 0..self.width {
                let cell = Cell::new(col, row);
                out[row * self.width + col] =
                    self.is_free(cell) && !self.disc_collides(self.cell_center(cell), radius);
            }
        }
        out
    }

    /// 4-connected component labels over traversable cells (`None` for obstacles).
    pub fn components(&self) -> Vec<Option<u32>> {
        self.components_of(&self.free)
    }

    pub(crate) fn components_of(&self, free: &[bool]) -> Vec<Option<u32>> {
        let mut labels = vec![None; self.width * self.height];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..labels.len() {
            if !free[start] || labels[start].is_some() {
                continue;
            }
            labels[start] = Some(next);
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (col, row) = (i % self.width, i / self.width);
                let mut visit = |j: usize| {
                    if free[j] && labels[j].is_none() {
                        labels[j] = Some(next);
                        queue.push_back(j);
                    }
                };
                if col > 0 {
                    visit(i - 1);
                }
                if col + 1 < self.width {
                    visit(i + 1);
                }
                if row > 0 {
                    visit(i - self.width);
                }
                if row + 1 < self.height {
                    visit(i + self.width);
                }
            }
            next += 1;
        }
        labels
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Rows of `#` (obstacle) and `.` (free), top row (largest y) first.
    pub fn to_ascii_rows(&self) -> Vec<String> {
        (0..self.height)
            .rev()
            .map(|row| {
                (0..self.width)
                    .map(|col| {
                        if self.is_free(Cell::new(col, row)) {
                            '.'
                        } else {
                            '#'
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Hex SHA-256 over the geometry and cell contents.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        h.update(self.resolution.to_le_bytes());
        h.update(self.origin.x.to_le_bytes());
        h.update(self.origin.y.to_le_bytes());
        h.update(self.free.iter().map(|&f| f as u8).collect::<Vec<u8>>());
        hex::encode(h.finalize())
    }
}
