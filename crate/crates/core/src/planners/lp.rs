use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

const EPSILON: f64 = 1e-9;

/// Velocity half-plane `{v : (v - point) · normal >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub point: Vec2,
    /// Unit normal pointing into the permitted side.
    pub normal: Vec2,
}

impl HalfPlane {
    /// Signed violation of `v`: positive outside the permitted side.
    pub fn violation(&self, v: Vec2) -> f64 {
        (self.point - v).dot(self.normal)
    }

    pub fn contains(&self, v: Vec2) -> bool {
        self.violation(v) <= 0.0
    }

    /// Boundary direction with the permitted side on its left.
    fn direction(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }
}

#[derive(Debug, Clone, Copy)]
struct Line {
    point: Vec2,
    direction: Vec2,
}

impl From<&HalfPlane> for Line {
    fn from(h: &HalfPlane) -> Self {
        Line {
            point: h.point,
            direction: h.direction(),
        }
    }
}

/// Velocity inside every half-plane and the speed disc closest to
/// `preferred`. When no such velocity exists, returns the velocity in the
/// disc whose largest violation is smallest.
pub fn solve_velocity_lp(planes: &[HalfPlane], preferred: Vec2, v_max: f64) -> Vec2 {
    let lines: Vec<Line> = planes.iter().map(Line::from).collect();
    let mut result = Vec2::ZERO;
    let failed = linear_program2(&lines, v_max, preferred, false, &mut result);
    if failed < lines.len() {
        linear_program3(&lines, failed, v_max, &mut result);
    }
    result
}

/// Optimizes along line `k` subject to lines `0..k` and the disc.
fn linear_program1(
    lines: &[Line],
    k: usize,
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> bool {
    let line = lines[k];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return false;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &lines[..k] {
        let denominator = line.direction.cross(other.direction);
        let numerator = other.direction.cross(line.point - other.point);
        if denominator.abs() <= EPSILON {
            // parallel
            if numerator < 0.0 {
                return false;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return false;
        }
    }

    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    *result = line.point + line.direction * t;
    true
}

/// Returns the number of lines satisfied before the program became
/// infeasible (`lines.len()` on success).
fn linear_program2(
    lines: &[Line],
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> usize {
    *result = if direction_opt {
        opt * radius
    } else if opt.length_squared() > radius * radius {
        opt.normalize_or_zero() * radius
    } else {
        opt
    };
    for (i, line) in lines.iter().enumerate() {
        if line.direction.cross(line.point - *result) > 0.0 {
            let previous = *result;
            if !linear_program1(lines, i, radius, opt, direction_opt, result) {
                *result = previous;
                return i;
            }
        }
    }
    lines.len()
}

/// Minimizes the largest violation over lines `begin..` by projecting onto
/// each violated line in turn.
fn linear_program3(lines: &[Line], begin: usize, radius: f64, result: &mut Vec2) {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        let li = lines[i];
        if li.direction.cross(li.point - *result) <= distance {
            continue;
        }
        let mut projected = Vec::with_capacity(i);
        for lj in &lines[..i] {
            let determinant = li.direction.cross(lj.direction);
            let point = if determinant.abs() <= EPSILON {
                if li.direction.dot(lj.direction) > 0.0 {
                    continue;
                }
                (li.point + lj.point) * 0.5
            } else {
                li.point + li.direction * (lj.direction.cross(li.point - lj.point) / determinant)
            };
            projected.push(Line {
                point,
                direction: (lj.direction - li.direction).normalize_or_zero(),
            });
        }
        let previous = *result;
        let opt = Vec2::new(-li.direction.y, li.direction.x);
        if linear_program2(&projected, radius, opt, true, result) < projected.len() {
            // numerically infeasible; keep the previous answer
            *result = previous;
        }
        distance = li.direction.cross(li.point - *result);
    }
}
