use serde::{Deserialize, Serialize};

use super::lp::{solve_velocity_lp, HalfPlane};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrcaParams {
    /// Look-ahead for pedestrian velocity obstacles, seconds.
    pub time_horizon: f64,
    /// Look-ahead for static obstacle points, seconds.
    pub obstacle_time_horizon: f64,
    /// Pedestrians farther than this are ignored, meters.
    pub neighbor_range: f64,
    /// Share of each avoidance the robot takes on.
    pub robot_responsibility: f64,
    /// Share assumed for pedestrians. Replayed pedestrians never react, so
    /// this value only documents the split; the robot always uses its own.
    pub pedestrian_responsibility: f64,
    /// Extra radius added to the robot when building constraints, meters.
    pub safety_margin: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 2.0,
            obstacle_time_horizon: 0.5,
            neighbor_range: 10.0,
            robot_responsibility: 1.0,
            pedestrian_responsibility: 0.0,
            safety_margin: 0.05,
        }
    }
}

impl OrcaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_horizon > 0.0 && self.obstacle_time_horizon > 0.0) {
            return Err(Error::invalid("ORCA time horizons must be > 0"));
        }
        if !(self.neighbor_range > 0.0) || !(self.safety_margin >= 0.0) {
            return Err(Error::invalid(
                "ORCA neighbor range must be > 0 and safety margin >= 0",
            ));
        }
        for r in [self.robot_responsibility, self.pedestrian_responsibility] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("responsibility {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Half-plane of robot velocities that avoid `other` for `horizon` seconds,
/// with the robot taking `responsibility` of the required change. When the
/// discs already overlap the constraint resolves the overlap within `dt`.
pub fn orca_halfplane(
    robot: &AgentState,
    other: &AgentState,
    horizon: f64,
    responsibility: f64,
    dt: f64,
) -> Result<HalfPlane> {
    halfplane_raw(
        robot.position(),
        robot.velocity,
        robot.radius,
        other,
        horizon,
        responsibility,
        dt,
    )
}

fn halfplane_raw(
    pos: Vec2,
    vel: Vec2,
    radius: f64,
    other: &AgentState,
    horizon: f64,
    responsibility: f64,
    dt: f64,
) -> Result<HalfPlane> {
    let rel_pos = other.position() - pos;
    let rel_vel = vel - other.velocity;
    let dist_sq = rel_pos.length_squared();
    if dist_sq == 0.0 {
        return Err(Error::invalid("coincident agent centres"));
    }
    let r = radius + other.radius;
    let r_sq = r * r;
    let (normal, u);
    if dist_sq > r_sq {
        let inv_h = 1.0 / horizon;
        // w: from cut-off circle centre to relative velocity
        let w = rel_vel - rel_pos * inv_h;
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            // closest boundary point lies on the cut-off circle
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            normal = unit_w;
            u = unit_w * (r * inv_h - w_len);
        } else {
            // closest boundary point lies on a leg
            let leg = (dist_sq - r_sq).sqrt();
            let direction = if rel_pos.cross(w) > 0.0 {
                Vec2::new(
                    rel_pos.x * leg - rel_pos.y * r,
                    rel_pos.x * r + rel_pos.y * leg,
                ) / dist_sq
            } else {
                -Vec2::new(
                    rel_pos.x * leg + rel_pos.y * r,
                    -rel_pos.x * r + rel_pos.y * leg,
                ) / dist_sq
            };
            normal = direction.perp();
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.length();
        let unit_w = if w_len > 0.0 {
            w / w_len
        } else {
            -rel_pos.normalize_or_zero()
        };
        normal = unit_w;
        u = unit_w * (r * inv_dt - w_len);
    }
    Ok(HalfPlane {
        point: vel + u * responsibility,
        normal,
    })
}

/// Velocity command for the robot: the closest velocity to `preferred`
/// that satisfies the constraints from every pedestrian in range and from
/// nearby static obstacle points.
pub fn orca_velocity(
    robot: &AgentState,
    pedestrians: &[AgentState],
    obstacle_points: &[Vec2],
    preferred: Vec2,
    v_max: f64,
    params: &OrcaParams,
    dt: f64,
) -> Vec2 {
    let radius = robot.radius + params.safety_margin;
    let pos = robot.position();
    let mut neighbours: Vec<&AgentState> = pedestrians
        .iter()
        .filter(|p| p.position().distance(pos) - p.radius - radius <= params.neighbor_range)
        .collect();
    neighbours.sort_by(|a, b| {
        a.position()
            .distance(pos)
            .total_cmp(&b.position().distance(pos))
    });

    let mut planes = Vec::new();
    for &q in obstacle_points {
        let pt = AgentState {
            id: robot.id,
            pose: crate::model::Pose2D::new(q.x, q.y, 0.0),
            velocity: Vec2::ZERO,
            radius: 1e-3,
        };
        if let Ok(h) = halfplane_raw(
            pos,
            robot.velocity,
            radius,
            &pt,
            params.obstacle_time_horizon,
            1.0,
            dt,
        ) {
            planes.push(h);
        }
    }
    for p in neighbours {
        if let Ok(h) = halfplane_raw(
            pos,
            robot.velocity,
            radius,
            p,
            params.time_horizon,
            params.robot_responsibility,
            dt,
        ) {
            planes.push(h);
        }
    }
    solve_velocity_lp(&planes, preferred, v_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentId, Pose2D};

    fn agent(x: f64, y: f64, vx: f64, vy: f64, r: f64) -> AgentState {
        AgentState::new(AgentId(0), Pose2D::new(x, y, 0.0), Vec2::new(vx, vy), r).unwrap()
    }

    /// Truncated velocity obstacle membership by direct simulation: does
    /// relative velocity `v` bring the discs into contact within `horizon`?
    fn in_vo(rel_pos: Vec2, v: Vec2, r: f64, horizon: f64) -> bool {
        let steps = 2000;
        (0..=steps).any(|k| {
            let t = horizon * k as f64 / steps as f64;
            (rel_pos - v * t).length() < r
        })
    }

    #[test]
    fn velocity_outside_vo_stays_permitted() {
        let robot = agent(0.0, 0.0, 0.0, 1.0, 0.23);
        let ped = agent(3.0, 0.0, 0.0, 0.0, 0.3);
        assert!(!in_vo(
            ped.position(),
            robot.velocity - ped.velocity,
            0.53,
            2.0
        ));
        let h = orca_halfplane(&robot, &ped, 2.0, 1.0, 0.04).unwrap();
        assert!(h.contains(robot.velocity));
        // the boundary point sits on the VO boundary: sampled relative
        // velocities slightly beyond it on the excluded side are inside the VO
        let probe = h.point - h.normal * 1e-3 - ped.velocity;
        assert!(in_vo(ped.position(), probe, 0.53, 2.0));
        let probe = h.point + h.normal * 1e-3 - ped.velocity;
        assert!(!in_vo(ped.position(), probe, 0.53, 2.0));
    }

    #[test]
    fn velocity_inside_vo_is_excluded() {
        let robot = agent(0.0, 0.0, 1.0, 0.0, 0.23);
        let ped = agent(2.0, 0.0, -1.0, 0.0, 0.3);
        let h = orca_halfplane(&robot, &ped, 2.0, 1.0, 0.04).unwrap();
        assert!(!h.contains(robot.velocity));
        // dense sampling: every permitted velocity near the boundary avoids the VO
        for i in 0..200 {
            for j in 0..200 {
                let v = Vec2::new(-2.0 + 4.0 * i as f64 / 199.0, -2.0 + 4.0 * j as f64 / 199.0);
                if h.violation(v) < -1e-6 {
                    assert!(!in_vo(ped.position(), v - ped.velocity, 0.53, 2.0), "{v:?}");
                }
            }
        }
    }

    #[test]
    fn responsibility_scales_offset_only() {
        let robot = agent(0.0, 0.0, 1.0, 0.1, 0.23);
        let ped = agent(2.0, 0.0, -1.0, 0.0, 0.3);
        let full = orca_halfplane(&robot, &ped, 2.0, 1.0, 0.04).unwrap();
        let half = orca_halfplane(&robot, &ped, 2.0, 0.5, 0.04).unwrap();
        assert!((full.normal - half.normal).length() < 1e-15);
        let d_full = full.point - robot.velocity;
        let d_half = half.point - robot.velocity;
        assert!((d_full - d_half * 2.0).length() < 1e-12);
    }

    #[test]
    fn receding_pedestrian_never_blocks_preference() {
        let robot = agent(0.0, 0.0, 0.5, 0.0, 0.1);
        let ped = agent(1.5, 0.0, 2.0, 0.0, 0.1);
        let h = orca_halfplane(&robot, &ped, 2.0, 1.0, 0.04).unwrap();
        for k in 0..=50 {
            let pref = Vec2::new(1.2 * k as f64 / 50.0, 0.0);
            assert!(h.contains(pref), "{pref:?}");
        }
    }

    #[test]
    fn overlap_resolves_within_one_tick() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
        let ped = agent(0.4, 0.0, 0.0, 0.0, 0.3);
        let h = orca_halfplane(&robot, &ped, 2.0, 1.0, 0.04).unwrap();
        // moving away at (r_sum - d)/dt leaves exactly touching after one tick
        assert!(h.normal.x < 0.0);
        let needed = Vec2::new(-(0.53 - 0.4) / 0.04, 0.0);
        assert!(h.violation(needed).abs() < 1e-9);
    }

    #[test]
    fn coincident_centres_rejected() {
        let a = agent(1.0, 1.0, 0.0, 0.0, 0.2);
        assert!(orca_halfplane(&a, &a, 2.0, 1.0, 0.04).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(OrcaParams::default().validate().is_ok());
        let bad = OrcaParams {
            robot_responsibility: 1.5,
            ..OrcaParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = OrcaParams {
            time_horizon: 0.0,
            ..OrcaParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn orca_velocity_bounded_and_feasible() {
        let robot = agent(0.0, 0.0, 1.0, 0.0, 0.23);
        let peds = [
            agent(3.0, 0.2, -1.0, 0.0, 0.3),
            agent(3.0, -1.5, -0.5, 0.5, 0.3),
        ];
        let v = orca_velocity(
            &robot,
            &peds,
            &[],
            Vec2::new(1.2, 0.0),
            1.2,
            &OrcaParams::default(),
            0.04,
        );
        assert!(v.length() <= 1.2 + 1e-9);
    }
}
