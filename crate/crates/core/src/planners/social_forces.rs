use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::AgentState;
use crate::robot::VelocityCommand;

/// Circular-specification social force parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialForcesParams {
    /// Relaxation time, seconds.
    pub tau: f64,
    /// Desired speed, m/s. `None` means the robot's `v_max`.
    pub desired_speed: Option<f64>,
    /// Pedestrian repulsion strength A, m/s².
    pub pedestrian_strength: f64,
    /// Pedestrian repulsion range B, meters.
    pub pedestrian_range: f64,
    pub obstacle_strength: f64,
    pub obstacle_range: f64,
    /// Pedestrians beyond this centre distance are ignored, meters.
    pub cutoff: f64,
}

impl Default for SocialForcesParams {
    fn default() -> Self {
        SocialForcesParams {
            tau: 0.5,
            desired_speed: None,
            pedestrian_strength: 5.0,
            pedestrian_range: 0.3,
            obstacle_strength: 5.0,
            obstacle_range: 0.3,
            cutoff: 10.0,
        }
    }
}

impl SocialForcesParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.tau,
            self.pedestrian_strength,
            self.pedestrian_range,
            self.obstacle_strength,
            self.obstacle_range,
            self.cutoff,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("social force parameters must all be > 0"));
        }
        if self.desired_speed.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::invalid("desired speed must be > 0"));
        }
        Ok(())
    }
}

/// Repulsion exerted on `robot` by a disc of radius `other_radius` at `other`.
pub fn repulsion(
    robot: &AgentState,
    other: Vec2,
    other_radius: f64,
    strength: f64,
    range: f64,
) -> Vec2 {
    let diff = robot.position() - other;
    let d = diff.length();
    if d == 0.0 {
        return Vec2::ZERO;
    }
    diff / d * (strength * ((robot.radius + other_radius - d) / range).exp())
}

/// Total acceleration: relaxation towards the desired velocity plus the
/// repulsions from pedestrians and obstacle points.
pub fn social_force(
    robot: &AgentState,
    pedestrians: &[AgentState],
    obstacle_points: &[Vec2],
    waypoint: Vec2,
    desired_speed: f64,
    params: &SocialForcesParams,
) -> Vec2 {
    let e = (waypoint - robot.position()).normalize_or_zero();
    let mut a = (e * desired_speed - robot.velocity) / params.tau;
    for p in pedestrians {
        if p.position().distance(robot.position()) <= params.cutoff {
            a += repulsion(
                robot,
                p.position(),
                p.radius,
                params.pedestrian_strength,
                params.pedestrian_range,
            );
        }
    }
    for &q in obstacle_points {
        a += repulsion(
            robot,
            q,
            0.0,
            params.obstacle_strength,
            params.obstacle_range,
        );
    }
    a
}

/// One explicit step of the force model, emitted as a holonomic command.
#[allow(clippy::too_many_arguments)]
pub fn social_forces_step(
    robot: &AgentState,
    pedestrians: &[AgentState],
    obstacle_points: &[Vec2],
    waypoint: Vec2,
    v_max: f64,
    params: &SocialForcesParams,
    dt: f64,
) -> VelocityCommand {
    let speed = params.desired_speed.unwrap_or(v_max).min(v_max);
    let a = social_force(robot, pedestrians, obstacle_points, waypoint, speed, params);
    let v = (robot.velocity + a * dt).clamp_length(v_max);
    VelocityCommand::Holonomic { vx: v.x, vy: v.y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentId, Pose2D};

    fn agent(x: f64, y: f64, vx: f64, vy: f64, r: f64) -> AgentState {
        AgentState::new(AgentId(0), Pose2D::new(x, y, 0.0), Vec2::new(vx, vy), r).unwrap()
    }

    #[test]
    fn relaxation_from_rest() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
        let a = social_force(
            &robot,
            &[],
            &[],
            Vec2::new(5.0, 0.0),
            1.2,
            &SocialForcesParams::default(),
        );
        assert!((a - Vec2::new(2.4, 0.0)).length() < 1e-12);
    }

    #[test]
    fn single_pedestrian_repulsion_magnitude() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
        let f = repulsion(&robot, Vec2::new(1.0, 0.0), 0.30, 5.0, 0.3);
        let expected = 5.0 * (-0.47f64 / 0.3).exp();
        assert!((f.length() - expected).abs() < 1e-12);
        assert!((f.length() - 1.044).abs() < 1e-3);
        assert!(f.x < 0.0 && f.y == 0.0);
    }

    #[test]
    fn mirrored_pedestrians_cancel_laterally() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
        let peds = [
            agent(2.0, 0.7, 0.0, 0.0, 0.3),
            agent(2.0, -0.7, 0.0, 0.0, 0.3),
        ];
        let a = social_force(
            &robot,
            &peds,
            &[],
            Vec2::new(5.0, 0.0),
            1.2,
            &SocialForcesParams::default(),
        );
        assert_eq!(a.y, 0.0);
        assert!(a.x < 2.4);
    }

    #[test]
    fn far_pedestrians_leave_goal_term() {
        let robot = agent(0.0, 0.0, 0.3, 0.0, 0.23);
        let params = SocialForcesParams {
            cutoff: 1e9,
            ..SocialForcesParams::default()
        };
        let goal_only = social_force(&robot, &[], &[], Vec2::new(5.0, 0.0), 1.2, &params);
        let mut prev = f64::INFINITY;
        for d in [2.0, 4.0, 8.0, 16.0] {
            let a = social_force(
                &robot,
                &[agent(0.0, d, 0.0, 0.0, 0.3)],
                &[],
                Vec2::new(5.0, 0.0),
                1.2,
                &params,
            );
            let gap = (a - goal_only).length();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn step_is_clamped_and_holonomic() {
        let robot = agent(0.0, 0.0, 1.2, 0.0, 0.23);
        let cmd = social_forces_step(
            &robot,
            &[],
            &[],
            Vec2::new(5.0, 5.0),
            1.2,
            &SocialForcesParams::default(),
            0.04,
        );
        let VelocityCommand::Holonomic { vx, vy } = cmd else {
            panic!("expected holonomic")
        };
        assert!(Vec2::new(vx, vy).length() <= 1.2 + 1e-12);
        assert!(vy > 0.0);
    }

    #[test]
    fn validation() {
        assert!(SocialForcesParams::default().validate().is_ok());
        assert!(SocialForcesParams {
            tau: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SocialForcesParams {
            desired_speed: Some(-1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
