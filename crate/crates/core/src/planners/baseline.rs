use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::{signed_bearing_error, AgentState};
use crate::robot::{RobotSpec, VelocityCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    /// Proportional heading gain, 1/s.
    pub heading_gain: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams { heading_gain: 2.0 }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.heading_gain > 0.0) {
            return Err(Error::invalid("baseline heading gain must be > 0"));
        }
        Ok(())
    }
}

/// Pure pursuit toward `waypoint`, ignoring pedestrians: turn rate
/// proportional to the bearing error, forward speed scaled by its cosine.
pub fn baseline_step(
    robot: &AgentState,
    waypoint: Vec2,
    spec: &RobotSpec,
    params: &BaselineParams,
) -> VelocityCommand {
    if robot.position() == waypoint {
        return VelocityCommand::Unicycle { v: 0.0, omega: 0.0 };
    }
    let err = signed_bearing_error(&robot.pose, waypoint);
    let omega = (params.heading_gain * err).clamp(-spec.omega_max, spec.omega_max);
    let v = spec.v_max * err.cos().max(0.0);
    VelocityCommand::Unicycle { v, omega }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentId, Pose2D};
    use crate::robot::step_unicycle;
    use proptest::prelude::*;

    fn robot(x: f64, y: f64, h: f64) -> AgentState {
        AgentState::new(AgentId::ROBOT, Pose2D::new(x, y, h), Vec2::ZERO, 0.23).unwrap()
    }

    #[test]
    fn dead_ahead() {
        let spec = RobotSpec::default();
        let cmd = baseline_step(
            &robot(0.0, 0.0, 0.0),
            Vec2::new(5.0, 0.0),
            &spec,
            &BaselineParams::default(),
        );
        assert_eq!(cmd, VelocityCommand::Unicycle { v: 1.2, omega: 0.0 });
    }

    #[test]
    fn directly_behind_turns_in_place() {
        let spec = RobotSpec::default();
        let cmd = baseline_step(
            &robot(0.0, 0.0, 0.0),
            Vec2::new(-5.0, 1e-9),
            &spec,
            &BaselineParams::default(),
        );
        let VelocityCommand::Unicycle { v, omega } = cmd else {
            panic!()
        };
        assert!((omega.abs() - spec.omega_max).abs() < 1e-12);
        assert!(v < 1e-6);
    }

    proptest! {
        #[test]
        fn reaches_waypoint_from_any_pose(x in -8.0f64..8.0, y in -8.0f64..8.0, h in -std::f64::consts::PI..std::f64::consts::PI) {
            let spec = RobotSpec::default();
            let target = Vec2::ZERO;
            let mut s = robot(x, y, h);
            let dt = 0.04;
            // straight-line time plus time for a full turn, with slack
            let bound = ((x.hypot(y) / spec.v_max + 2.0 * std::f64::consts::PI / spec.omega_max) * 2.0 / dt) as usize + 25;
            let mut reached = s.position().distance(target) <= 1.0;
            for _ in 0..bound {
                if reached {
                    break;
                }
                let VelocityCommand::Unicycle { v, omega } = baseline_step(&s, target, &spec, &BaselineParams::default()) else { unreachable!() };
                s = step_unicycle(&s, v, omega, dt, &spec);
                reached = s.position().distance(target) <= 1.0;
            }
            prop_assert!(reached);
        }
    }
}
