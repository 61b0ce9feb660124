//! Robot command application for the unicycle and velocity-limited
//! holonomic control modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::{AgentState, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    Unicycle,
    Holonomic,
}

/// Physical limits of the simulated robot. Defaults approximate a
/// Pioneer 3-DX base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotSpec {
    pub radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Optional bound on the change of speed per second.
    pub a_max: Option<f64>,
    pub control_mode: ControlMode,
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec {
            radius: 0.23,
            v_max: 1.2,
            omega_max: 1.9,
            a_max: None,
            control_mode: ControlMode::Unicycle,
        }
    }
}

impl RobotSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0) || !(self.radius > 0.0) || !(self.omega_max > 0.0) {
            return Err(Error::invalid(format!(
                "robot spec needs positive radius, v_max and omega_max: {self:?}"
            )));
        }
        if self.a_max.is_some_and(|a| !(a > 0.0)) {
            return Err(Error::invalid("a_max must be > 0 when set"));
        }
        Ok(())
    }

    pub fn with_mode(self, control_mode: ControlMode) -> Self {
        RobotSpec {
            control_mode,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityCommand {
    Unicycle { v: f64, omega: f64 },
    Holonomic { vx: f64, vy: f64 },
}

impl VelocityCommand {
    pub fn zero(mode: ControlMode) -> Self {
        match mode {
            ControlMode::Unicycle => VelocityCommand::Unicycle { v: 0.0, omega: 0.0 },
            ControlMode::Holonomic => VelocityCommand::Holonomic { vx: 0.0, vy: 0.0 },
        }
    }

    pub fn mode(&self) -> ControlMode {
        match self {
            VelocityCommand::Unicycle { .. } => ControlMode::Unicycle,
            VelocityCommand::Holonomic { .. } => ControlMode::Holonomic,
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            VelocityCommand::Unicycle { v, omega } => v.is_finite() && omega.is_finite(),
            VelocityCommand::Holonomic { vx, vy } => vx.is_finite() && vy.is_finite(),
        }
    }
}

/// Explicit-Euler unicycle step. Commands are clamped to the spec limits;
/// the stored velocity uses the pre-step heading.
pub fn step_unicycle(
    state: &AgentState,
    v: f64,
    omega: f64,
    dt: f64,
    spec: &RobotSpec,
) -> AgentState {
    debug_assert!(dt > 0.0);
    let mut v = if v.is_finite() {
        v.clamp(-spec.v_max, spec.v_max)
    } else {
        0.0
    };
    let omega = if omega.is_finite() {
        omega.clamp(-spec.omega_max, spec.omega_max)
    } else {
        0.0
    };
    let heading = state.pose.heading;
    let dir = Vec2::from_angle(heading);
    if let Some(a_max) = spec.a_max {
        let current = state.velocity.dot(dir);
        v = v.clamp(current - a_max * dt, current + a_max * dt);
    }
    let velocity = dir * v;
    let p = state.position() + velocity * dt;
    AgentState {
        pose: Pose2D::new(p.x, p.y, heading + omega * dt),
        velocity,
        ..*state
    }
}

/// Velocity-limited holonomic step: the commanded vector is rescaled to at
/// most `v_max`, the heading follows the motion direction.
pub fn step_holonomic(
    state: &AgentState,
    vx: f64,
    vy: f64,
    dt: f64,
    spec: &RobotSpec,
) -> AgentState {
    debug_assert!(dt > 0.0);
    let cmd = Vec2::new(vx, vy);
    let mut velocity = if cmd.is_finite() {
        cmd.clamp_length(spec.v_max)
    } else {
        Vec2::ZERO
    };
    if let Some(a_max) = spec.a_max {
        let dv = (velocity - state.velocity).clamp_length(a_max * dt);
        velocity = (state.velocity + dv).clamp_length(spec.v_max);
    }
    let p = state.position() + velocity * dt;
    let heading = if velocity.length() > 0.0 {
        velocity.angle()
    } else {
        state.pose.heading
    };
    AgentState {
        pose: Pose2D::new(p.x, p.y, heading),
        velocity,
        ..*state
    }
}

/// Applies a command in whichever form it was given.
pub fn apply_command(
    state: &AgentState,
    cmd: &VelocityCommand,
    dt: f64,
    spec: &RobotSpec,
) -> AgentState {
    match *cmd {
        VelocityCommand::Unicycle { v, omega } => step_unicycle(state, v, omega, dt, spec),
        VelocityCommand::Holonomic { vx, vy } => step_holonomic(state, vx, vy, dt, spec),
    }
}

/// Converts a position target into the holonomic velocity that reaches it
/// in one tick; the holonomic step then applies the speed limit.
pub fn position_target_to_velocity(state: &AgentState, target: Vec2, dt: f64) -> VelocityCommand {
    let v = (target - state.position()) / dt;
    VelocityCommand::Holonomic { vx: v.x, vy: v.y }
}
