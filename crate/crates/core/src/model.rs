//! Agent, track and episode types shared across the benchmark.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_difference, normalize_angle, Vec2};

/// Default replay tick rate in Hz.
pub const DEFAULT_TICK_RATE: f64 = 25.0;
/// Default per-episode time budget in seconds.
pub const DEFAULT_TIME_BUDGET: f64 = 60.0;
pub const DEFAULT_PEDESTRIAN_RADIUS: f64 = 0.30;
pub const DEFAULT_GOAL_RADIUS: f64 = 0.30;

/// Planar pose. The heading is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr")]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Deserialize)]
struct PoseRepr {
    x: f64,
    y: f64,
    #[serde(default)]
    heading: f64,
}

impl From<PoseRepr> for Pose2D {
    fn from(r: PoseRepr) -> Self {
        Pose2D::new(r.x, r.y, r.heading)
    }
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2D {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn with_position(self, p: Vec2) -> Self {
        Pose2D::new(p.x, p.y, self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub i64);

impl AgentId {
    pub const ROBOT: AgentId = AgentId(-1);
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == AgentId::ROBOT {
            f.write_str("robot")
        } else {
            write!(f, "ped{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub pose: Pose2D,
    pub velocity: Vec2,
    pub radius: f64,
}

impl AgentState {
    pub fn new(id: AgentId, pose: Pose2D, velocity: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!(
                "agent {id}: radius must be > 0, got {radius}"
            )));
        }
        if !pose.is_finite() || !velocity.is_finite() {
            return Err(Error::invalid(format!("agent {id}: non-finite state")));
        }
        Ok(AgentState {
            id,
            pose,
            velocity,
            radius,
        })
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }
}

pub fn distance_to_goal(state: &AgentState, goal: Vec2) -> f64 {
    state.position().distance(goal)
}

/// Absolute angle in `[0, π]` between the heading and the direction to `goal`.
/// Zero when the pose sits on the goal.
pub fn bearing_error(pose: &Pose2D, goal: Vec2) -> f64 {
    signed_bearing_error(pose, goal).abs()
}

/// Signed rotation from the heading to the goal direction, in `(-π, π]`.
pub fn signed_bearing_error(pose: &Pose2D, goal: Vec2) -> f64 {
    let to_goal = goal - pose.position();
    if to_goal.length_squared() == 0.0 {
        return 0.0;
    }
    angle_difference(to_goal.angle(), pose.heading)
}

/// One timestamped observation of a pedestrian, in episode time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl TrackSample {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// A recorded pedestrian trajectory in episode time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianTrack {
    pub id: AgentId,
    samples: Vec<TrackSample>,
}

impl PedestrianTrack {
    pub fn new(id: AgentId, samples: Vec<TrackSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(format!("track {id} has no samples")));
        }
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::invalid(format!(
                    "track {id}: sample times must strictly increase ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        if samples
            .iter()
            .any(|s| !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite()))
        {
            return Err(Error::invalid(format!("track {id}: non-finite sample")));
        }
        Ok(PedestrianTrack { id, samples })
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn entry_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn exit_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Largest straight-segment speed between consecutive samples.
    pub fn max_segment_speed(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].position().distance(w[0].position()) / (w[1].t - w[0].t))
            .fold(0.0, f64::max)
    }
}

/// Reference to a window of a recorded track file, as authored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSection {
    pub track_file: String,
    pub frame_rate: f64,
    pub start_time: f64,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub name: String,
    /// Name of the environment in the owning library.
    pub environment: String,
    pub robot_start: Pose2D,
    pub goal: Vec2,
    pub goal_radius: f64,
    pub tracks: Vec<PedestrianTrack>,
    pub time_budget: f64,
    pub tick_rate: f64,
    pub pedestrian_radius: f64,
    /// Where the tracks came from; empty for episodes built in memory.
    #[serde(default)]
    pub sections: Vec<TrackSection>,
}

impl Episode {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(format!("episode `{}`: {m}", self.name)));
        if !(self.tick_rate > 0.0) {
            return bad(format!("tick rate must be > 0, got {}", self.tick_rate));
        }
        if !(self.time_budget > 0.0) {
            return bad(format!("time budget must be > 0, got {}", self.time_budget));
        }
        if !(self.goal_radius > 0.0) {
            return bad(format!("goal radius must be > 0, got {}", self.goal_radius));
        }
        if !(self.pedestrian_radius > 0.0) {
            return bad(format!(
                "pedestrian radius must be > 0, got {}",
                self.pedestrian_radius
            ));
        }
        if !self.robot_start.is_finite() || !self.goal.is_finite() {
            return bad("non-finite start or goal".into());
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }

    /// Number of ticks the budget covers.
    pub fn budget_ticks(&self) -> u64 {
        (self.time_budget * self.tick_rate).round() as u64
    }
}
