//! Path, motion and pedestrian metrics per episode, plus meta statistics
//! across episodes. Everything is computed from an [`EpisodeLog`].

mod meta;
mod motion;
mod path;
mod pedestrian;
mod stats;

pub use meta::{aggregate_meta, FailureTuple, MetaReport, Outcome};
pub use motion::{kinematic_stats, KinematicStats};
pub use path::{goal_traversal_ratio, path_irregularity, path_length, path_length_ratio};
pub use pedestrian::{
    closest_pedestrian_distance, pair_time_to_collision, time_to_collision, CPD_SATURATION,
    TTC_SATURATION,
};
pub(crate) use stats::round2;
pub use stats::MeanStd;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Vec2;
use crate::model::Pose2D;
use crate::sim::{EpisodeLog, TerminationKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: String,
    pub termination: TerminationKind,
    pub success: bool,
    pub path_length: f64,
    /// Absent when the robot never moved.
    pub path_length_ratio: Option<f64>,
    /// Only for incomplete episodes.
    pub goal_traversal_ratio: Option<f64>,
    /// Absent when every pose lies inside the goal radius.
    pub path_irregularity: Option<f64>,
    pub traversal_time: f64,
    /// Absent for logs shorter than four ticks.
    pub kinematics: Option<KinematicStats>,
    pub closest_pedestrian_distance: Vec<f64>,
    pub mean_closest_pedestrian_distance: f64,
    pub time_to_collision: Vec<f64>,
    pub mean_time_to_collision: f64,
    pub pedestrian_collisions: u32,
}

impl EpisodeMetrics {
    pub fn from_log(log: &EpisodeLog) -> Result<Self> {
        let h = &log.header;
        let poses: Vec<Pose2D> = log.records.iter().map(|r| r.state.robot.pose).collect();
        let positions: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
        let start = h.robot_start.position();
        let end = *positions
            .last()
            .expect("log has at least the initial record");
        let termination = log.termination();

        let length = path_length(&positions);
        let plr = if length > 0.0 {
            Some(path_length_ratio(start, h.goal, length)?)
        } else {
            None
        };
        let gtr = match termination.kind {
            TerminationKind::Completion => None,
            _ if start.distance(h.goal) > 0.0 => Some(goal_traversal_ratio(start, end, h.goal)?),
            _ => None,
        };
        let irregularity = path_irregularity(&poses, h.goal, h.goal_radius).ok();
        let kinematics = if positions.len() >= 4 {
            Some(kinematic_stats(&positions, log.dt())?)
        } else {
            None
        };

        let cpd: Vec<f64> = log
            .records
            .iter()
            .map(|r| closest_pedestrian_distance(&r.state.robot, &r.state.pedestrians))
            .collect();
        let ttc: Vec<f64> = log
            .records
            .iter()
            .map(|r| time_to_collision(&r.state.robot, &r.state.pedestrians))
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

        Ok(EpisodeMetrics {
            episode: h.episode.clone(),
            termination: termination.kind,
            success: termination.success,
            path_length: length,
            path_length_ratio: plr,
            goal_traversal_ratio: gtr,
            path_irregularity: irregularity,
            traversal_time: log.final_state().sim_time,
            kinematics,
            mean_closest_pedestrian_distance: mean(&cpd),
            closest_pedestrian_distance: cpd,
            mean_time_to_collision: mean(&ttc),
            time_to_collision: ttc,
            pedestrian_collisions: termination.pedestrian_collisions,
        })
    }
}
