use std::fmt;

use serde::{Deserialize, Serialize};

use super::MeanStd;
use crate::error::{Error, Result};
use crate::sim::{EpisodeLog, Termination, TerminationKind};

/// Exclusive per-episode outcome. A Completion with any pedestrian
/// collision is a pedestrian-collision failure; Timeout and environment
/// collision keep their own category even when pedestrians were hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Timeout,
    PedestrianCollision,
    EnvironmentCollision,
}

impl Outcome {
    pub fn of(termination: &Termination) -> Self {
        match termination.kind {
            TerminationKind::Completion if termination.pedestrian_collisions == 0 => {
                Outcome::Success
            }
            TerminationKind::Completion => Outcome::PedestrianCollision,
            TerminationKind::Timeout => Outcome::Timeout,
            TerminationKind::EnvironmentCollision => Outcome::EnvironmentCollision,
        }
    }
}

/// Failure counts rendered as `T/PC/EC`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureTuple {
    pub timeout: u32,
    pub pedestrian_collision: u32,
    pub environment_collision: u32,
}

impl FailureTuple {
    pub fn total(&self) -> u32 {
        self.timeout + self.pedestrian_collision + self.environment_collision
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Success => {}
            Outcome::Timeout => self.timeout += 1,
            Outcome::PedestrianCollision => self.pedestrian_collision += 1,
            Outcome::EnvironmentCollision => self.environment_collision += 1,
        }
    }
}

impl fmt::Display for FailureTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}",
            self.timeout, self.pedestrian_collision, self.environment_collision
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub episodes: u32,
    pub successes: u32,
    pub success_rate: f64,
    pub failures: FailureTuple,
    pub total_pedestrian_collisions: u32,
    /// Seconds per tick between state delivery and the client's act.
    pub average_planning_wait: f64,
    /// Summed planning wait per episode, seconds.
    pub planning_time_per_episode: Option<MeanStd>,
}

impl MetaReport {
    /// `k/n` as printed in result tables.
    pub fn success_fraction(&self) -> String {
        format!("{}/{}", self.successes, self.episodes)
    }
}

pub fn aggregate_meta(logs: &[EpisodeLog]) -> Result<MetaReport> {
    if logs.is_empty() {
        return Err(Error::invalid(
            "meta statistics need at least one episode log",
        ));
    }
    let mut failures = FailureTuple::default();
    let mut successes = 0;
    let mut collisions = 0;
    let (mut wait_sum, mut steps) = (0.0, 0usize);
    let mut per_episode = Vec::with_capacity(logs.len());
    for log in logs {
        let outcome = Outcome::of(log.termination());
        if outcome == Outcome::Success {
            successes += 1;
        }
        failures.record(outcome);
        collisions += log
            .summary
            .events
            .iter()
            .filter(|e| e.other.is_some())
            .count() as u32;
        let mut episode_wait = 0.0;
        for w in log.planning_waits() {
            episode_wait += w;
            steps += 1;
        }
        wait_sum += episode_wait;
        per_episode.push(episode_wait);
    }
    let episodes = logs.len() as u32;
    Ok(MetaReport {
        episodes,
        successes,
        success_rate: successes as f64 / episodes as f64,
        failures,
        total_pedestrian_collisions: collisions,
        average_planning_wait: if steps == 0 {
            0.0
        } else {
            wait_sum / steps as f64
        },
        planning_time_per_episode: MeanStd::of(&per_episode),
    })
}
