use serde::{Deserialize, Serialize};

use super::collision::{detect_collisions, CollisionKind, Contact, EventTracker};
use super::log::{EpisodeLog, LogHeader, LogSummary, LogTotals, TickRecord};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::ingest::{resample_track, ReplayTrack};
use crate::map::EnvironmentMap;
use crate::model::{distance_to_goal, AgentId, AgentState, Episode};
use crate::robot::{apply_command, RobotSpec, VelocityCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    Completion,
    Timeout,
    EnvironmentCollision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub kind: TerminationKind,
    pub success: bool,
    pub pedestrian_collisions: u32,
    #[serde(default)]
    pub transport_failure: bool,
}

impl Termination {
    pub fn new(kind: TerminationKind, pedestrian_collisions: u32) -> Self {
        Termination {
            kind,
            success: kind == TerminationKind::Completion && pedestrian_collisions == 0,
            pedestrian_collisions,
            transport_failure: false,
        }
    }
}

/// World snapshot at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub sim_time: f64,
    pub tick: u64,
    pub robot: AgentState,
    /// Only pedestrians whose track window covers this tick.
    pub pedestrians: Vec<AgentState>,
    pub termination: Option<Termination>,
}

impl SimState {
    pub fn is_terminated(&self) -> bool {
        self.termination.is_some()
    }
}

/// Tick loop over one episode. Pedestrians replay their recorded tracks
/// regardless of what the robot does.
#[derive(Debug, Clone)]
pub struct Simulator {
    episode: Episode,
    env: EnvironmentMap,
    spec: RobotSpec,
    replay: Vec<ReplayTrack>,
    state: SimState,
    records: Vec<TickRecord>,
    events: EventTracker,
}

impl Simulator {
    pub fn new(episode: Episode, env: EnvironmentMap, spec: RobotSpec) -> Result<Self> {
        episode.validate()?;
        spec.validate()?;
        if episode.environment != env.name {
            return Err(Error::invalid(format!(
                "episode `{}` expects environment `{}`, got `{}`",
                episode.name, episode.environment, env.name
            )));
        }
        let replay = episode
            .tracks
            .iter()
            .map(|t| resample_track(t, episode.tick_rate))
            .collect::<Result<Vec<_>>>()?;
        let robot = AgentState::new(AgentId::ROBOT, episode.robot_start, Vec2::ZERO, spec.radius)?;
        let pedestrians = pedestrians_at(&replay, 0, episode.pedestrian_radius);
        let mut sim = Simulator {
            state: SimState {
                sim_time: 0.0,
                tick: 0,
                robot,
                pedestrians,
                termination: None,
            },
            episode,
            env,
            spec,
            replay,
            records: Vec::new(),
            events: EventTracker::default(),
        };
        sim.evaluate(None, 0.0);
        Ok(sim)
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn environment(&self) -> &EnvironmentMap {
        &self.env
    }

    pub fn spec(&self) -> &RobotSpec {
        &self.spec
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn is_terminated(&self) -> bool {
        self.state.is_terminated()
    }

    pub fn dt(&self) -> f64 {
        self.episode.dt()
    }

    /// Steps the robot with `command`, moves pedestrians to the next tick,
    /// records contacts and decides termination.
    pub fn advance_tick(&mut self, command: VelocityCommand) -> Result<&SimState> {
        self.advance_tick_timed(command, 0.0)
    }

    pub fn advance_tick_timed(
        &mut self,
        command: VelocityCommand,
        planning_wait_s: f64,
    ) -> Result<&SimState> {
        if self.is_terminated() {
            return Err(Error::AlreadyTerminated(self.episode.name.clone()));
        }
        let dt = self.dt();
        let tick = self.state.tick + 1;
        self.state.robot = apply_command(&self.state.robot, &command, dt, &self.spec);
        self.state.tick = tick;
        self.state.sim_time = tick as f64 / self.episode.tick_rate;
        self.state.pedestrians = pedestrians_at(&self.replay, tick, self.episode.pedestrian_radius);
        self.evaluate(Some(command), planning_wait_s);
        Ok(&self.state)
    }

    fn evaluate(&mut self, command: Option<VelocityCommand>, planning_wait_s: f64) {
        let contacts = detect_collisions(&self.state.robot, &self.state.pedestrians, &self.env);
        self.events.observe(self.state.tick, &contacts);
        let peds = self.events.pedestrian_events() as u32;
        let kind = if contacts.contains(&Contact::Environment) {
            Some(TerminationKind::EnvironmentCollision)
        } else if distance_to_goal(&self.state.robot, self.episode.goal) <= self.episode.goal_radius
        {
            Some(TerminationKind::Completion)
        } else if self.state.tick > self.episode.budget_ticks() {
            Some(TerminationKind::Timeout)
        } else {
            None
        };
        self.state.termination = kind.map(|k| Termination::new(k, peds));
        self.records.push(TickRecord {
            state: self.state.clone(),
            command,
            contacts,
            planning_wait_s,
        });
    }

    /// Closes the episode after the client went away: classified as a
    /// timeout with the transport failure flag set.
    pub fn abort_transport(&mut self) {
        if self.is_terminated() {
            return;
        }
        let mut t = Termination::new(
            TerminationKind::Timeout,
            self.events.pedestrian_events() as u32,
        );
        t.transport_failure = true;
        self.state.termination = Some(t);
        if let Some(last) = self.records.last_mut() {
            last.state.termination = Some(t);
        }
    }

    pub fn pedestrian_collisions(&self) -> u32 {
        self.events
            .events()
            .iter()
            .filter(|e| e.kind == CollisionKind::Pedestrian)
            .count() as u32
    }

    /// Finishes the run. Fails if the episode has not terminated.
    pub fn into_log(self) -> Result<EpisodeLog> {
        let termination = self.state.termination.ok_or_else(|| {
            Error::invalid(format!(
                "episode `{}` has not terminated",
                self.episode.name
            ))
        })?;
        let header = LogHeader {
            episode: self.episode.name.clone(),
            environment: self.env.name.clone(),
            environment_digest: self.env.digest(),
            tick_rate: self.episode.tick_rate,
            time_budget: self.episode.time_budget,
            robot_start: self.episode.robot_start,
            goal: self.episode.goal,
            goal_radius: self.episode.goal_radius,
            pedestrian_radius: self.episode.pedestrian_radius,
            robot: self.spec,
        };
        let events = self.events.into_events();
        let totals = LogTotals {
            ticks: self.state.tick,
            sim_time: self.state.sim_time,
            pedestrian_collisions: termination.pedestrian_collisions,
        };
        Ok(EpisodeLog {
            header,
            records: self.records,
            summary: LogSummary {
                termination,
                events,
                totals,
            },
        })
    }
}

fn pedestrians_at(replay: &[ReplayTrack], tick: u64, radius: f64) -> Vec<AgentState> {
    replay
        .iter()
        .filter_map(|t| t.state_at(tick, radius))
        .collect()
}
