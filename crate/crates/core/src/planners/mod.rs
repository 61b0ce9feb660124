//! Reference navigation clients: Social Forces, ORCA with the robot taking
//! full responsibility, a grid sub-goal planner and a pedestrian-unaware
//! pure-pursuit baseline.

mod baseline;
mod lp;
mod meta_planner;
mod orca;
mod social_forces;

pub use baseline::{baseline_step, BaselineParams};
pub use lp::{solve_velocity_lp, HalfPlane};
pub use meta_planner::{meta_planner_waypoint, MetaPlanner, MetaPlannerParams, NavigationField};
pub use orca::{orca_halfplane, orca_velocity, OrcaParams};
pub use social_forces::{repulsion, social_force, social_forces_step, SocialForcesParams};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::EnvironmentMap;
use crate::model::{Episode, Pose2D};
use crate::robot::{ControlMode, RobotSpec, VelocityCommand};
use crate::sim::{run_episode_synchronous, ClientError, EpisodeLog, SimState, SyncClient};

/// What a client learns about an episode before the first tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBrief {
    pub episode: String,
    pub environment: String,
    pub robot_start: Pose2D,
    pub goal: Vec2,
    pub goal_radius: f64,
    pub time_budget: f64,
    pub tick_rate: f64,
    pub robot: RobotSpec,
}

impl EpisodeBrief {
    pub fn new(episode: &Episode, robot: &RobotSpec) -> Self {
        EpisodeBrief {
            episode: episode.name.clone(),
            environment: episode.environment.clone(),
            robot_start: episode.robot_start,
            goal: episode.goal,
            goal_radius: episode.goal_radius,
            time_budget: episode.time_budget,
            tick_rate: episode.tick_rate,
            robot: *robot,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }
}

/// A navigation policy driven tick by tick.
pub trait Planner: Send {
    fn name(&self) -> &'static str;

    /// Command form the planner emits.
    fn control_mode(&self) -> ControlMode;

    fn reset(&mut self, brief: &EpisodeBrief, map: &EnvironmentMap);

    fn plan(&mut self, state: &SimState) -> VelocityCommand;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    SocialForces,
    Orca,
    Baseline,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [
        PlannerKind::SocialForces,
        PlannerKind::Orca,
        PlannerKind::Baseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::SocialForces => "social-forces",
            PlannerKind::Orca => "orca",
            PlannerKind::Baseline => "baseline",
        }
    }

    pub fn build(&self, config: &PlannerConfig) -> Box<dyn Planner> {
        match self {
            PlannerKind::SocialForces => Box::new(SocialForcesPlanner::new(config.social_forces)),
            PlannerKind::Orca => Box::new(OrcaPlanner::new(config.orca, config.meta_planner)),
            PlannerKind::Baseline => {
                Box::new(BaselinePlanner::new(config.baseline, config.meta_planner))
            }
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown planner `{s}` (social-forces, orca, baseline)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub social_forces: SocialForcesParams,
    pub orca: OrcaParams,
    pub meta_planner: MetaPlannerParams,
    pub baseline: BaselineParams,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.social_forces.validate()?;
        self.orca.validate()?;
        self.meta_planner.validate()?;
        self.baseline.validate()
    }
}

/// Obstacle range considered by the reactive planners, meters.
const OBSTACLE_RANGE: f64 = 1.0;
/// Obstacle points handed to ORCA per tick.
const ORCA_OBSTACLE_POINTS: usize = 8;

struct Session {
    brief: EpisodeBrief,
    map: EnvironmentMap,
}

/// Goal attraction with pedestrian and obstacle repulsion; heads straight
/// for the goal without a sub-goal planner.
pub struct SocialForcesPlanner {
    params: SocialForcesParams,
    session: Option<Session>,
}

impl SocialForcesPlanner {
    pub fn new(params: SocialForcesParams) -> Self {
        SocialForcesPlanner {
            params,
            session: None,
        }
    }
}

impl Planner for SocialForcesPlanner {
    fn name(&self) -> &'static str {
        "social-forces"
    }

    fn control_mode(&self) -> ControlMode {
        ControlMode::Holonomic
    }

    fn reset(&mut self, brief: &EpisodeBrief, map: &EnvironmentMap) {
        self.session = Some(Session {
            brief: brief.clone(),
            map: map.clone(),
        });
    }

    fn plan(&mut self, state: &SimState) -> VelocityCommand {
        let Some(s) = &self.session else {
            return VelocityCommand::zero(ControlMode::Holonomic);
        };
        let robot = &state.robot;
        let obstacle: Vec<Vec2> = s
            .map
            .nearest_obstacle(robot.position(), OBSTACLE_RANGE)
            .map(|(_, q)| q)
            .into_iter()
            .collect();
        social_forces_step(
            robot,
            &state.pedestrians,
            &obstacle,
            s.brief.goal,
            s.brief.robot.v_max,
            &self.params,
            s.brief.dt(),
        )
    }
}

/// ORCA toward sub-goals from the meta-planner.
pub struct OrcaPlanner {
    params: OrcaParams,
    meta: MetaPlanner,
    session: Option<Session>,
}

impl OrcaPlanner {
    pub fn new(params: OrcaParams, meta: MetaPlannerParams) -> Self {
        OrcaPlanner {
            params,
            meta: MetaPlanner::new(meta),
            session: None,
        }
    }
}

impl Planner for OrcaPlanner {
    fn name(&self) -> &'static str {
        "orca"
    }

    fn control_mode(&self) -> ControlMode {
        ControlMode::Holonomic
    }

    fn reset(&mut self, brief: &EpisodeBrief, map: &EnvironmentMap) {
        self.meta.reset(map, brief.goal, brief.robot.radius);
        self.session = Some(Session {
            brief: brief.clone(),
            map: map.clone(),
        });
    }

    fn plan(&mut self, state: &SimState) -> VelocityCommand {
        let Some(s) = &self.session else {
            return VelocityCommand::zero(ControlMode::Holonomic);
        };
        let robot = &state.robot;
        let p = robot.position();
        let v_max = s.brief.robot.v_max;
        let waypoint = self.meta.waypoint(&s.map, p, v_max);
        let dt = s.brief.dt();
        // do not overshoot the final waypoint within one tick
        let to_wp = waypoint - p;
        let preferred = to_wp.normalize_or_zero() * v_max.min(to_wp.length() / dt);
        let mut obstacles = s.map.obstacle_points_near(p, OBSTACLE_RANGE);
        obstacles.sort_by(|a, b| a.distance(p).total_cmp(&b.distance(p)));
        obstacles.truncate(ORCA_OBSTACLE_POINTS);
        let v = orca_velocity(
            robot,
            &state.pedestrians,
            &obstacles,
            preferred,
            v_max,
            &self.params,
            dt,
        );
        VelocityCommand::Holonomic { vx: v.x, vy: v.y }
    }
}

/// Pure pursuit along meta-planner sub-goals; ignores pedestrians.
pub struct BaselinePlanner {
    params: BaselineParams,
    meta: MetaPlanner,
    session: Option<Session>,
}

impl BaselinePlanner {
    pub fn new(params: BaselineParams, meta: MetaPlannerParams) -> Self {
        BaselinePlanner {
            params,
            meta: MetaPlanner::new(meta),
            session: None,
        }
    }
}

impl Planner for BaselinePlanner {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn control_mode(&self) -> ControlMode {
        ControlMode::Unicycle
    }

    fn reset(&mut self, brief: &EpisodeBrief, map: &EnvironmentMap) {
        self.meta.reset(map, brief.goal, brief.robot.radius);
        self.session = Some(Session {
            brief: brief.clone(),
            map: map.clone(),
        });
    }

    fn plan(&mut self, state: &SimState) -> VelocityCommand {
        let Some(s) = &self.session else {
            return VelocityCommand::zero(ControlMode::Unicycle);
        };
        let waypoint = self
            .meta
            .waypoint(&s.map, state.robot.position(), s.brief.robot.v_max);
        baseline_step(&state.robot, waypoint, &s.brief.robot, &self.params)
    }
}

/// Drives a [`Planner`] as an in-process synchronous client.
pub struct PlannerClient<'a>(pub &'a mut dyn Planner);

impl SyncClient for PlannerClient<'_> {
    fn act(&mut self, state: &SimState) -> std::result::Result<VelocityCommand, ClientError> {
        Ok(self.0.plan(state))
    }
}

/// Runs one episode in-process with `planner`, switching the robot to the
/// planner's control mode.
pub fn run_planner_episode(
    episode: &Episode,
    env: &EnvironmentMap,
    spec: &RobotSpec,
    planner: &mut dyn Planner,
) -> Result<EpisodeLog> {
    let spec = spec.with_mode(planner.control_mode());
    planner.reset(&EpisodeBrief::new(episode, &spec), env);
    run_episode_synchronous(episode, env, &spec, &mut PlannerClient(planner))
}
