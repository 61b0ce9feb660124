use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::EnvironmentMap;
use crate::metrics::EpisodeMetrics;
use crate::model::AgentState;
use crate::planners::EpisodeBrief;
use crate::robot::{position_target_to_velocity, ControlMode, VelocityCommand};
use crate::sim::{SimState, Termination};

pub const PROTOCOL_VERSION: u32 = 1;

/// Synchronous: the simulator waits for one act per tick. Asynchronous:
/// the simulator ticks on the wall clock and uses the latest act.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    #[default]
    Sync,
    Async,
}

impl std::str::FromStr for FlowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" | "synchronous" => Ok(FlowMode::Sync),
            "async" | "asynchronous" => Ok(FlowMode::Async),
            _ => Err(Error::invalid(format!("unknown mode `{s}` (sync, async)"))),
        }
    }
}

/// Command as sent by a client. Position targets become the holonomic
/// velocity that reaches them in one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActCommand {
    Unicycle { v: f64, omega: f64 },
    Holonomic { vx: f64, vy: f64 },
    Position { x: f64, y: f64 },
}

impl ActCommand {
    pub fn to_velocity(
        &self,
        robot: &AgentState,
        mode: ControlMode,
        dt: f64,
    ) -> Result<VelocityCommand> {
        let cmd = match *self {
            ActCommand::Unicycle { v, omega } => VelocityCommand::Unicycle { v, omega },
            ActCommand::Holonomic { vx, vy } => VelocityCommand::Holonomic { vx, vy },
            ActCommand::Position { x, y } => {
                position_target_to_velocity(robot, Vec2::new(x, y), dt)
            }
        };
        if cmd.mode() != mode {
            return Err(Error::Protocol(format!(
                "{} command not accepted: robot runs in {} mode",
                self.kind(),
                match mode {
                    ControlMode::Unicycle => "unicycle",
                    ControlMode::Holonomic => "holonomic",
                }
            )));
        }
        Ok(cmd)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ActCommand::Unicycle { .. } => "unicycle",
            ActCommand::Holonomic { .. } => "holonomic",
            ActCommand::Position { .. } => "position",
        }
    }
}

impl From<VelocityCommand> for ActCommand {
    fn from(cmd: VelocityCommand) -> Self {
        match cmd {
            VelocityCommand::Unicycle { v, omega } => ActCommand::Unicycle { v, omega },
            VelocityCommand::Holonomic { vx, vy } => ActCommand::Holonomic { vx, vy },
        }
    }
}

/// Occupancy grid as text rows, top row first, `#` for obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPayload {
    pub name: String,
    pub resolution: f64,
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    pub rows: Vec<String>,
    pub digest: String,
}

impl MapPayload {
    pub fn new(env: &EnvironmentMap) -> Self {
        MapPayload {
            name: env.name.clone(),
            resolution: env.resolution,
            origin: env.origin,
            width: env.width(),
            height: env.height(),
            rows: env.to_ascii_rows(),
            digest: env.digest(),
        }
    }

    /// Rebuilds the grid and checks it against the digest.
    pub fn to_map(&self) -> Result<EnvironmentMap> {
        let rows: Vec<&str> = self.rows.iter().map(String::as_str).collect();
        let env = EnvironmentMap::from_ascii(&self.name, self.resolution, self.origin, &rows)?;
        if env.width() != self.width || env.height() != self.height {
            return Err(Error::Protocol(format!(
                "map `{}` is {}x{}, header says {}x{}",
                self.name,
                env.width(),
                env.height(),
                self.width,
                self.height
            )));
        }
        if env.digest() != self.digest {
            return Err(Error::Protocol(format!(
                "map `{}` digest mismatch",
                self.name
            )));
        }
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEnd {
    pub episode: String,
    pub termination: Termination,
    pub metrics: EpisodeMetrics,
}

/// One line on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        version: u32,
    },
    EpisodeList {
        episodes: Vec<EpisodeBrief>,
    },
    EpisodeStart {
        brief: EpisodeBrief,
        map_digest: String,
        mode: FlowMode,
    },
    GetMap,
    Map {
        map: MapPayload,
    },
    Sense,
    WorldState {
        episode: String,
        state: SimState,
    },
    Act {
        command: ActCommand,
        /// Acts naming another episode are dropped (late asynchronous acts).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        episode: Option<String>,
    },
    EpisodeEnd(EpisodeEnd),
    Bye,
    Error {
        reason: String,
    },
}

impl Message {
    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::EpisodeList { .. } => "episode_list",
            Message::EpisodeStart { .. } => "episode_start",
            Message::GetMap => "get_map",
            Message::Map { .. } => "map",
            Message::Sense => "sense",
            Message::WorldState { .. } => "world_state",
            Message::Act { .. } => "act",
            Message::EpisodeEnd(_) => "episode_end",
            Message::Bye => "bye",
            Message::Error { .. } => "error",
        }
    }

    pub fn error(reason: impl Into<String>) -> Self {
        Message::Error {
            reason: reason.into(),
        }
    }
}

/// One JSON document followed by a newline.
pub fn encode(message: &Message) -> Result<String> {
    let mut line = serde_json::to_string(message)?;
    line.push('\n');
    Ok(line)
}

/// Parses one line (trailing newline optional).
pub fn decode(line: &str) -> Result<Message> {
    let text = line.strip_suffix('\n').unwrap_or(line);
    let text = text.strip_suffix('\r').unwrap_or(text);
    if text.contains('\n') {
        return Err(Error::Protocol("message spans more than one line".into()));
    }
    let message: Message = serde_json::from_str(text).map_err(|e| {
        Error::Protocol(format!(
            "malformed message at offset {}: {e}",
            offset_of(text, e.line(), e.column())
        ))
    })?;
    if let Message::Hello { version } = message {
        if version != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!(
                "version mismatch: peer speaks {version}, this side speaks {PROTOCOL_VERSION}"
            )));
        }
    }
    Ok(message)
}

/// Byte offset from serde_json's 1-based line / column.
fn offset_of(text: &str, line: usize, column: usize) -> usize {
    if line <= 1 {
        return column;
    }
    text.split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum::<usize>()
        + column
}
