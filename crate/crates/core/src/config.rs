//! Benchmark configuration document (TOML).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::planners::{PlannerConfig, PlannerKind};
use crate::protocol::{FlowMode, DEFAULT_BIND};
use crate::render::FrameSpec;
use crate::robot::RobotSpec;

/// Which client drives the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerChoice {
    Bundled(PlannerKind),
    /// Wait for a client to connect on the bind address.
    External,
}

impl fmt::Display for PlannerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlannerChoice::Bundled(k) => k.fmt(f),
            PlannerChoice::External => f.write_str("external"),
        }
    }
}

impl FromStr for PlannerChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "external" {
            return Ok(PlannerChoice::External);
        }
        s.parse().map(PlannerChoice::Bundled).map_err(|_| {
            Error::invalid(format!(
                "unknown planner `{s}` (social-forces, orca, baseline, external)"
            ))
        })
    }
}

impl Serialize for PlannerChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PlannerChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Episode library directory.
    pub episodes: PathBuf,
    pub planner: PlannerChoice,
    pub mode: FlowMode,
    /// Overrides every episode's tick rate when set, Hz.
    pub tick_rate: Option<f64>,
    /// Asynchronous ticks per wall-clock second; defaults to the tick rate.
    pub wall_rate: Option<f64>,
    pub bind: String,
    pub out: PathBuf,
    pub seed: u64,
    /// Seconds to wait for an external client to connect.
    pub accept_timeout: f64,
    /// Seconds the server waits for any single client message.
    pub receive_timeout: f64,
    /// Write PNG frames for every tick.
    pub frames: bool,
    pub robot: RobotSpec,
    pub planners: PlannerConfig,
    pub render: FrameSpec,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            episodes: PathBuf::from("data/crossing"),
            planner: PlannerChoice::Bundled(PlannerKind::SocialForces),
            mode: FlowMode::Sync,
            tick_rate: None,
            wall_rate: None,
            bind: DEFAULT_BIND.to_string(),
            out: PathBuf::from("runs/latest"),
            seed: 0,
            accept_timeout: 30.0,
            receive_timeout: 10.0,
            frames: false,
            robot: RobotSpec::default(),
            planners: PlannerConfig::default(),
            render: FrameSpec::default(),
        }
    }
}

fn duration(secs: f64, what: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| {
            Error::invalid(format!(
                "{what} must be a positive number of seconds, got {secs}"
            ))
        })
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: BenchmarkConfig =
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            if config.episodes.is_relative() {
                config.episodes = base.join(&config.episodes);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.planners.validate()?;
        if let Some(r) = self.tick_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("tick rate must be > 0, got {r}")));
            }
        }
        if let Some(r) = self.wall_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("wall rate must be > 0, got {r}")));
            }
        }
        if !(self.render.pixels_per_meter > 0.0) {
            return Err(Error::invalid("render.pixels_per_meter must be > 0"));
        }
        self.accept_timeout()?;
        self.receive_timeout()?;
        Ok(())
    }

    pub fn accept_timeout(&self) -> Result<Duration> {
        duration(self.accept_timeout, "accept_timeout")
    }

    pub fn receive_timeout(&self) -> Result<Duration> {
        duration(self.receive_timeout, "receive_timeout")
    }
}
