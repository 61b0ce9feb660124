//! Episode logs: the single source of truth for metrics and rendering.
//!
//! On disk a log is JSON lines: one `header` record, one `tick` record per
//! simulator tick, then one `summary` record. Wall-clock planning waits are
//! kept out of the log so identical runs produce identical bytes; they go
//! to a separate timing file.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::collision::{CollisionEvent, Contact};
use super::engine::{SimState, Termination};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::Pose2D;
use crate::robot::{RobotSpec, VelocityCommand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub episode: String,
    pub environment: String,
    pub environment_digest: String,
    pub tick_rate: f64,
    pub time_budget: f64,
    pub robot_start: Pose2D,
    pub goal: Vec2,
    pub goal_radius: f64,
    pub pedestrian_radius: f64,
    pub robot: RobotSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub state: SimState,
    /// Command that produced this state; `None` for the initial tick.
    pub command: Option<VelocityCommand>,
    pub contacts: Vec<Contact>,
    #[serde(skip)]
    pub planning_wait_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTotals {
    pub ticks: u64,
    pub sim_time: f64,
    pub pedestrian_collisions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub termination: Termination,
    pub events: Vec<CollisionEvent>,
    pub totals: LogTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogLine {
    Header(LogHeader),
    Tick(TickRecord),
    Summary(LogSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TimingFile {
    episode: String,
    planning_wait_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub records: Vec<TickRecord>,
    pub summary: LogSummary,
}

impl EpisodeLog {
    pub fn name(&self) -> &str {
        &self.header.episode
    }

    pub fn termination(&self) -> &Termination {
        &self.summary.termination
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.header.tick_rate
    }

    pub fn final_state(&self) -> &SimState {
        &self
            .records
            .last()
            .expect("log has at least the initial record")
            .state
    }

    pub fn planning_waits(&self) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .filter(|r| r.command.is_some())
            .map(|r| r.planning_wait_s)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let mut push = |line: &LogLine| -> Result<()> {
            out.push_str(&serde_json::to_string(line)?);
            out.push('\n');
            Ok(())
        };
        push(&LogLine::Header(self.header.clone()))?;
        for r in &self.records {
            push(&LogLine::Tick(r.clone()))?;
        }
        push(&LogLine::Summary(self.summary.clone()))?;
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn read(reader: impl std::io::Read) -> Result<Self> {
        let mut header = None;
        let mut records = Vec::new();
        let mut summary = None;
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let misplaced = |what: &str| Error::Parse {
                line: i + 1,
                message: format!("unexpected {what} record"),
            };
            match parsed {
                LogLine::Header(h) if header.is_none() => header = Some(h),
                LogLine::Header(_) => return Err(misplaced("header")),
                LogLine::Tick(t) if header.is_some() && summary.is_none() => records.push(t),
                LogLine::Tick(_) => return Err(misplaced("tick")),
                LogLine::Summary(s) if header.is_some() && summary.is_none() => summary = Some(s),
                LogLine::Summary(_) => return Err(misplaced("summary")),
            }
        }
        let header = header.ok_or_else(|| Error::invalid("log has no header record"))?;
        let summary = summary.ok_or_else(|| Error::invalid("log has no summary record"))?;
        if records.is_empty() {
            return Err(Error::invalid("log has no tick records"));
        }
        for (i, r) in records.iter().enumerate() {
            if r.state.tick != i as u64 {
                return Err(Error::invalid(format!(
                    "tick records not contiguous: position {i} holds tick {}",
                    r.state.tick
                )));
            }
        }
        Ok(EpisodeLog {
            header,
            records,
            summary,
        })
    }

    pub fn timing_json(&self) -> Result<String> {
        let t = TimingFile {
            episode: self.header.episode.clone(),
            planning_wait_s: self.records.iter().map(|r| r.planning_wait_s).collect(),
        };
        Ok(serde_json::to_string(&t)? + "\n")
    }

    /// Restores planning waits from a timing file produced by
    /// [`EpisodeLog::timing_json`].
    pub fn apply_timing(&mut self, text: &str) -> Result<()> {
        let t: TimingFile = serde_json::from_str(text)?;
        if t.planning_wait_s.len() != self.records.len() {
            return Err(Error::invalid("timing file length does not match log"));
        }
        for (r, w) in self.records.iter_mut().zip(t.planning_wait_s) {
            r.planning_wait_s = w;
        }
        Ok(())
    }

    /// Writes `log.jsonl` and `timing.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let log_path = dir.join("log.jsonl");
        let mut f = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(&log_path, e))?;
        let timing_path = dir.join("timing.json");
        fs::write(&timing_path, self.timing_json()?).map_err(|e| Error::io(&timing_path, e))?;
        Ok(())
    }

    /// Loads `log.jsonl` from `dir`, plus `timing.json` when present.
    pub fn load(dir: &Path) -> Result<Self> {
        let log_path = dir.join("log.jsonl");
        let f = fs::File::open(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let mut log = EpisodeLog::read(f)?;
        let timing_path = dir.join("timing.json");
        if timing_path.exists() {
            let text = fs::read_to_string(&timing_path).map_err(|e| Error::io(&timing_path, e))?;
            log.apply_timing(&text)?;
        }
        Ok(log)
    }
}
