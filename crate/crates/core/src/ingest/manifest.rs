//! Episode manifests and on-disk episode libraries.
//!
//! A library is a directory laid out as
//!
//! ```text
//! <root>/environments/<name>.json   sidecar manifest + graymap
//! <root>/episodes/*.json            episode manifests
//! <root>/tracks/...                 track files, referenced relative to <root>
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::raster::load_environment;
use super::tracks::{parse_track_file, RawTrackFile};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::EnvironmentMap;
use crate::model::{
    AgentId, Episode, PedestrianTrack, Pose2D, TrackSection, DEFAULT_GOAL_RADIUS,
    DEFAULT_PEDESTRIAN_RADIUS, DEFAULT_TICK_RATE, DEFAULT_TIME_BUDGET,
};

fn default_goal_radius() -> f64 {
    DEFAULT_GOAL_RADIUS
}
fn default_budget() -> f64 {
    DEFAULT_TIME_BUDGET
}
fn default_tick_rate() -> f64 {
    DEFAULT_TICK_RATE
}
fn default_ped_radius() -> f64 {
    DEFAULT_PEDESTRIAN_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub name: String,
    pub environment: String,
    pub robot_start: Pose2D,
    pub goal: Vec2,
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
    #[serde(default = "default_budget")]
    pub time_budget: f64,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    #[serde(default = "default_ped_radius")]
    pub pedestrian_radius: f64,
    #[serde(default)]
    pub pedestrians: Vec<TrackSection>,
}

impl EpisodeManifest {
    pub fn from_episode(ep: &Episode) -> Self {
        EpisodeManifest {
            name: ep.name.clone(),
            environment: ep.environment.clone(),
            robot_start: ep.robot_start,
            goal: ep.goal,
            goal_radius: ep.goal_radius,
            time_budget: ep.time_budget,
            tick_rate: ep.tick_rate,
            pedestrian_radius: ep.pedestrian_radius,
            pedestrians: ep.sections.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Caches parsed track files by (path, frame rate).
#[derive(Default)]
pub struct TrackCache {
    files: HashMap<(PathBuf, u64), RawTrackFile>,
}

impl TrackCache {
    pub fn get(&mut self, path: &Path, frame_rate: f64) -> Result<&RawTrackFile> {
        let key = (path.to_path_buf(), frame_rate.to_bits());
        if !self.files.contains_key(&key) {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let parsed = parse_track_file(&text, frame_rate).map_err(|e| Error::Manifest {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            self.files.insert(key.clone(), parsed);
        }
        Ok(&self.files[&key])
    }
}

/// Builds the pedestrian tracks of an episode from its sections. Ids from
/// the n-th section (n > 0) are offset by `n * 1_000_000` so that tracks
/// from different files cannot collide.
pub fn load_sections(
    sections: &[TrackSection],
    root: &Path,
    cache: &mut TrackCache,
) -> Result<Vec<PedestrianTrack>> {
    let mut tracks = Vec::new();
    for (n, section) in sections.iter().enumerate() {
        if !(section.end_time > section.start_time) {
            return Err(Error::invalid(format!(
                "section of {}: end time {} must exceed start time {}",
                section.track_file, section.end_time, section.start_time
            )));
        }
        let file = cache.get(&root.join(&section.track_file), section.frame_rate)?;
        for (id, samples) in file.window(section.start_time, section.end_time) {
            tracks.push(PedestrianTrack::new(
                AgentId(id + n as i64 * 1_000_000),
                samples,
            )?);
        }
    }
    Ok(tracks)
}

pub fn episode_from_manifest(
    manifest: &EpisodeManifest,
    root: &Path,
    cache: &mut TrackCache,
) -> Result<Episode> {
    let episode = Episode {
        name: manifest.name.clone(),
        environment: manifest.environment.clone(),
        robot_start: manifest.robot_start,
        goal: manifest.goal,
        goal_radius: manifest.goal_radius,
        tracks: load_sections(&manifest.pedestrians, root, cache)?,
        time_budget: manifest.time_budget,
        tick_rate: manifest.tick_rate,
        pedestrian_radius: manifest.pedestrian_radius,
        sections: manifest.pedestrians.clone(),
    };
    episode.validate()?;
    Ok(episode)
}

/// Named environments plus the episodes that run in them.
#[derive(Debug, Clone, Default)]
pub struct EpisodeLibrary {
    pub root: Option<PathBuf>,
    pub environments: BTreeMap<String, EnvironmentMap>,
    pub episodes: Vec<Episode>,
}

impl EpisodeLibrary {
    pub fn new(environments: Vec<EnvironmentMap>, episodes: Vec<Episode>) -> Result<Self> {
        let lib = EpisodeLibrary {
            root: None,
            environments: environments
                .into_iter()
                .map(|m| (m.name.clone(), m))
                .collect(),
            episodes,
        };
        lib.validate()?;
        Ok(lib)
    }

    pub fn environment(&self, name: &str) -> Option<&EnvironmentMap> {
        self.environments.get(name)
    }

    pub fn environment_for(&self, episode: &Episode) -> Result<&EnvironmentMap> {
        self.environment(&episode.environment).ok_or_else(|| {
            Error::invalid(format!(
                "episode `{}` references unknown environment `{}`",
                episode.name, episode.environment
            ))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Every episode references a present environment and starts and ends
    /// on traversable cells.
    pub fn validate(&self) -> Result<()> {
        for ep in &self.episodes {
            ep.validate()?;
            let env = self.environment_for(ep)?;
            if !env.is_free_point(ep.robot_start.position()) {
                return Err(Error::invalid(format!(
                    "episode `{}`: start is not traversable",
                    ep.name
                )));
            }
            if !env.is_free_point(ep.goal) {
                return Err(Error::invalid(format!(
                    "episode `{}`: goal is not traversable",
                    ep.name
                )));
            }
        }
        Ok(())
    }

    /// Loads a library directory. Episodes are sorted by file name.
    pub fn load(root: &Path) -> Result<Self> {
        let mut environments = BTreeMap::new();
        for path in json_files(&root.join("environments"))? {
            let env = load_environment(&path)?;
            environments.insert(env.name.clone(), env);
        }
        let mut cache = TrackCache::default();
        let mut episodes = Vec::new();
        for path in json_files(&root.join("episodes"))? {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let manifest: EpisodeManifest =
                serde_json::from_str(&text).map_err(|e| Error::Manifest {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            episodes.push(episode_from_manifest(&manifest, root, &mut cache)?);
        }
        let lib = EpisodeLibrary {
            root: Some(root.to_path_buf()),
            environments,
            episodes,
        };
        lib.validate()?;
        Ok(lib)
    }
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
