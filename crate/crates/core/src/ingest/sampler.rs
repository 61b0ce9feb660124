//! Random start/goal sampling over curated pedestrian sections.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::manifest::EpisodeLibrary;
use crate::error::{Error, Result};
use crate::model::{Episode, Pose2D};

/// Straight-line reach window for sampled pairs, in seconds at `v_max`.
pub const REACH_SECONDS: f64 = 25.0;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub v_max: f64,
    /// Clearance required around sampled start and goal cells.
    pub robot_radius: f64,
    pub max_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            v_max: 1.2,
            robot_radius: 0.23,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

struct EnvCandidates {
    free_cells: Vec<usize>,
    labels: Vec<Option<u32>>,
}

/// Samples `count` episodes. Each picks an environment uniformly among
/// those with curated episodes, reuses one of that environment's
/// pedestrian sections, and draws a start/goal pair that is reachable on
/// the 4-connected grid and within `REACH_SECONDS * v_max` in a straight
/// line. Output depends only on `(library, count, seed, config)`.
pub fn sample_random_episodes(
    library: &EpisodeLibrary,
    count: usize,
    seed: u64,
    config: &SamplerConfig,
) -> Result<Vec<Episode>> {
    if count == 0 {
        return Err(Error::invalid("episode count must be >= 1"));
    }
    if !(config.v_max > 0.0) {
        return Err(Error::invalid("v_max must be > 0"));
    }
    let mut by_env: BTreeMap<&str, Vec<&Episode>> = BTreeMap::new();
    for ep in &library.episodes {
        by_env.entry(ep.environment.as_str()).or_default().push(ep);
    }
    if by_env.is_empty() {
        return Err(Error::invalid(
            "library has no curated episodes to draw pedestrians from",
        ));
    }
    let env_names: Vec<&str> = by_env.keys().copied().collect();
    let mut candidates: BTreeMap<&str, EnvCandidates> = BTreeMap::new();
    for &name in &env_names {
        let env = library
            .environment(name)
            .ok_or_else(|| Error::invalid(format!("unknown environment `{name}`")))?;
        let inflated = env.inflated_free(config.robot_radius);
        let labels = env.components_of(&inflated);
        let free_cells = (0..inflated.len()).filter(|&i| inflated[i]).collect();
        candidates.insert(name, EnvCandidates { free_cells, labels });
    }

    let reach = REACH_SECONDS * config.v_max;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let env_name = env_names[rng.random_range(0..env_names.len())];
        let sources = &by_env[env_name];
        let source = sources[rng.random_range(0..sources.len())];
        let env = &library.environments[env_name];
        let cand = &candidates[env_name];
        if cand.free_cells.is_empty() {
            return Err(Error::SamplerExhausted {
                environment: env_name.to_string(),
                attempts: 0,
            });
        }
        let mut found = None;
        for _ in 0..config.max_attempts {
            let s = cand.free_cells[rng.random_range(0..cand.free_cells.len())];
            let g = cand.free_cells[rng.random_range(0..cand.free_cells.len())];
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let (sp, gp) = (
                env.cell_center(env.cell_at(s)),
                env.cell_center(env.cell_at(g)),
            );
            let dist = sp.distance(gp);
            if dist > reach || dist <= 2.0 * source.goal_radius {
                continue;
            }
            if cand.labels[s] != cand.labels[g] {
                continue;
            }
            found = Some((Pose2D::new(sp.x, sp.y, heading), gp));
            break;
        }
        let (start, goal) = found.ok_or_else(|| Error::SamplerExhausted {
            environment: env_name.to_string(),
            attempts: config.max_attempts,
        })?;
        out.push(Episode {
            name: format!("sample_{i:04}"),
            robot_start: start,
            goal,
            ..source.clone()
        });
    }
    Ok(out)
}
