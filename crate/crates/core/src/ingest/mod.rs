//! Dataset ingestion: track files, environment rasters, episode manifests
//! and random episode sampling.

mod manifest;
mod raster;
mod sampler;
mod tracks;

pub use manifest::{
    episode_from_manifest, load_sections, EpisodeLibrary, EpisodeManifest, TrackCache,
};
pub use raster::{
    load_environment, load_environment_raster, map_from_image, map_to_image, save_environment,
    EnvironmentManifest, FREE_THRESHOLD,
};
pub use sampler::{sample_random_episodes, SamplerConfig, DEFAULT_MAX_ATTEMPTS, REACH_SECONDS};
pub use tracks::{parse_track_file, resample_track, RawRow, RawTrackFile, ReplayTrack};
