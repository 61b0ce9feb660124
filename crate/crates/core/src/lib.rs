//! Replay-based social navigation benchmark.
//!
//! Recorded pedestrian trajectories are replayed around a simulated robot
//! whose commands come from a planner, either in-process or over a
//! newline-delimited JSON socket protocol. Episode logs feed a metrics
//! suite, frame rendering and summary reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod map;
pub mod metrics;
pub mod model;
pub mod planners;
pub mod protocol;
pub mod render;
pub mod report;
pub mod robot;
pub mod sim;

pub use error::{Error, Result};
