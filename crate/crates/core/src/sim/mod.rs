//! The tick loop: pedestrian replay, robot commands, collisions and
//! episode termination, under synchronous or asynchronous flow control.

mod collision;
mod engine;
mod log;
mod runner;

pub use collision::{
    coalesce_collision_events, detect_collisions, CollisionEvent, CollisionKind, Contact,
    EventTracker,
};
pub use engine::{SimState, Simulator, Termination, TerminationKind};
pub use log::{EpisodeLog, LogHeader, LogSummary, LogTotals, TickRecord};
pub use runner::{
    run_episode_asynchronous, run_episode_synchronous, AsyncEpisode, AsyncLink, ClientError,
    Mailbox, StateBoard, SyncClient,
};
