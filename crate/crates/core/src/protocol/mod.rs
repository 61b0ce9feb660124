//! Newline-delimited JSON protocol between the simulator and external planners.

pub mod client;
pub mod message;
pub mod server;
pub mod transport;

pub use client::{Client, Direction, Sensed, StartedEpisode, TranscriptLine};
pub use message::{
    decode, encode, ActCommand, EpisodeEnd, FlowMode, MapPayload, Message, PROTOCOL_VERSION,
};
pub use server::{serve, serve_connection, ServerConfig, DEFAULT_RECEIVE_TIMEOUT};
pub use transport::{Endpoint, Listener, MessageReader, RecvError, Stream, DEFAULT_BIND};
