use std::io::Write;
use std::time::Duration;

use super::message::{decode, encode, ActCommand, EpisodeEnd, FlowMode, Message, PROTOCOL_VERSION};
use super::transport::{Endpoint, MessageReader, RecvError, Stream};
use crate::error::{Error, Result};
use crate::map::EnvironmentMap;
use crate::planners::{EpisodeBrief, Planner};
use crate::sim::SimState;

/// Direction of a transcript line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptLine {
    pub direction: Direction,
    pub line: String,
}

/// Reply to a `sense` request.
#[derive(Debug, Clone, PartialEq)]
pub enum Sensed {
    State(SimState),
    Ended(EpisodeEnd),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartedEpisode {
    pub brief: EpisodeBrief,
    pub map_digest: String,
    pub mode: FlowMode,
}

/// Blocking client for the benchmark server.
pub struct Client {
    writer: Stream,
    reader: MessageReader,
    timeout: Option<Duration>,
    episodes: Vec<EpisodeBrief>,
    transcript: Option<Vec<TranscriptLine>>,
    map_cache: Option<EnvironmentMap>,
    finished: bool,
}

impl Client {
    /// Connects, exchanges `hello` and reads the episode list.
    pub fn connect(endpoint: &Endpoint, timeout: Option<Duration>) -> Result<Client> {
        Self::connect_with(endpoint, timeout, false)
    }

    /// Like [`Client::connect`] but keeps every raw line exchanged.
    pub fn connect_recording(endpoint: &Endpoint, timeout: Option<Duration>) -> Result<Client> {
        Self::connect_with(endpoint, timeout, true)
    }

    fn connect_with(
        endpoint: &Endpoint,
        timeout: Option<Duration>,
        record: bool,
    ) -> Result<Client> {
        let stream = Stream::connect(endpoint)?;
        let writer = stream.try_clone()?;
        let mut client = Client {
            writer,
            reader: MessageReader::new(stream),
            timeout,
            episodes: Vec::new(),
            transcript: record.then(Vec::new),
            map_cache: None,
            finished: false,
        };
        client.send(&Message::Hello {
            version: PROTOCOL_VERSION,
        })?;
        match client.recv()? {
            Message::Hello { .. } => {}
            other => return Err(unexpected("hello", &other)),
        }
        match client.recv()? {
            Message::EpisodeList { episodes } => client.episodes = episodes,
            other => return Err(unexpected("episode_list", &other)),
        }
        Ok(client)
    }

    pub fn episodes(&self) -> &[EpisodeBrief] {
        &self.episodes
    }

    pub fn transcript(&self) -> Option<&[TranscriptLine]> {
        self.transcript.as_deref()
    }

    pub fn send(&mut self, message: &Message) -> Result<()> {
        let line = encode(message)?;
        self.writer
            .write_all(line.as_bytes())
            .map_err(Error::Transport)?;
        self.writer.flush().map_err(Error::Transport)?;
        if let Some(t) = &mut self.transcript {
            t.push(TranscriptLine {
                direction: Direction::Sent,
                line: line.trim_end().to_string(),
            });
        }
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Message> {
        let line = self.reader.recv_line(self.timeout).map_err(|e| match e {
            RecvError::Malformed(e) => e,
            RecvError::Io(e) => Error::Transport(e),
            other => Error::Protocol(other.to_string()),
        })?;
        if let Some(t) = &mut self.transcript {
            t.push(TranscriptLine {
                direction: Direction::Received,
                line: line.clone(),
            });
        }
        let message = decode(&line)?;
        if matches!(message, Message::Bye) {
            self.finished = true;
        }
        Ok(message)
    }

    /// Waits for the next `episode_start`; `None` once the server says `bye`.
    pub fn next_episode(&mut self) -> Result<Option<StartedEpisode>> {
        if self.finished {
            return Ok(None);
        }
        loop {
            match self.recv()? {
                Message::EpisodeStart {
                    brief,
                    map_digest,
                    mode,
                } => {
                    return Ok(Some(StartedEpisode {
                        brief,
                        map_digest,
                        mode,
                    }));
                }
                Message::Bye => return Ok(None),
                // stale replies from the previous episode
                Message::WorldState { .. } | Message::Error { .. } | Message::EpisodeEnd(_) => {
                    continue
                }
                other => return Err(unexpected("episode_start", &other)),
            }
        }
    }

    pub fn get_map(&mut self) -> Result<EnvironmentMap> {
        self.send(&Message::GetMap)?;
        loop {
            match self.recv()? {
                Message::Map { map } => return map.to_map(),
                Message::Error { reason } => return Err(Error::Protocol(reason)),
                Message::WorldState { .. } => continue,
                other => return Err(unexpected("map", &other)),
            }
        }
    }

    /// Map for `started`, fetched only when the digest changes.
    pub fn map_for(&mut self, started: &StartedEpisode) -> Result<EnvironmentMap> {
        if let Some(m) = &self.map_cache {
            if m.digest() == started.map_digest {
                return Ok(m.clone());
            }
        }
        let map = self.get_map()?;
        if map.digest() != started.map_digest {
            return Err(Error::Protocol(
                "map digest differs from episode_start".into(),
            ));
        }
        self.map_cache = Some(map.clone());
        Ok(map)
    }

    /// Synchronous `sense` request.
    pub fn sense(&mut self) -> Result<Sensed> {
        self.send(&Message::Sense)?;
        match self.recv()? {
            Message::WorldState { state, .. } => Ok(Sensed::State(state)),
            Message::EpisodeEnd(end) => Ok(Sensed::Ended(end)),
            Message::Error { reason } => Err(Error::Protocol(reason)),
            other => Err(unexpected("world_state", &other)),
        }
    }

    pub fn act(&mut self, command: ActCommand, episode: Option<&str>) -> Result<()> {
        self.send(&Message::Act {
            command,
            episode: episode.map(str::to_string),
        })
    }

    /// Drives `planner` through every episode the server offers and
    /// returns the server's end-of-episode reports.
    pub fn run_planner(&mut self, planner: &mut dyn Planner) -> Result<Vec<EpisodeEnd>> {
        let mut ends = Vec::new();
        while let Some(started) = self.next_episode()? {
            let map = self.map_for(&started)?;
            planner.reset(&started.brief, &map);
            let end = match started.mode {
                FlowMode::Sync => self.run_sync_episode(planner)?,
                FlowMode::Async => self.run_async_episode(planner, &started.brief.episode)?,
            };
            ends.push(end);
        }
        Ok(ends)
    }

    fn run_sync_episode(&mut self, planner: &mut dyn Planner) -> Result<EpisodeEnd> {
        loop {
            match self.sense()? {
                Sensed::State(state) => {
                    let cmd = planner.plan(&state);
                    self.act(cmd.into(), None)?;
                }
                Sensed::Ended(end) => return Ok(end),
            }
        }
    }

    fn run_async_episode(
        &mut self,
        planner: &mut dyn Planner,
        episode: &str,
    ) -> Result<EpisodeEnd> {
        // The server may finish the episode and close while requests are
        // still in flight, so send failures are held until the end report
        // has been read.
        let mut send_failed = None;
        let mut last_tick = None;
        let request = |client: &mut Client, m: &Message, failed: &mut Option<Error>| {
            if failed.is_none() {
                if let Err(e) = client.send(m) {
                    *failed = Some(e);
                }
            }
        };
        request(self, &Message::Sense, &mut send_failed);
        loop {
            let msg = match self.recv() {
                Ok(m) => m,
                Err(e) => return Err(send_failed.unwrap_or(e)),
            };
            match msg {
                Message::WorldState {
                    episode: name,
                    state,
                } if name == episode => {
                    if last_tick != Some(state.tick) {
                        last_tick = Some(state.tick);
                        let cmd = planner.plan(&state);
                        request(
                            self,
                            &Message::Act {
                                command: cmd.into(),
                                episode: Some(episode.to_string()),
                            },
                            &mut send_failed,
                        );
                    } else {
                        std::thread::sleep(Duration::from_micros(500));
                    }
                    request(self, &Message::Sense, &mut send_failed);
                }
                Message::WorldState { .. } | Message::Error { .. } => {
                    std::thread::sleep(Duration::from_millis(1));
                    request(self, &Message::Sense, &mut send_failed);
                }
                Message::EpisodeEnd(end) => return Ok(end),
                Message::Map { .. } => continue,
                other => return Err(unexpected("world_state", &other)),
            }
        }
    }

    /// Says `bye` and closes the connection.
    pub fn close(mut self) -> Result<()> {
        if !self.finished {
            let _ = self.send(&Message::Bye);
        }
        let _ = self.writer.shutdown();
        Ok(())
    }
}

fn unexpected(expected: &str, got: &Message) -> Error {
    match got {
        Message::Error { reason } => Error::Protocol(format!(
            "server error while waiting for {expected}: {reason}"
        )),
        other => Error::Protocol(format!("expected {expected}, got {}", other.type_name())),
    }
}
