use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::message::{EpisodeEnd, FlowMode, MapPayload, Message, PROTOCOL_VERSION};
use super::transport::{send, Listener, MessageReader, RecvError, Stream};
use crate::error::{Error, Result};
use crate::ingest::EpisodeLibrary;
use crate::map::EnvironmentMap;
use crate::metrics::EpisodeMetrics;
use crate::model::Episode;
use crate::planners::EpisodeBrief;
use crate::robot::RobotSpec;
use crate::sim::{AsyncEpisode, AsyncLink, EpisodeLog, Simulator};

pub const DEFAULT_RECEIVE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerConfig {
    pub mode: FlowMode,
    pub robot: RobotSpec,
    /// Longest the server waits for any single client message.
    pub receive_timeout: Duration,
    /// Asynchronous ticks per wall-clock second; `None` runs in real time.
    pub wall_rate: Option<f64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            mode: FlowMode::Sync,
            robot: RobotSpec::default(),
            receive_timeout: DEFAULT_RECEIVE_TIMEOUT,
            wall_rate: None,
        }
    }
}

type Writer = Arc<Mutex<Stream>>;

fn emit(writer: &Writer, message: &Message) -> Result<()> {
    send(&mut *writer.lock().unwrap(), message)
}

/// Accepts one client and serves every episode of `library` to it.
pub fn serve(
    library: &EpisodeLibrary,
    listener: &Listener,
    config: &ServerConfig,
    accept_timeout: Duration,
) -> Result<Vec<EpisodeLog>> {
    if library.is_empty() {
        return Err(Error::invalid("episode library is empty"));
    }
    let stream = listener.accept_timeout(accept_timeout)?;
    serve_connection(library, stream, config)
}

/// Runs the full session on an accepted connection: handshake, episode
/// list, every episode in turn, then `bye`. Episodes the client never got
/// to (because it left or stalled) are closed as transport failures so the
/// returned logs always cover the whole library.
pub fn serve_connection(
    library: &EpisodeLibrary,
    stream: Stream,
    config: &ServerConfig,
) -> Result<Vec<EpisodeLog>> {
    if library.is_empty() {
        return Err(Error::invalid("episode library is empty"));
    }
    config.robot.validate()?;
    let writer: Writer = Arc::new(Mutex::new(stream.try_clone()?));
    let mut reader = MessageReader::new(stream);
    handshake(&mut reader, &writer, config)?;

    let briefs: Vec<EpisodeBrief> = library
        .episodes
        .iter()
        .map(|e| EpisodeBrief::new(e, &config.robot))
        .collect();
    emit(&writer, &Message::EpisodeList { episodes: briefs })?;

    match config.mode {
        FlowMode::Sync => {
            let logs = serve_synchronous(library, &mut reader, &writer, config);
            close(&writer);
            logs
        }
        FlowMode::Async => serve_asynchronous(library, reader, &writer, config),
    }
}

fn close(writer: &Writer) {
    let mut w = writer.lock().unwrap();
    let _ = send(&mut *w, &Message::Bye);
    let _ = w.shutdown();
}

fn handshake(reader: &mut MessageReader, writer: &Writer, config: &ServerConfig) -> Result<()> {
    match reader.recv(Some(config.receive_timeout)) {
        Ok(Message::Hello { .. }) => emit(
            writer,
            &Message::Hello {
                version: PROTOCOL_VERSION,
            },
        ),
        Ok(other) => {
            let reason = format!("expected hello, got {}", other.type_name());
            let _ = emit(writer, &Message::error(&reason));
            Err(Error::Protocol(reason))
        }
        Err(RecvError::Malformed(e)) => {
            let _ = emit(writer, &Message::error(reason(&e)));
            Err(e)
        }
        Err(e) => Err(Error::Protocol(format!("handshake failed: {e}"))),
    }
}

fn start_message(episode: &Episode, env: &EnvironmentMap, config: &ServerConfig) -> Message {
    Message::EpisodeStart {
        brief: EpisodeBrief::new(episode, &config.robot),
        map_digest: env.digest(),
        mode: config.mode,
    }
}

fn end_message(log: &EpisodeLog) -> Result<Message> {
    Ok(Message::EpisodeEnd(EpisodeEnd {
        episode: log.name().to_string(),
        termination: *log.termination(),
        metrics: EpisodeMetrics::from_log(log)?,
    }))
}

fn abandoned(episode: &Episode, env: &EnvironmentMap, spec: &RobotSpec) -> Result<EpisodeLog> {
    let mut sim = Simulator::new(episode.clone(), env.clone(), *spec)?;
    sim.abort_transport();
    sim.into_log()
}

fn serve_synchronous(
    library: &EpisodeLibrary,
    reader: &mut MessageReader,
    writer: &Writer,
    config: &ServerConfig,
) -> Result<Vec<EpisodeLog>> {
    let mut logs = Vec::with_capacity(library.episodes.len());
    let mut alive = true;
    for episode in &library.episodes {
        let env = library.environment_for(episode)?;
        if !alive {
            logs.push(abandoned(episode, env, &config.robot)?);
            continue;
        }
        let mut sim = Simulator::new(episode.clone(), env.clone(), config.robot)?;
        emit(writer, &start_message(episode, env, config))?;
        let mut sensed_at: Option<Instant> = None;
        let mut ended = false;
        while !ended {
            let msg = match reader.recv(Some(config.receive_timeout)) {
                Ok(m) => m,
                Err(RecvError::Malformed(e)) => {
                    emit(writer, &Message::error(reason(&e)))?;
                    continue;
                }
                Err(e) => {
                    log::warn!("episode `{}`: {e}", episode.name);
                    alive = false;
                    if !sim.is_terminated() {
                        sim.abort_transport();
                    }
                    break;
                }
            };
            match msg {
                Message::GetMap => emit(
                    writer,
                    &Message::Map {
                        map: MapPayload::new(env),
                    },
                )?,
                Message::Sense if sim.is_terminated() => ended = true,
                Message::Sense => {
                    emit(
                        writer,
                        &Message::WorldState {
                            episode: episode.name.clone(),
                            state: sim.state().clone(),
                        },
                    )?;
                    sensed_at = Some(Instant::now());
                }
                Message::Act {
                    episode: Some(name),
                    ..
                } if name != episode.name => {
                    emit(
                        writer,
                        &Message::error(format!(
                            "act for `{name}` during episode `{}`",
                            episode.name
                        )),
                    )?;
                }
                Message::Act { command, .. } => {
                    let Some(t0) = sensed_at else {
                        emit(writer, &Message::error("act without a preceding sense"))?;
                        continue;
                    };
                    let state = sim.state();
                    match command.to_velocity(&state.robot, config.robot.control_mode, sim.dt()) {
                        Ok(cmd) => {
                            sim.advance_tick_timed(cmd, t0.elapsed().as_secs_f64())?;
                            sensed_at = None;
                        }
                        Err(e) => emit(writer, &Message::error(reason(&e)))?,
                    }
                }
                Message::Bye => {
                    log::info!("client left during episode `{}`", episode.name);
                    alive = false;
                    if !sim.is_terminated() {
                        sim.abort_transport();
                    }
                    break;
                }
                other => emit(
                    writer,
                    &Message::error(format!("unexpected {} message", other.type_name())),
                )?,
            }
        }
        let log = sim.into_log()?;
        let end = end_message(&log)?;
        if alive {
            emit(writer, &end)?;
        } else {
            // best effort: the peer is probably gone
            let _ = emit(writer, &end);
        }
        logs.push(log);
    }
    Ok(logs)
}

struct Active {
    name: String,
    map: MapPayload,
    spec: RobotSpec,
    dt: f64,
}

struct AsyncShared {
    link: Arc<AsyncLink>,
    active: Mutex<Option<Active>>,
    writer: Writer,
    closed: AtomicBool,
}

fn reader_loop(mut reader: MessageReader, shared: Arc<AsyncShared>) {
    let reply = |m: &Message| {
        let _ = emit(&shared.writer, m);
    };
    loop {
        let msg = match reader.recv(None) {
            Ok(m) => m,
            Err(RecvError::Malformed(e)) => {
                reply(&Message::error(reason(&e)));
                continue;
            }
            Err(_) => break,
        };
        let active = shared.active.lock().unwrap();
        match (msg, active.as_ref()) {
            (Message::Bye, _) => break,
            (Message::Sense | Message::GetMap | Message::Act { .. }, None) => {
                reply(&Message::error("no episode is running"));
            }
            (Message::Sense, Some(a)) => {
                if let Some(state) = shared.link.board.snapshot() {
                    reply(&Message::WorldState {
                        episode: a.name.clone(),
                        state: (*state).clone(),
                    });
                }
            }
            (Message::GetMap, Some(a)) => reply(&Message::Map { map: a.map.clone() }),
            (
                Message::Act {
                    episode: Some(name),
                    ..
                },
                Some(a),
            ) if name != a.name => {
                log::debug!("dropping late act for `{name}`");
            }
            (Message::Act { command, .. }, Some(a)) => {
                let Some(state) = shared.link.board.snapshot() else {
                    continue;
                };
                match command.to_velocity(&state.robot, a.spec.control_mode, a.dt) {
                    Ok(cmd) => shared.link.mailbox.post(cmd),
                    Err(e) => reply(&Message::error(reason(&e))),
                }
            }
            (other, _) => reply(&Message::error(format!(
                "unexpected {} message",
                other.type_name()
            ))),
        }
    }
    shared.closed.store(true, Ordering::SeqCst);
    shared.link.mark_disconnected();
}

fn serve_asynchronous(
    library: &EpisodeLibrary,
    reader: MessageReader,
    writer: &Writer,
    config: &ServerConfig,
) -> Result<Vec<EpisodeLog>> {
    let shared = Arc::new(AsyncShared {
        link: AsyncLink::new(),
        active: Mutex::new(None),
        writer: writer.clone(),
        closed: AtomicBool::new(false),
    });
    let thread_shared = shared.clone();
    let handle = std::thread::spawn(move || reader_loop(reader, thread_shared));

    let result = (|| {
        let mut logs = Vec::with_capacity(library.episodes.len());
        for episode in &library.episodes {
            let env = library.environment_for(episode)?;
            if shared.closed.load(Ordering::SeqCst) {
                logs.push(abandoned(episode, env, &config.robot)?);
                continue;
            }
            let wall_rate = config.wall_rate.unwrap_or(episode.tick_rate);
            if !(wall_rate > 0.0) {
                return Err(Error::invalid(format!(
                    "wall rate must be > 0, got {wall_rate}"
                )));
            }
            shared.link.reset();
            let mut run = AsyncEpisode::new(episode, env, &config.robot, &shared.link)?;
            *shared.active.lock().unwrap() = Some(Active {
                name: episode.name.clone(),
                map: MapPayload::new(env),
                spec: config.robot,
                dt: episode.dt(),
            });
            if shared.closed.load(Ordering::SeqCst) {
                shared.link.mark_disconnected();
            }
            emit(writer, &start_message(episode, env, config))?;
            let period = Duration::from_secs_f64(1.0 / wall_rate);
            let mut deadline = Instant::now() + period;
            while !run.is_terminated() {
                let now = Instant::now();
                if deadline > now {
                    std::thread::sleep(deadline - now);
                }
                deadline += period;
                run.tick();
            }
            *shared.active.lock().unwrap() = None;
            let log = run.into_log()?;
            let _ = emit(writer, &end_message(&log)?);
            logs.push(log);
        }
        Ok(logs)
    })();

    // shutting the socket down unblocks the reader thread
    close(writer);
    let _ = handle.join();
    result
}

/// Error text for the wire, without the local `protocol:` label.
fn reason(e: &Error) -> String {
    match e {
        Error::Protocol(m) => m.clone(),
        other => other.to_string(),
    }
}
