//! Synchronous and asynchronous flow control around [`Simulator`].

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::engine::{SimState, Simulator};
use super::log::EpisodeLog;
use crate::error::Result;
use crate::map::EnvironmentMap;
use crate::model::Episode;
use crate::robot::{RobotSpec, VelocityCommand};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("client disconnected: {0}")]
    Disconnected(String),
    #[error("client did not answer within {0:?}")]
    Deadline(Duration),
}

/// A client the simulator blocks on once per tick.
pub trait SyncClient {
    /// Called with the current state; returns the command for the next tick.
    fn act(&mut self, state: &SimState) -> Result<VelocityCommand, ClientError>;
}

impl<F> SyncClient for F
where
    F: FnMut(&SimState) -> VelocityCommand,
{
    fn act(&mut self, state: &SimState) -> Result<VelocityCommand, ClientError> {
        Ok(self(state))
    }
}

/// Runs one episode to termination, blocking on the client every tick.
/// The wall-clock time spent inside `act` is recorded as planning wait.
/// A client failure closes the log as a timeout with the transport flag.
pub fn run_episode_synchronous(
    episode: &Episode,
    env: &EnvironmentMap,
    spec: &RobotSpec,
    client: &mut dyn SyncClient,
) -> Result<EpisodeLog> {
    let mut sim = Simulator::new(episode.clone(), env.clone(), *spec)?;
    drive_synchronous(&mut sim, client);
    sim.into_log()
}

fn drive_synchronous(sim: &mut Simulator, client: &mut dyn SyncClient) {
    while !sim.is_terminated() {
        let started = Instant::now();
        match client.act(sim.state()) {
            Ok(cmd) => {
                let wait = started.elapsed().as_secs_f64();
                sim.advance_tick_timed(cmd, wait)
                    .expect("episode not terminated");
            }
            Err(e) => {
                log::warn!("episode `{}`: {e}", sim.episode().name);
                sim.abort_transport();
            }
        }
    }
}

/// Single-slot, latest-wins command store shared between the receive path
/// and the tick thread. Reading does not clear it, so a stale command keeps
/// being applied until replaced.
#[derive(Debug, Default)]
pub struct Mailbox {
    slot: Mutex<Option<VelocityCommand>>,
}

impl Mailbox {
    pub fn post(&self, cmd: VelocityCommand) {
        *self.slot.lock().unwrap() = Some(cmd);
    }

    pub fn latest(&self) -> Option<VelocityCommand> {
        *self.slot.lock().unwrap()
    }

    pub fn clear(&self) {
        *self.slot.lock().unwrap() = None;
    }
}

/// Latest published world state, with a condition variable so clients can
/// wait for the next tick.
#[derive(Debug, Default)]
pub struct StateBoard {
    state: Mutex<Option<Arc<SimState>>>,
    changed: Condvar,
}

impl StateBoard {
    pub fn publish(&self, state: SimState) {
        *self.state.lock().unwrap() = Some(Arc::new(state));
        self.changed.notify_all();
    }

    pub fn snapshot(&self) -> Option<Arc<SimState>> {
        self.state.lock().unwrap().clone()
    }

    /// Blocks until a state newer than `after_tick` (or a terminated state)
    /// is published, or `timeout` passes.
    pub fn wait_newer(&self, after_tick: Option<u64>, timeout: Duration) -> Option<Arc<SimState>> {
        let guard = self.state.lock().unwrap();
        let (guard, _) = self
            .changed
            .wait_timeout_while(guard, timeout, |s| match (s, after_tick) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(s), Some(t)) => s.tick <= t && !s.is_terminated(),
            })
            .unwrap();
        guard.clone()
    }
}

/// Shared endpoints of an asynchronous run.
#[derive(Debug, Default)]
pub struct AsyncLink {
    pub mailbox: Mailbox,
    pub board: StateBoard,
    disconnected: AtomicBool,
}

impl AsyncLink {
    pub fn new() -> Arc<Self> {
        Arc::new(AsyncLink::default())
    }

    pub fn mark_disconnected(&self) {
        self.disconnected.store(true, Ordering::SeqCst);
    }

    pub fn is_disconnected(&self) -> bool {
        self.disconnected.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.mailbox.clear();
        self.disconnected.store(false, Ordering::SeqCst);
    }
}

/// An asynchronous episode advanced one tick at a time by an external
/// clock. Each tick applies whatever sits in the mailbox at that moment;
/// before the first command arrives the robot receives a zero command.
pub struct AsyncEpisode<'a> {
    sim: Simulator,
    link: &'a AsyncLink,
}

impl<'a> AsyncEpisode<'a> {
    pub fn new(
        episode: &Episode,
        env: &EnvironmentMap,
        spec: &RobotSpec,
        link: &'a AsyncLink,
    ) -> Result<Self> {
        let sim = Simulator::new(episode.clone(), env.clone(), *spec)?;
        link.board.publish(sim.state().clone());
        Ok(AsyncEpisode { sim, link })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn is_terminated(&self) -> bool {
        self.sim.is_terminated()
    }

    pub fn tick(&mut self) {
        if self.sim.is_terminated() {
            return;
        }
        if self.link.is_disconnected() {
            self.sim.abort_transport();
        } else {
            let cmd = self
                .link
                .mailbox
                .latest()
                .unwrap_or_else(|| VelocityCommand::zero(self.sim.spec().control_mode));
            self.sim.advance_tick(cmd).expect("episode not terminated");
        }
        self.link.board.publish(self.sim.state().clone());
    }

    pub fn into_log(self) -> Result<EpisodeLog> {
        self.sim.into_log()
    }
}

/// Advances the simulator at `wall_rate` ticks per wall-clock second until
/// termination, regardless of how fast the client answers.
pub fn run_episode_asynchronous(
    episode: &Episode,
    env: &EnvironmentMap,
    spec: &RobotSpec,
    link: &AsyncLink,
    wall_rate: f64,
) -> Result<EpisodeLog> {
    if !(wall_rate > 0.0) {
        return Err(crate::error::Error::invalid(format!(
            "wall rate must be > 0, got {wall_rate}"
        )));
    }
    let period = Duration::from_secs_f64(1.0 / wall_rate);
    let mut run = AsyncEpisode::new(episode, env, spec, link)?;
    let mut deadline = Instant::now() + period;
    while !run.is_terminated() {
        let now = Instant::now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        }
        deadline += period;
        run.tick();
    }
    run.into_log()
}
