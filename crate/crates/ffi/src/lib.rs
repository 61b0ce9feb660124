//! C ABI over the crowdbench simulator, planners and metrics.
//!
//! Fallible functions return a [`CbStatus`]; on failure a description is kept
//! per thread and can be read with [`cb_last_error`]. Handles are opaque and
//! owned by the caller until passed to their `*_free` function. Strings
//! returned through `char **` are released with [`cb_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use crowdbench::ingest::EpisodeLibrary;
use crowdbench::metrics::{time_to_collision, EpisodeMetrics};
use crowdbench::model::{AgentId, AgentState, Pose2D};
use crowdbench::planners::{EpisodeBrief, Planner, PlannerConfig, PlannerKind};
use crowdbench::robot::{ControlMode, RobotSpec, VelocityCommand};
use crowdbench::sim::{EpisodeLog, Simulator, TerminationKind};
use crowdbench::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// The episode has already ended.
    Terminated = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbControlMode {
    Unicycle = 0,
    Holonomic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbPlannerKind {
    SocialForces = 0,
    Orca = 1,
    Baseline = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbTerminationKind {
    Running = 0,
    Completion = 1,
    Timeout = 2,
    EnvironmentCollision = 3,
}

/// A disc agent: id -1 is the robot.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CbAgent {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub radius: f64,
}

/// A command in either control mode; `a` and `b` are `(v, omega)` for
/// unicycle commands and `(vx, vy)` for holonomic ones.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbCommand {
    pub mode: CbControlMode,
    pub a: f64,
    pub b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbTermination {
    pub kind: CbTerminationKind,
    pub success: bool,
    pub pedestrian_collisions: u32,
    pub tick: u64,
    pub sim_time: f64,
}

/// Per-episode summary metrics. Undefined values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbMetrics {
    pub success: bool,
    pub pedestrian_collisions: u32,
    pub path_length: f64,
    pub path_length_ratio: f64,
    pub goal_traversal_ratio: f64,
    pub path_irregularity: f64,
    pub traversal_time: f64,
    pub average_speed: f64,
    pub energy: f64,
    pub mean_closest_pedestrian_distance: f64,
    pub mean_time_to_collision: f64,
}

/// Loaded episode library.
pub struct CbLibrary(EpisodeLibrary);

/// One running episode.
pub struct CbSimulator(Simulator);

/// A bundled planner.
pub struct CbPlanner(Box<dyn Planner>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CbStatus, message: impl Into<String>) -> CbStatus {
    set_error(message.into());
    status
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::Io { .. } | Error::Transport(_) => CbStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Manifest { .. } | Error::Raster { .. } => {
            CbStatus::Parse
        }
        Error::AlreadyTerminated(_) => CbStatus::Terminated,
        _ => CbStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> CbStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into [`CbStatus::Panic`].
fn guard(f: impl FnOnce() -> CbStatus) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == CbStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail(CbStatus::Panic, "internal panic"),
    }
}

macro_rules! deref {
    ($p:expr, $what:literal) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(CbStatus::NullPointer, concat!($what, " is null")),
        }
    };
}

macro_rules! deref_mut {
    ($p:expr, $what:literal) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(CbStatus::NullPointer, concat!($what, " is null")),
        }
    };
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, CbStatus> {
    if p.is_null() {
        return Err(fail(CbStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CbStatus::InvalidArgument, "path is not UTF-8"))
}

fn agent_out(a: &AgentState) -> CbAgent {
    CbAgent {
        id: a.id.0,
        x: a.pose.x,
        y: a.pose.y,
        heading: a.pose.heading,
        vx: a.velocity.x,
        vy: a.velocity.y,
        radius: a.radius,
    }
}

fn agent_in(a: &CbAgent) -> Result<AgentState, CbStatus> {
    AgentState::new(
        AgentId(a.id),
        Pose2D::new(a.x, a.y, a.heading),
        crowdbench::geometry::Vec2::new(a.vx, a.vy),
        a.radius,
    )
    .map_err(from_error)
}

fn command_in(c: &CbCommand) -> VelocityCommand {
    match c.mode {
        CbControlMode::Unicycle => VelocityCommand::Unicycle { v: c.a, omega: c.b },
        CbControlMode::Holonomic => VelocityCommand::Holonomic { vx: c.a, vy: c.b },
    }
}

fn command_out(c: VelocityCommand) -> CbCommand {
    match c {
        VelocityCommand::Unicycle { v, omega } => CbCommand {
            mode: CbControlMode::Unicycle,
            a: v,
            b: omega,
        },
        VelocityCommand::Holonomic { vx, vy } => CbCommand {
            mode: CbControlMode::Holonomic,
            a: vx,
            b: vy,
        },
    }
}

fn mode_in(m: CbControlMode) -> ControlMode {
    match m {
        CbControlMode::Unicycle => ControlMode::Unicycle,
        CbControlMode::Holonomic => ControlMode::Holonomic,
    }
}

unsafe fn write_string(s: String, out: *mut *mut c_char) -> CbStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            CbStatus::Ok
        }
        Err(_) => fail(CbStatus::Internal, "string contains NUL"),
    }
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length in
/// bytes, or 0 when the last call succeeded.
#[no_mangle]
pub unsafe extern "C" fn cb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Wire protocol version spoken by this build.
#[no_mangle]
pub extern "C" fn cb_protocol_version() -> u32 {
    crowdbench::protocol::PROTOCOL_VERSION
}

#[no_mangle]
pub unsafe extern "C" fn cb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads the library directory at `path`.
#[no_mangle]
pub unsafe extern "C" fn cb_library_load(
    path: *const c_char,
    out: *mut *mut CbLibrary,
) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return fail(CbStatus::NullPointer, "out is null");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match EpisodeLibrary::load(Path::new(path)) {
            Ok(lib) => {
                *out = Box::into_raw(Box::new(CbLibrary(lib)));
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_library_free(lib: *mut CbLibrary) {
    if !lib.is_null() {
        drop(Box::from_raw(lib));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cb_library_episode_count(
    lib: *const CbLibrary,
    out: *mut usize,
) -> CbStatus {
    guard(|| {
        let lib = deref!(lib, "library");
        let out = deref_mut!(out, "out");
        *out = lib.0.episodes.len();
        CbStatus::Ok
    })
}

/// Name of episode `index` as a newly allocated string.
#[no_mangle]
pub unsafe extern "C" fn cb_library_episode_name(
    lib: *const CbLibrary,
    index: usize,
    out: *mut *mut c_char,
) -> CbStatus {
    guard(|| {
        let lib = deref!(lib, "library");
        if out.is_null() {
            return fail(CbStatus::NullPointer, "out is null");
        }
        match lib.0.episodes.get(index) {
            Some(ep) => write_string(ep.name.clone(), out),
            None => fail(CbStatus::OutOfRange, format!("no episode {index}")),
        }
    })
}

/// Starts episode `index` with the default robot in `mode`.
#[no_mangle]
pub unsafe extern "C" fn cb_simulator_new(
    lib: *const CbLibrary,
    index: usize,
    mode: CbControlMode,
    out: *mut *mut CbSimulator,
) -> CbStatus {
    guard(|| {
        let lib = deref!(lib, "library");
        if out.is_null() {
            return fail(CbStatus::NullPointer, "out is null");
        }
        let Some(ep) = lib.0.episodes.get(index) else {
            return fail(CbStatus::OutOfRange, format!("no episode {index}"));
        };
        let env = match lib.0.environment_for(ep) {
            Ok(env) => env.clone(),
            Err(e) => return from_error(e),
        };
        let spec = RobotSpec::default().with_mode(mode_in(mode));
        match Simulator::new(ep.clone(), env, spec) {
            Ok(sim) => {
                *out = Box::into_raw(Box::new(CbSimulator(sim)));
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_simulator_free(sim: *mut CbSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one tick. Returns [`CbStatus::Terminated`] once the episode
/// has ended and [`CbStatus::InvalidArgument`] for a command in the wrong
/// control mode.
#[no_mangle]
pub unsafe extern "C" fn cb_simulator_step(
    sim: *mut CbSimulator,
    command: *const CbCommand,
) -> CbStatus {
    guard(|| {
        let sim = deref_mut!(sim, "simulator");
        let command = deref!(command, "command");
        let cmd = command_in(command);
        if cmd.mode() != sim.0.spec().control_mode {
            return fail(
                CbStatus::InvalidArgument,
                "command does not match the robot's control mode",
            );
        }
        match sim.0.advance_tick(cmd) {
            Ok(_) => CbStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_simulator_robot(
    sim: *const CbSimulator,
    out: *mut CbAgent,
) -> CbStatus {
    guard(|| {
        let sim = deref!(sim, "simulator");
        let out = deref_mut!(out, "out");
        *out = agent_out(&sim.0.state().robot);
        CbStatus::Ok
    })
}

/// Copies the pedestrians present at the current tick into `buf`.
/// `count` receives the number present; when it exceeds `capacity` nothing
/// is copied and [`CbStatus::BufferTooSmall`] is returned.
#[no_mangle]
pub unsafe extern "C" fn cb_simulator_pedestrians(
    sim: *const CbSimulator,
    buf: *mut CbAgent,
    capacity: usize,
    count: *mut usize,
) -> CbStatus {
    guard(|| {
        let sim = deref!(sim, "simulator");
        let count = deref_mut!(count, "count");
        let peds = &sim.0.state().pedestrians;
        *count = peds.len();
        if peds.len() > capacity {
            return fail(
                CbStatus::BufferTooSmall,
                format!("{} pedestrians, capacity {capacity}", peds.len()),
            );
        }
        if !peds.is_empty() && buf.is_null() {
            return fail(CbStatus::NullPointer, "buffer is null");
        }
        for (i, p) in peds.iter().enumerate() {
            *buf.add(i) = agent_out(p);
        }
        CbStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_simulator_termination(
    sim: *const CbSimulator,
    out: *mut CbTermination,
) -> CbStatus {
    guard(|| {
        let sim = deref!(sim, "simulator");
        let out = deref_mut!(out, "out");
        let state = sim.0.state();
        let (kind, success) = match state.termination {
            None => (CbTerminationKind::Running, false),
            Some(t) => (
                match t.kind {
                    TerminationKind::Completion => CbTerminationKind::Completion,
                    TerminationKind::Timeout => CbTerminationKind::Timeout,
                    TerminationKind::EnvironmentCollision => {
                        CbTerminationKind::EnvironmentCollision
                    }
                },
                t.success,
            ),
        };
        *out = CbTermination {
            kind,
            success,
            pedestrian_collisions: sim.0.pedestrian_collisions(),
            tick: state.tick,
            sim_time: state.sim_time,
        };
        CbStatus::Ok
    })
}

/// The episode log so far, as JSON lines.
#[no_mangle]
pub unsafe extern "C" fn cb_simulator_log_jsonl(
    sim: *const CbSimulator,
    out: *mut *mut c_char,
) -> CbStatus {
    guard(|| {
        let sim = deref!(sim, "simulator");
        if out.is_null() {
            return fail(CbStatus::NullPointer, "out is null");
        }
        match sim.0.clone().into_log().and_then(|l| l.to_jsonl()) {
            Ok(text) => write_string(text, out),
            Err(e) => from_error(e),
        }
    })
}

/// Metrics of a finished episode given its JSON-lines log.
#[no_mangle]
pub unsafe extern "C" fn cb_metrics_from_log(
    jsonl: *const c_char,
    out: *mut CbMetrics,
) -> CbStatus {
    guard(|| {
        let out = deref_mut!(out, "out");
        let text = match path_arg(jsonl) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let m = match EpisodeLog::from_jsonl(text).and_then(|l| EpisodeMetrics::from_log(&l)) {
            Ok(m) => m,
            Err(e) => return from_error(e),
        };
        let (speed, energy) = m
            .kinematics
            .map_or((f64::NAN, f64::NAN), |k| (k.average_speed, k.energy));
        *out = CbMetrics {
            success: m.success,
            pedestrian_collisions: m.pedestrian_collisions,
            path_length: m.path_length,
            path_length_ratio: m.path_length_ratio.unwrap_or(f64::NAN),
            goal_traversal_ratio: m.goal_traversal_ratio.unwrap_or(f64::NAN),
            path_irregularity: m.path_irregularity.unwrap_or(f64::NAN),
            traversal_time: m.traversal_time,
            average_speed: speed,
            energy,
            mean_closest_pedestrian_distance: m.mean_closest_pedestrian_distance,
            mean_time_to_collision: m.mean_time_to_collision,
        };
        CbStatus::Ok
    })
}

/// Smallest time-to-collision between `robot` and `count` pedestrians,
/// saturated at 10 s.
#[no_mangle]
pub unsafe extern "C" fn cb_time_to_collision(
    robot: *const CbAgent,
    pedestrians: *const CbAgent,
    count: usize,
    out: *mut f64,
) -> CbStatus {
    guard(|| {
        let robot = deref!(robot, "robot");
        let out = deref_mut!(out, "out");
        if count > 0 && pedestrians.is_null() {
            return fail(CbStatus::NullPointer, "pedestrians is null");
        }
        let robot = match agent_in(robot) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let raw = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(pedestrians, count)
        };
        let mut peds = Vec::with_capacity(count);
        for p in raw {
            match agent_in(p) {
                Ok(a) => peds.push(a),
                Err(s) => return s,
            }
        }
        *out = time_to_collision(&robot, &peds);
        CbStatus::Ok
    })
}

/// A bundled planner with default parameters.
#[no_mangle]
pub unsafe extern "C" fn cb_planner_new(kind: CbPlannerKind, out: *mut *mut CbPlanner) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return fail(CbStatus::NullPointer, "out is null");
        }
        let kind = match kind {
            CbPlannerKind::SocialForces => PlannerKind::SocialForces,
            CbPlannerKind::Orca => PlannerKind::Orca,
            CbPlannerKind::Baseline => PlannerKind::Baseline,
        };
        *out = Box::into_raw(Box::new(CbPlanner(kind.build(&PlannerConfig::default()))));
        CbStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_planner_free(planner: *mut CbPlanner) {
    if !planner.is_null() {
        drop(Box::from_raw(planner));
    }
}

/// Control mode the planner's commands use; create the simulator with it.
#[no_mangle]
pub unsafe extern "C" fn cb_planner_control_mode(
    planner: *const CbPlanner,
    out: *mut CbControlMode,
) -> CbStatus {
    guard(|| {
        let planner = deref!(planner, "planner");
        let out = deref_mut!(out, "out");
        *out = match planner.0.control_mode() {
            ControlMode::Unicycle => CbControlMode::Unicycle,
            ControlMode::Holonomic => CbControlMode::Holonomic,
        };
        CbStatus::Ok
    })
}

/// Prepares the planner for the simulator's episode.
#[no_mangle]
pub unsafe extern "C" fn cb_planner_reset(
    planner: *mut CbPlanner,
    sim: *const CbSimulator,
) -> CbStatus {
    guard(|| {
        let planner = deref_mut!(planner, "planner");
        let sim = deref!(sim, "simulator");
        let brief = EpisodeBrief::new(sim.0.episode(), sim.0.spec());
        planner.0.reset(&brief, sim.0.environment());
        CbStatus::Ok
    })
}

/// Command for the simulator's current state.
#[no_mangle]
pub unsafe extern "C" fn cb_planner_plan(
    planner: *mut CbPlanner,
    sim: *const CbSimulator,
    out: *mut CbCommand,
) -> CbStatus {
    guard(|| {
        let planner = deref_mut!(planner, "planner");
        let sim = deref!(sim, "simulator");
        let out = deref_mut!(out, "out");
        *out = command_out(planner.0.plan(sim.0.state()));
        CbStatus::Ok
    })
}
