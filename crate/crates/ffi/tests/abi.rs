use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use crowdbench::ingest::EpisodeLibrary;
use crowdbench::metrics::EpisodeMetrics;
use crowdbench::planners::{run_planner_episode, PlannerConfig, PlannerKind};
use crowdbench::robot::RobotSpec;
use crowdbench::sim::EpisodeLog;
use crowdbench_ffi::*;

fn demo() -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo");
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { cb_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { cb_string_free(p) };
    s
}

fn load() -> *mut CbLibrary {
    let mut lib = ptr::null_mut();
    assert_eq!(
        unsafe { cb_library_load(demo().as_ptr(), &mut lib) },
        CbStatus::Ok
    );
    lib
}

#[test]
fn library_lists_episodes() {
    let lib = load();
    let mut n = 0;
    assert_eq!(
        unsafe { cb_library_episode_count(lib, &mut n) },
        CbStatus::Ok
    );
    assert_eq!(n, 3);
    let mut name = ptr::null_mut();
    assert_eq!(
        unsafe { cb_library_episode_name(lib, 1, &mut name) },
        CbStatus::Ok
    );
    assert_eq!(take_string(name), "demo_1");
    assert_eq!(
        unsafe { cb_library_episode_name(lib, 3, &mut name) },
        CbStatus::OutOfRange
    );
    assert!(last_error().contains("3"));
    unsafe { cb_library_free(lib) };
}

#[test]
fn errors_are_reported_per_call() {
    let missing = CString::new("/nonexistent/library").unwrap();
    let mut lib = ptr::null_mut();
    let status = unsafe { cb_library_load(missing.as_ptr(), &mut lib) };
    assert_eq!(status, CbStatus::Io);
    assert!(lib.is_null());
    assert!(last_error().contains("nonexistent"));

    // truncation keeps the terminator and reports the full length
    let mut small = [1 as c_char; 8];
    let full = unsafe { cb_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 7);
    assert_eq!(small[7], 0);

    assert_eq!(
        unsafe { cb_library_load(ptr::null(), &mut lib) },
        CbStatus::NullPointer
    );
    let mut n = 0;
    assert_eq!(
        unsafe { cb_library_episode_count(ptr::null(), &mut n) },
        CbStatus::NullPointer
    );
    // a successful call clears the message
    let lib = load();
    assert_eq!(unsafe { cb_last_error(ptr::null_mut(), 0) }, 0);
    unsafe { cb_library_free(lib) };
    unsafe { cb_library_free(ptr::null_mut()) };
    unsafe { cb_string_free(ptr::null_mut()) };
}

/// Drives one episode through the C ABI and returns its log.
fn drive(kind: CbPlannerKind, index: usize) -> String {
    let lib = load();
    let mut planner = ptr::null_mut();
    assert_eq!(unsafe { cb_planner_new(kind, &mut planner) }, CbStatus::Ok);
    let mut mode = CbControlMode::Unicycle;
    assert_eq!(
        unsafe { cb_planner_control_mode(planner, &mut mode) },
        CbStatus::Ok
    );
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { cb_simulator_new(lib, index, mode, &mut sim) },
        CbStatus::Ok
    );
    assert_eq!(unsafe { cb_planner_reset(planner, sim) }, CbStatus::Ok);
    let mut term = CbTermination {
        kind: CbTerminationKind::Running,
        success: false,
        pedestrian_collisions: 0,
        tick: 0,
        sim_time: 0.0,
    };
    let mut cmd = CbCommand {
        mode,
        a: 0.0,
        b: 0.0,
    };
    loop {
        assert_eq!(
            unsafe { cb_simulator_termination(sim, &mut term) },
            CbStatus::Ok
        );
        if term.kind != CbTerminationKind::Running {
            break;
        }
        assert_eq!(
            unsafe { cb_planner_plan(planner, sim, &mut cmd) },
            CbStatus::Ok
        );
        assert_eq!(cmd.mode, mode);
        assert_eq!(unsafe { cb_simulator_step(sim, &cmd) }, CbStatus::Ok);
    }
    assert_eq!(
        unsafe { cb_simulator_step(sim, &cmd) },
        CbStatus::Terminated
    );
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { cb_simulator_log_jsonl(sim, &mut text) },
        CbStatus::Ok
    );
    unsafe {
        cb_simulator_free(sim);
        cb_planner_free(planner);
        cb_library_free(lib);
    }
    take_string(text)
}

#[test]
fn abi_episode_matches_the_native_runner() {
    for (kind, native) in [
        (CbPlannerKind::Baseline, PlannerKind::Baseline),
        (CbPlannerKind::SocialForces, PlannerKind::SocialForces),
    ] {
        let via_abi = drive(kind, 0);

        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo");
        let lib = EpisodeLibrary::load(&root).unwrap();
        let ep = &lib.episodes[0];
        let env = lib.environment_for(ep).unwrap();
        let mut planner = native.build(&PlannerConfig::default());
        let spec = RobotSpec::default().with_mode(planner.control_mode());
        let log = run_planner_episode(ep, env, &spec, planner.as_mut()).unwrap();
        assert_eq!(via_abi, log.to_jsonl().unwrap(), "{native:?}");
    }
}

#[test]
fn metrics_match_the_native_computation() {
    let text = drive(CbPlannerKind::Orca, 2);
    let native = EpisodeMetrics::from_log(&EpisodeLog::from_jsonl(&text).unwrap()).unwrap();
    let c = CString::new(text).unwrap();
    let mut m: CbMetrics = unsafe { std::mem::zeroed() };
    assert_eq!(
        unsafe { cb_metrics_from_log(c.as_ptr(), &mut m) },
        CbStatus::Ok
    );
    assert_eq!(m.success, native.success);
    assert_eq!(m.pedestrian_collisions, native.pedestrian_collisions);
    assert_eq!(m.path_length, native.path_length);
    assert_eq!(m.traversal_time, native.traversal_time);
    assert_eq!(
        m.mean_time_to_collision.to_bits(),
        native.mean_time_to_collision.to_bits()
    );
    match native.path_length_ratio {
        Some(v) => assert_eq!(m.path_length_ratio, v),
        None => assert!(m.path_length_ratio.is_nan()),
    }

    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { cb_metrics_from_log(bad.as_ptr(), &mut m) },
        CbStatus::Parse
    );
}

#[test]
fn mismatched_command_mode_is_rejected() {
    let lib = load();
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { cb_simulator_new(lib, 0, CbControlMode::Unicycle, &mut sim) },
        CbStatus::Ok
    );
    let cmd = CbCommand {
        mode: CbControlMode::Holonomic,
        a: 1.0,
        b: 0.0,
    };
    assert_eq!(
        unsafe { cb_simulator_step(sim, &cmd) },
        CbStatus::InvalidArgument
    );
    assert!(last_error().contains("control mode"));
    let mut robot = CbAgent::default();
    assert_eq!(unsafe { cb_simulator_robot(sim, &mut robot) }, CbStatus::Ok);
    assert_eq!(robot.id, -1);
    assert_eq!((robot.x, robot.y), (1.0, 3.0));
    unsafe {
        cb_simulator_free(sim);
        cb_library_free(lib);
    }
}

#[test]
fn pedestrian_buffer_reports_required_capacity() {
    let lib = load();
    let mut sim = ptr::null_mut();
    unsafe { cb_simulator_new(lib, 0, CbControlMode::Unicycle, &mut sim) };
    let stop = CbCommand {
        mode: CbControlMode::Unicycle,
        a: 0.0,
        b: 0.0,
    };
    // walkers enter over the first seconds
    for _ in 0..100 {
        unsafe { cb_simulator_step(sim, &stop) };
    }
    let mut count = 0;
    assert_eq!(
        unsafe { cb_simulator_pedestrians(sim, ptr::null_mut(), 0, &mut count) },
        CbStatus::BufferTooSmall
    );
    assert!(count > 0);
    let mut buf = vec![CbAgent::default(); count];
    assert_eq!(
        unsafe { cb_simulator_pedestrians(sim, buf.as_mut_ptr(), buf.len(), &mut count) },
        CbStatus::Ok
    );
    assert!(buf.iter().all(|p| p.id >= 0 && p.radius == 0.3));
    unsafe {
        cb_simulator_free(sim);
        cb_library_free(lib);
    }
}

#[test]
fn time_to_collision_head_on() {
    let robot = CbAgent {
        id: -1,
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        vx: 1.0,
        vy: 0.0,
        radius: 0.25,
    };
    let ped = CbAgent {
        id: 1,
        x: 5.0,
        vx: -1.0,
        radius: 0.25,
        ..robot
    };
    let mut ttc = 0.0;
    assert_eq!(
        unsafe { cb_time_to_collision(&robot, &ped, 1, &mut ttc) },
        CbStatus::Ok
    );
    // gap 4.5 m closing at 2 m/s
    assert!((ttc - 2.25).abs() < 1e-12);
    assert_eq!(
        unsafe { cb_time_to_collision(&robot, ptr::null(), 0, &mut ttc) },
        CbStatus::Ok
    );
    assert_eq!(ttc, 10.0);
    let bad = CbAgent {
        radius: -1.0,
        ..ped
    };
    assert_eq!(
        unsafe { cb_time_to_collision(&robot, &bad, 1, &mut ttc) },
        CbStatus::InvalidArgument
    );
}

#[test]
fn protocol_version_is_one() {
    assert_eq!(cb_protocol_version(), 1);
}
