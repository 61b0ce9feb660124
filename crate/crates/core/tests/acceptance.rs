//! Acceptance suite. Every criterion is checked against an oracle computed
//! here, independently of the code under test, and reported on one line.
//!
//! Runs without the libtest harness so the report is always printed:
//!
//! ```text
//! cargo test -p crowdbench --test acceptance
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crowdbench::cli::run_benchmark;
use crowdbench::config::{BenchmarkConfig, PlannerChoice};
use crowdbench::geometry::Vec2;
use crowdbench::ingest::{
    parse_track_file, resample_track, sample_random_episodes, EpisodeLibrary, EpisodeManifest,
    SamplerConfig,
};
use crowdbench::map::{Cell, EnvironmentMap};
use crowdbench::metrics::{
    aggregate_meta, closest_pedestrian_distance, kinematic_stats, path_irregularity, path_length,
    time_to_collision,
};
use crowdbench::model::{AgentId, AgentState, Episode, PedestrianTrack, Pose2D, TrackSample};
use crowdbench::planners::{
    run_planner_episode, solve_velocity_lp, HalfPlane, PlannerConfig, PlannerKind,
};
use crowdbench::robot::{step_unicycle, ControlMode, RobotSpec, VelocityCommand};
use crowdbench::sim::{run_episode_synchronous, EpisodeLog, SimState, TerminationKind};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Collects named checks; the first failure message wins.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    count: usize,
}

impl Checks {
    fn abs(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.count += 1;
        if !((got - want).abs() <= tol) {
            self.failures
                .push(format!("{what}: got {got}, want {want} (abs tol {tol:e})"));
        }
    }

    fn rel(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.count += 1;
        if !((got - want).abs() <= tol * want.abs()) {
            self.failures
                .push(format!("{what}: got {got}, want {want} (rel tol {tol})"));
        }
    }

    fn ok(&mut self, what: &str, cond: bool) {
        self.count += 1;
        if !cond {
            self.failures.push(what.to_string());
        }
    }

    fn verdict(self, detail: String) -> Verdict {
        match self.failures.first() {
            None => Ok(format!("{} checks; {detail}", self.count)),
            Some(first) => Err(format!(
                "{} of {} checks failed; first: {first}",
                self.failures.len(),
                self.count
            )),
        }
    }
}

fn agent(x: f64, y: f64, vx: f64, vy: f64, r: f64) -> AgentState {
    AgentState::new(AgentId(0), Pose2D::new(x, y, 0.0), Vec2::new(vx, vy), r).unwrap()
}

// ---------------------------------------------------------------- metrics

fn metric_oracles() -> Verdict {
    let dt = 0.04;
    let mut c = Checks::default();

    // constant 1.3 m/s along (0.6, 0.8) for 10 s
    let dir = Vec2::new(0.6, 0.8);
    let pts: Vec<Vec2> = (0..=250).map(|k| dir * (1.3 * k as f64 * dt)).collect();
    let ks = kinematic_stats(&pts, dt).unwrap();
    c.abs("constant: path length", path_length(&pts), 13.0, 1e-9);
    c.abs("constant: energy", ks.energy, 1.3 * 1.3 * 10.0, 1e-9);
    c.abs("constant: speed", ks.average_speed, 1.3, 1e-9);
    c.abs("constant: acceleration", ks.average_acceleration, 0.0, 1e-9);

    // ramp x = a t^2 / 2, a = 0.3, 8 s
    let a = 0.3;
    let pts: Vec<Vec2> = (0..=200)
        .map(|k| {
            let t = k as f64 * dt;
            Vec2::new(0.5 * a * t * t, 0.0)
        })
        .collect();
    let ks = kinematic_stats(&pts, dt).unwrap();
    c.abs("ramp: path length", path_length(&pts), 0.5 * a * 64.0, 1e-9);
    c.abs("ramp: speed", ks.average_speed, 0.5 * a * 64.0 / 8.0, 1e-9);
    c.rel("ramp: energy", ks.energy, a * a * 512.0 / 3.0, 0.02);
    c.rel("ramp: acceleration", ks.average_acceleration, a, 0.02);

    // circle of radius 2 at 1 m/s, one lap
    let (r, v) = (2.0, 1.0);
    let n = (TAU * r / v / dt).round() as usize;
    let pts: Vec<Vec2> = (0..=n)
        .map(|k| Vec2::from_angle(v / r * k as f64 * dt) * r)
        .collect();
    let ks = kinematic_stats(&pts, dt).unwrap();
    let duration = n as f64 * dt;
    c.rel("circle: path length", path_length(&pts), v * duration, 0.02);
    c.rel("circle: energy", ks.energy, v * v * duration, 0.02);
    c.rel("circle: speed", ks.average_speed, v, 0.02);
    c.rel(
        "circle: acceleration",
        ks.average_acceleration,
        v * v / r,
        0.02,
    );

    // L-path (0,0) -> (5,0) -> (5,5) at 1 m/s towards goal (5,5)
    let poses: Vec<Pose2D> = (0..=250)
        .map(|k| {
            let t = k as f64 * dt;
            if t < 5.0 {
                Pose2D::new(t, 0.0, 0.0)
            } else {
                Pose2D::new(5.0, t - 5.0, FRAC_PI_2)
            }
        })
        .collect();
    let positions: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
    c.abs("L-path: path length", path_length(&positions), 10.0, 1e-9);
    // first leg: bearing error atan(5 / (5 - x)); integral 5*pi/4 + 2.5 ln 2.
    // second leg: zero until the 0.3 m goal radius (4.7 m).
    let irregularity = (5.0 * FRAC_PI_4 + 2.5 * 2f64.ln()) / (5.0 + 4.7);
    let got = path_irregularity(&poses, Vec2::new(5.0, 5.0), 0.3).unwrap();
    c.rel("L-path: irregularity", got, irregularity, 0.02);

    c.verdict(format!("L-path irregularity {got:.5} vs {irregularity:.5}"))
}

// ---------------------------------------------------------------- TTC / CPD

/// First time on a 1 ms grid at which the discs touch, or 10 s.
fn brute_ttc(r: &AgentState, p: &AgentState) -> f64 {
    let rsum = r.radius + p.radius;
    for i in 0..=10_000 {
        let t = i as f64 * 1e-3;
        let d = (p.position() + p.velocity * t).distance(r.position() + r.velocity * t);
        if d <= rsum {
            return t;
        }
    }
    10.0
}

fn ttc_cpd() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut c = Checks::default();
    let (mut hits, mut worst) = (0, 0.0f64);
    let mut pairs = 0;
    while pairs < 1000 {
        let robot_v = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..1.2);
        let robot = agent(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            robot_v.x,
            robot_v.y,
            0.23,
        );
        let pos = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        if pos.distance(robot.position()) <= 0.53 {
            continue;
        }
        // half the pairs head roughly towards the robot
        let heading = if pairs % 2 == 0 {
            (robot.position() - pos).angle() + rng.random_range(-0.3..0.3)
        } else {
            rng.random_range(-PI..PI)
        };
        let pv = Vec2::from_angle(heading) * rng.random_range(0.3..1.6);
        let ped = agent(pos.x, pos.y, pv.x, pv.y, 0.3);
        let got = time_to_collision(&robot, &[ped]);
        let want = brute_ttc(&robot, &ped);
        if want < 10.0 {
            hits += 1;
        }
        worst = worst.max((got - want).abs());
        c.abs("ttc vs 1 ms simulation", got, want, 0.04);
        c.ok("ttc within [0, 10]", (0.0..=10.0).contains(&got));
        pairs += 1;
    }
    c.ok("some pairs collide", hits > 100);
    c.ok("some pairs never collide", hits < 900);

    let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
    c.ok("ttc receding saturates at exactly 10", {
        time_to_collision(&robot, &[agent(3.0, 0.0, 1.0, 0.0, 0.3)]) == 10.0
    });
    c.ok("ttc beyond 10 s saturates at exactly 10", {
        time_to_collision(&robot, &[agent(20.0, 0.0, -1.0, 0.0, 0.3)]) == 10.0
    });
    c.ok(
        "ttc with nobody is exactly 10",
        time_to_collision(&robot, &[]) == 10.0,
    );
    c.ok(
        "cpd with nobody is exactly 10",
        closest_pedestrian_distance(&robot, &[]) == 10.0,
    );
    c.ok("cpd far away is exactly 10", {
        closest_pedestrian_distance(&robot, &[agent(50.0, 0.0, 0.0, 0.0, 0.3)]) == 10.0
    });
    c.abs(
        "cpd surface distance",
        closest_pedestrian_distance(&robot, &[agent(3.0, 4.0, 0.0, 0.0, 0.3)]),
        5.0 - 0.53,
        1e-12,
    );
    c.verdict(format!(
        "{hits} colliding pairs, worst |ttc - brute| {worst:.4} s"
    ))
}

// ---------------------------------------------------------------- unicycle

fn quarter_arc_error(steps: usize, dt: f64) -> (f64, f64) {
    let v = 1.0;
    let omega = FRAC_PI_2 / (steps as f64 * dt);
    let spec = RobotSpec::default();
    let mut s = agent(0.0, 0.0, 0.0, 0.0, 0.23);
    for _ in 0..steps {
        s = step_unicycle(&s, v, omega, dt, &spec);
    }
    let radius = v / omega;
    let exact = Vec2::new(radius, radius);
    (s.position().distance(exact), exact.length())
}

fn unicycle_convergence() -> Verdict {
    let (e1, scale) = quarter_arc_error(100, 0.04);
    let (e2, _) = quarter_arc_error(200, 0.02);
    let ratio = e1 / e2;
    let mut c = Checks::default();
    c.ok(
        &format!("endpoint error {e1} exceeds 2% of {scale}"),
        e1 <= 0.02 * scale,
    );
    c.ok(
        &format!("error ratio {ratio} is not first order"),
        (1.8..=2.2).contains(&ratio),
    );
    c.verdict(format!(
        "error {:.3}% at dt 0.04, ratio {ratio:.3} when halved",
        100.0 * e1 / scale
    ))
}

// ---------------------------------------------------------------- determinism

fn config(planner: PlannerChoice, episodes: &Path, out: &Path) -> BenchmarkConfig {
    BenchmarkConfig {
        planner,
        episodes: episodes.to_path_buf(),
        out: out.to_path_buf(),
        seed: 7,
        ..BenchmarkConfig::default()
    }
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let lib = repo().join("data/demo");
    let mut c = Checks::default();
    let planner = PlannerChoice::Bundled(PlannerKind::SocialForces);
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|d| run_benchmark(&config(planner, &lib, &tmp.path().join(d))).unwrap())
        .collect();
    let read = |run: &str, file: &str| std::fs::read(tmp.path().join(run).join(file)).unwrap();
    let mut files = 0;
    for log in &runs[0].logs {
        let f = format!("{}/log.jsonl", log.name());
        c.ok(&format!("{f} differs"), read("a", &f) == read("b", &f));
        files += 1;
    }
    c.ok(
        "summary.csv differs",
        read("a", "summary.csv") == read("b", "summary.csv"),
    );
    let jsonl = |logs: &[EpisodeLog]| -> Vec<String> {
        logs.iter().map(|l| l.to_jsonl().unwrap()).collect()
    };
    c.ok(
        "serialized logs differ",
        jsonl(&runs[0].logs) == jsonl(&runs[1].logs),
    );
    c.verdict(format!(
        "{files} logs and summary.csv byte-identical over loopback"
    ))
}

// ---------------------------------------------------------------- ORCA

fn open_env(name: &str, w: usize, h: usize) -> EnvironmentMap {
    EnvironmentMap::open(name, w, h, 0.1, Vec2::ZERO).unwrap()
}

fn episode(start: Pose2D, goal: Vec2, tracks: Vec<PedestrianTrack>, budget: f64) -> Episode {
    Episode {
        name: "scenario".into(),
        environment: "open".into(),
        robot_start: start,
        goal,
        goal_radius: 0.3,
        tracks,
        time_budget: budget,
        tick_rate: 25.0,
        pedestrian_radius: 0.3,
        sections: vec![],
    }
}

fn straight_track(id: i64, from: Vec2, to: Vec2, speed: f64) -> PedestrianTrack {
    let t = from.distance(to) / speed;
    PedestrianTrack::new(
        AgentId(id),
        vec![
            TrackSample {
                t: 0.0,
                x: from.x,
                y: from.y,
            },
            TrackSample {
                t,
                x: to.x,
                y: to.y,
            },
        ],
    )
    .unwrap()
}

/// Closest velocity to `pref` over 10^6 samples of the feasible region's
/// boundary (plane segments and speed circle), plus `pref` itself.
fn brute_projection(planes: &[HalfPlane], pref: Vec2, v_max: f64) -> Option<Vec2> {
    let feasible = |v: Vec2| {
        v.length() <= v_max * (1.0 + 1e-12) && planes.iter().all(|h| h.violation(v) <= 1e-12)
    };
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |v: Vec2| {
        if feasible(v) {
            let d = v.distance(pref);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
    };
    consider(pref);
    let per_curve = 1_000_000 / (planes.len() + 1);
    for i in 0..per_curve {
        consider(Vec2::from_angle(TAU * i as f64 / per_curve as f64) * v_max);
    }
    for h in planes {
        let dir = Vec2::new(h.normal.y, -h.normal.x);
        // chord of the boundary line inside the speed disc
        let b = h.point.dot(dir);
        let disc = b * b - (h.point.length_squared() - v_max * v_max);
        if disc < 0.0 {
            continue;
        }
        let (t0, t1) = (-b - disc.sqrt(), -b + disc.sqrt());
        for i in 0..=per_curve {
            consider(h.point + dir * (t0 + (t1 - t0) * i as f64 / per_curve as f64));
        }
    }
    best.map(|(_, v)| v)
}

fn random_planes(rng: &mut ChaCha8Rng, v_max: f64) -> Vec<HalfPlane> {
    let anchor = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..0.9 * v_max);
    (0..rng.random_range(1..=5))
        .map(|_| {
            let normal = Vec2::from_angle(rng.random_range(-PI..PI));
            HalfPlane {
                point: anchor - normal * rng.random_range(0.0..0.3),
                normal,
            }
        })
        .collect()
}

fn orca_safety() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut c = Checks::default();
    let env = open_env("open", 240, 100);
    let spec = RobotSpec::default();
    let planners = PlannerConfig::default();
    c.ok(
        "robot responsibility is 1",
        planners.orca.robot_responsibility == 1.0,
    );
    let (mut collisions, mut completed) = (0, 0);
    for i in 0..100 {
        let y0 = 5.0 + rng.random_range(-0.25..0.25);
        let from = Vec2::new(rng.random_range(9.0..16.0), y0);
        let to = Vec2::new(-2.0, y0 + rng.random_range(-0.2..0.2));
        let ped = straight_track(1, from, to, rng.random_range(0.4..1.2));
        let ep = episode(
            Pose2D::new(2.0, 5.0, 0.0),
            Vec2::new(20.0, 5.0),
            vec![ped],
            60.0,
        );
        let mut planner = PlannerKind::Orca.build(&planners);
        let log = run_planner_episode(&ep, &env, &spec, planner.as_mut()).unwrap();
        let t = log.termination();
        collisions += t.pedestrian_collisions;
        completed += usize::from(t.kind == TerminationKind::Completion);
        c.ok(
            &format!("scenario {i}: {} collisions", t.pedestrian_collisions),
            t.pedestrian_collisions == 0,
        );
    }

    let v_max = 1.2;
    let mut worst_violation = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let planes = random_planes(&mut rng, v_max);
        let pref = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..1.5 * v_max);
        let v = solve_velocity_lp(&planes, pref, v_max);
        for h in &planes {
            worst_violation = worst_violation.max(h.violation(v));
        }
        c.ok("lp output exceeds v_max", v.length() <= v_max + 1e-9);
    }
    c.ok(
        &format!("lp violates a half-plane by {worst_violation:e}"),
        worst_violation <= 1e-9,
    );

    let mut worst_gap = 0.0f64;
    for _ in 0..25 {
        let planes = random_planes(&mut rng, v_max);
        let pref = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.0..1.5 * v_max);
        let v = solve_velocity_lp(&planes, pref, v_max);
        let brute = brute_projection(&planes, pref, v_max).expect("anchor is feasible");
        worst_gap = worst_gap.max(v.distance(brute));
        c.abs("lp vs brute-force projection", v.distance(brute), 0.0, 1e-3);
    }
    c.verdict(format!(
        "{collisions} collisions in 100 head-on runs ({completed} completed); \
         max plane violation {worst_violation:.1e}; max |lp - brute| {worst_gap:.1e} m/s"
    ))
}

// ---------------------------------------------------------------- directional

fn directional() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let lib = repo().join("data/crossing");
    let mut counts = Vec::new();
    for kind in [
        PlannerKind::SocialForces,
        PlannerKind::Orca,
        PlannerKind::Baseline,
    ] {
        let cfg = config(
            PlannerChoice::Bundled(kind),
            &lib,
            &tmp.path().join(kind.to_string()),
        );
        let outcome = run_benchmark(&cfg).unwrap();
        let meta = aggregate_meta(&outcome.logs).unwrap();
        counts.push((
            kind,
            meta.total_pedestrian_collisions,
            meta.success_fraction(),
        ));
    }
    let detail = counts
        .iter()
        .map(|(k, n, s)| format!("{k} {n} (success {s})"))
        .collect::<Vec<_>>()
        .join(", ");
    let (sf, orca, base) = (counts[0].1, counts[1].1, counts[2].1);
    if sf <= orca && orca <= base {
        Ok(format!("pedestrian collisions {detail}"))
    } else {
        Err(format!(
            "ordering SF <= ORCA <= Baseline violated: pedestrian collisions {detail}"
        ))
    }
}

// ---------------------------------------------------------------- lifecycle

fn forward(_: &SimState) -> VelocityCommand {
    VelocityCommand::Unicycle { v: 1.2, omega: 0.0 }
}

fn idle(_: &SimState) -> VelocityCommand {
    VelocityCommand::Unicycle { v: 0.0, omega: 0.0 }
}

fn run(ep: &Episode, env: &EnvironmentMap, client: fn(&SimState) -> VelocityCommand) -> EpisodeLog {
    let spec = RobotSpec::default().with_mode(ControlMode::Unicycle);
    let mut client = client;
    run_episode_synchronous(ep, env, &spec, &mut client).unwrap()
}

fn lifecycle() -> Verdict {
    let mut c = Checks::default();
    let open = open_env("open", 200, 100);
    let start = Pose2D::new(2.0, 5.0, 0.0);
    let stander = || {
        PedestrianTrack::new(
            AgentId(1),
            vec![
                TrackSample {
                    t: 0.0,
                    x: 5.0,
                    y: 5.2,
                },
                TrackSample {
                    t: 30.0,
                    x: 5.0,
                    y: 5.2,
                },
            ],
        )
        .unwrap()
    };

    let timeout_ep = episode(start, Vec2::new(18.0, 5.0), vec![], 2.0);
    let collide_ep = episode(start, Vec2::new(8.0, 5.0), vec![stander()], 30.0);
    let mut walled = open.clone();
    for row in 0..100 {
        walled.set_free(Cell::new(50, row), false);
    }
    let wall_ep = episode(start, Vec2::new(8.0, 5.0), vec![], 30.0);

    let t = run(&timeout_ep, &open, idle);
    let pc = run(&collide_ep, &open, forward);
    let ec = run(&wall_ep, &walled, forward);

    c.ok(
        "timeout kind",
        t.termination().kind == TerminationKind::Timeout,
    );
    c.ok("timeout after 50 ticks", t.summary.totals.ticks == 51);
    c.ok(
        "collision episode completes",
        pc.termination().kind == TerminationKind::Completion,
    );
    c.ok("collision episode fails", !pc.termination().success);
    c.ok(
        "collision counted",
        pc.termination().pedestrian_collisions == 1,
    );
    c.ok(
        "environment kind",
        ec.termination().kind == TerminationKind::EnvironmentCollision,
    );
    let states: Vec<&SimState> = ec.records.iter().map(|r| &r.state).collect();
    let touching = |s: &SimState| walled.disc_collides(s.robot.position(), s.robot.radius);
    c.ok("ends on first contact tick", {
        let n = states.len();
        touching(states[n - 1]) && states[..n - 1].iter().all(|s| !touching(s))
    });
    c.ok(
        "environment collision well before budget",
        ec.summary.totals.ticks < 100,
    );
    let same = |a: &EpisodeLog, b: &EpisodeLog| a.to_jsonl().unwrap() == b.to_jsonl().unwrap();
    c.ok("classification is deterministic", {
        same(&run(&timeout_ep, &open, idle), &t)
            && same(&run(&collide_ep, &open, forward), &pc)
            && same(&run(&wall_ep, &walled, forward), &ec)
    });

    let meta = aggregate_meta(&[t.clone(), pc.clone(), ec]).unwrap();
    c.ok(
        &format!("tuple {} != 1/1/1", meta.failures),
        meta.failures.to_string() == "1/1/1",
    );
    c.ok("success 0/3", meta.success_fraction() == "0/3");

    let ok_ep = episode(start, Vec2::new(8.0, 5.0), vec![], 30.0);
    let s = run(&ok_ep, &open, forward);
    let meta = aggregate_meta(&[s.clone(), s, pc, t]).unwrap();
    c.ok(
        "[S, S, C+1, T] success 2/4",
        meta.success_fraction() == "2/4",
    );
    c.ok(
        "[S, S, C+1, T] tuple 1/1/0",
        meta.failures.to_string() == "1/1/0",
    );
    c.ok(
        "[S, S, C+1, T] one collision",
        meta.total_pedestrian_collisions == 1,
    );
    c.verdict("Timeout, PC and EC classified; tuples 1/1/1 and 1/1/0".into())
}

// ---------------------------------------------------------------- replay

fn replay_fidelity() -> Verdict {
    let text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eth_style_tracks.txt"),
    )
    .unwrap();
    let rate = 25.0;
    let file = parse_track_file(&text, rate).unwrap();

    // independent reading of the same rows
    let mut rows: Vec<(u64, i64, f64, f64)> = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect();
    rows.sort_by_key(|r| (r.1, r.0));

    let mut c = Checks::default();
    let (mut keyframes, mut ticks_checked) = (0, 0);
    for id in [1i64, 2, 3] {
        let raw: Vec<_> = rows.iter().filter(|r| r.1 == id).collect();
        let track = PedestrianTrack::new(AgentId(id), file.samples(id)).unwrap();
        let replay = resample_track(&track, rate).unwrap();
        for r in &raw {
            // one frame per tick at 25 Hz
            let s = replay.state_at(r.0, 0.3).unwrap();
            c.ok(
                &format!("ped {id} frame {} moved", r.0),
                s.position() == Vec2::new(r.2, r.3),
            );
            keyframes += 1;
        }
        for w in raw.windows(2) {
            let (a, b) = (w[0], w[1]);
            let seg_t = (b.0 - a.0) as f64 / rate;
            let seg_v = Vec2::new((b.2 - a.2) / seg_t, (b.3 - a.3) / seg_t);
            for tick in a.0..b.0 {
                let s = replay.state_at(tick, 0.3).unwrap();
                c.abs(
                    &format!("ped {id} tick {tick} speed"),
                    s.velocity.length(),
                    seg_v.length(),
                    1e-9,
                );
                c.abs(
                    &format!("ped {id} tick {tick} vx"),
                    s.velocity.x,
                    seg_v.x,
                    1e-9,
                );
                c.abs(
                    &format!("ped {id} tick {tick} vy"),
                    s.velocity.y,
                    seg_v.y,
                    1e-9,
                );
                ticks_checked += 1;
            }
        }
        let raw_duration = (raw.last().unwrap().0 - raw[0].0) as f64 / rate;
        let replay_duration = (replay.last_tick() - replay.first_tick) as f64 / rate;
        c.abs(
            &format!("ped {id} duration"),
            replay_duration,
            raw_duration,
            1.0 / rate,
        );
    }
    c.verdict(format!(
        "{keyframes} keyframes exact, {ticks_checked} tick velocities within 1e-9"
    ))
}

// ---------------------------------------------------------------- sampler

fn flood_reachable(env: &EnvironmentMap, a: Vec2, b: Vec2) -> bool {
    let (Some(a), Some(b)) = (env.cell_of(a), env.cell_of(b)) else {
        return false;
    };
    let (w, h) = (env.width(), env.height());
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::from([a]);
    seen[a.row * w + a.col] = true;
    while let Some(cell) = queue.pop_front() {
        if cell == b {
            return true;
        }
        let (col, row) = (cell.col as i64, cell.row as i64);
        for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nc, nr) = (col + dc, row + dr);
            if nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                continue;
            }
            let next = Cell::new(nc as usize, nr as usize);
            if env.is_free(next) && !seen[next.row * w + next.col] {
                seen[next.row * w + next.col] = true;
                queue.push_back(next);
            }
        }
    }
    false
}

fn sampler() -> Verdict {
    let crossing = EpisodeLibrary::load(&repo().join("data/crossing")).unwrap();
    let mut split = EnvironmentMap::open("split", 300, 100, 0.1, Vec2::ZERO).unwrap();
    for row in 0..100 {
        split.set_free(Cell::new(150, row), false);
    }
    let mut envs: Vec<EnvironmentMap> = crossing.environments.values().cloned().collect();
    envs.push(split);
    let mut episodes = crossing.episodes.clone();
    episodes.push(Episode {
        environment: "split".into(),
        ..episode(
            Pose2D::new(2.0, 5.0, 0.0),
            Vec2::new(8.0, 5.0),
            vec![],
            60.0,
        )
    });
    let lib = EpisodeLibrary::new(envs, episodes).unwrap();

    let cfg = SamplerConfig::default();
    let mut c = Checks::default();
    c.ok("v_max is 1.2", cfg.v_max == 1.2);
    let sampled = sample_random_episodes(&lib, 100, 11, &cfg).unwrap();
    c.ok("100 episodes", sampled.len() == 100);
    let mut longest = 0.0f64;
    let mut in_split = 0;
    for ep in &sampled {
        let env = lib.environment_for(ep).unwrap();
        let start = ep.robot_start.position();
        let time = start.distance(ep.goal) / 1.2;
        longest = longest.max(time);
        c.ok(
            &format!("{}: {time:.2} s straight line", ep.name),
            time <= 25.0,
        );
        c.ok(
            &format!("{}: unreachable", ep.name),
            flood_reachable(env, start, ep.goal),
        );
        c.ok(
            &format!("{}: start blocked", ep.name),
            env.is_free_point(start),
        );
        c.ok(
            &format!("{}: goal blocked", ep.name),
            env.is_free_point(ep.goal),
        );
        in_split += usize::from(ep.environment == "split");
    }
    c.ok("both environments sampled", in_split > 0 && in_split < 100);

    let manifests = |eps: &[Episode]| -> Vec<String> {
        eps.iter()
            .map(|e| EpisodeManifest::from_episode(e).to_json().unwrap())
            .collect()
    };
    let again = sample_random_episodes(&lib, 100, 11, &cfg).unwrap();
    c.ok(
        "same seed, same manifests",
        manifests(&sampled) == manifests(&again),
    );
    let other = sample_random_episodes(&lib, 100, 12, &cfg).unwrap();
    c.ok(
        "other seed, other manifests",
        manifests(&sampled) != manifests(&other),
    );
    c.verdict(format!(
        "longest straight-line time {longest:.2} s; {in_split} episodes in the split map"
    ))
}

// ---------------------------------------------------------------- driver

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "metric oracle suite",
            limit: Some(Duration::from_secs(1)),
            run: metric_oracles,
        },
        Criterion {
            name: "TTC/CPD correctness",
            limit: Some(Duration::from_secs(10)),
            run: ttc_cpd,
        },
        Criterion {
            name: "unicycle integrator",
            limit: None,
            run: unicycle_convergence,
        },
        Criterion {
            name: "determinism",
            limit: None,
            run: determinism,
        },
        Criterion {
            name: "ORCA safety",
            limit: None,
            run: orca_safety,
        },
        Criterion {
            name: "directional replication (SF <= ORCA <= Baseline)",
            limit: Some(Duration::from_secs(120)),
            run: directional,
        },
        Criterion {
            name: "episode lifecycle",
            limit: None,
            run: lifecycle,
        },
        Criterion {
            name: "replay fidelity",
            limit: None,
            run: replay_fidelity,
        },
        Criterion {
            name: "random sampler",
            limit: None,
            run: sampler,
        },
    ];

    let mut failed = 0;
    for criterion in &criteria {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(criterion.run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = started.elapsed();
        let verdict = match (verdict, criterion.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:.0?}"))
            }
            (v, _) => v,
        };
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {} ({elapsed:.2?}): {detail}", criterion.name);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
