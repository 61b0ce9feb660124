//! Regenerates the bundled episode libraries under `data/`.
//!
//! ```text
//! cargo run -p crowdbench --example generate_data -- data
//! ```
//!
//! Output is a pure function of the constants below.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crowdbench::geometry::Vec2;
use crowdbench::ingest::{save_environment, EpisodeManifest};
use crowdbench::map::{Cell, EnvironmentMap};
use crowdbench::model::{Pose2D, TrackSection};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keyframe rate of the synthetic recordings, like the ETH annotations.
const FRAME_RATE: f64 = 2.5;

fn walled(name: &str, w: f64, h: f64, res: f64) -> EnvironmentMap {
    let (cw, ch) = ((w / res).round() as usize, (h / res).round() as usize);
    let mut map = EnvironmentMap::open(name, cw, ch, res, Vec2::ZERO).unwrap();
    for c in 0..cw {
        map.set_free(Cell::new(c, 0), false);
        map.set_free(Cell::new(c, ch - 1), false);
    }
    for r in 0..ch {
        map.set_free(Cell::new(0, r), false);
        map.set_free(Cell::new(cw - 1, r), false);
    }
    map
}

fn block(map: &mut EnvironmentMap, lo: Vec2, hi: Vec2) {
    let res = map.resolution;
    for r in (lo.y / res) as usize..(hi.y / res) as usize {
        for c in (lo.x / res) as usize..(hi.x / res) as usize {
            map.set_free(Cell::new(c, r), false);
        }
    }
}

/// A straight walk from `from` to `to` at `speed`, starting at `t0`,
/// with keyframes every `1 / FRAME_RATE` seconds.
struct Walk {
    from: Vec2,
    to: Vec2,
    speed: f64,
    t0: f64,
}

fn write_tracks(walks: &[Walk]) -> String {
    let mut rows = Vec::new();
    for (i, walk) in walks.iter().enumerate() {
        let id = i + 1;
        let len = (walk.to - walk.from).length();
        let first = (walk.t0 * FRAME_RATE).ceil() as u64;
        let mut frame = first;
        loop {
            let t = frame as f64 / FRAME_RATE - walk.t0;
            let s = (walk.speed * t).min(len);
            let p = walk.from + (walk.to - walk.from) * (s / len);
            rows.push((frame, id, p));
            if s >= len {
                break;
            }
            frame += 1;
        }
    }
    rows.sort_by_key(|&(f, id, _)| (f, id));
    let mut out = String::new();
    for (f, id, p) in rows {
        writeln!(out, "{f} {id} {:.4} {:.4}", p.x, p.y).unwrap();
    }
    out
}

fn write_episode(root: &Path, manifest: &EpisodeManifest) {
    let dir = root.join("episodes");
    fs::create_dir_all(&dir).unwrap();
    fs::write(
        dir.join(format!("{}.json", manifest.name)),
        manifest.to_json().unwrap(),
    )
    .unwrap();
}

fn section(file: &str, end: f64) -> TrackSection {
    TrackSection {
        track_file: file.into(),
        frame_rate: FRAME_RATE,
        start_time: 0.0,
        end_time: end,
    }
}

/// Pedestrians cross a 24 m x 16 m plaza north-south and south-north
/// while a few walk head-on against the robot along its corridor.
fn crossing(root: &Path) {
    let mut map = walled("plaza", 24.0, 16.0, 0.1);
    block(&mut map, Vec2::new(11.0, 1.0), Vec2::new(13.0, 3.0));
    block(&mut map, Vec2::new(11.0, 13.0), Vec2::new(13.0, 15.0));
    save_environment(&map, &root.join("environments")).unwrap();
    fs::create_dir_all(root.join("tracks")).unwrap();

    for k in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
        let lane_y = 8.0;
        let mut walks = Vec::new();
        for _ in 0..28 {
            let x = rng.random_range(5.0..19.0);
            let drift = rng.random_range(-1.5..1.5);
            let north = rng.random_bool(0.5);
            let (a, b) = if north { (1.2, 14.8) } else { (14.8, 1.2) };
            walks.push(Walk {
                from: Vec2::new(x, a),
                to: Vec2::new(x + drift, b),
                speed: rng.random_range(0.9..1.5),
                t0: rng.random_range(0.0..20.0),
            });
        }
        for _ in 0..5 {
            let y = lane_y + rng.random_range(-0.6..0.6);
            walks.push(Walk {
                from: Vec2::new(22.8, y),
                to: Vec2::new(1.2, y + rng.random_range(-0.5..0.5)),
                speed: rng.random_range(1.0..1.4),
                t0: rng.random_range(0.0..12.0),
            });
        }
        let file = format!("tracks/crossing_{k}.txt");
        fs::write(root.join(&file), write_tracks(&walks)).unwrap();
        let sy = lane_y + (k as f64 - 2.0) * 0.5;
        write_episode(
            root,
            &EpisodeManifest {
                name: format!("crossing_{k}"),
                environment: "plaza".into(),
                robot_start: Pose2D::new(1.5, sy, 0.0),
                goal: Vec2::new(22.5, 16.0 - sy),
                goal_radius: 0.3,
                time_budget: 60.0,
                tick_rate: 25.0,
                pedestrian_radius: 0.3,
                pedestrians: vec![section(&file, 45.0)],
            },
        );
    }
}

/// Three short corridor episodes with light two-way traffic.
fn demo(root: &Path) {
    let mut map = walled("corridor", 16.0, 6.0, 0.1);
    block(&mut map, Vec2::new(7.5, 0.0), Vec2::new(8.5, 1.6));
    save_environment(&map, &root.join("environments")).unwrap();
    fs::create_dir_all(root.join("tracks")).unwrap();
    let walks = [
        Walk {
            from: Vec2::new(15.0, 3.2),
            to: Vec2::new(1.0, 3.2),
            speed: 1.1,
            t0: 0.0,
        },
        Walk {
            from: Vec2::new(1.0, 4.5),
            to: Vec2::new(15.0, 4.5),
            speed: 1.3,
            t0: 2.0,
        },
        Walk {
            from: Vec2::new(15.0, 2.2),
            to: Vec2::new(1.0, 2.6),
            speed: 0.9,
            t0: 5.0,
        },
        Walk {
            from: Vec2::new(6.0, 5.4),
            to: Vec2::new(10.0, 0.8),
            speed: 0.8,
            t0: 1.0,
        },
    ];
    fs::write(root.join("tracks/corridor.txt"), write_tracks(&walks)).unwrap();
    for (i, (start, goal)) in [
        (Pose2D::new(1.0, 3.0, 0.0), Vec2::new(15.0, 3.0)),
        (
            Pose2D::new(15.0, 4.0, std::f64::consts::PI),
            Vec2::new(1.0, 2.0),
        ),
        (Pose2D::new(2.0, 1.0, 0.5), Vec2::new(13.0, 5.0)),
    ]
    .into_iter()
    .enumerate()
    {
        write_episode(
            root,
            &EpisodeManifest {
                name: format!("demo_{i}"),
                environment: "corridor".into(),
                robot_start: start,
                goal,
                goal_radius: 0.3,
                time_budget: 40.0,
                tick_rate: 25.0,
                pedestrian_radius: 0.3,
                pedestrians: vec![section("tracks/corridor.txt", 30.0)],
            },
        );
    }
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let out = Path::new(&out);
    for (name, build) in [("crossing", crossing as fn(&Path)), ("demo", demo)] {
        let root = out.join(name);
        if root.exists() {
            fs::remove_dir_all(&root).unwrap();
        }
        build(&root);
        println!("wrote {}", root.display());
    }
}
