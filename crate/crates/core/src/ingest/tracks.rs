//! Whitespace-separated `frame_id ped_id x y` track files and tick-rate
//! resampling.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::{AgentId, AgentState, PedestrianTrack, Pose2D, TrackSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRow {
    pub frame: i64,
    pub x: f64,
    pub y: f64,
}

/// Parsed observations grouped by pedestrian id, each group in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrackFile {
    pub frame_rate: f64,
    pub tracks: BTreeMap<i64, Vec<RawRow>>,
}

impl RawTrackFile {
    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Samples of one pedestrian with `t = frame / frame_rate`.
    pub fn samples(&self, id: i64) -> Vec<TrackSample> {
        self.tracks
            .get(&id)
            .map(|rows| {
                rows.iter()
                    .map(|r| TrackSample {
                        t: r.frame as f64 / self.frame_rate,
                        x: r.x,
                        y: r.y,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Every pedestrian whose samples fall inside `[start, end]`, shifted so
    /// `start` maps to time zero. Pedestrians with fewer than two samples in
    /// the window are dropped.
    pub fn window(&self, start: f64, end: f64) -> Vec<(i64, Vec<TrackSample>)> {
        let eps = 1e-9;
        self.tracks
            .keys()
            .filter_map(|&id| {
                let samples: Vec<TrackSample> = self
                    .samples(id)
                    .into_iter()
                    .filter(|s| s.t >= start - eps && s.t <= end + eps)
                    .map(|s| TrackSample {
                        t: s.t - start,
                        ..s
                    })
                    .collect();
                (samples.len() >= 2).then_some((id, samples))
            })
            .collect()
    }
}

fn parse_number(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what}: `{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what}: `{field}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_integer(field: &str, line: usize, what: &str) -> Result<i64> {
    let v = parse_number(field, line, what)?;
    if v.fract() != 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("{what}: `{field}` is not an integer"),
        });
    }
    Ok(v as i64)
}

/// Parses a track file. Blank lines and `#` comments are skipped. Frame
/// ids may be written as integral floats (`780.00`), as in the public
/// pedestrian datasets.
pub fn parse_track_file(text: &str, frame_rate: f64) -> Result<RawTrackFile> {
    if !(frame_rate > 0.0) || !frame_rate.is_finite() {
        return Err(Error::invalid(format!(
            "frame rate must be > 0, got {frame_rate}"
        )));
    }
    let mut tracks: BTreeMap<i64, Vec<RawRow>> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected 4 columns (frame_id ped_id x y), found {}",
                    fields.len()
                ),
            });
        }
        let frame = parse_integer(fields[0], line, "frame_id")?;
        let id = parse_integer(fields[1], line, "ped_id")?;
        let x = parse_number(fields[2], line, "x")?;
        let y = parse_number(fields[3], line, "y")?;
        let rows = tracks.entry(id).or_default();
        if let Some(last) = rows.last() {
            if frame == last.frame {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate observation for frame {frame}, pedestrian {id}"),
                });
            }
            if frame < last.frame {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "frame {frame} for pedestrian {id} precedes earlier frame {}",
                        last.frame
                    ),
                });
            }
        }
        rows.push(RawRow { frame, x, y });
    }
    Ok(RawTrackFile { frame_rate, tracks })
}

/// A pedestrian track sampled at every simulator tick it is present for.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTrack {
    pub id: AgentId,
    pub first_tick: u64,
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub headings: Vec<f64>,
}

impl ReplayTrack {
    pub fn last_tick(&self) -> u64 {
        self.first_tick + self.positions.len() as u64 - 1
    }

    pub fn is_present(&self, tick: u64) -> bool {
        tick >= self.first_tick && tick <= self.last_tick()
    }

    pub fn state_at(&self, tick: u64, radius: f64) -> Option<AgentState> {
        if !self.is_present(tick) {
            return None;
        }
        let i = (tick - self.first_tick) as usize;
        let p = self.positions[i];
        Some(AgentState {
            id: self.id,
            pose: Pose2D::new(p.x, p.y, self.headings[i]),
            velocity: self.velocities[i],
            radius,
        })
    }
}

const TIME_EPS: f64 = 1e-9;

/// Piecewise-linear position at `t`; keyframes are returned verbatim.
fn interpolate(samples: &[TrackSample], t: f64) -> Vec2 {
    let seg = match samples.binary_search_by(|s| s.t.total_cmp(&t)) {
        Ok(i) => return samples[i].position(),
        Err(i) => i.clamp(1, samples.len() - 1),
    };
    let (a, b) = (samples[seg - 1], samples[seg]);
    if (t - a.t).abs() <= TIME_EPS {
        return a.position();
    }
    if (t - b.t).abs() <= TIME_EPS {
        return b.position();
    }
    let frac = (t - a.t) / (b.t - a.t);
    a.position() + (b.position() - a.position()) * frac
}

/// Resamples a recorded track onto the simulator tick grid (`t = k / rate`).
pub fn resample_track(track: &PedestrianTrack, tick_rate: f64) -> Result<ReplayTrack> {
    if !(tick_rate > 0.0) {
        return Err(Error::invalid(format!(
            "tick rate must be > 0, got {tick_rate}"
        )));
    }
    let samples = track.samples();
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "track {} has a single sample; velocity is undefined",
            track.id
        )));
    }
    let first = (track.entry_time() * tick_rate - TIME_EPS).ceil().max(0.0) as u64;
    let last_f = (track.exit_time() * tick_rate + TIME_EPS).floor();
    if last_f < first as f64 {
        return Err(Error::invalid(format!(
            "track {} does not span a single tick at {tick_rate} Hz",
            track.id
        )));
    }
    let last = last_f as u64;
    let positions: Vec<Vec2> = (first..=last)
        .map(|k| interpolate(samples, k as f64 / tick_rate))
        .collect();

    let n = positions.len();
    let velocities: Vec<Vec2> = if n == 1 {
        let t = first as f64 / tick_rate;
        let seg = samples
            .partition_point(|s| s.t <= t)
            .clamp(1, samples.len() - 1);
        let (a, b) = (samples[seg - 1], samples[seg]);
        vec![(b.position() - a.position()) / (b.t - a.t)]
    } else {
        (0..n)
            .map(|i| {
                if i + 1 < n {
                    (positions[i + 1] - positions[i]) * tick_rate
                } else {
                    (positions[i] - positions[i - 1]) * tick_rate
                }
            })
            .collect()
    };

    let moving = |v: &Vec2| v.length() > 1e-9;
    let mut heading = velocities
        .iter()
        .find(|v| moving(v))
        .map_or(0.0, |v| v.angle());
    let headings = velocities
        .iter()
        .map(|v| {
            if moving(v) {
                heading = v.angle();
            }
            heading
        })
        .collect();

    Ok(ReplayTrack {
        id: track.id,
        first_tick: first,
        positions,
        velocities,
        headings,
    })
}
