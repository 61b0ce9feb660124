//! Schematic top-down frames.

use std::path::{Path, PathBuf};

use image::{ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::EnvironmentMap;
use crate::sim::{EpisodeLog, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub background: [u8; 3],
    pub obstacle: [u8; 3],
    pub robot: [u8; 3],
    pub heading: [u8; 3],
    pub pedestrian: [u8; 3],
    pub goal: [u8; 3],
    pub trail: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: [255, 255, 255],
            obstacle: [64, 64, 64],
            robot: [31, 119, 180],
            heading: [255, 215, 0],
            pedestrian: [214, 39, 40],
            goal: [44, 160, 44],
            trail: [158, 202, 225],
        }
    }
}

/// Camera and styling for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameSpec {
    pub pixels_per_meter: f64,
    /// Image size in pixels; `None` covers the whole map.
    pub size: Option<(u32, u32)>,
    /// World position of the image's lower-left corner; `None` uses the map origin.
    pub window_origin: Option<Vec2>,
    pub palette: Palette,
    /// Past robot positions drawn behind the agents, in ticks. 0 disables trails.
    pub trail_length: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            pixels_per_meter: 20.0,
            size: None,
            window_origin: None,
            palette: Palette::default(),
            trail_length: 50,
        }
    }
}

/// Goal marker and trail positions that are not part of [`SimState`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlay {
    pub goal: Option<(Vec2, f64)>,
    pub trail: Vec<Vec2>,
}

struct Camera {
    origin: Vec2,
    ppm: f64,
    width: u32,
    height: u32,
}

impl Camera {
    fn new(env: &EnvironmentMap, spec: &FrameSpec) -> Result<Camera> {
        if !(spec.pixels_per_meter > 0.0 && spec.pixels_per_meter.is_finite()) {
            return Err(Error::invalid(format!(
                "pixels per meter must be > 0, got {}",
                spec.pixels_per_meter
            )));
        }
        let ppm = spec.pixels_per_meter;
        let extent = env.extent();
        let (width, height) = spec.size.unwrap_or((
            (extent.x * ppm).round().max(1.0) as u32,
            (extent.y * ppm).round().max(1.0) as u32,
        ));
        if width == 0 || height == 0 {
            return Err(Error::Render("image size must be non-zero".into()));
        }
        let origin = spec.window_origin.unwrap_or(env.origin);
        let far = origin + Vec2::new(width as f64 / ppm, height as f64 / ppm);
        let map_far = env.origin + extent;
        let slack = 0.5 / ppm;
        if origin.x < env.origin.x - slack
            || origin.y < env.origin.y - slack
            || far.x > map_far.x + slack
            || far.y > map_far.y + slack
        {
            return Err(Error::Render(format!(
                "camera window ({:.2}, {:.2})-({:.2}, {:.2}) leaves map `{}`",
                origin.x, origin.y, far.x, far.y, env.name
            )));
        }
        Ok(Camera {
            origin,
            ppm,
            width,
            height,
        })
    }

    /// World coordinates of a pixel centre.
    fn world(&self, px: u32, py: u32) -> Vec2 {
        Vec2::new(
            self.origin.x + (px as f64 + 0.5) / self.ppm,
            self.origin.y + (self.height as f64 - py as f64 - 0.5) / self.ppm,
        )
    }

    /// Pixel rectangle that may contain points within `r` of `c`.
    fn bounds(&self, c: Vec2, r: f64) -> Option<(u32, u32, u32, u32)> {
        let x0 = ((c.x - r - self.origin.x) * self.ppm).floor().max(0.0);
        let x1 = ((c.x + r - self.origin.x) * self.ppm)
            .ceil()
            .min(self.width as f64 - 1.0);
        let top = self.origin.y + self.height as f64 / self.ppm;
        let y0 = ((top - c.y - r) * self.ppm).floor().max(0.0);
        let y1 = ((top - c.y + r) * self.ppm)
            .ceil()
            .min(self.height as f64 - 1.0);
        (x0 <= x1 && y0 <= y1).then_some((x0 as u32, x1 as u32, y0 as u32, y1 as u32))
    }

    fn paint_where(
        &self,
        img: &mut RgbImage,
        c: Vec2,
        r: f64,
        color: [u8; 3],
        inside: impl Fn(Vec2) -> bool,
    ) {
        if let Some((x0, x1, y0, y1)) = self.bounds(c, r) {
            for py in y0..=y1 {
                for px in x0..=x1 {
                    if inside(self.world(px, py)) {
                        img.put_pixel(px, py, Rgb(color));
                    }
                }
            }
        }
    }

    fn disc(&self, img: &mut RgbImage, c: Vec2, r: f64, color: [u8; 3]) {
        self.paint_where(img, c, r, color, |p| p.distance(c) <= r);
    }
}

/// Draws obstacles, the goal ring, the trail, pedestrians and the robot
/// (with a heading line) in that order. Pure function of its inputs.
pub fn render_frame(
    state: &SimState,
    env: &EnvironmentMap,
    spec: &FrameSpec,
    overlay: &Overlay,
) -> Result<RgbImage> {
    if !env.contains_point(state.robot.position()) {
        return Err(Error::Render(format!(
            "robot at ({:.2}, {:.2}) is outside map `{}`",
            state.robot.pose.x, state.robot.pose.y, env.name
        )));
    }
    let cam = Camera::new(env, spec)?;
    let pal = &spec.palette;
    let mut img = RgbImage::from_pixel(cam.width, cam.height, Rgb(pal.background));
    for py in 0..cam.height {
        for px in 0..cam.width {
            if !env.is_free_point(cam.world(px, py)) {
                img.put_pixel(px, py, Rgb(pal.obstacle));
            }
        }
    }
    if let Some((goal, radius)) = overlay.goal {
        let half = 0.75 / cam.ppm;
        cam.paint_where(&mut img, goal, radius + half, pal.goal, |p| {
            (p.distance(goal) - radius).abs() <= half
        });
    }
    let dot = 1.0 / cam.ppm;
    for &p in overlay.trail.iter().rev().take(spec.trail_length).rev() {
        cam.disc(&mut img, p, dot, pal.trail);
    }
    for ped in &state.pedestrians {
        cam.disc(&mut img, ped.position(), ped.radius, pal.pedestrian);
    }
    let robot = &state.robot;
    let c = robot.position();
    cam.disc(&mut img, c, robot.radius, pal.robot);
    let dir = Vec2::new(robot.pose.heading.cos(), robot.pose.heading.sin());
    let half = 0.5 / cam.ppm;
    cam.paint_where(&mut img, c, robot.radius, pal.heading, |p| {
        let rel = p - c;
        let along = rel.dot(dir);
        along >= 0.0 && along <= robot.radius - half && rel.cross(dir).abs() <= half
    });
    Ok(img)
}

/// PNG bytes of a frame.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Render(e.to_string()))?;
    Ok(out.into_inner())
}

/// Renders every tick of `log` into `dir/%06d.png`, spreading ticks over
/// the available cores. Returns the written paths in tick order.
pub fn render_log_frames(
    log: &EpisodeLog,
    env: &EnvironmentMap,
    spec: &FrameSpec,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let positions: Vec<Vec2> = log
        .records
        .iter()
        .map(|r| r.state.robot.position())
        .collect();
    let goal = Some((log.header.goal, log.header.goal_radius));
    let n = log.records.len();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(n.max(1));
    let chunk = n.div_ceil(workers);
    let paths: Vec<PathBuf> = (0..n).map(|i| dir.join(format!("{i:06}.png"))).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (positions, paths) = (&positions, &paths);
                s.spawn(move || -> Result<()> {
                    for i in (w * chunk)..((w + 1) * chunk).min(n) {
                        let start = (i + 1).saturating_sub(spec.trail_length);
                        let overlay = Overlay {
                            goal,
                            trail: positions[start..=i].to_vec(),
                        };
                        let img = render_frame(&log.records[i].state, env, spec, &overlay)?;
                        let bytes = encode_png(&img)?;
                        std::fs::write(&paths[i], bytes).map_err(|e| Error::io(&paths[i], e))?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("render worker panicked"))
    })?;
    Ok(paths)
}
