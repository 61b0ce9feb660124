//! Environment rasters: a portable graymap plus a JSON sidecar that gives
//! resolution and world origin.

use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::EnvironmentMap;

/// Pixels at or above this gray level are traversable.
pub const FREE_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentManifest {
    pub name: String,
    /// Graymap path, relative to the manifest's directory.
    pub image: String,
    /// Meters per cell.
    pub resolution: f64,
    /// World coordinates of the lower-left corner of the raster.
    #[serde(default)]
    pub origin: [f64; 2],
}

/// Converts a graymap into a traversability grid. The top image row maps
/// to the largest y.
pub fn map_from_image(
    name: &str,
    img: &GrayImage,
    resolution: f64,
    origin: Vec2,
) -> Result<EnvironmentMap> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut free = vec![false; w * h];
    for (x, y, px) in img.enumerate_pixels() {
        let row = h - 1 - y as usize;
        free[row * w + x as usize] = px.0[0] >= FREE_THRESHOLD;
    }
    EnvironmentMap::new(name, w, h, resolution, origin, free)
}

/// Inverse of [`map_from_image`]: free cells 255, obstacles 0.
pub fn map_to_image(map: &EnvironmentMap) -> GrayImage {
    let (w, h) = (map.width() as u32, map.height() as u32);
    GrayImage::from_fn(w, h, |x, y| {
        let cell = crate::map::Cell::new(x as usize, (h - 1 - y) as usize);
        image::Luma([if map.is_free(cell) { 255 } else { 0 }])
    })
}

/// Loads an environment from its sidecar manifest.
pub fn load_environment(manifest_path: &Path) -> Result<EnvironmentMap> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: EnvironmentManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    load_environment_raster(&dir.join(&manifest.image), &manifest)
}

pub fn load_environment_raster(
    image_path: &Path,
    manifest: &EnvironmentManifest,
) -> Result<EnvironmentMap> {
    let raster_err = |message: String| Error::Raster {
        path: image_path.to_path_buf(),
        message,
    };
    let img = image::open(image_path)
        .map_err(|e| raster_err(e.to_string()))?
        .to_luma8();
    let origin = Vec2::new(manifest.origin[0], manifest.origin[1]);
    map_from_image(&manifest.name, &img, manifest.resolution, origin)
        .map_err(|e| raster_err(e.to_string()))
}

/// Writes `<dir>/<name>.pgm` and `<dir>/<name>.json`.
pub fn save_environment(map: &EnvironmentMap, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let image_name = format!("{}.pgm", map.name);
    let image_path = dir.join(&image_name);
    map_to_image(map)
        .save_with_format(&image_path, image::ImageFormat::Pnm)
        .map_err(|e| Error::Raster {
            path: image_path.clone(),
            message: e.to_string(),
        })?;
    let manifest = EnvironmentManifest {
        name: map.name.clone(),
        image: image_name,
        resolution: map.resolution,
        origin: [map.origin.x, map.origin.y],
    };
    let manifest_path = dir.join(format!("{}.json", map.name));
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
