//! Synthetic screen shots with ground truth.
//!
//! The marked image is tilted about its horizontal centre line, projected
//! through a pinhole camera, pasted into a 4:3 background canvas sized so the
//! content covers the requested area fraction, and then degraded by an
//! illumination curve, Gaussian noise and optionally JPEG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Homography, Point, Quadrilateral};
use crate::imaging::{warp_into, RasterImage};
use crate::io::jpeg_round_trip;
use crate::synth;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    Solid { rgb: [u8; 3] },
    Texture,
    Clutter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    /// Fraction of the shot covered by the content, in (0, 1).
    pub area_proportion: f64,
    /// Tilt of the screen away from the camera, degrees in [0, 90).
    pub angle_deg: f64,
    /// Shot pixels per content pixel at the content centre, at least 1.
    /// Ignored when `sensor_pixels` is set.
    pub magnification: f64,
    /// Fixed camera resolution in pixels; the magnification then follows
    /// from the area proportion, as it does when stepping back from a screen.
    pub sensor_pixels: Option<u64>,
    pub illumination_gain: f64,
    pub illumination_gamma: f64,
    /// Standard deviation of additive noise, grey levels.
    pub noise_sigma: f64,
    pub jpeg_quality: Option<u8>,
    pub background: Background,
    pub seed: u64,
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            area_proportion: 0.5,
            angle_deg: 0.0,
            magnification: 1.0,
            sensor_pixels: None,
            illumination_gain: 1.0,
            illumination_gamma: 1.0,
            noise_sigma: 0.0,
            jpeg_quality: None,
            background: Background::Solid { rgb: [0, 0, 0] },
            seed: 0,
        }
    }
}

impl ShotConfig {
    /// A typical desk capture with a 16 MP camera: cluttered surroundings,
    /// mild lighting change, sensor noise and JPEG storage.
    pub fn realistic(area_proportion: f64, angle_deg: f64, seed: u64) -> Self {
        Self {
            area_proportion,
            angle_deg,
            sensor_pixels: Some(16_000_000),
            illumination_gain: 0.95,
            illumination_gamma: 1.1,
            noise_sigma: 2.0,
            jpeg_quality: Some(90),
            background: Background::Clutter,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.area_proportion > 0.0 && self.area_proportion < 1.0) {
            return bad("area proportion must lie in (0, 1)");
        }
        if !(self.angle_deg >= 0.0 && self.angle_deg < 90.0) {
            return bad("angle offset must lie in [0, 90)");
        }
        if self.sensor_pixels.is_none() && !(self.magnification >= 1.0 && self.magnification.is_finite()) {
            return bad("magnification must be at least 1");
        }
        if self.sensor_pixels == Some(0) {
            return bad("sensor must have pixels");
        }
        if !(self.illumination_gain > 0.0 && self.illumination_gamma > 0.0) {
            return bad("illumination gain and gamma must be positive");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        if matches!(self.jpeg_quality, Some(q) if q == 0 || q > 100) {
            return bad("jpeg quality must lie in 1..=100");
        }
        Ok(())
    }
}

/// Placement of the content inside the shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotGeometry {
    /// Content pixel coordinates to shot pixel coordinates.
    pub homography: Homography,
    pub width: usize,
    pub height: usize,
    pub truth: Quadrilateral,
}

/// Camera-to-screen distance in units of the content's longer side.
const CAMERA_DISTANCE: f64 = 1.0;

/// Shot pixels per content pixel at the content centre.
pub fn effective_magnification(content_w: usize, content_h: usize, cfg: &ShotConfig) -> Result<f64> {
    cfg.validate()?;
    let Some(sensor) = cfg.sensor_pixels else {
        return Ok(cfg.magnification);
    };
    let unit = ShotConfig {
        magnification: 1.0,
        sensor_pixels: None,
        ..cfg.clone()
    };
    let g = shot_geometry_with(content_w, content_h, &unit, 1.0)?;
    Ok((sensor as f64 * cfg.area_proportion / g.truth.area()).sqrt())
}

pub fn shot_geometry(content_w: usize, content_h: usize, cfg: &ShotConfig) -> Result<ShotGeometry> {
    let m = effective_magnification(content_w, content_h, cfg)?;
    shot_geometry_with(content_w, content_h, cfg, m)
}

fn shot_geometry_with(content_w: usize, content_h: usize, cfg: &ShotConfig, m: f64) -> Result<ShotGeometry> {
    if content_w == 0 || content_h == 0 {
        return Err(Error::InvalidInput("empty content".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5407_0001);
    let (w, h) = (content_w as f64, content_h as f64);
    let dist = CAMERA_DISTANCE * w.max(h);
    let theta = cfg.angle_deg.to_radians();
    // which edge recedes is part of the seeded scene
    let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let (sin, cos) = (theta.sin(), theta.cos());
    // centred content (X, Y, 0), rotated about the X axis, seen from distance `dist`
    let centred = [
        [m * dist, 0.0, -m * dist * w / 2.0],
        [0.0, m * dist * cos, -m * dist * cos * h / 2.0],
        [0.0, -s * sin, dist + s * sin * h / 2.0],
    ];
    let proj = Homography::from_matrix(centred)?;
    let map = |p: Point| {
        proj.apply(p)
            .ok_or_else(|| Error::DegenerateGeometry("content crosses the camera plane".into()))
    };
    let raw = Quadrilateral::new(
        map(Point::new(0.0, 0.0))?,
        map(Point::new(w, 0.0))?,
        map(Point::new(0.0, h))?,
        map(Point::new(w, h))?,
    );
    let xs = raw.corners().map(|p| p.x);
    let ys = raw.corners().map(|p| p.y);
    let (min_x, max_x) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
    let (min_y, max_y) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
    let canvas_area = raw.area() / cfg.area_proportion;
    let width = (canvas_area * 4.0 / 3.0).sqrt().round() as usize;
    let height = (width as f64 * 0.75).round() as usize;
    let (bw, bh) = (max_x - min_x, max_y - min_y);
    if bw > width as f64 || bh > height as f64 {
        return Err(Error::AreaUnreachable(cfg.area_proportion));
    }
    let ox = rng.random_range(0..=(width as f64 - bw).floor() as usize) as f64;
    let oy = rng.random_range(0..=(height as f64 - bh).floor() as usize) as f64;
    let shift = Homography::translation(ox - min_x, oy - min_y);
    let homography = shift.compose(&proj)?;
    let truth = raw.map(|p| Point::new(p.x + ox - min_x, p.y + oy - min_y));
    Ok(ShotGeometry {
        homography,
        width,
        height,
        truth,
    })
}

fn background(cfg: &ShotConfig, w: usize, h: usize, channels: usize) -> RasterImage {
    let seed = cfg.seed ^ 0x0bac_0001;
    let img = match &cfg.background {
        Background::Solid { rgb } => {
            let data = (0..w * h).flat_map(|_| *rgb).collect();
            RasterImage::new(w, h, 3, data).expect("sizes agree")
        }
        // rendered at half size: cheaper, and the scene is slightly out of focus anyway
        Background::Texture => upscale(synth::texture_rgb(w.div_ceil(2), h.div_ceil(2), seed), w, h),
        Background::Clutter => upscale(synth::natural_rgb(w.div_ceil(2), h.div_ceil(2), seed), w, h),
    };
    if channels == 1 {
        crate::imaging::to_luma(&img)
    } else {
        img
    }
}

fn upscale(img: RasterImage, w: usize, h: usize) -> RasterImage {
    crate::io::from_dynamic(crate::io::to_dynamic(&img).resize_exact(
        w as u32,
        h as u32,
        image::imageops::FilterType::Triangle,
    ))
}

/// `gain * (v / 255)^gamma * 255` for every byte value.
pub fn illumination_lut(gain: f64, gamma: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        *out = (gain * (v as f64 / 255.0).powf(gamma) * 255.0)
            .round()
            .clamp(0.0, 255.0) as u8;
    }
    lut
}

fn add_noise(img: &mut RasterImage, sigma: f64, seed: u64) {
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let row_len = img.width() * img.channels();
    img.data_mut()
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(row, px)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0015_e000 ^ (row as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            for v in px {
                let n: f64 = normal.sample(&mut rng);
                *v = (*v as f64 + n).round().clamp(0.0, 255.0) as u8;
            }
        });
}

/// Renders one shot of `marked`; returns it with the exact content outline.
pub fn simulate_shot(marked: &RasterImage, cfg: &ShotConfig) -> Result<(RasterImage, Quadrilateral)> {
    let m = effective_magnification(marked.width(), marked.height(), cfg)?;
    // Shrinking content is low-passed first, as the sensor would integrate it.
    let shrunk;
    let (marked, m) = if m < 1.0 {
        let (w, h) = crate::imaging::scaled_dims(marked.width(), marked.height(), m);
        shrunk = crate::io::from_dynamic(crate::io::to_dynamic(marked).resize_exact(
            w as u32,
            h as u32,
            image::imageops::FilterType::Triangle,
        ));
        (&shrunk, m * marked.width() as f64 / w as f64)
    } else {
        (marked, m)
    };
    let geo = shot_geometry_with(marked.width(), marked.height(), cfg, m)?;
    let mut shot = background(cfg, geo.width, geo.height, marked.channels());
    let inv = geo.homography.inverse()?;
    let corners = geo.truth.corners();
    let x0 = corners.iter().map(|p| p.x).fold(f64::MAX, f64::min).floor().max(0.0) as usize;
    let y0 = corners.iter().map(|p| p.y).fold(f64::MAX, f64::min).floor().max(0.0) as usize;
    let x1 = corners.iter().map(|p| p.x).fold(f64::MIN, f64::max).ceil() as usize;
    let y1 = corners.iter().map(|p| p.y).fold(f64::MIN, f64::max).ceil() as usize;
    warp_into(marked, &inv, &mut shot, |x, y| x >= x0 && x < x1 && y >= y0 && y < y1);
    if cfg.illumination_gain != 1.0 || cfg.illumination_gamma != 1.0 {
        let lut = illumination_lut(cfg.illumination_gain, cfg.illumination_gamma);
        shot.data_mut().par_iter_mut().for_each(|v| *v = lut[*v as usize]);
    }
    if cfg.noise_sigma > 0.0 {
        add_noise(&mut shot, cfg.noise_sigma, cfg.seed);
    }
    if let Some(q) = cfg.jpeg_quality {
        shot = jpeg_round_trip(&shot, q)?;
    }
    Ok((shot, geo.truth))
}

/// Ground truth written next to each simulated shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotTruth {
    pub quad: Quadrilateral,
    pub width: usize,
    pub height: usize,
    pub content_width: usize,
    pub content_height: usize,
    pub config: ShotConfig,
}
