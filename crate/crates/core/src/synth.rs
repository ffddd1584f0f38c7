//! Seeded procedural test imagery.
//!
//! Images mix multi-octave value noise (roughly 1/f), hard-edged shapes and
//! a little sensor grain, which is close enough to photographic content for
//! the localization statistics to behave as they do on real covers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::imaging::RasterImage;

fn smooth(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[-1, 1]` on a lattice with spacing `cell`.
fn value_noise(w: usize, h: usize, cell: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let lattice: Vec<f32> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let inv = 1.0 / cell as f32;
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        let fy = y as f32 * inv;
        let y0 = fy as usize;
        let ty = smooth(fy - y0 as f32);
        for x in 0..w {
            let fx = x as f32 * inv;
            let x0 = fx as usize;
            let tx = smooth(fx - x0 as f32);
            let g = |i: usize, j: usize| lattice[j * gw + i];
            let top = g(x0, y0) + (g(x0 + 1, y0) - g(x0, y0)) * tx;
            let bot = g(x0, y0 + 1) + (g(x0 + 1, y0 + 1) - g(x0, y0 + 1)) * tx;
            out[y * w + x] = top + (bot - top) * ty;
        }
    }
    out
}

/// Sum of octaves from `max_cell` down to `min_cell`, amplitude proportional to cell size.
pub fn fractal_noise(w: usize, h: usize, min_cell: usize, max_cell: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0f32; w * h];
    let mut cell = max_cell.max(1);
    let mut norm = 0f32;
    while cell >= min_cell.max(1) {
        let amp = (cell as f32).powf(0.9);
        norm += amp;
        for (o, n) in out.iter_mut().zip(value_noise(w, h, cell, &mut rng)) {
            *o += amp * n;
        }
        if cell == 1 {
            break;
        }
        cell /= 2;
    }
    for o in out.iter_mut() {
        *o /= norm;
    }
    out
}

enum Shape {
    Rect { x0: f32, y0: f32, x1: f32, y1: f32 },
    Ellipse { cx: f32, cy: f32, rx: f32, ry: f32 },
}

impl Shape {
    fn contains(&self, x: f32, y: f32) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Ellipse { cx, cy, rx, ry } => {
                let dx = (x - cx) / rx;
                let dy = (y - cy) / ry;
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    fn bounds(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let (x0, y0, x1, y1) = match *self {
            Shape::Rect { x0, y0, x1, y1 } => (x0, y0, x1, y1),
            Shape::Ellipse { cx, cy, rx, ry } => (cx - rx, cy - ry, cx + rx, cy + ry),
        };
        let c = |v: f32, m: usize| (v.max(0.0) as usize).min(m);
        (c(x0, w), c(y0, h), c((x1 + 1.0).max(0.0), w), c((y1 + 1.0).max(0.0), h))
    }
}

/// A photograph-like RGB image.
pub fn natural_rgb(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let scale = w.max(h);
    let max_cell = (scale / 4).next_power_of_two().max(8);
    let base = fractal_noise(w, h, 6, max_cell, rng.random());
    let mut planes: Vec<Vec<f32>> = Vec::with_capacity(3);
    let mean: f32 = rng.random_range(95.0..160.0);
    let contrast: f32 = rng.random_range(55.0..85.0);
    for _ in 0..3 {
        let tint = fractal_noise(w, h, 16, max_cell, rng.random());
        let offset: f32 = rng.random_range(-20.0..20.0);
        planes.push(
            base.iter()
                .zip(&tint)
                .map(|(&b, &t)| mean + offset + contrast * b + 30.0 * t)
                .collect(),
        );
    }

    let shapes = rng.random_range(12..28) * (w * h).div_ceil(512 * 512).min(6);
    for _ in 0..shapes {
        let cx = rng.random_range(0.0..w as f32);
        let cy = rng.random_range(0.0..h as f32);
        let rx = rng.random_range(8.0..(scale as f32 / 6.0).max(9.0));
        let ry = rng.random_range(8.0..(scale as f32 / 6.0).max(9.0));
        let shape = if rng.random_bool(0.5) {
            Shape::Rect {
                x0: cx - rx,
                y0: cy - ry,
                x1: cx + rx,
                y1: cy + ry,
            }
        } else {
            Shape::Ellipse { cx, cy, rx, ry }
        };
        let color = [
            rng.random_range(20.0..235.0f32),
            rng.random_range(20.0..235.0f32),
            rng.random_range(20.0..235.0f32),
        ];
        let alpha = rng.random_range(0.35..0.9f32);
        let (bx0, by0, bx1, by1) = shape.bounds(w, h);
        for y in by0..by1 {
            for x in bx0..bx1 {
                if shape.contains(x as f32 + 0.5, y as f32 + 0.5) {
                    for (c, p) in planes.iter_mut().enumerate() {
                        let v = &mut p[y * w + x];
                        *v = *v * (1.0 - alpha) + color[c] * alpha;
                    }
                }
            }
        }
    }

    let grain = Normal::new(0.0f32, 1.5).expect("valid sigma");
    let mut data = vec![0u8; w * h * 3];
    for i in 0..w * h {
        for c in 0..3 {
            let v = planes[c][i] + grain.sample(&mut rng);
            data[i * 3 + c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RasterImage::new(w, h, 3, data).expect("dims are consistent")
}

/// Luma of [`natural_rgb`].
pub fn natural_luma(w: usize, h: usize, seed: u64) -> RasterImage {
    crate::imaging::to_luma(&natural_rgb(w, h, seed))
}

/// Smooth, low-contrast texture used as a backdrop.
pub fn texture_rgb(w: usize, h: usize, seed: u64) -> RasterImage {
    let n = fractal_noise(w, h, 8, (w.max(h) / 2).next_power_of_two().max(8), seed);
    let mut data = Vec::with_capacity(w * h * 3);
    for v in n {
        let g = (90.0 + 45.0 * v).round().clamp(0.0, 255.0) as u8;
        data.extend_from_slice(&[g, g.saturating_sub(6), g.saturating_add(4)]);
    }
    RasterImage::new(w, h, 3, data).expect("dims are consistent")
}
