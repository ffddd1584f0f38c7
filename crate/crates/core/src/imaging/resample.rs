//! Bilinear resampling: uniform rescaling and projective warping.

use super::{Plane, RasterImage};
use crate::error::Result;
use crate::geometry::{Homography, Point};

/// Bilinear sample at continuous index position `(x, y)` (pixel centres at
/// integers), clamping to the edge samples.
#[inline]
fn bilinear(get: impl Fn(usize, usize) -> f32, w: usize, h: usize, x: f64, y: f64) -> f32 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let top = get(x0, y0) * (1.0 - fx) + get(x1, y0) * fx;
    let bottom = get(x0, y1) * (1.0 - fx) + get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Output size of a uniform rescale by `scale`, never below one pixel.
pub fn scaled_dims(width: usize, height: usize, scale: f64) -> (usize, usize) {
    let w = ((width as f64 * scale).round() as usize).max(1);
    let h = ((height as f64 * scale).round() as usize).max(1);
    (w, h)
}

/// Bilinear rescale of a float plane. A scale of exactly one returns a copy.
pub fn resize_plane(src: &Plane, scale: f64) -> Plane {
    let (w, h) = scaled_dims(src.width, src.height, scale);
    if w == src.width && h == src.height {
        return src.clone();
    }
    let sx = src.width as f64 / w as f64;
    let sy = src.height as f64 / h as f64;
    let xs: Vec<f64> = (0..w).map(|i| (i as f64 + 0.5) * sx - 0.5).collect();
    let mut out = Plane::zeros(w, h);
    for j in 0..h {
        let y = (j as f64 + 0.5) * sy - 0.5;
        let row = &mut out.data[j * w..(j + 1) * w];
        for (i, v) in row.iter_mut().enumerate() {
            *v = bilinear(|a, b| src.at(a, b), src.width, src.height, xs[i], y);
        }
    }
    out
}

/// Window of `side` pixels at `(x0, y0)` of the plane rescaled by
/// `(sx, sy)`, sampled bilinearly without building the rescaled plane.
pub fn scaled_window(src: &Plane, sx: f64, sy: f64, x0: usize, y0: usize, side: usize, out: &mut Vec<f64>) {
    out.clear();
    let xs: Vec<f64> = (x0..x0 + side).map(|i| (i as f64 + 0.5) / sx - 0.5).collect();
    for j in y0..y0 + side {
        let y = (j as f64 + 0.5) / sy - 0.5;
        out.extend(
            xs.iter()
                .map(|&x| bilinear(|a, b| src.at(a, b), src.width, src.height, x, y) as f64),
        );
    }
}

/// Window of `side` pixels at `(x0, y0)` of the view whose pixel centres
/// map into `src` through `to_src`, sampled bilinearly.
pub fn homography_window(
    src: &Plane,
    to_src: &Homography,
    x0: usize,
    y0: usize,
    side: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    for j in y0..y0 + side {
        for i in x0..x0 + side {
            let v = to_src
                .apply(Point::new(i as f64 + 0.5, j as f64 + 0.5))
                .map_or(0.0, |p| {
                    bilinear(|a, b| src.at(a, b), src.width, src.height, p.x - 0.5, p.y - 0.5)
                });
            out.push(v as f64);
        }
    }
}

/// Warps `img` through the forward map `h` (source to output coordinates).
///
/// Each output pixel centre is pulled back through `h^-1` and sampled
/// bilinearly; pull-backs that land outside the source are filled with 0.
pub fn warp_perspective(
    img: &RasterImage,
    h: &Homography,
    out_width: usize,
    out_height: usize,
) -> Result<RasterImage> {
    let inv = h.inverse()?;
    let mut out = RasterImage::filled(out_width, out_height, img.channels(), 0);
    warp_into(img, &inv, &mut out, |_, _| true);
    Ok(out)
}

/// Samples `src` through the output-to-source map `inv` into every pixel of
/// `dst` for which `want(x, y)` holds and whose pull-back lands inside `src`.
/// Returns the number of pixels written.
pub(crate) fn warp_into(
    src: &RasterImage,
    inv: &Homography,
    dst: &mut RasterImage,
    want: impl Fn(usize, usize) -> bool,
) -> usize {
    let (sw, sh, ch) = src.dims();
    let (dw, dh) = (dst.width(), dst.height());
    let mut written = 0;
    for j in 0..dh {
        for i in 0..dw {
            if !want(i, j) {
                continue;
            }
            let Some(p) = inv.apply(Point::new(i as f64 + 0.5, j as f64 + 0.5)) else {
                continue;
            };
            if !(p.x >= 0.0 && p.y >= 0.0 && p.x < sw as f64 && p.y < sh as f64) {
                continue;
            }
            for c in 0..ch {
                let v = bilinear(
                    |a, b| src.get(a, b, c) as f32,
                    sw,
                    sh,
                    p.x - 0.5,
                    p.y - 0.5,
                );
                dst.set(i, j, c, v.round().clamp(0.0, 255.0) as u8);
            }
            written += 1;
        }
    }
    written
}
