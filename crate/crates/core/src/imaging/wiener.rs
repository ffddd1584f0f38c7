//! Adaptive local Wiener filtering and the residual it leaves behind.
//!
//! The estimator is the classical pixel-wise one: local mean and variance over
//! a square window, a global noise variance taken as the mean of all local
//! variances, and a per-pixel gain `max(var - noise, 0) / max(var, noise)`.
//! Borders replicate the edge samples, so constant images stay constant.

use super::{Plane, RasterImage};
use crate::error::{Error, Result};

/// `img - wiener(img)` for a luma raster.
pub fn wiener_residual(img: &RasterImage, window: usize) -> Result<Plane> {
    let plane = Plane::from_luma(img)?;
    wiener_residual_plane(&plane, window)
}

pub fn wiener_residual_plane(img: &Plane, window: usize) -> Result<Plane> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "wiener window must be odd and >= 3, got {window}"
        )));
    }
    if window > img.width || window > img.height {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} image is smaller than the {window}x{window} wiener window",
            img.width, img.height
        )));
    }
    let (w, h) = (img.width, img.height);
    let r = (window / 2) as isize;
    let area = (window * window) as f64;

    // Horizontal box sums of x and x^2 with replicated borders.
    let mut hs = vec![0f64; w * h];
    let mut hs2 = vec![0f64; w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0f64;
            let mut s2 = 0f64;
            for dx in -r..=r {
                let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let v = row[xx] as f64;
                s += v;
                s2 += v * v;
            }
            hs[y * w + x] = s;
            hs2[y * w + x] = s2;
        }
    }

    let mut mean = vec![0f32; w * h];
    let mut var = vec![0f32; w * h];
    let mut var_total = 0f64;
    for y in 0..h {
        for x in 0..w {
            let mut s = 0f64;
            let mut s2 = 0f64;
            for dy in -r..=r {
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                s += hs[yy * w + x];
                s2 += hs2[yy * w + x];
            }
            let m = s / area;
            let v = (s2 / area - m * m).max(0.0);
            mean[y * w + x] = m as f32;
            var[y * w + x] = v as f32;
            var_total += v;
        }
    }
    drop(hs);
    drop(hs2);

    let noise = (var_total / (w * h) as f64) as f32;
    let mut out = Plane::zeros(w, h);
    for i in 0..w * h {
        let x = img.data[i];
        let m = mean[i];
        let v = var[i];
        let denom = v.max(noise);
        let filtered = if denom > 0.0 {
            m + (v - noise).max(0.0) / denom * (x - m)
        } else {
            m
        };
        out.data[i] = x - filtered;
    }
    Ok(out)
}
