//! Perspective correction and the repeat-embedded payload.
//!
//! The located quadrilateral is mapped back to an upright rectangle of the
//! estimated size. The payload lives in every interior block of the marked
//! image: each of [`PAYLOAD_CAPACITY`] ring positions carries one bit as a
//! raised or lowered DFT magnitude, and extraction takes a majority vote over
//! all interior windows.

use std::fmt;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Homography, Point, Quadrilateral};
use crate::imaging::{
    apply_luma_delta, fft2_samples, homography_window, ifft2_samples, scaled_window, to_luma,
    warp_perspective, Plane, RasterImage,
};

/// `(width, length)`: mean of the horizontal and of the vertical edge lengths.
pub fn estimate_dims(q: &Quadrilateral) -> Result<(usize, usize)> {
    if !q.is_finite() || !(q.area() > 0.0) {
        return Err(Error::DegenerateGeometry("quadrilateral has no area".into()));
    }
    let w = (q.a.dist(q.b) + q.c.dist(q.d)) / 2.0;
    let l = (q.a.dist(q.c) + q.b.dist(q.d)) / 2.0;
    Ok(((w.round() as usize).max(1), (l.round() as usize).max(1)))
}

/// Solves `n x n` linear equations by Gaussian elimination with partial pivoting.
pub fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Result<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[piv][col].abs() <= 1e-12 * scale {
            return Err(Error::DegenerateHomography);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..N {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for r in (0..N).rev() {
        let s: f64 = (r + 1..N).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Homography taking the corners of `src` to the corners of a
/// `width x height` rectangle: `A -> (0, 0)`, `B -> (W, 0)`, `C -> (0, H)`,
/// `D -> (W, H)`, in continuous pixel coordinates.
pub fn solve_homography(src: &Quadrilateral, width: usize, height: usize) -> Result<Homography> {
    let (w, h) = (width as f64, height as f64);
    let dst = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)];
    homography_between(&src.corners(), &dst)
}

/// Exact four-point homography between two corner lists.
pub fn homography_between(src: &[Point; 4], dst: &[(f64, f64); 4]) -> Result<Homography> {
    let mut a = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    // unknowns: a1 b1 c1 a2 b2 c2 a0 b0
    for k in 0..4 {
        let (x, y) = (src[k].x, src[k].y);
        let (u, v) = dst[k];
        a[2 * k] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u];
        b[2 * k] = u;
        a[2 * k + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v];
        b[2 * k + 1] = v;
    }
    let s = solve_linear(a, b)?;
    let hom = Homography {
        a1: s[0],
        b1: s[1],
        c1: s[2],
        a2: s[3],
        b2: s[4],
        c2: s[5],
        a0: s[6],
        b0: s[7],
    };
    hom.check_invertible()?;
    Ok(hom)
}

/// Upright copy of the region inside `quad`, at its estimated size.
pub fn rectify(shot: &RasterImage, quad: &Quadrilateral) -> Result<RasterImage> {
    let (w, h) = estimate_dims(quad)?;
    let hom = solve_homography(quad, w, h)?;
    warp_perspective(shot, &hom, w, h)
}

/// Bit positions available in one block.
pub const PAYLOAD_CAPACITY: usize = 32;

/// Payload bits, one `0`/`1` byte each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatermarkPayload {
    pub bits: Vec<u8>,
}

impl WatermarkPayload {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.len() > PAYLOAD_CAPACITY {
            return Err(Error::PayloadCapacity {
                bits: bits.len(),
                capacity: PAYLOAD_CAPACITY,
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("payload bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    /// Four bits per hex digit, most significant first.
    pub fn from_hex(hex: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for ch in hex.trim().chars() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidInput(format!("not a hex digit: {ch:?}")))?;
            bits.extend((0..4).rev().map(|k| ((v >> k) & 1) as u8));
        }
        Self::new(bits)
    }

    /// Hex form; a trailing partial digit is padded with zero bits.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|c| {
                let v = c.iter().enumerate().fold(0u32, |acc, (k, &b)| acc | ((b as u32) << (3 - k)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for WatermarkPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// `1 - mean |w - w*|`.
pub fn nc(w: &WatermarkPayload, w_star: &WatermarkPayload) -> Result<f64> {
    if w.len() != w_star.len() || w.is_empty() {
        return Err(Error::InvalidInput(format!(
            "payload lengths differ: {} vs {}",
            w.len(),
            w_star.len()
        )));
    }
    let diff: usize = w.bits.iter().zip(&w_star.bits).filter(|(a, b)| a != b).count();
    Ok(1.0 - diff as f64 / w.len() as f64)
}

/// Allowed angle spans for payload positions, degrees: clear of both
/// localization sectors by ten degrees and of the axes, where straight
/// image edges concentrate their energy, by five.
const PAYLOAD_SPANS: [(f64, f64); 4] = [(5.0, 25.0), (65.0, 85.0), (95.0, 115.0), (155.0, 175.0)];

/// The ring bins of all payload positions for block side `l`, in position order.
pub fn payload_bins(l: usize) -> Vec<(i64, i64)> {
    let total: f64 = PAYLOAD_SPANS.iter().map(|(a, b)| b - a).sum();
    let base = l as f64 / 4.0;
    (0..PAYLOAD_CAPACITY)
        .map(|k| {
            // spread positions evenly along the concatenated spans
            let mut t = (k as f64 + 0.5) * total / PAYLOAD_CAPACITY as f64;
            let mut theta = 0.0;
            for (a, b) in PAYLOAD_SPANS {
                if t <= b - a {
                    theta = a + t;
                    break;
                }
                t -= b - a;
            }
            let r = if k % 2 == 0 { base - 2.0 } else { base + 2.0 };
            let th = theta.to_radians();
            ((r * th.cos()).round() as i64, (r * th.sin()).round() as i64)
        })
        .collect()
}

/// Smallest amplitude, in grey levels, of a one-bit sinusoid. Weaker ones
/// would vanish when the block is rounded back to integers.
pub const PAYLOAD_MIN_AMPLITUDE: f64 = 0.5;

/// Fixed phase of the one-bit sinusoid at position `k`. Block origins are
/// multiples of the period, so equal phases in every block join into one
/// continuous wave and a window reads it at any offset. Spreading the
/// phases keeps the waves from peaking together.
pub fn position_phase(k: usize) -> f64 {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    (k as f64 * GOLDEN).fract() * std::f64::consts::TAU
}

/// Payload bit carried by position `k` when the payload has `p` bits.
fn bit_of_position(k: usize, p: usize) -> usize {
    k * p / PAYLOAD_CAPACITY
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Top-left corners of the interior tiles of side `side` in a `w x h`
/// image, leaving a one-tile margin ring.
pub fn interior_tiles(w: usize, h: usize, side: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if side == 0 {
        return out;
    }
    let mut y = side;
    while y + 2 * side <= h {
        let mut x = side;
        while x + 2 * side <= w {
            out.push((x, y));
            x += side;
        }
        y += side;
    }
    out
}

/// Writes `payload` into every interior block of side `block_side`.
///
/// Each position's bin (and its conjugate mate) gets magnitude
/// `mu + sigma` (at least [`PAYLOAD_MIN_AMPLITUDE`]) for a one and
/// `max(mu - sigma / 2, 0)` for a zero, where `mu`/`sigma` describe the
/// block's magnitudes without the DC term. Ones take the phase from
/// [`position_phase`]; zeros keep theirs. Only luma changes.
pub fn embed_payload(img: &RasterImage, payload: &WatermarkPayload, block_side: usize) -> Result<RasterImage> {
    if payload.is_empty() || payload.len() > PAYLOAD_CAPACITY {
        return Err(Error::PayloadCapacity {
            bits: payload.len(),
            capacity: PAYLOAD_CAPACITY,
        });
    }
    let tiles = interior_tiles(img.width(), img.height(), block_side);
    if tiles.is_empty() {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} has no interior {block_side}-pixel block",
            img.width(),
            img.height()
        )));
    }
    let luma = to_luma(img);
    let bins = payload_bins(block_side);
    let p = payload.len();
    // a real sinusoid of amplitude A has DFT magnitude A * n^2 / 2
    let floor = PAYLOAD_MIN_AMPLITUDE * (block_side * block_side) as f64 / 2.0;
    let deltas: Vec<Vec<i32>> = tiles
        .par_iter()
        .map(|&(x0, y0)| {
            let n = block_side;
            let samples: Vec<f64> = (0..n * n)
                .map(|i| luma.get(x0 + i % n, y0 + i / n, 0) as f64)
                .collect();
            let mut spec = fft2_samples(n, &samples);
            let mags = spec.magnitudes();
            let (mu, sigma) = mean_std(mags[1..].iter().copied());
            for (k, &(u, v)) in bins.iter().enumerate() {
                let level = if payload.bits[bit_of_position(k, p)] == 1 {
                    (mu + sigma).max(floor)
                } else {
                    (mu - sigma / 2.0).max(0.0)
                };
                let c = spec.get(u, v);
                let phase = if payload.bits[bit_of_position(k, p)] == 1 {
                    position_phase(k)
                } else if c.norm() > 0.0 {
                    c.arg()
                } else {
                    0.0
                };
                let coef = Complex64::from_polar(level, phase);
                let (i, j) = (spec.index(u, v), spec.index(-u, -v));
                spec.coeffs_mut()[i] = coef;
                spec.coeffs_mut()[j] = coef.conj();
            }
            let back = ifft2_samples(&spec);
            back.iter()
                .zip(&samples)
                .map(|(&b, &s)| b.round().clamp(0.0, 255.0) as i32 - s as i32)
                .collect()
        })
        .collect();
    let mut out = img.clone();
    for (&(x0, y0), d) in tiles.iter().zip(&deltas) {
        for (i, &delta) in d.iter().enumerate() {
            if delta != 0 {
                apply_luma_delta(&mut out, x0 + i % block_side, y0 + i / block_side, delta);
            }
        }
    }
    Ok(out)
}

/// A position reads one above `mu + ONE_THRESHOLD_SIGMA * sigma`, halfway
/// between the one level `mu + sigma` and the zero level `mu - sigma / 2`.
pub const ONE_THRESHOLD_SIGMA: f64 = 0.25;

/// Windows used to score one candidate size.
const SCORE_WINDOWS: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub payload: WatermarkPayload,
    /// Mean over bits of `|ones - zeros| / votes`.
    pub confidence: f64,
    pub windows_used: usize,
    /// Per-axis factors mapping the rectified image onto the nominal size.
    pub scale: (f64, f64),
    /// Fraction of position reads that came out one.
    pub one_rate: f64,
}

/// Evenly spread subset of at most `n` items.
fn spread<T: Copy>(items: &[T], n: usize) -> Vec<T> {
    if items.len() <= n {
        return items.to_vec();
    }
    (0..n).map(|i| items[i * items.len() / n]).collect()
}

/// Rectified luma viewed at a nominal size.
struct NominalView {
    plane: Plane,
    sx: f64,
    sy: f64,
    width: usize,
    height: usize,
}

impl NominalView {
    fn new(plane: Plane, width: usize, height: usize) -> Self {
        Self {
            sx: width as f64 / plane.width as f64,
            sy: height as f64 / plane.height as f64,
            plane,
            width,
            height,
        }
    }

    fn rescaled(&self, sx: f64, sy: f64) -> Self {
        Self {
            plane: self.plane.clone(),
            sx,
            sy,
            width: (self.plane.width as f64 * sx).round() as usize,
            height: (self.plane.height as f64 * sy).round() as usize,
        }
    }

    fn tiles(&self, side: usize) -> Vec<(usize, usize)> {
        interior_tiles(self.width, self.height, side)
    }

    /// Per-window position reads.
    fn read(&self, side: usize, bins: &[(i64, i64)], origins: &[(usize, usize)]) -> Vec<Vec<bool>> {
        origins
            .par_iter()
            .map_init(Vec::new, |buf, &(x0, y0)| {
                scaled_window(&self.plane, self.sx, self.sy, x0, y0, side, buf);
                read_positions(side, buf, bins)
            })
            .collect()
    }

    /// One rate on a window subset; misread sizes move the payload waves
    /// off their bins, so the true size reads the most ones.
    fn score(&self, side: usize, bins: &[(i64, i64)]) -> f64 {
        let tiles = self.tiles(side);
        if tiles.is_empty() {
            return -1.0;
        }
        one_rate(&self.read(side, bins, &spread(&tiles, SCORE_WINDOWS)))
    }
}

/// Which payload positions of one window read as ones.
fn read_positions(side: usize, samples: &[f64], bins: &[(i64, i64)]) -> Vec<bool> {
    let spec = fft2_samples(side, samples);
    let mags = spec.magnitudes();
    let (mu, sigma) = mean_std(mags[1..].iter().copied());
    let thr = mu + ONE_THRESHOLD_SIGMA * sigma;
    bins.iter().map(|&(u, v)| spec.get(u, v).norm() > thr).collect()
}

fn one_rate(reads: &[Vec<bool>]) -> f64 {
    let n: usize = reads.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    reads.iter().flatten().filter(|&&b| b).count() as f64 / n as f64
}

/// Reads a `bits`-long payload by majority vote over interior windows.
///
/// The rectified image is viewed at the nominal content size when known,
/// so the payload waves land on their bins; otherwise at its own size.
pub fn extract_payload(
    rectified: &RasterImage,
    block_side: usize,
    bits: usize,
    nominal: Option<(usize, usize)>,
) -> Result<Extraction> {
    if bits == 0 || bits > PAYLOAD_CAPACITY {
        return Err(Error::PayloadCapacity {
            bits,
            capacity: PAYLOAD_CAPACITY,
        });
    }
    let plane = Plane::from_luma(&to_luma(rectified))?;
    let (w, h) = match nominal {
        Some((w, h)) if w > 0 && h > 0 => (w, h),
        _ => (plane.width, plane.height),
    };
    let view = NominalView::new(plane, w, h);
    let tiles = view.tiles(block_side);
    if tiles.is_empty() {
        return Err(Error::ImageTooSmall(format!(
            "{w}x{h} fits no interior {block_side}-pixel window"
        )));
    }
    let bins = payload_bins(block_side);
    let reads = view.read(block_side, &bins, &tiles);
    let mut ones = vec![0usize; bits];
    let mut total = vec![0usize; bits];
    for w in &reads {
        for (k, &one) in w.iter().enumerate() {
            let b = bit_of_position(k, bits);
            total[b] += 1;
            ones[b] += one as usize;
        }
    }
    let payload = WatermarkPayload::new(
        ones.iter()
            .zip(&total)
            .map(|(&o, &t)| (2 * o > t) as u8)
            .collect(),
    )?;
    let confidence = ones
        .iter()
        .zip(&total)
        .map(|(&o, &t)| (2.0 * o as f64 - t as f64).abs() / t as f64)
        .sum::<f64>()
        / bits as f64;
    Ok(Extraction {
        payload,
        confidence,
        windows_used: tiles.len(),
        scale: (view.sx, view.sy),
        one_rate: one_rate(&reads),
    })
}

/// Best of `n + 1` evenly spaced values in `[from, to]`; earlier wins ties.
fn argmax_on(from: f64, to: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((to - from) / step).round().max(0.0) as usize;
    let mut best = (from, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = from + i as f64 * step;
        let r = f(x);
        if r > best.1 {
            best = (x, r);
        }
    }
    best.0
}

/// Nominal content size of a rectified image, refined from a rough guess.
///
/// `guess` holds per-axis factors from the rectified to the nominal size
/// and `span` the relative uncertainty. A uniform factor is searched first,
/// coarse then fine, then the height factor alone, since perspective
/// foreshortening and box error skew the rectified aspect ratio, and
/// finally each axis once more.
pub fn search_nominal_size(
    rectified: &RasterImage,
    block_side: usize,
    guess: (f64, f64),
    span: f64,
) -> Result<(usize, usize)> {
    if !(guess.0 > 0.0 && guess.1 > 0.0 && span >= 0.0 && span < 1.0) {
        return Err(Error::InvalidInput(format!("bad size guess {guess:?} +- {span}")));
    }
    let plane = Plane::from_luma(&to_luma(rectified))?;
    let (pw, ph) = (plane.width, plane.height);
    let base = NominalView::new(plane, pw, ph);
    let bins = payload_bins(block_side);
    let score = |sx: f64, sy: f64| base.rescaled(sx, sy).score(block_side, &bins);
    let coarse = (span / 8.0).max(0.005);
    let m = argmax_on(1.0 - span, 1.0 + span, coarse, |m| score(guess.0 * m, guess.1 * m));
    let m = argmax_on(m - coarse, m + coarse, coarse / 4.0, |m| score(guess.0 * m, guess.1 * m));
    let (sx, sy) = (guess.0 * m, guess.1 * m);
    let a = argmax_on(0.9, 1.1, 0.01, |a| score(sx, sy * a));
    let sy = sy * a;
    let sx = argmax_on(sx * 0.99, sx * 1.01, sx * 0.0025, |x| score(x, sy));
    let sy = argmax_on(sy * 0.99, sy * 1.01, sy * 0.0025, |y| score(sx, y));
    Ok(((pw as f64 * sx).round() as usize, (ph as f64 * sy).round() as usize))
}

/// Corner steps of the payload-guided refinement, in nominal blocks as
/// seen in the shot.
const REFINE_STEPS: [f64; 3] = [0.25, 0.125, 0.0625];

/// Sweeps over the eight corner coordinates per step size.
const REFINE_PASSES: usize = 3;

/// One rate of the windows `tiles` read through the map from the nominal
/// `size` rectangle onto `quad` in the shot.
fn quad_score(
    plane: &Plane,
    quad: &Quadrilateral,
    size: (usize, usize),
    side: usize,
    bins: &[(i64, i64)],
    tiles: &[(usize, usize)],
) -> f64 {
    let (w, h) = (size.0 as f64, size.1 as f64);
    let rect = [
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(0.0, h),
        Point::new(w, h),
    ];
    let c = quad.corners();
    let dst = [(c[0].x, c[0].y), (c[1].x, c[1].y), (c[2].x, c[2].y), (c[3].x, c[3].y)];
    let Ok(to_shot) = homography_between(&rect, &dst) else {
        return -1.0;
    };
    let reads: Vec<Vec<bool>> = tiles
        .par_iter()
        .map_init(Vec::new, |buf, &(x0, y0)| {
            homography_window(plane, &to_shot, x0, y0, side, buf);
            read_positions(side, buf, bins)
        })
        .collect();
    one_rate(&reads)
}

/// Nudges the corners of `quad` so that the payload, read at the nominal
/// `size`, shows the most ones.
///
/// Located boxes are off by a fraction of a block, which bends the payload
/// waves of the rectified image off their bins in places. Coordinate
/// descent over the eight corner coordinates with shrinking steps undoes
/// most of that. A payload without ones gives a flat score and leaves the
/// quad as it was.
pub fn refine_quad(
    shot: &RasterImage,
    quad: &Quadrilateral,
    size: (usize, usize),
    block_side: usize,
) -> Result<Quadrilateral> {
    let tiles = interior_tiles(size.0, size.1, block_side);
    if tiles.is_empty() {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} fits no interior {block_side}-pixel window",
            size.0, size.1
        )));
    }
    let tiles = spread(&tiles, SCORE_WINDOWS);
    let plane = Plane::from_luma(&to_luma(shot))?;
    let bins = payload_bins(block_side);
    let score = |q: &Quadrilateral| quad_score(&plane, q, size, block_side, &bins, &tiles);
    let block_px = block_side as f64 * quad.a.dist(quad.b).max(quad.c.dist(quad.d)) / size.0 as f64;
    let mut best = (*quad, score(quad));
    for step in REFINE_STEPS.map(|f| f * block_px) {
        for _ in 0..REFINE_PASSES {
            let mut moved = false;
            for coord in 0..8 {
                for dir in [-1.0, 1.0] {
                    let mut c = best.0.corners();
                    let p = &mut c[coord / 2];
                    if coord % 2 == 0 {
                        p.x += dir * step;
                    } else {
                        p.y += dir * step;
                    }
                    let q = Quadrilateral::new(c[0], c[1], c[2], c[3]);
                    let s = score(&q);
                    if s > best.1 {
                        best = (q, s);
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                break;
            }
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_examples() {
        assert_eq!(estimate_dims(&Quadrilateral::rect(3.0, 4.0, 100.0, 50.0)).unwrap(), (100, 50));
        let trap = Quadrilateral::new(
            Point::new(0.0, 0.0),
            Point::new(120.0, 0.0),
            Point::new(20.0, 50.0),
            Point::new(100.0, 50.0),
        );
        // slanted sides are longer than 50
        let (w, _) = estimate_dims(&trap).unwrap();
        assert_eq!(w, 100);
        let sq = Quadrilateral::rect(0.0, 0.0, 100.0, 100.0).map(|p| p.rotate(0.4));
        assert_eq!(estimate_dims(&sq).unwrap(), (100, 100));
    }

    #[test]
    fn identity_and_translation() {
        let r = Quadrilateral::rect(0.0, 0.0, 64.0, 32.0);
        let h = solve_homography(&r, 64, 32).unwrap();
        for (got, want) in [(h.a1, 1.0), (h.b1, 0.0), (h.c1, 0.0), (h.a2, 0.0), (h.b2, 1.0), (h.c2, 0.0), (h.a0, 0.0), (h.b0, 0.0)] {
            assert!((got - want).abs() < 1e-12);
        }
        let t = Quadrilateral::rect(5.0, 7.0, 64.0, 32.0);
        let h = solve_homography(&t, 64, 32).unwrap();
        assert!((h.c1 + 5.0).abs() < 1e-9 && (h.c2 + 7.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_corners_are_singular() {
        let q = Quadrilateral::new(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(3.0, 3.0),
        );
        assert!(solve_homography(&q, 10, 10).is_err());
    }

    #[test]
    fn full_frame_rectify_is_identity() {
        let img = crate::synth::natural_rgb(40, 30, 2);
        let out = rectify(&img, &Quadrilateral::rect(0.0, 0.0, 40.0, 30.0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn hex_round_trip() {
        let p = WatermarkPayload::from_hex("a5c3").unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.to_string(), "1010010111000011");
        assert_eq!(p.to_hex(), "a5c3");
        assert!(WatermarkPayload::from_hex("xyz").is_err());
        assert!(WatermarkPayload::from_hex("123456789").is_err());
    }

    #[test]
    fn nc_examples() {
        let w = WatermarkPayload::from_hex("a5c3").unwrap();
        let inv = WatermarkPayload::from_hex("5a3c").unwrap();
        assert_eq!(nc(&w, &w).unwrap(), 1.0);
        assert_eq!(nc(&w, &inv).unwrap(), 0.0);
        let mut one = w.clone();
        one.bits[3] ^= 1;
        assert_eq!(nc(&w, &one).unwrap(), 0.9375);
        let short = WatermarkPayload::from_hex("a").unwrap();
        assert!(nc(&w, &short).is_err());
    }

    #[test]
    fn payload_positions_are_distinct_and_clear_of_the_sectors() {
        for l in [64, 128, 256] {
            let bins = payload_bins(l);
            let mut sorted = bins.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), PAYLOAD_CAPACITY, "l = {l}");
            for &(u, v) in &bins {
                let th = (v as f64).atan2(u as f64).to_degrees();
                assert!(!(28.0..=62.0).contains(&th) && !(118.0..=152.0).contains(&th), "{th}");
                assert!(th > 3.0 && th < 177.0 && (th - 90.0).abs() > 3.0, "{th}");
            }
        }
    }

    #[test]
    fn pristine_round_trip() {
        let img = crate::synth::natural_rgb(640, 512, 4);
        let w = WatermarkPayload::from_hex("b7e1").unwrap();
        let marked = embed_payload(&img, &w, 128).unwrap();
        let got = extract_payload(&marked, 128, 16, None).unwrap();
        assert_eq!(nc(&w, &got.payload).unwrap(), 1.0);
        assert_eq!(got.windows_used, 3 * 2);
        let zeros = WatermarkPayload::new(vec![0; 16]).unwrap();
        let marked = embed_payload(&img, &zeros, 128).unwrap();
        assert_eq!(extract_payload(&marked, 128, 16, None).unwrap().payload, zeros);
    }

    #[test]
    fn payload_waves_survive_a_shifted_grid() {
        let img = crate::synth::natural_rgb(896, 640, 5);
        let w = WatermarkPayload::from_hex("5a3c").unwrap();
        let marked = embed_payload(&img, &w, 128).unwrap();
        // windows now straddle four embedding blocks each
        let shifted = marked.crop(64, 64, 832, 576).unwrap();
        let got = extract_payload(&shifted, 128, 16, None).unwrap();
        assert_eq!(got.payload, w);
    }

    #[test]
    fn size_search_undoes_a_rescale() {
        let img = crate::synth::natural_rgb(1024, 768, 6);
        let w = WatermarkPayload::from_hex("c3a5").unwrap();
        let marked = embed_payload(&img, &w, 128).unwrap();
        let big = crate::io::to_dynamic(&marked).resize_exact(1229, 883, image::imageops::FilterType::Triangle);
        let big = crate::io::from_dynamic(big);
        let (nw, nh) = search_nominal_size(&big, 128, (0.9, 0.9), 0.2).unwrap();
        // scores plateau while the waves stay within half a bin, about 2% at this radius
        assert!(nw.abs_diff(1024) <= 20 && nh.abs_diff(768) <= 15, "{nw}x{nh}");
        let got = extract_payload(&big, 128, 16, Some((nw, nh))).unwrap();
        assert_eq!(got.payload, w);
        assert!(search_nominal_size(&big, 128, (0.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn no_interior_is_an_error() {
        let img = RasterImage::filled(300, 300, 1, 100);
        let w = WatermarkPayload::from_hex("f").unwrap();
        assert!(embed_payload(&img, &w, 128).is_err());
        assert!(extract_payload(&img, 128, 4, None).is_err());
    }
}
