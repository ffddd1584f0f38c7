//! Blind localization of marked margins inside a shot.
//!
//! The shot is rescaled over a range of factors; at each scale the adaptive
//! Wiener residual is scanned with a sliding window. Each window compares the
//! strongest DFT magnitudes in the group-A sector against those in the
//! group-B sector and emits a signed intensity: positive where the A signature
//! dominates, negative for B, zero where neither clearly wins. The spread of
//! each heat map drives the scale decision.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::embedder::{inclusive_range, MarkParams};
use crate::error::{Error, Result};
use crate::imaging::{resize_plane, to_luma, wiener_residual_plane, Plane, RasterImage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    /// Block side the marks were embedded with.
    pub block_side: usize,
    pub window_side: usize,
    pub stride: usize,
    /// Minimum `|N1 - N2|` for a window to count as marked.
    pub t_ihm: i32,
    /// Angular widening of each sector on both ends, degrees.
    pub psi_deg: f64,
    /// How many of the strongest magnitudes per sector enter the comparison.
    pub top_k: usize,
    pub wiener_window: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_step: f64,
    /// Interior SIM maxima below this fraction of the largest SIM are not peaks.
    pub min_peak_ratio: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self::from_mark(&MarkParams::default())
    }
}

impl DetectParams {
    pub fn from_mark(mark: &MarkParams) -> Self {
        Self {
            block_side: mark.block_side,
            window_side: mark.block_side,
            stride: mark.block_side / 2,
            t_ihm: 4,
            psi_deg: 5.0,
            top_k: 45,
            wiener_window: 3,
            radius_min: mark.radius_min,
            radius_max: mark.radius_max,
            angle_min_deg: mark.angle_min_deg,
            angle_max_deg: mark.angle_max_deg,
            scale_min: 0.2,
            scale_max: 1.0,
            scale_step: 0.1,
            min_peak_ratio: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.window_side < 8 || self.stride == 0 {
            return bad("window side must be >= 8 and stride positive");
        }
        if !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_step > 0.0) {
            return bad("scale range must be positive and ordered");
        }
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        let lo = self.angle_min_deg - self.psi_deg;
        let hi = self.angle_max_deg + self.psi_deg;
        if !(lo > 0.0 && hi < 90.0) {
            return bad("widened sector must stay inside (0, 90) degrees");
        }
        Ok(())
    }

    /// Scales in scan order, largest first.
    pub fn scales(&self) -> Vec<f64> {
        let mut s = inclusive_range(self.scale_min, self.scale_max, self.scale_step);
        s.reverse();
        // keep the values tidy (0.7 rather than 0.7000000000000001)
        s.iter().map(|v| (v * 1e6).round() / 1e6).collect()
    }
}

/// Bin offsets `(u, v)` of the widened group sectors at detection window size.
///
/// Only the `v > 0` half-plane is listed; magnitudes of real input are
/// conjugate-symmetric, so mates would only duplicate values.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSets {
    pub window_side: usize,
    pub set_a: Vec<(i64, i64)>,
    pub set_b: Vec<(i64, i64)>,
}

pub fn detection_sets(params: &DetectParams) -> Result<DetectionSets> {
    params.validate()?;
    let k = params.window_side as f64 / params.block_side as f64;
    let r1 = params.radius_min * k;
    let r2 = params.radius_max * k;
    let lo = params.angle_min_deg - params.psi_deg;
    let hi = params.angle_max_deg + params.psi_deg;
    let reach = r2.ceil() as i64;
    let mut set_a = Vec::new();
    let mut set_b = Vec::new();
    for v in 1..=reach {
        for u in -reach..=reach {
            let rho = (u as f64).hypot(v as f64);
            if rho < r1 - 1e-9 || rho > r2 + 1e-9 {
                continue;
            }
            let theta = (v as f64).atan2(u as f64).to_degrees();
            if theta >= lo - 1e-9 && theta <= hi + 1e-9 {
                set_a.push((u, v));
            } else if theta >= lo + 90.0 - 1e-9 && theta <= hi + 90.0 + 1e-9 {
                set_b.push((u, v));
            }
        }
    }
    Ok(DetectionSets {
        window_side: params.window_side,
        set_a,
        set_b,
    })
}

/// Outcome of the blind detector on one window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowScore {
    /// `N1 - N2`: above-pivot count in sector A minus that in sector B.
    pub d: i32,
    /// Signed intensity written to the heat map.
    pub value: f64,
}

/// Compares the two sectors' magnitude lists (reordered in place).
///
/// The top `top_k` of each list are kept; the pivot is their pooled mean;
/// `N`/`C` are the count and sum of each list's entries at or above the
/// pivot. The window value is zero when `|d| < t_ihm`, otherwise
/// `C_dominant * d`, so its sign says which group dominates.
pub fn score_magnitudes(a: &mut [f64], b: &mut [f64], t_ihm: i32, top_k: usize) -> WindowScore {
    let desc = |x: &f64, y: &f64| y.total_cmp(x);
    a.sort_unstable_by(desc);
    b.sort_unstable_by(desc);
    let a = &a[..top_k.min(a.len())];
    let b = &b[..top_k.min(b.len())];
    let n = a.len() + b.len();
    if n == 0 {
        return WindowScore::default();
    }
    let pivot = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / n as f64;
    let (n1, c1) = above(a, pivot);
    let (n2, c2) = above(b, pivot);
    let d = n1 as i32 - n2 as i32;
    let value = if d.abs() < t_ihm {
        0.0
    } else if d > 0 {
        c1 * d as f64
    } else {
        c2 * d as f64
    };
    WindowScore { d, value }
}

fn above(sorted_desc: &[f64], pivot: f64) -> (usize, f64) {
    let mut n = 0;
    let mut c = 0.0;
    for &m in sorted_desc {
        if m >= pivot {
            n += 1;
            c += m;
        } else {
            break;
        }
    }
    (n, c)
}

/// Computes the sector magnitudes of square windows.
///
/// Only the DFT columns that the sectors touch are transformed, and pairs of
/// real rows share one complex row transform.
pub struct SectorAnalyzer {
    side: usize,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    rows: Vec<Complex64>,
    packed: Vec<Complex64>,
    column: Vec<Complex64>,
    /// Storage column (0..side) of every column the sectors use.
    columns: Vec<usize>,
    /// For each sector bin: (position in `columns`, storage row).
    lookup_a: Vec<(usize, usize)>,
    lookup_b: Vec<(usize, usize)>,
    mags_a: Vec<f64>,
    mags_b: Vec<f64>,
}

impl SectorAnalyzer {
    pub fn new(sets: &DetectionSets) -> Self {
        let side = sets.window_side;
        let fft = FftPlanner::new().plan_fft_forward(side);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let wrap = |x: i64| x.rem_euclid(side as i64) as usize;
        let mut columns: Vec<usize> = sets
            .set_a
            .iter()
            .chain(&sets.set_b)
            .map(|&(u, _)| wrap(u))
            .collect();
        columns.sort_unstable();
        columns.dedup();
        let pos = |u: i64| columns.binary_search(&wrap(u)).expect("column listed");
        let lookup_a = sets.set_a.iter().map(|&(u, v)| (pos(u), wrap(v))).collect();
        let lookup_b = sets.set_b.iter().map(|&(u, v)| (pos(u), wrap(v))).collect();
        Self {
            side,
            fft,
            scratch,
            rows: vec![Complex64::default(); side * columns.len()],
            packed: vec![Complex64::default(); side],
            column: vec![Complex64::default(); side],
            mags_a: Vec::with_capacity(sets.set_a.len()),
            mags_b: Vec::with_capacity(sets.set_b.len()),
            columns,
            lookup_a,
            lookup_b,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Fills the per-sector magnitude lists for a row-major `side*side` window.
    pub fn analyze(&mut self, window: &[f64]) -> (&mut [f64], &mut [f64]) {
        let n = self.side;
        assert_eq!(window.len(), n * n);
        let nc = self.columns.len();
        // Row transforms, two real rows per complex FFT.
        let mut r = 0;
        while r < n {
            let second = r + 1 < n;
            for x in 0..n {
                let im = if second { window[(r + 1) * n + x] } else { 0.0 };
                self.packed[x] = Complex64::new(window[r * n + x], im);
            }
            self.fft
                .process_with_scratch(&mut self.packed, &mut self.scratch);
            for (ci, &k) in self.columns.iter().enumerate() {
                let zk = self.packed[k];
                let zm = self.packed[(n - k) % n].conj();
                self.rows[ci * n + r] = (zk + zm) * 0.5;
                if second {
                    let diff = zk - zm;
                    // (zk - zm) / 2i
                    self.rows[ci * n + r + 1] = Complex64::new(diff.im * 0.5, -diff.re * 0.5);
                }
            }
            r += 2;
        }
        // Column transforms for the needed columns only.
        for ci in 0..nc {
            self.column.copy_from_slice(&self.rows[ci * n..(ci + 1) * n]);
            self.fft
                .process_with_scratch(&mut self.column, &mut self.scratch);
            self.rows[ci * n..(ci + 1) * n].copy_from_slice(&self.column);
        }
        self.mags_a.clear();
        for &(ci, v) in &self.lookup_a {
            self.mags_a.push(self.rows[ci * n + v].norm());
        }
        self.mags_b.clear();
        for &(ci, v) in &self.lookup_b {
            self.mags_b.push(self.rows[ci * n + v].norm());
        }
        (&mut self.mags_a, &mut self.mags_b)
    }
}

/// Runs the blind detector on one residual window.
pub fn blind_detect_window(
    analyzer: &mut SectorAnalyzer,
    window: &[f64],
    t_ihm: i32,
    top_k: usize,
) -> WindowScore {
    let (a, b) = analyzer.analyze(window);
    score_magnitudes(a, b, t_ihm, top_k)
}

/// Signed per-window intensity grid at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityHeatMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major heat values.
    pub values: Vec<f64>,
    /// Row-major `N1 - N2` counts behind each value.
    pub d: Vec<i32>,
    /// Nominal scale factor.
    pub scale: f64,
    /// Size of the rescaled image the windows slid over.
    pub scaled_width: usize,
    pub scaled_height: usize,
    /// Size of the original shot.
    pub shot_width: usize,
    pub shot_height: usize,
    pub window_side: usize,
    pub stride: usize,
}

impl IntensityHeatMap {
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Population standard deviation of the heat values (0 when empty).
    pub fn spread(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        (self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 1.0;
        }
        self.values.iter().filter(|&&v| v == 0.0).count() as f64 / self.values.len() as f64
    }

    /// Actual horizontal and vertical resampling factors.
    pub fn axis_scales(&self) -> (f64, f64) {
        (
            self.scaled_width as f64 / self.shot_width as f64,
            self.scaled_height as f64 / self.shot_height as f64,
        )
    }

    /// Window centre of cell `(col, row)` in rescaled-image coordinates.
    pub fn cell_center(&self, col: f64, row: f64) -> (f64, f64) {
        let half = self.window_side as f64 / 2.0;
        (
            col * self.stride as f64 + half,
            row * self.stride as f64 + half,
        )
    }
}

/// Grid size for sliding `window` over `len` samples at `stride`.
pub fn grid_len(len: usize, window: usize, stride: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / stride + 1
    }
}

/// Slides the detector over a residual image.
pub fn compute_ihm(
    noise: &Plane,
    sets: &DetectionSets,
    params: &DetectParams,
    scale: f64,
    shot_dims: (usize, usize),
) -> IntensityHeatMap {
    let side = params.window_side;
    let rows = grid_len(noise.height, side, params.stride);
    let cols = grid_len(noise.width, side, params.stride);
    let cells: Vec<(f64, i32)> = (0..rows * cols)
        .into_par_iter()
        .map_init(
            || (SectorAnalyzer::new(sets), Vec::with_capacity(side * side)),
            |(analyzer, buf), idx| {
                let (r, c) = (idx / cols, idx % cols);
                noise.window_into(c * params.stride, r * params.stride, side, buf);
                let s = blind_detect_window(analyzer, buf, params.t_ihm, params.top_k);
                (s.value, s.d)
            },
        )
        .collect();
    IntensityHeatMap {
        rows,
        cols,
        values: cells.iter().map(|c| c.0).collect(),
        d: cells.iter().map(|c| c.1).collect(),
        scale,
        scaled_width: noise.width,
        scaled_height: noise.height,
        shot_width: shot_dims.0,
        shot_height: shot_dims.1,
        window_side: side,
        stride: params.stride,
    }
}

/// One rescaled luma image of the shot.
#[derive(Clone, Debug)]
pub struct ScaledImage {
    pub scale: f64,
    pub luma: Plane,
}

/// Luma of `shot` at every sweep scale, largest first.
pub fn multiscale(shot: &RasterImage, params: &DetectParams) -> Result<Vec<ScaledImage>> {
    if shot.width() == 0 || shot.height() == 0 {
        return Err(Error::InvalidInput("empty shot".into()));
    }
    let luma = Plane::from_luma(&to_luma(shot))?;
    Ok(params
        .scales()
        .into_iter()
        .map(|scale| ScaledImage {
            scale,
            luma: resize_plane(&luma, scale),
        })
        .collect())
}

/// Heat maps at every scale plus the scale decision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleSweep {
    pub ihms: Vec<IntensityHeatMap>,
    /// Spread of each heat map, in sweep order.
    pub sim: Vec<f64>,
    pub decision: Option<usize>,
}

/// Residual and heat map of one rescaled image.
pub fn analyze_scale(
    scaled: &ScaledImage,
    sets: &DetectionSets,
    params: &DetectParams,
    shot_dims: (usize, usize),
) -> Result<IntensityHeatMap> {
    let p = &scaled.luma;
    if p.width < params.window_side.max(params.wiener_window)
        || p.height < params.window_side.max(params.wiener_window)
    {
        return Ok(IntensityHeatMap {
            rows: 0,
            cols: 0,
            values: Vec::new(),
            d: Vec::new(),
            scale: scaled.scale,
            scaled_width: p.width,
            scaled_height: p.height,
            shot_width: shot_dims.0,
            shot_height: shot_dims.1,
            window_side: params.window_side,
            stride: params.stride,
        });
    }
    let noise = wiener_residual_plane(p, params.wiener_window)?;
    Ok(compute_ihm(&noise, sets, params, scaled.scale, shot_dims))
}

/// Full multi-scale scan of a shot, one scale at a time to bound memory.
pub fn sweep(shot: &RasterImage, params: &DetectParams) -> Result<ScaleSweep> {
    params.validate()?;
    if shot.width() == 0 || shot.height() == 0 {
        return Err(Error::InvalidInput("empty shot".into()));
    }
    let sets = detection_sets(params)?;
    let luma = Plane::from_luma(&to_luma(shot))?;
    let dims = (shot.width(), shot.height());
    let mut ihms = Vec::new();
    for scale in params.scales() {
        let scaled = ScaledImage {
            scale,
            luma: resize_plane(&luma, scale),
        };
        ihms.push(analyze_scale(&scaled, &sets, params, dims)?);
    }
    let sim: Vec<f64> = ihms.iter().map(|h| h.spread()).collect();
    let decision = scale_decision(&sim, params.min_peak_ratio).ok();
    Ok(ScaleSweep {
        ihms,
        sim,
        decision,
    })
}

/// Picks the working scale from the SIM series.
///
/// A peak is an interior entry strictly above both neighbours and at least
/// `min_peak_ratio` of the series maximum. The first peak in sweep order
/// wins; without one, the first maximum is used. An all-zero series means no
/// window carried a mark.
pub fn scale_decision(sim: &[f64], min_peak_ratio: f64) -> Result<usize> {
    let max = sim.iter().cloned().fold(0.0, f64::max);
    if sim.is_empty() || !(max > 0.0) {
        return Err(Error::NoWatermarkFound);
    }
    let floor = min_peak_ratio * max;
    for i in 1..sim.len().saturating_sub(1) {
        if sim[i] > sim[i - 1] && sim[i] > sim[i + 1] && sim[i] >= floor {
            return Ok(i);
        }
    }
    Ok(sim
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0)
}
