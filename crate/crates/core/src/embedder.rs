//! Margin marking: paired block selection and PSNR-constrained DFT-magnitude
//! embedding.
//!
//! Every top/bottom margin block (group A) gets the same set of polar
//! frequency positions; left/right blocks (group B) get that set rotated by a
//! quarter turn. The magnitude at those positions is driven to a common
//! strength `K`, which is iterated until the block PSNR falls inside
//! `[T - 1, T]`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{self, apply_luma_delta, fft2, psnr, to_luma, RasterImage, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

/// Axis-aligned square block, top-left corner at `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRect {
    pub x: usize,
    pub y: usize,
    pub side: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedGroups {
    pub group_a: Vec<BlockRect>,
    pub group_b: Vec<BlockRect>,
    pub block_side: usize,
}

impl PairedGroups {
    pub fn iter(&self) -> impl Iterator<Item = (Group, BlockRect)> + '_ {
        self.group_a
            .iter()
            .map(|&b| (Group::A, b))
            .chain(self.group_b.iter().map(|&b| (Group::B, b)))
    }

    /// Whether pixel `(x, y)` lies inside any margin block.
    pub fn covers(&self, x: usize, y: usize) -> bool {
        self.iter()
            .any(|(_, b)| x >= b.x && x < b.x + b.side && y >= b.y && y < b.y + b.side)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkParams {
    /// Target block PSNR `T` in dB; blocks are accepted in `[T - 1, T]`.
    pub target_psnr: f64,
    pub block_side: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub radius_step: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub angle_step_deg: f64,
    pub max_iterations: usize,
}

impl Default for MarkParams {
    fn default() -> Self {
        Self {
            target_psnr: 34.5,
            block_side: 128,
            radius_min: 15.0,
            radius_max: 25.0,
            radius_step: 1.25,
            angle_min_deg: 35.0,
            angle_max_deg: 55.0,
            angle_step_deg: 5.0,
            max_iterations: 64,
        }
    }
}

impl MarkParams {
    pub fn validate(&self) -> Result<()> {
        let half = self.block_side as f64 / 2.0;
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.target_psnr > 0.0) {
            return bad("target PSNR must be positive");
        }
        if self.block_side < 8 {
            return bad("block side must be at least 8");
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max && self.radius_max < half)
        {
            return bad("radii must satisfy 0 < r1 <= r2 < l/2");
        }
        if !(self.angle_min_deg > 0.0
            && self.angle_min_deg <= self.angle_max_deg
            && self.angle_max_deg < 90.0)
        {
            return bad("angles must satisfy 0 < phi1 <= phi2 < 90 degrees");
        }
        if !(self.radius_step > 0.0 && self.angle_step_deg > 0.0) {
            return bad("radius and angle steps must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        inclusive_range(self.radius_min, self.radius_max, self.radius_step)
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        inclusive_range(self.angle_min_deg, self.angle_max_deg, self.angle_step_deg)
    }
}

pub(crate) fn inclusive_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Tiles the outer ring of `l`x`l` blocks.
///
/// Group A takes the whole top and bottom rows, corners included; group B
/// takes the left and right columns between them.
pub fn select_paired_blocks(img: &RasterImage, l: usize) -> Result<PairedGroups> {
    paired_blocks_for(img.width(), img.height(), l)
}

pub fn paired_blocks_for(width: usize, height: usize, l: usize) -> Result<PairedGroups> {
    if l == 0 || width < 2 * l || height < 2 * l {
        return Err(Error::ImageTooSmall(format!(
            "{width}x{height} cannot hold a ring of {l}x{l} margin blocks"
        )));
    }
    let cols = width / l;
    let mut group_a = Vec::with_capacity(2 * cols);
    for y in [0, height - l] {
        for k in 0..cols {
            group_a.push(BlockRect { x: k * l, y, side: l });
        }
    }
    let mut group_b = Vec::new();
    for x in [0, width - l] {
        let mut y = l;
        while y + 2 * l <= height {
            group_b.push(BlockRect { x, y, side: l });
            y += l;
        }
    }
    if group_b.is_empty() {
        return Err(Error::ImageTooSmall(format!(
            "{width}x{height} leaves no left/right margin blocks for {l}x{l} tiling"
        )));
    }
    Ok(PairedGroups {
        group_a,
        group_b,
        block_side: l,
    })
}

/// Polar embedding positions of one group resolved to DFT bins.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingLocationSet {
    pub group: Group,
    pub radii: Vec<f64>,
    /// Angles in radians, group B already rotated by a quarter turn.
    pub angles: Vec<f64>,
    /// Distinct bins resolved from `(radius, angle)` pairs, without mates.
    pub primary: Vec<(i64, i64)>,
    /// `primary` followed by the conjugate mate `(-u, -v)` of each entry.
    pub resolved_bins: Vec<(i64, i64)>,
}

impl EmbeddingLocationSet {
    pub fn contains(&self, u: i64, v: i64) -> bool {
        self.resolved_bins.contains(&(u, v))
    }
}

/// Bin offset from DC of the polar position `(rho, theta)`.
pub fn polar_to_bin(rho: f64, theta: f64) -> (i64, i64) {
    (
        (rho * theta.cos()).round() as i64,
        (rho * theta.sin()).round() as i64,
    )
}

pub fn make_location_set(params: &MarkParams, group: Group) -> Result<EmbeddingLocationSet> {
    params.validate()?;
    let shift = match group {
        Group::A => 0.0,
        Group::B => 90.0,
    };
    let radii = params.radii();
    let angles: Vec<f64> = params
        .angles_deg()
        .into_iter()
        .map(|a| (a + shift).to_radians())
        .collect();
    let mut primary = Vec::new();
    for &rho in &radii {
        for &theta in &angles {
            let bin = polar_to_bin(rho, theta);
            if !primary.contains(&bin) {
                primary.push(bin);
            }
        }
    }
    let mut resolved_bins = primary.clone();
    resolved_bins.extend(primary.iter().map(|&(u, v)| (-u, -v)));
    Ok(EmbeddingLocationSet {
        group,
        radii,
        angles,
        primary,
        resolved_bins,
    })
}

/// Result of marking one block.
#[derive(Clone, Debug)]
pub struct BlockOutcome {
    pub block: RasterImage,
    pub psnr: f64,
    /// Final embedding strength `K`.
    pub strength: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before PSNR entered the band.
    pub converged: bool,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Replaces the magnitude at every bin of `set` with `strength`, keeping the
/// cover phase, and returns the quantized spatial block.
fn synthesize(spec: &Spectrum, set: &EmbeddingLocationSet, strength: f64) -> RasterImage {
    let mut out = spec.clone();
    for &(u, v) in &set.primary {
        let c = spec.get(u, v);
        let phase = if c.norm() > 0.0 { c.arg() } else { 0.0 };
        let coef = Complex64::from_polar(strength, phase);
        let i = out.index(u, v);
        let j = out.index(-u, -v);
        if i == j {
            out.coeffs_mut()[i] = Complex64::new(strength * phase.cos().signum(), 0.0);
        } else {
            out.coeffs_mut()[i] = coef;
            out.coeffs_mut()[j] = coef.conj();
        }
    }
    imaging::ifft2(&out)
}

/// Embeds `set` into one luma block, iterating the strength until the block
/// PSNR lands in `[T - 1, T]`.
///
/// The strength starts at `mean(|Y|) + std(|Y|)` and moves in steps of
/// `std(|Y|) / 15`. Distortion grows with the distance between the strength
/// and the cover magnitudes at the target bins, so a PSNR above `T` pushes the
/// strength away from them and a PSNR below `T - 1` pulls it back. The step is
/// halved whenever the direction reverses. If the budget runs out the
/// iterate closest to the band is returned with `converged = false`.
pub fn embed_block(
    block: &RasterImage,
    set: &EmbeddingLocationSet,
    params: &MarkParams,
) -> Result<BlockOutcome> {
    if block.channels() != 1 || block.width() != block.height() {
        return Err(Error::InvalidInput(
            "embed_block needs a square single-channel block".into(),
        ));
    }
    let spec = fft2(block)?;
    let mags = spec.magnitudes();
    let (mu, sigma) = mean_std(&mags);
    let cover_level =
        set.primary.iter().map(|&(u, v)| spec.get(u, v).norm()).sum::<f64>() / set.primary.len() as f64;

    let hi = params.target_psnr;
    let lo = params.target_psnr - 1.0;
    let band_distance = |p: f64| {
        if p > hi {
            p - hi
        } else if p < lo {
            lo - p
        } else {
            0.0
        }
    };

    let mut strength = mu + sigma;
    let mut step = sigma / 15.0;
    let mut last_dir = 0.0f64;
    let mut best: Option<BlockOutcome> = None;
    for it in 1..=params.max_iterations {
        let marked = synthesize(&spec, set, strength);
        let ps = psnr(block, &marked)?;
        let outcome = BlockOutcome {
            block: marked,
            psnr: ps,
            strength,
            iterations: it,
            converged: band_distance(ps) == 0.0,
        };
        if outcome.converged {
            return Ok(outcome);
        }
        let better = best
            .as_ref()
            .map_or(true, |b| band_distance(ps) < band_distance(b.psnr));
        if better {
            best = Some(outcome);
        } else if let Some(b) = best.as_mut() {
            b.iterations = it;
        }

        let away = if strength >= cover_level { 1.0 } else { -1.0 };
        let dir = if ps > hi { away } else { -away };
        if last_dir != 0.0 && dir != last_dir {
            step /= 2.0;
        }
        last_dir = dir;
        strength += dir * step;
        if strength < 0.0 {
            strength = 0.0;
        }
    }
    let mut best = best.expect("at least one iteration ran");
    best.iterations = params.max_iterations;
    log::warn!(
        "block did not reach PSNR band [{lo}, {hi}] within {} iterations (best {:.2} dB)",
        params.max_iterations,
        best.psnr
    );
    Ok(best)
}

/// Per-block bookkeeping of a marking run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockRecord {
    pub group: Group,
    pub rect: BlockRect,
    pub psnr: f64,
    pub strength: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkReport {
    /// PSNR of the whole marked image against the cover, all channels.
    pub psnr: f64,
    pub blocks: Vec<BlockRecord>,
}

impl MarkReport {
    pub fn converged_fraction(&self) -> f64 {
        if self.blocks.is_empty() {
            return 1.0;
        }
        self.blocks.iter().filter(|b| b.converged).count() as f64 / self.blocks.len() as f64
    }
}

/// Marks every margin block of `img` on its luma channel.
pub fn mark_image(img: &RasterImage, params: &MarkParams) -> Result<(RasterImage, MarkReport)> {
    params.validate()?;
    let groups = select_paired_blocks(img, params.block_side)?;
    let set_a = make_location_set(params, Group::A)?;
    let set_b = make_location_set(params, Group::B)?;
    let luma = to_luma(img);

    let jobs: Vec<(Group, BlockRect)> = groups.iter().collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(group, rect)| {
            let block = luma.crop(rect.x, rect.y, rect.side, rect.side)?;
            let set = match group {
                Group::A => &set_a,
                Group::B => &set_b,
            };
            embed_block(&block, set, params).map(|o| (group, rect, block, o))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut marked = img.clone();
    let mut blocks = Vec::with_capacity(outcomes.len());
    for (group, rect, cover, outcome) in outcomes {
        for y in 0..rect.side {
            for x in 0..rect.side {
                let delta = outcome.block.get(x, y, 0) as i32 - cover.get(x, y, 0) as i32;
                if delta != 0 {
                    apply_luma_delta(&mut marked, rect.x + x, rect.y + y, delta);
                }
            }
        }
        blocks.push(BlockRecord {
            group,
            rect,
            psnr: outcome.psnr,
            strength: outcome.strength,
            iterations: outcome.iterations,
            converged: outcome.converged,
        });
    }
    let report = MarkReport {
        psnr: psnr(img, &marked)?,
        blocks,
    };
    Ok((marked, report))
}
