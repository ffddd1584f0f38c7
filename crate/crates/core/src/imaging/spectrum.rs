//! Two-dimensional DFT on square blocks.
//!
//! Convention used everywhere in the crate: the forward transform is
//! unnormalized (the DC bin equals the sum of the samples) and the inverse
//! carries the full `1/(M*N)` factor. Bin `(u, v)` is stored at
//! `v * side + u`, with `u` the horizontal and `v` the vertical frequency.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::RasterImage;
use crate::error::{Error, Result};

/// Complex DFT coefficients of a square block.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    side: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_coeffs(side: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != side * side {
            return Err(Error::InvalidInput(format!(
                "spectrum of side {side} needs {} coefficients, got {}",
                side * side,
                coeffs.len()
            )));
        }
        Ok(Self { side, coeffs })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn index(&self, u: i64, v: i64) -> usize {
        bin_index(self.side, u, v)
    }

    #[inline]
    pub fn get(&self, u: i64, v: i64) -> Complex64 {
        self.coeffs[self.index(u, v)]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }
}

/// Storage index of the bin at signed frequency offset `(u, v)` from DC.
#[inline]
pub fn bin_index(side: usize, u: i64, v: i64) -> usize {
    let s = side as i64;
    let uu = u.rem_euclid(s) as usize;
    let vv = v.rem_euclid(s) as usize;
    vv * side + uu
}

/// Reusable forward/inverse plans for one block side.
pub struct Fft2d {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}

impl Fft2d {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            side,
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            column: vec![Complex64::default(); side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Forward transform of `side*side` real samples into `out`.
    pub fn forward_real(&mut self, samples: &[f64], out: &mut Vec<Complex64>) {
        assert_eq!(samples.len(), self.side * self.side);
        out.clear();
        out.extend(samples.iter().map(|&v| Complex64::new(v, 0.0)));
        self.transform(out, true);
    }

    /// In-place 2-D transform. The inverse applies the `1/(side*side)` factor.
    pub fn transform(&mut self, data: &mut [Complex64], forward: bool) {
        let n = self.side;
        assert_eq!(data.len(), n * n);
        let plan = if forward { &self.forward } else { &self.inverse };
        for row in data.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        for u in 0..n {
            for v in 0..n {
                self.column[v] = data[v * n + u];
            }
            plan.process_with_scratch(&mut self.column, &mut self.scratch);
            for v in 0..n {
                data[v * n + u] = self.column[v];
            }
        }
        if !forward {
            let norm = 1.0 / (n * n) as f64;
            for c in data.iter_mut() {
                *c *= norm;
            }
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Fft2d>> = RefCell::new(HashMap::new());
}

/// Runs `f` with a cached per-thread plan for blocks of `side`.
pub fn with_plan<R>(side: usize, f: impl FnOnce(&mut Fft2d) -> R) -> R {
    PLANS.with(|plans| {
        let mut plans = plans.borrow_mut();
        let plan = plans.entry(side).or_insert_with(|| Fft2d::new(side));
        f(plan)
    })
}

/// Forward DFT of a square real block given as row-major samples.
pub fn fft2_samples(side: usize, samples: &[f64]) -> Spectrum {
    let mut coeffs = Vec::with_capacity(side * side);
    with_plan(side, |plan| plan.forward_real(samples, &mut coeffs));
    Spectrum { side, coeffs }
}

/// Inverse DFT, returning the real part of each sample.
pub fn ifft2_samples(spec: &Spectrum) -> Vec<f64> {
    let mut data = spec.coeffs.clone();
    with_plan(spec.side, |plan| plan.transform(&mut data, false));
    data.into_iter().map(|c| c.re).collect()
}

fn check_square_luma(block: &RasterImage) -> Result<()> {
    if block.channels() != 1 {
        return Err(Error::InvalidInput(
            "fft2 needs a single-channel block".into(),
        ));
    }
    if block.width() != block.height() || block.width() == 0 {
        return Err(Error::InvalidInput(format!(
            "fft2 needs a square block, got {}x{}",
            block.width(),
            block.height()
        )));
    }
    Ok(())
}

/// Forward DFT of a square single-channel raster.
pub fn fft2(block: &RasterImage) -> Result<Spectrum> {
    check_square_luma(block)?;
    let samples: Vec<f64> = block.data().iter().map(|&v| v as f64).collect();
    Ok(fft2_samples(block.width(), &samples))
}

/// Inverse DFT, rounded and clamped to 8 bits.
pub fn ifft2(spec: &Spectrum) -> RasterImage {
    let data = ifft2_samples(spec)
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::new(spec.side, spec.side, 1, data).expect("spectrum side is consistent")
}
