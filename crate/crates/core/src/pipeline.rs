//! Shot in, box and payload out.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bbox::{localize, QuadCandidate};
use crate::config::Params;
use crate::error::{Error, Result};
use crate::geometry::Quadrilateral;
use crate::imaging::{warp_perspective, RasterImage};
use crate::localizer::{sweep, ScaleSweep};
use crate::rectify::{
    extract_payload, nc, rectify, refine_quad, search_nominal_size, solve_homography,
    Extraction, WatermarkPayload,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Located,
    NoWatermarkFound,
    LocalizationFailed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sweep_ms: f64,
    pub localize_ms: f64,
    pub extract_ms: f64,
}

impl Timings {
    pub fn total_ms(&self) -> f64 {
        self.sweep_ms + self.localize_ms + self.extract_ms
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub status: Status,
    pub message: Option<String>,
    pub quad: Option<Quadrilateral>,
    pub best: Option<QuadCandidate>,
    pub decided_scale: Option<f64>,
    pub sim: Vec<f64>,
    /// The box after payload-guided refinement, used for reading only.
    pub reading_quad: Option<Quadrilateral>,
    pub extraction: Option<Extraction>,
    /// Set when an expected payload was supplied and extraction ran.
    pub nc: Option<f64>,
    pub timings: Timings,
}

pub struct Outcome {
    pub report: Report,
    pub sweep: ScaleSweep,
    pub rectified: Option<RasterImage>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub extract: bool,
    pub expected: Option<WatermarkPayload>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Relative uncertainty of the decided sweep scale as a size estimate.
const SWEEP_SIZE_SPAN: f64 = 0.2;

/// Size at which to read the payload: configured, or searched around the
/// decided sweep scale, which is roughly nominal over captured size.
pub fn nominal_size(params: &Params, rectified: &RasterImage, decided_scale: f64) -> Result<(usize, usize)> {
    match params.payload.nominal_size {
        Some(s) => Ok(s),
        None => search_nominal_size(
            rectified,
            params.mark.block_side,
            (decided_scale, decided_scale),
            SWEEP_SIZE_SPAN,
        ),
    }
}

/// Refines the box for reading, rectifies to `size` and reads the payload.
pub fn read_payload(
    shot: &RasterImage,
    quad: &Quadrilateral,
    size: (usize, usize),
    params: &Params,
    bits: usize,
) -> Result<(Quadrilateral, RasterImage, Extraction)> {
    let l = params.mark.block_side;
    let refined = refine_quad(shot, quad, size, l)?;
    let hom = solve_homography(&refined, size.0, size.1)?;
    let rectified = warp_perspective(shot, &hom, size.0, size.1)?;
    let ex = extract_payload(&rectified, l, bits, Some(size))?;
    Ok((refined, rectified, ex))
}

/// Sweep, box search and optionally rectification plus payload readout.
///
/// Not finding a mark is a normal outcome reported through [`Status`];
/// only invalid input and I/O-style failures are errors.
pub fn run(shot: &RasterImage, params: &Params, opts: &RunOptions) -> Result<Outcome> {
    params.validate()?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let sw = sweep(shot, &params.detect)?;
    timings.sweep_ms = ms(t);

    let t = Instant::now();
    let located = localize(&sw, &params.bbox);
    timings.localize_ms = ms(t);
    let mut report = Report {
        status: Status::Located,
        message: None,
        quad: None,
        best: None,
        decided_scale: sw.decision.map(|i| sw.ihms[i].scale),
        sim: sw.sim.clone(),
        reading_quad: None,
        extraction: None,
        nc: None,
        timings,
    };
    let loc = match located {
        Ok(l) => l,
        Err(Error::NoWatermarkFound) => {
            report.status = Status::NoWatermarkFound;
            report.message = Some("no watermark found".into());
            return Ok(Outcome { report, sweep: sw, rectified: None });
        }
        Err(e @ (Error::LocalizationFailed(_) | Error::DegenerateGeometry(_))) => {
            report.status = Status::LocalizationFailed;
            report.message = Some(e.to_string());
            return Ok(Outcome { report, sweep: sw, rectified: None });
        }
        Err(e) => return Err(e),
    };
    report.quad = Some(loc.best.quad);
    report.best = Some(loc.best.clone());
    if !opts.extract {
        return Ok(Outcome { report, sweep: sw, rectified: None });
    }

    let t = Instant::now();
    let bits = opts
        .expected
        .as_ref()
        .map_or(params.payload.bits, |p| p.len());
    let read = rectify(shot, &loc.best.quad)
        .and_then(|r| nominal_size(params, &r, sw.ihms[loc.decision].scale))
        .and_then(|size| read_payload(shot, &loc.best.quad, size, params, bits));
    let mut rectified = None;
    match read {
        Ok((refined, img, ex)) => {
            if let Some(exp) = &opts.expected {
                report.nc = Some(nc(exp, &ex.payload)?);
            }
            report.reading_quad = Some(refined);
            report.extraction = Some(ex);
            rectified = Some(img);
        }
        Err(e @ (Error::ImageTooSmall(_) | Error::DegenerateHomography | Error::DegenerateGeometry(_))) => {
            report.message = Some(format!("payload not read: {e}"));
        }
        Err(e) => return Err(e),
    }
    report.timings.extract_ms = ms(t);
    Ok(Outcome {
        report,
        sweep: sw,
        rectified,
    })
}
