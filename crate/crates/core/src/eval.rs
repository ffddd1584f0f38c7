//! Corpus evaluation over a PSNR x area x angle grid.
//!
//! Every cover in the manifest is marked at each PSNR target, optionally
//! given a payload, captured once per grid cell by the simulator and run
//! through the pipeline. Seeds depend only on the base seed and the
//! position of the cover and cell, so repeated runs give identical tables.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Params;
use crate::embedder::mark_image;
use crate::error::{Error, Result};
use crate::imaging::RasterImage;
use crate::io::load_image;
use crate::metrics::iou;
use crate::pipeline::{run, RunOptions};
use crate::rectify::{embed_payload, WatermarkPayload};
use crate::simulator::{simulate_shot, ShotConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub path: PathBuf,
}

/// Reads an `image_id,path` CSV. Relative paths are taken from the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let mut e: ManifestEntry = row.map_err(|e| csv_error(path, e))?;
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
        out.push(e);
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Cartesian grid of evaluation cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub psnr: Vec<f64>,
    pub area: Vec<f64>,
    pub angle: Vec<f64>,
}

impl Grid {
    /// Cells in row-major order: psnr outermost, angle innermost.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &p in &self.psnr {
            for &a in &self.area {
                for &g in &self.angle {
                    out.push((p, a, g));
                }
            }
        }
        out
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            psnr: vec![34.5],
            area: vec![0.3, 0.4, 0.5],
            angle: vec![0.0, 10.0, 20.0],
        }
    }
}

/// Parses `psnr=34.5;area=0.3,0.4;angle=0,10`. Missing axes keep their
/// defaults.
impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = Grid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid axis `{part}` needs `name=values`")))?;
            let vals = v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("grid axis `{k}`: {e}")))?;
            if vals.is_empty() {
                return Err(Error::Config(format!("grid axis `{k}` is empty")));
            }
            match k.trim() {
                "psnr" => g.psnr = vals,
                "area" => g.area = vals,
                "angle" => g.angle = vals,
                other => return Err(Error::Config(format!("unknown grid axis `{other}`"))),
            }
        }
        Ok(g)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "psnr={};area={};angle={}", j(&self.psnr), j(&self.area), j(&self.angle))
    }
}

/// One evaluated shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub image_id: String,
    pub psnr_constraint: f64,
    pub area_proportion: f64,
    pub angle_offset: f64,
    /// Zero when nothing was located.
    pub iou: f64,
    pub nc: Option<f64>,
    pub runtime_ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EvalSettings {
    pub params: Params,
    /// Embedded into every cover and scored by NC when set.
    pub payload: Option<WatermarkPayload>,
    /// Capture conditions; area, angle and seed are overwritten per shot.
    pub shot: ShotConfig,
    pub seed: u64,
    /// Fill `runtime_ms`. Off keeps tables reproducible byte for byte.
    pub timing: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            params: Params::default(),
            payload: None,
            shot: ShotConfig::realistic(0.5, 0.0, 0),
            seed: 0,
            timing: false,
        }
    }
}

/// Seed of the shot for cover `image` and cell `cell`.
pub fn shot_seed(base: u64, image: usize, cell: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add((image as u64) << 20)
        .wrapping_add(cell as u64)
}

/// Marks `cover` at `psnr` and embeds the payload, if any.
pub fn prepare_cover(cover: &RasterImage, psnr: f64, settings: &EvalSettings) -> Result<RasterImage> {
    let mut mark = settings.params.mark.clone();
    mark.target_psnr = psnr;
    let (marked, report) = mark_image(cover, &mark)?;
    log::debug!("marked at {psnr} dB, {:.1}% of blocks in band", 100.0 * report.converged_fraction());
    match &settings.payload {
        Some(p) => embed_payload(&marked, p, mark.block_side),
        None => Ok(marked),
    }
}

/// Simulates and scores one shot.
pub fn evaluate_shot(
    image_id: &str,
    marked: &RasterImage,
    cell: (f64, f64, f64),
    seed: u64,
    settings: &EvalSettings,
) -> Result<EvalRecord> {
    let (psnr, area, angle) = cell;
    let cfg = ShotConfig {
        area_proportion: area,
        angle_deg: angle,
        seed,
        ..settings.shot.clone()
    };
    let (shot, truth) = simulate_shot(marked, &cfg)?;
    let mut params = settings.params.clone();
    if settings.payload.is_some() && params.payload.nominal_size.is_none() {
        params.payload.nominal_size = Some((marked.width(), marked.height()));
    }
    let opts = RunOptions {
        extract: settings.payload.is_some(),
        expected: settings.payload.clone(),
    };
    let out = run(&shot, &params, &opts)?;
    let r = &out.report;
    Ok(EvalRecord {
        image_id: image_id.to_string(),
        psnr_constraint: psnr,
        area_proportion: area,
        angle_offset: angle,
        iou: r.quad.map_or(0.0, |q| iou(&q, &truth)),
        nc: if settings.payload.is_some() {
            Some(r.nc.unwrap_or(0.0))
        } else {
            None
        },
        runtime_ms: settings.timing.then(|| r.timings.total_ms()),
    })
}

/// Evaluates every cover over every grid cell, in manifest then cell order.
/// Unreadable covers and unreachable cells are skipped with a warning.
pub fn eval_sweep(entries: &[ManifestEntry], grid: &Grid, settings: &EvalSettings) -> Result<Vec<EvalRecord>> {
    settings.params.validate()?;
    let cells = grid.cells();
    let mut records = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let cover = match load_image(&entry.path) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("skipping {}: {e}", entry.image_id);
                continue;
            }
        };
        for &psnr in &grid.psnr {
            let marked = prepare_cover(&cover, psnr, settings)?;
            let batch: Vec<Option<EvalRecord>> = cells
                .par_iter()
                .enumerate()
                .filter(|(_, c)| c.0 == psnr)
                .map(|(ci, &cell)| {
                    match evaluate_shot(&entry.image_id, &marked, cell, shot_seed(settings.seed, i, ci), settings) {
                        Ok(r) => Some(r),
                        Err(e) => {
                            log::warn!("skipping {} at {cell:?}: {e}", entry.image_id);
                            None
                        }
                    }
                })
                .collect();
            records.extend(batch.into_iter().flatten());
        }
    }
    Ok(records)
}

pub fn write_records<W: Write>(out: W, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "image_id",
            "psnr_constraint",
            "area_proportion",
            "angle_offset",
            "iou",
            "nc",
            "runtime_ms",
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<csv>"),
        source,
    })
}

pub fn write_records_file(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_records(std::io::BufWriter::new(f), records)
}

/// Mean scores of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub psnr_constraint: f64,
    pub area_proportion: f64,
    pub angle_offset: f64,
    pub shots: usize,
    pub mean_iou: f64,
    pub mean_nc: Option<f64>,
}

/// Per-cell means, in order of first appearance.
pub fn summarize(records: &[EvalRecord]) -> Vec<CellSummary> {
    let mut out: Vec<(CellSummary, usize)> = Vec::new();
    for r in records {
        let key = (r.psnr_constraint, r.area_proportion, r.angle_offset);
        let idx = match out
            .iter()
            .position(|(c, _)| (c.psnr_constraint, c.area_proportion, c.angle_offset) == key)
        {
            Some(i) => i,
            None => {
                out.push((
                    CellSummary {
                        psnr_constraint: key.0,
                        area_proportion: key.1,
                        angle_offset: key.2,
                        shots: 0,
                        mean_iou: 0.0,
                        mean_nc: None,
                    },
                    0,
                ));
                out.len() - 1
            }
        };
        let (c, nc_count) = &mut out[idx];
        c.shots += 1;
        c.mean_iou += r.iou;
        if let Some(nc) = r.nc {
            *c.mean_nc.get_or_insert(0.0) += nc;
            *nc_count += 1;
        }
    }
    out.into_iter()
        .map(|(mut c, n)| {
            c.mean_iou /= c.shots as f64;
            if let Some(s) = c.mean_nc.as_mut() {
                *s /= n as f64;
            }
            c
        })
        .collect()
}
