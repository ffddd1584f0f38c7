//! `screenmark` command line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use screenmark::config::Params;
use screenmark::embedder::mark_image;
use screenmark::eval::{eval_sweep, read_manifest, summarize, write_records_file, EvalSettings, Grid};
use screenmark::io::{draw_quad, load_image, read_json, render_heatmap, save_image, write_json};
use screenmark::pipeline::{nominal_size, read_payload, run, RunOptions, Status};
use screenmark::rectify::{embed_payload, nc, rectify, WatermarkPayload};
use screenmark::simulator::{simulate_shot, Background, ShotConfig};
use screenmark::Quadrilateral;

#[derive(Parser)]
#[command(name = "screenmark", version, about = "Localization watermarks for camera-captured screens")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Tunables shared by every subcommand.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// `key = value` parameter file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set detect.t_ihm=5`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Size of the marked image before capture, e.g. `2560x1536`
    #[arg(long, value_name = "WxH", global = true)]
    nominal: Option<String>,
}

impl ConfigArgs {
    fn params(&self) -> Result<Params> {
        let mut p = match &self.config {
            Some(path) => Params::from_file(path)?,
            None => Params::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
            p.set(k.trim(), v)?;
        }
        if let Some(n) = &self.nominal {
            let (w, h) = n
                .split_once('x')
                .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
                .with_context(|| format!("--nominal `{n}` is not WxH"))?;
            p.payload.nominal_size = Some((w, h));
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mark the margin blocks of an image, optionally adding a payload
    Embed {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Target block PSNR in dB
        #[arg(long)]
        psnr: Option<f64>,
        /// Payload as hex, at most 8 digits
        #[arg(long)]
        payload: Option<String>,
        /// Per-block marking report
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Photograph a marked image with the capture simulator
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fraction of the shot covered by the content
        #[arg(long, default_value_t = 0.5)]
        area: f64,
        /// Screen tilt in degrees
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Realistic)]
        preset: Preset,
        /// Ground-truth quad; defaults to the output path with `.json`
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Find the marked region in a shot
    Locate {
        #[arg(long = "in")]
        input: PathBuf,
        /// JSON report
        #[arg(long)]
        report: Option<PathBuf>,
        /// Shot with the found box drawn in
        #[arg(long)]
        annotate: Option<PathBuf>,
        /// Quad sidecar of the found box
        #[arg(long)]
        quad: Option<PathBuf>,
        /// Also rectify and read the payload
        #[arg(long)]
        extract: bool,
        /// Rectified region
        #[arg(long)]
        rectified: Option<PathBuf>,
        /// Expected payload as hex, for NC scoring
        #[arg(long)]
        expect: Option<String>,
        /// Directory for per-scale heat map images
        #[arg(long)]
        heatmaps: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Rectify a shot by a known quad and read the payload
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        /// Quad sidecar JSON
        #[arg(long)]
        quad: PathBuf,
        /// Extraction report JSON
        #[arg(long)]
        payload_out: PathBuf,
        /// Payload length in bits
        #[arg(long)]
        bits: Option<usize>,
        /// Expected payload as hex, for NC scoring
        #[arg(long)]
        expect: Option<String>,
        #[arg(long)]
        rectified: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score a corpus over a PSNR x area x angle grid
    Eval {
        /// CSV with `image_id,path` rows
        #[arg(long)]
        manifest: PathBuf,
        /// e.g. `psnr=34.5;area=0.3,0.4,0.5;angle=0,10,20`
        #[arg(long, default_value = "")]
        grid: String,
        /// Per-shot table
        #[arg(long)]
        csv: PathBuf,
        /// Per-cell means
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Embed this payload and score NC
        #[arg(long)]
        payload: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Realistic)]
        preset: Preset,
        /// Record runtimes (makes the table run dependent)
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print every parameter with its current value
    Params {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 16 MP camera, clutter, lighting change, noise and JPEG
    Realistic,
    /// Pure geometry on black, no photometric distortion
    Clean,
}

impl Preset {
    fn config(self, area: f64, angle: f64, seed: u64) -> ShotConfig {
        match self {
            Preset::Realistic => ShotConfig::realistic(area, angle, seed),
            Preset::Clean => ShotConfig {
                area_proportion: area,
                angle_deg: angle,
                seed,
                background: Background::Solid { rgb: [0, 0, 0] },
                ..ShotConfig::default()
            },
        }
    }
}

/// Payload extraction report.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PayloadReport {
    bits: String,
    nc: Option<f64>,
    confidence: f64,
    windows_used: usize,
}

fn parse_payload(hex: Option<&str>) -> Result<Option<WatermarkPayload>> {
    Ok(hex.map(WatermarkPayload::from_hex).transpose()?)
}

fn default_truth_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn embed(
    input: &Path,
    out: &Path,
    psnr: Option<f64>,
    payload: Option<&str>,
    report: Option<&Path>,
    cfg: &ConfigArgs,
) -> Result<()> {
    let mut params = cfg.params()?;
    if let Some(t) = psnr {
        params.mark.target_psnr = t;
    }
    let cover = load_image(input)?;
    let (mut marked, rep) = mark_image(&cover, &params.mark)?;
    println!(
        "marked {} blocks, {:.1}% in band, image PSNR {:.2} dB",
        rep.blocks.len(),
        100.0 * rep.converged_fraction(),
        rep.psnr
    );
    if let Some(p) = parse_payload(payload)? {
        marked = embed_payload(&marked, &p, params.mark.block_side)?;
        println!("embedded payload {p}");
    }
    save_image(out, &marked)?;
    if let Some(path) = report {
        write_json(path, &rep)?;
    }
    Ok(())
}

fn simulate(input: &Path, out: &Path, cfg: ShotConfig, truth: Option<&Path>) -> Result<()> {
    let marked = load_image(input)?;
    let (shot, quad) = simulate_shot(&marked, &cfg)?;
    save_image(out, &shot)?;
    let truth = truth.map_or_else(|| default_truth_path(out), Path::to_path_buf);
    write_json(&truth, &quad)?;
    println!(
        "{}x{} shot, truth in {}",
        shot.width(),
        shot.height(),
        truth.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn locate(
    input: &Path,
    report: Option<&Path>,
    annotate: Option<&Path>,
    quad_out: Option<&Path>,
    extract: bool,
    rectified: Option<&Path>,
    expect: Option<&str>,
    heatmaps: Option<&Path>,
    cfg: &ConfigArgs,
) -> Result<()> {
    let params = cfg.params()?;
    let shot = load_image(input)?;
    let expected = parse_payload(expect)?;
    let opts = RunOptions {
        extract: extract || rectified.is_some() || expected.is_some(),
        expected,
    };
    let out = run(&shot, &params, &opts)?;
    let r = &out.report;
    match r.status {
        Status::Located => {
            let q = r.quad.expect("located report has a quad");
            println!(
                "located: A({:.1}, {:.1}) B({:.1}, {:.1}) C({:.1}, {:.1}) D({:.1}, {:.1})",
                q.a.x, q.a.y, q.b.x, q.b.y, q.c.x, q.c.y, q.d.x, q.d.y
            );
            if let Some(ex) = &r.extraction {
                print!("payload {} (confidence {:.2})", ex.payload, ex.confidence);
                match r.nc {
                    Some(v) => println!(", NC {v:.4}"),
                    None => println!(),
                }
            }
            if let Some(path) = annotate {
                save_image(path, &draw_quad(&shot, &q, [0, 255, 0], 4))?;
            }
            if let Some(path) = quad_out {
                write_json(path, &q)?;
            }
            if let (Some(path), Some(img)) = (rectified, &out.rectified) {
                save_image(path, img)?;
            }
        }
        Status::NoWatermarkFound => println!("no watermark found"),
        Status::LocalizationFailed => println!(
            "localization failed: {}",
            r.message.as_deref().unwrap_or("unknown")
        ),
    }
    if let Some(path) = report {
        write_json(path, r)?;
    }
    if let Some(dir) = heatmaps {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for ihm in &out.sweep.ihms {
            save_image(&dir.join(format!("ihm_{:.1}.png", ihm.scale)), &render_heatmap(ihm, 8))?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn extract(
    input: &Path,
    quad: &Path,
    payload_out: &Path,
    bits: Option<usize>,
    expect: Option<&str>,
    rectified_out: Option<&Path>,
    cfg: &ConfigArgs,
) -> Result<()> {
    let params = cfg.params()?;
    let shot = load_image(input)?;
    let quad: Quadrilateral = read_json(quad)?;
    let expected = parse_payload(expect)?;
    let bits = match (&expected, bits) {
        (Some(e), Some(b)) if e.len() != b => bail!("--bits {b} disagrees with the {}-bit --expect", e.len()),
        (Some(e), _) => e.len(),
        (None, b) => b.unwrap_or(params.payload.bits),
    };
    let rect = rectify(&shot, &quad)?;
    // without a sweep the captured scale is unknown; start from the rectified size
    let size = nominal_size(&params, &rect, 1.0)?;
    let (_, rect, ex) = read_payload(&shot, &quad, size, &params, bits)?;
    let score = expected.as_ref().map(|e| nc(e, &ex.payload)).transpose()?;
    println!("payload {} (confidence {:.2})", ex.payload, ex.confidence);
    if let Some(v) = score {
        println!("NC {v:.4}");
    }
    write_json(
        payload_out,
        &PayloadReport {
            bits: ex.payload.to_hex(),
            nc: score,
            confidence: ex.confidence,
            windows_used: ex.windows_used,
        },
    )?;
    if let Some(path) = rectified_out {
        save_image(path, &rect)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    manifest: &Path,
    grid: &str,
    csv: &Path,
    summary: Option<&Path>,
    payload: Option<&str>,
    seed: u64,
    preset: Preset,
    timing: bool,
    cfg: &ConfigArgs,
) -> Result<()> {
    let grid: Grid = grid.parse()?;
    let entries = read_manifest(manifest)?;
    let settings = EvalSettings {
        params: cfg.params()?,
        payload: parse_payload(payload)?,
        shot: preset.config(0.5, 0.0, 0),
        seed,
        timing,
    };
    let records = eval_sweep(&entries, &grid, &settings)?;
    write_records_file(csv, &records)?;
    let cells = summarize(&records);
    for c in &cells {
        print!(
            "psnr {:>5} area {:>4} angle {:>4}: {} shots, mean IoU {:.4}",
            c.psnr_constraint, c.area_proportion, c.angle_offset, c.shots, c.mean_iou
        );
        match c.mean_nc {
            Some(v) => println!(", mean NC {v:.4}"),
            None => println!(),
        }
    }
    if let Some(path) = summary {
        write_json(path, &cells)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Embed {
            input,
            out,
            psnr,
            payload,
            report,
            cfg,
        } => embed(&input, &out, psnr, payload.as_deref(), report.as_deref(), &cfg),
        Command::Simulate {
            input,
            out,
            area,
            angle,
            seed,
            preset,
            truth,
        } => simulate(&input, &out, preset.config(area, angle, seed), truth.as_deref()),
        Command::Locate {
            input,
            report,
            annotate,
            quad,
            extract,
            rectified,
            expect,
            heatmaps,
            cfg,
        } => locate(
            &input,
            report.as_deref(),
            annotate.as_deref(),
            quad.as_deref(),
            extract,
            rectified.as_deref(),
            expect.as_deref(),
            heatmaps.as_deref(),
            &cfg,
        ),
        Command::Extract {
            input,
            quad,
            payload_out,
            bits,
            expect,
            rectified,
            cfg,
        } => extract(
            &input,
            &quad,
            &payload_out,
            bits,
            expect.as_deref(),
            rectified.as_deref(),
            &cfg,
        ),
        Command::Eval {
            manifest,
            grid,
            csv,
            summary,
            payload,
            seed,
            preset,
            timing,
            cfg,
        } => eval(
            &manifest,
            &grid,
            &csv,
            summary.as_deref(),
            payload.as_deref(),
            seed,
            preset,
            timing,
            &cfg,
        ),
        Command::Params { cfg } => {
            print!("{}", cfg.params()?.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already carry their cause in the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
