//! File input/output: rasters, JSON sidecars and debug renderings.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Quadrilateral};
use crate::imaging::RasterImage;
use crate::localizer::IntensityHeatMap;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn from_dynamic(img: DynamicImage) -> RasterImage {
    match img {
        DynamicImage::ImageLuma8(b) => {
            let (w, h) = b.dimensions();
            RasterImage::new(w as usize, h as usize, 1, b.into_raw()).expect("sizes agree")
        }
        other => {
            let b = other.into_rgb8();
            let (w, h) = b.dimensions();
            RasterImage::new(w as usize, h as usize, 3, b.into_raw()).expect("sizes agree")
        }
    }
}

pub fn to_dynamic(img: &RasterImage) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let data = img.data().to_vec();
    if img.channels() == 1 {
        DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, data).expect("sizes agree"),
        )
    } else {
        DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, data).expect("sizes agree"))
    }
}

/// Reads a PNG or JPEG; colour images become 3-channel, grey ones 1-channel.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = image::ImageReader::new(BufReader::new(file))
        .with_guessed_format()
        .map_err(|e| io_err(path, e))?;
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_dynamic(img))
}

/// Writes PNG unless the extension asks for JPEG (quality 95).
pub fn save_image(path: &Path, img: &RasterImage) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let res = match ext.as_deref() {
        Some("jpg") | Some("jpeg") => to_dynamic(img)
            .write_with_encoder(JpegEncoder::new_with_quality(&mut out, 95)),
        _ => to_dynamic(img).write_to(&mut out, ImageFormat::Png),
    };
    res.map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Encodes as JPEG at `quality` (1-100) and decodes again.
pub fn jpeg_round_trip(img: &RasterImage, quality: u8) -> Result<RasterImage> {
    let mut buf = Vec::new();
    let wrap = |source| Error::Image {
        path: "<memory>".into(),
        source,
    };
    to_dynamic(img)
        .write_with_encoder(JpegEncoder::new_with_quality(&mut buf, quality.clamp(1, 100)))
        .map_err(wrap)?;
    let decoded = image::load_from_memory_with_format(&buf, ImageFormat::Jpeg).map_err(wrap)?;
    let mut out = from_dynamic(decoded);
    if img.channels() == 1 && out.channels() == 3 {
        out = crate::imaging::to_luma(&out);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Copy of `img` (as RGB) with the quad outline drawn in `rgb`.
pub fn draw_quad(img: &RasterImage, quad: &Quadrilateral, rgb: [u8; 3], thickness: usize) -> RasterImage {
    let mut out = if img.channels() == 3 {
        img.clone()
    } else {
        let (w, h) = (img.width(), img.height());
        let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage::new(w, h, 3, data).expect("sizes agree")
    };
    let r = quad.ring();
    for k in 0..4 {
        draw_segment(&mut out, r[k], r[(k + 1) % 4], rgb, thickness.max(1));
    }
    out
}

fn draw_segment(img: &mut RasterImage, p: Point, q: Point, rgb: [u8; 3], thickness: usize) {
    let steps = (p.dist(q).ceil() as usize).max(1) * 2;
    let half = thickness as isize / 2;
    let (w, h) = (img.width() as isize, img.height() as isize);
    for k in 0..=steps {
        let s = p.add(q.sub(p).scale(k as f64 / steps as f64));
        let (cx, cy) = (s.x.floor() as isize, s.y.floor() as isize);
        for dy in -half..=half {
            for dx in -half..=half {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && x < w && y < h {
                    for (c, &v) in rgb.iter().enumerate() {
                        img.set(x as usize, y as usize, c, v);
                    }
                }
            }
        }
    }
}

/// Heat map rendered with one `cell`-pixel square per window: red for
/// positive values, blue for negative, brightness by magnitude.
pub fn render_heatmap(ihm: &IntensityHeatMap, cell: usize) -> RasterImage {
    let cell = cell.max(1);
    let (w, h) = ((ihm.cols * cell).max(1), (ihm.rows * cell).max(1));
    let mut out = RasterImage::filled(w, h, 3, 0);
    let peak = ihm.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return out;
    }
    for r in 0..ihm.rows {
        for c in 0..ihm.cols {
            let v = ihm.at(r, c);
            let level = (v.abs() / peak * 255.0).round() as u8;
            let rgb = if v > 0.0 { [level, 0, 0] } else { [0, 0, level] };
            for y in r * cell..(r + 1) * cell {
                for x in c * cell..(c + 1) * cell {
                    for (ch, &val) in rgb.iter().enumerate() {
                        out.set(x, y, ch, val);
                    }
                }
            }
        }
    }
    out
}
