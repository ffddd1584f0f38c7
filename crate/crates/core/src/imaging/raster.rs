use crate::error::{Error, Result};

/// An 8-bit raster with one (luma) or three (RGB) interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!(
                "unsupported channel count {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "buffer holds {} samples, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("filled raster has a consistent buffer")
    }

    pub fn from_fn_luma(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Copies the `w`x`h` region whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidInput(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Self::new(w, h, c, data)
    }

    /// Writes `block` into this raster at `(x0, y0)`. Channel counts must agree.
    pub fn paste(&mut self, block: &RasterImage, x0: usize, y0: usize) -> Result<()> {
        if block.channels != self.channels
            || x0 + block.width > self.width
            || y0 + block.height > self.height
        {
            return Err(Error::InvalidInput("paste out of bounds".into()));
        }
        let c = self.channels;
        for y in 0..block.height {
            let dst = ((y0 + y) * self.width + x0) * c;
            let src = y * block.width * c;
            self.data[dst..dst + block.width * c]
                .copy_from_slice(&block.data[src..src + block.width * c]);
        }
        Ok(())
    }
}

/// Floating point single-channel workspace, used for residuals and resampled luma.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_luma(img: &RasterImage) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::InvalidInput("expected a single-channel raster".into()));
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| v as f32).collect(),
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Rounds and clamps back to an 8-bit luma raster.
    pub fn to_luma(&self) -> RasterImage {
        let data = self
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        RasterImage::new(self.width, self.height, 1, data).expect("plane dims are consistent")
    }

    /// Copies a window into `out` as f64, row-major.
    pub fn window_into(&self, x0: usize, y0: usize, side: usize, out: &mut Vec<f64>) {
        out.clear();
        for y in y0..y0 + side {
            let row = &self.data[y * self.width + x0..y * self.width + x0 + side];
            out.extend(row.iter().map(|&v| v as f64));
        }
    }
}
