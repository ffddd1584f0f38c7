use super::RasterImage;
use crate::error::{Error, Result};

/// Mean squared error over every sample of two equally shaped rasters.
pub fn mse(cover: &RasterImage, marked: &RasterImage) -> Result<f64> {
    if cover.dims() != marked.dims() {
        return Err(Error::DimensionMismatch {
            left: cover.dims(),
            right: marked.dims(),
        });
    }
    let n = cover.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: u64 = cover
        .data()
        .iter()
        .zip(marked.data())
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / n as f64)
}

/// Peak signal-to-noise ratio in dB for 8-bit data.
///
/// Identical inputs give `f64::INFINITY`.
pub fn psnr(cover: &RasterImage, marked: &RasterImage) -> Result<f64> {
    let m = mse(cover, marked)?;
    Ok(psnr_from_mse(m))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images_are_infinite() {
        let a = RasterImage::filled(4, 4, 3, 9);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn black_white_pixel_is_zero_db() {
        let a = RasterImage::filled(1, 1, 1, 0);
        let b = RasterImage::filled(1, 1, 1, 255);
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn unit_offset() {
        let a = RasterImage::filled(16, 16, 1, 128);
        let b = RasterImage::filled(16, 16, 1, 129);
        let p = psnr(&a, &b).unwrap();
        assert!((p - 10.0 * 65025f64.log10()).abs() < 1e-12);
        assert!((p - 48.13).abs() < 0.01);
    }

    #[test]
    fn symmetric_and_monotone() {
        let a = RasterImage::from_fn_luma(8, 8, |x, y| (x * 20 + y) as u8);
        let mut last = f64::INFINITY;
        for k in 1..20u8 {
            let b = RasterImage::from_fn_luma(8, 8, |x, y| (x * 20 + y) as u8 + k);
            let p = psnr(&a, &b).unwrap();
            assert_eq!(p, psnr(&b, &a).unwrap());
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn mismatch_is_error() {
        let a = RasterImage::filled(4, 4, 1, 0);
        let b = RasterImage::filled(4, 5, 1, 0);
        assert!(psnr(&a, &b).is_err());
    }
}
