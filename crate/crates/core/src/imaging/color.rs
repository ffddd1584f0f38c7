use super::RasterImage;

/// Integer BT.601 luma, 16-bit fixed point weights (0.299, 0.587, 0.114).
#[inline]
pub fn luma_of(r: u8, g: u8, b: u8) -> u8 {
    let y = 19595 * r as u32 + 38470 * g as u32 + 7471 * b as u32 + 32768;
    (y >> 16) as u8
}

/// Converts to a single-channel luma raster. One-channel input is returned unchanged.
pub fn to_luma(img: &RasterImage) -> RasterImage {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| luma_of(p[0], p[1], p[2]))
        .collect();
    RasterImage::new(img.width(), img.height(), 1, data).expect("luma dims are consistent")
}

/// Applies a luma change to an RGB (or luma) raster while leaving chroma untouched.
///
/// Adding the same offset to R, G and B shifts Y by that offset and keeps
/// Cb/Cr fixed, because the BT.601 weights sum to one.
pub fn apply_luma_delta(img: &mut RasterImage, x: usize, y: usize, delta: i32) {
    for c in 0..img.channels() {
        let v = img.get(x, y, c) as i32 + delta;
        img.set(x, y, c, v.clamp(0, 255) as u8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bt601_reference_pixels() {
        assert_eq!(luma_of(255, 255, 255), 255);
        assert_eq!(luma_of(0, 0, 0), 0);
        // round(0.299 * 255) = round(76.245)
        assert_eq!(luma_of(255, 0, 0), 76);
        assert_eq!(luma_of(0, 255, 0), 150);
        assert_eq!(luma_of(0, 0, 255), 29);
    }

    #[test]
    fn luma_of_gray_is_identity() {
        for v in 0..=255u8 {
            assert_eq!(luma_of(v, v, v), v);
        }
    }

    #[test]
    fn single_channel_passes_through() {
        let img = RasterImage::from_fn_luma(5, 4, |x, y| (x * 10 + y) as u8);
        assert_eq!(to_luma(&img), img);
    }
}
