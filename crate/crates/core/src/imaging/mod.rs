//! Raster, spectral, filtering and resampling primitives.

mod color;
mod quality;
mod raster;
mod resample;
mod spectrum;
mod wiener;

pub use color::{apply_luma_delta, luma_of, to_luma};
pub use quality::{mse, psnr, psnr_from_mse};
pub use raster::{Plane, RasterImage};
pub(crate) use resample::warp_into;
pub use resample::{homography_window, resize_plane, scaled_dims, scaled_window, warp_perspective};
pub use spectrum::{bin_index, fft2, fft2_samples, ifft2, ifft2_samples, with_plan, Fft2d, Spectrum};
pub use wiener::{wiener_residual, wiener_residual_plane};
