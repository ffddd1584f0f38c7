//! Localization watermarks for camera-captured screen content.
//!
//! The crate marks the margin blocks of an image with two orthogonal
//! DFT-magnitude signatures, finds that marked region again inside a
//! photograph of a screen without any prior knowledge, rectifies it, and
//! reads back a repeat-embedded payload. A capture simulator produces
//! distorted shots with ground truth for evaluation.
//!
//! Pipeline stages:
//!
//! 1. [`embedder`] marks the top/bottom margin blocks (group A) and the
//!    left/right ones (group B) with a PSNR-constrained magnitude pattern.
//! 2. [`localizer`] rescales the shot, extracts a Wiener residual and scans
//!    it with a sliding window, producing one intensity heat map per scale.
//! 3. [`bbox`] turns the heat-map peaks into four margin lines and keeps the
//!    quadrilateral with the highest local cost.
//! 4. [`rectify`] undoes the perspective and extracts the payload.
//!
//! [`pipeline`] chains stages 2 to 4, [`simulator`] fakes captures and
//! [`eval`] scores a manifest of shots over a parameter grid.

pub mod bbox;
pub mod config;
pub mod embedder;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod localizer;
pub mod metrics;
pub mod pipeline;
pub mod rectify;
pub mod simulator;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Homography, Line, Point, Quadrilateral};
pub use imaging::RasterImage;
