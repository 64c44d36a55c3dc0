//! Gland segmentation in colon histology images.
//!
//! Images are stain-normalized, tiled into square patches, described by
//! intensity histograms, mean/std 2-D histograms and Haralick texture
//! statistics, and classified by a cascade of random forests over the labels
//! `Gland`, `NonGland` and `Mix`. Patches labelled `Mix` are re-tiled at the
//! next (finer) window size until every pixel is resolved.

pub mod colornorm;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod imaging;
pub mod model_io;
pub mod pipeline;
pub mod postproc;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{BinaryMask, ImageRGB, Label, LabelImage, PatchRef};
