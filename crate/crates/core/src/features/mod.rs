//! Per-patch feature vectors.
//!
//! Layout, for bins `B1` (1-D) and `B2` (2-D, per axis):
//!
//! | segment   | length |
//! |-----------|--------|
//! | Fr Fg Fb  | 3·B1   |
//! | 2-D hists | 3·B2²  |
//! | Haralick  | 3·14   |
//!
//! Channels always appear in R, G, B order within a segment. Histograms are
//! raw counts.

pub mod filters;
pub mod glcm;
pub mod haralick;
pub mod histogram;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageRGB;

pub use filters::{mean_filter, std_filter};
pub use glcm::{glcm, glcm_all, Direction, GlcmMatrix};
pub use haralick::{haralick14, HARALICK_LEN, HARALICK_NAMES};
pub use histogram::{channel_histogram, hist2d};

pub type FeatureVector = Vec<f64>;

/// Window and binning parameters of one cascade level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelConfig {
    /// Patch side in pixels.
    pub window: usize,
    /// Mean/std filter side (odd).
    pub filter: usize,
    pub bins1d: usize,
    pub bins2d: usize,
    pub glcm_levels: usize,
}

impl LevelConfig {
    pub fn new(window: usize, filter: usize) -> Self {
        LevelConfig {
            window,
            filter,
            bins1d: 32,
            bins2d: 8,
            glcm_levels: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::param("window", "must be at least 1"));
        }
        if self.filter.is_multiple_of(2) {
            return Err(Error::param("filter", format!("must be odd, got {}", self.filter)));
        }
        if self.bins1d < 2 || self.bins1d > 256 {
            return Err(Error::param("bins1d", "must be in 2..=256"));
        }
        if self.bins2d < 2 {
            return Err(Error::param("bins2d", "must be at least 2"));
        }
        if self.glcm_levels < 2 || self.glcm_levels > 256 {
            return Err(Error::param("glcm_levels", "must be in 2..=256"));
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        3 * self.bins1d + 3 * self.bins2d * self.bins2d + 3 * HARALICK_LEN
    }
}

/// Builds the feature vector of a `cfg.window`-sided RGB patch.
pub fn assemble_features(patch: &ImageRGB, cfg: &LevelConfig) -> Result<FeatureVector> {
    let (w, h) = (patch.width(), patch.height());
    if w != cfg.window || h != cfg.window {
        return Err(Error::dims(format!("{0}x{0} patch", cfg.window), format!("{w}x{h}")));
    }
    let planes = [patch.channel(0), patch.channel(1), patch.channel(2)];
    let mut out = Vec::with_capacity(cfg.feature_dim());
    for plane in &planes {
        out.extend(channel_histogram(plane, cfg.bins1d).into_iter().map(f64::from));
    }
    for plane in &planes {
        let mean = mean_filter(plane, w, h, cfg.filter)?;
        let std = std_filter(plane, w, h, cfg.filter)?;
        out.extend(hist2d(&mean, &std, cfg.bins2d)?.into_iter().map(f64::from));
    }
    for plane in &planes {
        out.extend(haralick14(&glcm_all(plane, w, h, cfg.glcm_levels))?);
    }
    debug_assert_eq!(out.len(), cfg.feature_dim());
    Ok(out)
}

/// Column names matching [`assemble_features`] output.
pub fn feature_names(cfg: &LevelConfig) -> Vec<String> {
    let ch = ["r", "g", "b"];
    let mut names = Vec::with_capacity(cfg.feature_dim());
    for c in ch {
        names.extend((0..cfg.bins1d).map(|i| format!("hist_{c}_{i}")));
    }
    for c in ch {
        for m in 0..cfg.bins2d {
            names.extend((0..cfg.bins2d).map(|s| format!("hist2d_{c}_m{m}_s{s}")));
        }
    }
    for c in ch {
        names.extend(HARALICK_NAMES.iter().map(|n| format!("hara_{c}_{n}")));
    }
    names
}
