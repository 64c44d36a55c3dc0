//! Reinhard colour transfer in the decorrelated log `lαβ` space.
//!
//! RGB is mapped to LMS cone responses, log10-compressed and rotated into
//! `l` (achromatic), `α` (yellow-blue) and `β` (red-green). Matching the
//! per-channel mean and standard deviation of a reference image there and
//! mapping back gives the stain normalization used before feature extraction.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageRGB;

/// Lower clamp for the standard deviations.
pub const STD_EPSILON: f64 = 1e-6;

/// Channel values below this are clamped before the logarithm.
const MIN_INTENSITY: f64 = 1.0 / 255.0;

/// Reinhard et al. (2001) RGB→LMS matrix.
const RGB_TO_LMS_RAW: [[f64; 3]; 3] = [
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1288, 0.8444],
];

type Mat3 = [[f64; 3]; 3];

/// The published rows sum to 0.9996/0.9993/0.9973; each row is rescaled to
/// sum to one so that grey maps exactly onto the achromatic axis.
fn rgb_to_lms() -> &'static Mat3 {
    static M: OnceLock<Mat3> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = RGB_TO_LMS_RAW;
        for row in &mut m {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        m
    })
}

fn lms_to_rgb() -> &'static Mat3 {
    static M: OnceLock<Mat3> = OnceLock::new();
    M.get_or_init(|| invert3(rgb_to_lms()))
}

fn invert3(m: &Mat3) -> Mat3 {
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let cof = [
        [c(1, 1, 2, 2), -c(1, 0, 2, 2), c(1, 0, 2, 1)],
        [-c(0, 1, 2, 2), c(0, 0, 2, 2), -c(0, 0, 2, 1)],
        [c(0, 1, 1, 2), -c(0, 0, 1, 2), c(0, 0, 1, 1)],
    ];
    let det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2];
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cof[j][i] / det;
        }
    }
    inv
}

fn mul(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;
const INV_SQRT6: f64 = 0.408_248_290_463_863;
const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn log_lms_to_lab(v: [f64; 3]) -> [f64; 3] {
    let [l, m, s] = v;
    [
        INV_SQRT3 * (l + m + s),
        INV_SQRT6 * (l + m - 2.0 * s),
        INV_SQRT2 * (l - m),
    ]
}

fn lab_to_log_lms(v: [f64; 3]) -> [f64; 3] {
    let [l, a, b] = [v[0] * INV_SQRT3, v[1] * INV_SQRT6, v[2] * INV_SQRT2];
    [l + a + b, l + a - b, l - 2.0 * a]
}

/// Per-pixel `(l, α, β)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LabPixelImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl LabPixelImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::dims(width * height, data.len()));
        }
        Ok(LabPixelImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }
}

/// Mean and population standard deviation of each `lαβ` channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

pub fn rgb_pixel_to_lab(px: [u8; 3]) -> [f64; 3] {
    let rgb = px.map(|c| (c as f64 / 255.0).max(MIN_INTENSITY));
    log_lms_to_lab(mul(rgb_to_lms(), rgb).map(f64::log10))
}

pub fn lab_pixel_to_rgb(lab: [f64; 3]) -> [u8; 3] {
    let lms = lab_to_log_lms(lab).map(|v| 10f64.powf(v));
    mul(lms_to_rgb(), lms).map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

pub fn rgb_to_lab(img: &ImageRGB) -> LabPixelImage {
    LabPixelImage {
        width: img.width(),
        height: img.height(),
        data: img.pixels().iter().map(|&p| rgb_pixel_to_lab(p)).collect(),
    }
}

pub fn lab_to_rgb(lab: &LabPixelImage) -> ImageRGB {
    let data = lab.data.iter().map(|&v| lab_pixel_to_rgb(v)).collect();
    ImageRGB::new(lab.width, lab.height, data).expect("lab image has valid dimensions")
}

pub fn channel_stats(lab: &LabPixelImage) -> Result<ChannelStats> {
    if lab.data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = lab.data.len() as f64;
    let mut mean = [0.0; 3];
    for px in &lab.data {
        for c in 0..3 {
            mean[c] += px[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for px in &lab.data {
        for c in 0..3 {
            let d = px[c] - mean[c];
            var[c] += d * d;
        }
    }
    let std = var.map(|v| (v / n).sqrt().max(STD_EPSILON));
    Ok(ChannelStats { mean, std })
}

/// Maps `lab` so that its channel statistics become `target`. `source` must be
/// the statistics of `lab` itself.
pub fn transfer_lab(lab: &LabPixelImage, source: &ChannelStats, target: &ChannelStats) -> LabPixelImage {
    let scale = [0, 1, 2].map(|c| target.std[c] / source.std[c]);
    let data = lab
        .data
        .iter()
        .map(|px| [0, 1, 2].map(|c| (px[c] - source.mean[c]) * scale[c] + target.mean[c]))
        .collect();
    LabPixelImage {
        width: lab.width,
        height: lab.height,
        data,
    }
}

pub fn reinhard_normalize(src: &ImageRGB, target: &ChannelStats) -> ImageRGB {
    let lab = rgb_to_lab(src);
    let stats = channel_stats(&lab).expect("ImageRGB is never empty");
    lab_to_rgb(&transfer_lab(&lab, &stats, target))
}

/// Statistics of an RGB image's `lαβ` representation.
pub fn image_stats(img: &ImageRGB) -> ChannelStats {
    channel_stats(&rgb_to_lab(img)).expect("ImageRGB is never empty")
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn black_is_finite() {
        let lab = rgb_pixel_to_lab([0, 0, 0]);
        assert!(lab.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn grey_is_achromatic() {
        // Direct arithmetic: equal RGB gives equal LMS (unit row sums), so the
        // log-LMS triple is (k, k, k) and α = (k+k-2k)/√6 = 0, β = (k-k)/√2 = 0.
        let lab = rgb_pixel_to_lab([128, 128, 128]);
        assert!(lab[1].abs() < 1e-6, "alpha = {}", lab[1]);
        assert!(lab[2].abs() < 1e-6, "beta = {}", lab[2]);
        let k = (128.0f64 / 255.0).log10();
        assert!((lab[0] - 3.0 * k * INV_SQRT3).abs() < 1e-12);
    }

    #[test]
    fn matrix_inverse() {
        let (a, b) = (rgb_to_lms(), lms_to_rgb());
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                assert!((v - (i == j) as u8 as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_random_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let px: [u8; 3] = [rng.random(), rng.random(), rng.random()];
            let back = lab_pixel_to_rgb(rgb_pixel_to_lab(px));
            // zero channels are clamped to 1/255 before the log and come back as 1
            for c in 0..3 {
                assert!((back[c] as i32 - px[c] as i32).abs() <= 1, "{px:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn out_of_gamut_clamps() {
        assert_eq!(lab_pixel_to_rgb([50.0, 0.0, 0.0]), [255, 255, 255]);
        assert_eq!(lab_pixel_to_rgb([-50.0, 0.0, 0.0]), [0, 0, 0]);
        let lab = LabPixelImage::new(3, 2, vec![[0.0; 3]; 6]).unwrap();
        let rgb = lab_to_rgb(&lab);
        assert!(rgb.pixels().iter().all(|&p| p == rgb.pixels()[0]));
    }

    #[test]
    fn stats_closed_forms() {
        let lab = LabPixelImage::new(4, 4, vec![[-1.0, 0.5, 0.25]; 16]).unwrap();
        let s = channel_stats(&lab).unwrap();
        assert_eq!(s.std, [STD_EPSILON; 3]);
        assert_eq!(s.mean, [-1.0, 0.5, 0.25]);

        let lab = LabPixelImage::new(2, 1, vec![[1.0, -3.0, 0.0], [4.0, 5.0, 0.5]]).unwrap();
        let s = channel_stats(&lab).unwrap();
        assert_eq!(s.mean, [2.5, 1.0, 0.25]);
        assert_eq!(s.std, [1.5, 4.0, 0.25]);

        assert!(channel_stats(&LabPixelImage::new(0, 0, vec![]).unwrap()).is_err());
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = ImageRGB::from_fn(64, 64, |_, _| [rng.random(), rng.random(), rng.random()]);
        let lab = rgb_to_lab(&img);
        let s = channel_stats(&lab).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> = lab.pixels().iter().map(|p| p[c]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!((s.mean[c] - mean).abs() <= 1e-9 * mean.abs().max(1e-300));
            assert!((s.std[c] - var.sqrt()).abs() <= 1e-9 * var.sqrt());
        }
    }

    #[test]
    fn identity_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = ImageRGB::from_fn(40, 30, |_, _| {
            [rng.random_range(20..250), rng.random(), rng.random_range(5..255)]
        });
        let out = reinhard_normalize(&img, &image_stats(&img));
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            for c in 0..3 {
                assert!((a[c] as i32 - b[c] as i32).abs() <= 2);
            }
        }
    }

    #[test]
    fn constant_source_maps_to_target_mean() {
        let img = ImageRGB::filled(8, 8, [120, 60, 200]);
        let target = ChannelStats {
            mean: [-0.6, 0.02, -0.01],
            std: [0.3, 0.05, 0.02],
        };
        let out = reinhard_normalize(&img, &target);
        let expected = lab_pixel_to_rgb(target.mean);
        assert!(out.pixels().iter().all(|&p| p == expected));
    }

    #[test]
    fn doubling_target_std_doubles_deviations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = ImageRGB::from_fn(16, 16, |_, _| [rng.random(), rng.random(), rng.random()]);
        let lab = rgb_to_lab(&img);
        let src = channel_stats(&lab).unwrap();
        let t1 = ChannelStats {
            mean: [-0.5, 0.01, 0.0],
            std: [0.2, 0.04, 0.03],
        };
        let t2 = ChannelStats {
            std: t1.std.map(|s| 2.0 * s),
            ..t1
        };
        let a = transfer_lab(&lab, &src, &t1);
        let b = transfer_lab(&lab, &src, &t2);
        for (pa, pb) in a.pixels().iter().zip(b.pixels()) {
            for c in 0..3 {
                let da = pa[c] - t1.mean[c];
                let db = pb[c] - t1.mean[c];
                assert!((db - 2.0 * da).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = ImageRGB::from_fn(20, 20, |_, _| [rng.random(), rng.random(), rng.random()]);
        let t = ChannelStats {
            mean: [-0.4, 0.01, 0.02],
            std: [0.25, 0.03, 0.04],
        };
        assert_eq!(reinhard_normalize(&img, &t), reinhard_normalize(&img, &t));
    }
}
