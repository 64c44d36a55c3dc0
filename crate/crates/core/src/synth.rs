//! Synthetic gland-like images with exact ground truth, for tests and demos.
//!
//! Bright smooth ellipses ("glands", intensity ≈ 200 ± 10) are drawn over a
//! darker checkerboard-modulated textured background (≈ 90 ± 30).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::imaging::{BinaryMask, ImageRGB};
use crate::pipeline::TrainingPair;
use crate::seed::derived_rng;

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
    level: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

fn tint(v: f64, rgb: [f64; 3]) -> [u8; 3] {
    rgb.map(|k| (v * k).round().clamp(0.0, 255.0) as u8)
}

/// One `width × height` image and its mask, fully determined by `(seed, index)`.
pub fn gland_image(seed: u64, index: u64, width: usize, height: usize) -> (ImageRGB, BinaryMask) {
    let mut rng = derived_rng(seed, index);
    let count = rng.random_range(3..=6);
    let short = width.min(height) as f64;
    let glands: Vec<Ellipse> = (0..count)
        .map(|_| {
            let a = rng.random_range(0.08..0.16) * short;
            let b = a * rng.random_range(0.55..1.0);
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            Ellipse {
                cx: rng.random_range(a..width as f64 - a),
                cy: rng.random_range(a..height as f64 - a),
                a,
                b,
                cos: angle.cos(),
                sin: angle.sin(),
                level: rng.random_range(190.0..210.0),
            }
        })
        .collect();
    let cell = rng.random_range(3..=5);
    let noise = Normal::new(0.0, 8.0).expect("valid sigma");
    let smooth = Normal::new(0.0, 2.0).expect("valid sigma");
    let gland_tint = [1.0, 0.82, 0.92];
    let background_tint = [0.95, 0.75, 1.05];

    let mask = BinaryMask::from_fn(width, height, |x, y| {
        glands.iter().any(|g| g.contains(x as f64 + 0.5, y as f64 + 0.5))
    });
    let image = ImageRGB::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        match glands.iter().find(|g| g.contains(fx, fy)) {
            Some(g) => {
                let ripple = 4.0 * ((fx * 0.07).sin() + (fy * 0.05).cos());
                tint(g.level + ripple + smooth.sample(&mut rng), gland_tint)
            }
            None => {
                let checker = if ((x / cell) + (y / cell)) % 2 == 0 { 1.0 } else { -1.0 };
                tint(90.0 + 22.0 * checker + noise.sample(&mut rng), background_tint)
            }
        }
    });
    (image, mask)
}

/// `count` training pairs named `synth_<i>`.
pub fn gland_dataset(seed: u64, first_index: u64, count: usize, width: usize, height: usize) -> Vec<TrainingPair> {
    (0..count as u64)
        .map(|i| {
            let (image, mask) = gland_image(seed, first_index + i, width, height);
            TrainingPair {
                name: format!("synth_{}", first_index + i),
                image,
                mask,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_nontrivial() {
        let (a, ma) = gland_image(1, 0, 128, 96);
        let (b, mb) = gland_image(1, 0, 128, 96);
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let white = ma.count_white();
        assert!(white > 0 && white < 128 * 96);
        let (c, _) = gland_image(1, 1, 128, 96);
        assert_ne!(a, c);
    }

    #[test]
    fn glands_brighter_than_background() {
        let (img, mask) = gland_image(7, 3, 256, 256);
        let mean = |want: bool| {
            let v: Vec<f64> = img
                .pixels()
                .iter()
                .zip(mask.bits())
                .filter(|(_, &b)| (b == 1) == want)
                .map(|(p, _)| p[0] as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) > 170.0);
        assert!(mean(false) < 110.0);
    }
}
