//! Sliding mean and standard deviation filters over one channel of a patch.
//!
//! Borders are replicate-padded. Window sums come from an integer summed-area
//! table so the results are exact up to the final division and square root.

use crate::error::{Error, Result};

struct Integral {
    stride: usize,
    sum: Vec<i64>,
    sq: Vec<i64>,
}

impl Integral {
    /// Summed-area tables of the replicate-padded plane (pad `r` on every side).
    fn new(plane: &[u8], width: usize, height: usize, r: usize) -> Self {
        let pw = width + 2 * r;
        let ph = height + 2 * r;
        let stride = pw + 1;
        let mut sum = vec![0i64; stride * (ph + 1)];
        let mut sq = vec![0i64; stride * (ph + 1)];
        for py in 0..ph {
            let sy = py.saturating_sub(r).min(height - 1);
            let mut row_s = 0i64;
            let mut row_q = 0i64;
            for px in 0..pw {
                let sx = px.saturating_sub(r).min(width - 1);
                let v = plane[sy * width + sx] as i64;
                row_s += v;
                row_q += v * v;
                let i = (py + 1) * stride + px + 1;
                sum[i] = sum[i - stride] + row_s;
                sq[i] = sq[i - stride] + row_q;
            }
        }
        Integral { stride, sum, sq }
    }

    /// Sum and sum of squares over the `m×m` window whose top-left padded
    /// coordinate is `(x, y)`.
    fn window(&self, x: usize, y: usize, m: usize) -> (i64, i64) {
        let s = self.stride;
        let (a, b, c, d) = (y * s + x, y * s + x + m, (y + m) * s + x, (y + m) * s + x + m);
        (
            self.sum[d] - self.sum[b] - self.sum[c] + self.sum[a],
            self.sq[d] - self.sq[b] - self.sq[c] + self.sq[a],
        )
    }
}

fn check(plane: &[u8], width: usize, height: usize, m: usize) -> Result<()> {
    if m.is_multiple_of(2) {
        return Err(Error::param("filter window", format!("must be odd, got {m}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::EmptyInput);
    }
    if plane.len() != width * height {
        return Err(Error::dims(width * height, plane.len()));
    }
    Ok(())
}

fn apply(plane: &[u8], width: usize, height: usize, m: usize, f: impl Fn(i64, i64, i64) -> f64) -> Vec<f64> {
    let r = m / 2;
    let table = Integral::new(plane, width, height, r);
    let n = (m * m) as i64;
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (s, q) = table.window(x, y, m);
            out.push(f(s, q, n));
        }
    }
    out
}

pub fn mean_filter(plane: &[u8], width: usize, height: usize, m: usize) -> Result<Vec<f64>> {
    check(plane, width, height, m)?;
    Ok(apply(plane, width, height, m, |s, _, n| s as f64 / n as f64))
}

/// Population standard deviation over each `m×m` window.
pub fn std_filter(plane: &[u8], width: usize, height: usize, m: usize) -> Result<Vec<f64>> {
    check(plane, width, height, m)?;
    Ok(apply(plane, width, height, m, |s, q, n| {
        // n·Σv² − (Σv)² is exact in i64 and never negative
        let scaled = n * q - s * s;
        (scaled as f64).sqrt() / n as f64
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(plane: &[u8], w: usize, h: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let r = (m / 2) as isize;
        let at = |x: isize, y: isize| {
            let x = x.clamp(0, w as isize - 1) as usize;
            let y = y.clamp(0, h as isize - 1) as usize;
            plane[y * w + x] as f64
        };
        let mut means = vec![];
        let mut stds = vec![];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut vals = vec![];
                for dy in -r..=r {
                    for dx in -r..=r {
                        vals.push(at(x + dx, y + dy));
                    }
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                means.push(mean);
                stds.push(var.sqrt());
            }
        }
        (means, stds)
    }

    #[test]
    fn constant_and_identity() {
        let plane = vec![77u8; 49];
        assert!(mean_filter(&plane, 7, 7, 5).unwrap().iter().all(|&v| v == 77.0));
        assert!(std_filter(&plane, 7, 7, 5).unwrap().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plane: Vec<u8> = (0..30).map(|_| rng.random()).collect();
        let mean = mean_filter(&plane, 6, 5, 1).unwrap();
        assert!(mean.iter().zip(&plane).all(|(&a, &b)| a == b as f64));
        assert!(std_filter(&plane, 6, 5, 1).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn even_window_rejected() {
        assert!(mean_filter(&[0; 9], 3, 3, 2).is_err());
        assert!(std_filter(&[0; 9], 3, 3, 4).is_err());
    }

    #[test]
    fn checkerboard_interior() {
        let plane: Vec<u8> = (0..49)
            .map(|i| if (i % 7 + i / 7) % 2 == 0 { 0 } else { 255 })
            .collect();
        let mean = mean_filter(&plane, 7, 7, 3).unwrap();
        let (oracle, _) = naive(&plane, 7, 7, 3);
        // (3,3) is black with four white edge-neighbours: 4·255/9
        assert!((mean[3 * 7 + 3] - 4.0 * 255.0 / 9.0).abs() < 1e-12);
        assert!((mean[3 * 7 + 3] - oracle[3 * 7 + 3]).abs() < 1e-12);
    }

    #[test]
    fn random_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &w in &[5usize, 11, 21] {
            for &m in &[1usize, 3, 5, 7] {
                let plane: Vec<u8> = (0..w * w).map(|_| rng.random()).collect();
                let (om, os) = naive(&plane, w, w, m);
                let mean = mean_filter(&plane, w, w, m).unwrap();
                let std = std_filter(&plane, w, w, m).unwrap();
                for i in 0..w * w {
                    assert!((mean[i] - om[i]).abs() <= 1e-9 * om[i].abs().max(1.0));
                    assert!((std[i] - os[i]).abs() <= 1e-9 * os[i].abs().max(1.0));
                }
            }
        }
    }
}
