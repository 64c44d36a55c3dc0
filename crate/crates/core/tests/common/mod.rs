//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use glandseg::imaging::Label;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random()).collect()
}

/// Symmetric normalized co-occurrence matrix built by visiting every pixel
/// and looking up its neighbour at `(dx, dy)`.
pub fn glcm_oracle(plane: &[u8], w: usize, h: usize, g: usize, dx: isize, dy: isize) -> Option<Vec<Vec<f64>>> {
    let mut m = vec![vec![0.0; g]; g];
    let mut total = 0.0;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let a = plane[(y * w as isize + x) as usize] as usize * g / 256;
            let b = plane[(ny * w as isize + nx) as usize] as usize * g / 256;
            m[a][b] += 1.0;
            m[b][a] += 1.0;
            total += 2.0;
        }
    }
    if total == 0.0 {
        return None;
    }
    for row in &mut m {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Some(m)
}

pub const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (1, -1), (0, -1), (-1, -1)];

fn xlog2(v: f64) -> f64 {
    if v > 0.0 {
        v * v.log2()
    } else {
        0.0
    }
}

/// Textbook Haralick features with gray levels numbered `1..=G`.
pub fn haralick_oracle(p: &[Vec<f64>]) -> [f64; 14] {
    let g = p.len();
    let lv = |i: usize| (i + 1) as f64;
    let px: Vec<f64> = (0..g).map(|i| (0..g).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..g).map(|j| (0..g).map(|i| p[i][j]).sum()).collect();
    let mux: f64 = (0..g).map(|i| lv(i) * px[i]).sum();
    let muy: f64 = (0..g).map(|j| lv(j) * py[j]).sum();
    let sx = (0..g).map(|i| (lv(i) - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..g).map(|j| (lv(j) - muy).powi(2) * py[j]).sum::<f64>().sqrt();
    // p_{x+y}(k) for k = 2..=2G and p_{x-y}(k) for k = 0..G-1
    let psum: Vec<f64> = (2..=2 * g)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..g {
                for j in 0..g {
                    if i + j + 2 == k {
                        s += p[i][j];
                    }
                }
            }
            s
        })
        .collect();
    let pdiff: Vec<f64> = (0..g)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..g {
                for j in 0..g {
                    if i.abs_diff(j) == k {
                        s += p[i][j];
                    }
                }
            }
            s
        })
        .collect();

    let mut f = [0.0; 14];
    let mut hxy = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    let mut corr_num = 0.0;
    for i in 0..g {
        for j in 0..g {
            let v = p[i][j];
            f[0] += v * v;
            corr_num += lv(i) * lv(j) * v;
            f[3] += (lv(i) - mux).powi(2) * v;
            f[4] += v / (1.0 + (lv(i) - lv(j)).powi(2));
            hxy -= xlog2(v);
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= v * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    f[1] = (0..g).map(|k| (k * k) as f64 * pdiff[k]).sum();
    f[2] = if sx > 0.0 && sy > 0.0 {
        (corr_num - mux * muy) / (sx * sy)
    } else {
        0.0
    };
    f[5] = psum.iter().enumerate().map(|(k, &v)| (k + 2) as f64 * v).sum();
    f[6] = psum
        .iter()
        .enumerate()
        .map(|(k, &v)| ((k + 2) as f64 - f[5]).powi(2) * v)
        .sum();
    f[7] = -psum.iter().map(|&v| xlog2(v)).sum::<f64>();
    f[8] = hxy;
    let dmean: f64 = pdiff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    f[9] = pdiff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - dmean).powi(2) * v)
        .sum();
    f[10] = -pdiff.iter().map(|&v| xlog2(v)).sum::<f64>();
    let hx = -px.iter().map(|&v| xlog2(v)).sum::<f64>();
    let hy = -py.iter().map(|&v| xlog2(v)).sum::<f64>();
    let hmax = hx.max(hy);
    f[11] = if hmax > 0.0 { (hxy - hxy1) / hmax } else { 0.0 };
    f[12] = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();
    f[13] = maximal_correlation_oracle(p, &px, &py);
    f
}

/// Square root of the second largest eigenvalue of
/// `Q(i,j) = Σ_k p(i,k) p(j,k) / (p_x(i) p_y(k))`, from a general
/// (non-symmetric) eigen solver.
fn maximal_correlation_oracle(p: &[Vec<f64>], px: &[f64], py: &[f64]) -> f64 {
    let g = p.len();
    let q = DMatrix::from_fn(g, g, |i, j| {
        if px[i] == 0.0 {
            return 0.0;
        }
        (0..g)
            .filter(|&k| py[k] > 0.0)
            .map(|k| p[i][k] * p[j][k] / (px[i] * py[k]))
            .sum()
    });
    let mut eig: Vec<f64> = q.complex_eigenvalues().iter().map(|c| c.re).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.get(1).copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Direction-averaged oracle features of one plane, or `None` without pairs.
pub fn haralick_plane_oracle(plane: &[u8], w: usize, h: usize, g: usize) -> Option<[f64; 14]> {
    let mats: Vec<_> = DIRECTIONS
        .iter()
        .filter_map(|&(dx, dy)| glcm_oracle(plane, w, h, g, dx, dy))
        .collect();
    if mats.is_empty() {
        return None;
    }
    let mut acc = [0.0; 14];
    for m in &mats {
        for (a, v) in acc.iter_mut().zip(haralick_oracle(m)) {
            *a += v;
        }
    }
    Some(acc.map(|v| v / mats.len() as f64))
}

fn window_values(plane: &[u8], w: usize, h: usize, x: usize, y: usize, m: usize) -> Vec<f64> {
    let r = (m / 2) as isize;
    let mut vals = Vec::with_capacity(m * m);
    for dy in -r..=r {
        for dx in -r..=r {
            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            vals.push(plane[yy * w + xx] as f64);
        }
    }
    vals
}

/// Double-loop mean filter with replicated borders.
pub fn mean_filter_oracle(plane: &[u8], w: usize, h: usize, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = window_values(plane, w, h, x, y, m);
            out.push(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    out
}

/// Double-loop two-pass population std filter with replicated borders.
pub fn std_filter_oracle(plane: &[u8], w: usize, h: usize, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = window_values(plane, w, h, x, y, m);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            out.push((v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt());
        }
    }
    out
}

/// Exhaustive KNN: full stable sort by distance, majority vote, ties to the
/// label of the nearest tied neighbour.
pub fn knn_oracle(train: &[Vec<f64>], labels: &[Label], x: &[f64], k: usize) -> Label {
    let mut order: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, s)| (s.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let nearest = &order[..k.min(order.len())];
    let count = |l: Label| nearest.iter().filter(|&&(_, i)| labels[i] == l).count();
    let best = [Label::Gland, Label::Mix, Label::NonGland]
        .into_iter()
        .map(count)
        .max()
        .unwrap();
    nearest
        .iter()
        .map(|&(_, i)| labels[i])
        .find(|&l| count(l) == best)
        .unwrap()
}

/// Two uniform blobs separated along the first two features.
pub fn separable_set(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let gland = i % 2 == 0;
        let shift = if gland { 1.0 } else { -1.0 };
        let x: Vec<f64> = (0..dim)
            .map(|d| {
                let noise: f64 = rng.random_range(-1.0..1.0);
                if d < 2 {
                    shift * 1.5 + 0.6 * noise
                } else {
                    3.0 * noise
                }
            })
            .collect();
        xs.push(x);
        ys.push(if gland { Label::Gland } else { Label::NonGland });
    }
    (xs, ys)
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Two-stain Beer-Lambert image: optical density `c_h·h + c_e·e` per
/// channel with spatially varying, noisy stain concentrations.
pub fn stained_image(seed: u64, size: usize, h: [f64; 3], e: [f64; 3]) -> glandseg::ImageRGB {
    let mut r = rng(seed);
    glandseg::ImageRGB::from_fn(size, size, |x, y| {
        let base = 0.5 + 0.5 * ((x as f64 * 0.11).sin() * (y as f64 * 0.07).cos());
        let ch = (base + r.random_range(0.0..0.6)).max(0.0);
        let ce = (1.0 - base + r.random_range(0.0..0.6)).max(0.0);
        [0, 1, 2].map(|c| (255.0 * (-(ch * h[c] + ce * e[c])).exp()).round().clamp(0.0, 255.0) as u8)
    })
}

pub const STAINS_A: ([f64; 3], [f64; 3]) = ([0.65, 0.70, 0.29], [0.07, 0.99, 0.11]);
pub const STAINS_B: ([f64; 3], [f64; 3]) = ([0.55, 0.85, 0.35], [0.15, 0.80, 0.25]);
