//! The fourteen Haralick texture statistics of a co-occurrence matrix.
//!
//! Gray levels are indexed from 1 (this only affects the sum average).
//! Entropies use base-2 logarithms with `0·log 0 = 0`. Correlation, the
//! information measures and the maximal correlation coefficient fall back to
//! 0 when the statistic they divide by is zero.

use super::glcm::GlcmMatrix;
use crate::error::{Error, Result};

pub const HARALICK_LEN: usize = 14;

pub const HARALICK_NAMES: [&str; HARALICK_LEN] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_measure_correlation_1",
    "info_measure_correlation_2",
    "maximal_correlation_coefficient",
];

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn entropy(ps: &[f64]) -> f64 {
    -ps.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// Features of a single matrix.
pub fn haralick_single(m: &GlcmMatrix) -> [f64; HARALICK_LEN] {
    let n = m.levels();
    let p = m.as_slice();
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1]; // index k = i + j (0-based)
    let mut p_diff = vec![0.0; n];
    let mut asm = 0.0;
    let mut idm = 0.0;
    let mut sum_ij = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = p[i * n + j];
            px[i] += v;
            py[j] += v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
            asm += v * v;
            let d = i as f64 - j as f64;
            idm += v / (1.0 + d * d);
            sum_ij += (i as f64) * (j as f64) * v;
        }
    }
    let moments = |q: &[f64]| {
        let mean: f64 = q.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
        let var: f64 = q.iter().enumerate().map(|(k, &v)| (k as f64 - mean).powi(2) * v).sum();
        (mean, var)
    };
    let (mu_x, var_x) = moments(&px);
    let (mu_y, var_y) = moments(&py);
    let (sd_x, sd_y) = (var_x.sqrt(), var_y.sqrt());

    let contrast: f64 = p_diff.iter().enumerate().map(|(k, &v)| (k * k) as f64 * v).sum();
    let correlation = if sd_x > 0.0 && sd_y > 0.0 {
        (sum_ij - mu_x * mu_y) / (sd_x * sd_y)
    } else {
        0.0
    };
    // shifting the index base does not change a variance
    let sum_sq_var = var_x;
    let (sum_mean0, sum_var) = moments(&p_sum);
    let sum_avg = sum_mean0 + 2.0;
    let sum_ent = entropy(&p_sum);
    let hxy = entropy(p);
    let (_, diff_var) = moments(&p_diff);
    let diff_ent = entropy(&p_diff);

    let hx = entropy(&px);
    let hy = entropy(&py);
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= p[i * n + j] * q.log2();
                hxy2 -= q * q.log2();
            }
        }
    }
    let h_max = hx.max(hy);
    let imc1 = if h_max > 0.0 { (hxy - hxy1) / h_max } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy).max(0.0)).exp()).max(0.0).sqrt();
    let mcc = maximal_correlation(p, n, &px, &py);

    [
        asm,
        contrast,
        correlation,
        sum_sq_var,
        idm,
        sum_avg,
        sum_var,
        sum_ent,
        hxy,
        diff_var,
        diff_ent,
        imc1,
        imc2,
        mcc,
    ]
}

/// Square root of the second largest eigenvalue of
/// `Q(i,j) = Σ_k p(i,k) p(j,k) / (px(i) py(k))`.
///
/// `Q` is similar to the symmetric `B·Bᵀ` with `B(i,k) = p(i,k)/√(px(i) py(k))`,
/// so the eigenvalues come from a Jacobi sweep on that matrix, restricted to
/// levels with non-zero marginals.
fn maximal_correlation(p: &[f64], n: usize, px: &[f64], py: &[f64]) -> f64 {
    let rows: Vec<usize> = (0..n).filter(|&i| px[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&k| py[k] > 0.0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return 0.0;
    }
    let r = rows.len();
    let b: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&k| p[i * n + k] / (px[i] * py[k]).sqrt()))
        .collect();
    let c = cols.len();
    let mut s = vec![0.0; r * r];
    for i in 0..r {
        for j in i..r {
            let v: f64 = (0..c).map(|k| b[i * c + k] * b[j * c + k]).sum();
            s[i * r + j] = v;
            s[j * r + i] = v;
        }
    }
    let mut eig = symmetric_eigenvalues(s, r);
    eig.sort_by(|a, b| b.total_cmp(a));
    eig[1].max(0.0).sqrt()
}

/// Cyclic Jacobi eigenvalue iteration for a small dense symmetric matrix.
fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for pi in 0..n {
            for qi in pi + 1..n {
                let apq = a[pi * n + qi];
                if apq == 0.0 {
                    continue;
                }
                let app = a[pi * n + pi];
                let aqq = a[qi * n + qi];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + pi];
                    let akq = a[k * n + qi];
                    a[k * n + pi] = cs * akp - sn * akq;
                    a[k * n + qi] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[pi * n + k];
                    let aqk = a[qi * n + k];
                    a[pi * n + k] = cs * apk - sn * aqk;
                    a[qi * n + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Direction-averaged features.
pub fn haralick14(glcms: &[GlcmMatrix]) -> Result<[f64; HARALICK_LEN]> {
    if glcms.is_empty() {
        return Err(Error::DegeneratePatch);
    }
    let mut acc = [0.0; HARALICK_LEN];
    for m in glcms {
        for (a, v) in acc.iter_mut().zip(haralick_single(m)) {
            *a += v;
        }
    }
    let k = glcms.len() as f64;
    Ok(acc.map(|v| v / k))
}
