use crate::error::{Error, Result};

/// Upper edge of the standard-deviation axis of the 2-D histogram. The
/// population std of 8-bit data never exceeds 127.5.
pub const STD_AXIS_MAX: f64 = 128.0;

/// Intensity histogram with `bins` uniform bins over `[0, 256)`.
pub fn channel_histogram(plane: &[u8], bins: usize) -> Vec<u32> {
    let mut counts = vec![0u32; bins];
    for &v in plane {
        counts[v as usize * bins / 256] += 1;
    }
    counts
}

fn bin(v: f64, max: f64, bins: usize) -> usize {
    let b = (v * bins as f64 / max).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Joint histogram of filtered mean and std values, `bins × bins` cells
/// flattened row-major with the mean axis major.
pub fn hist2d(mean: &[f64], std: &[f64], bins: usize) -> Result<Vec<u32>> {
    if mean.len() != std.len() {
        return Err(Error::dims(mean.len(), std.len()));
    }
    let mut counts = vec![0u32; bins * bins];
    for (&m, &s) in mean.iter().zip(std) {
        counts[bin(m, 256.0, bins) * bins + bin(s, STD_AXIS_MAX, bins)] += 1;
    }
    Ok(counts)
}
