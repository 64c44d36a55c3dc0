//! Symmetric gray-level co-occurrence matrices at distance 1.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Deg0, Direction::Deg45, Direction::Deg90, Direction::Deg135];

    /// Pixel offset `(dx, dy)` with `y` pointing down.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (1, 0),
            Direction::Deg45 => (1, -1),
            Direction::Deg90 => (0, -1),
            Direction::Deg135 => (-1, -1),
        }
    }
}

/// Normalized `levels × levels` co-occurrence probabilities, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GlcmMatrix {
    levels: usize,
    p: Vec<f64>,
}

impl GlcmMatrix {
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != levels * levels {
            return Err(Error::dims(levels * levels, p.len()));
        }
        Ok(GlcmMatrix { levels, p })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

pub fn quantize(v: u8, levels: usize) -> usize {
    v as usize * levels / 256
}

/// Co-occurrence matrix of `plane` along `dir`; `None` when the patch has no
/// pixel pair in that direction.
pub fn glcm(plane: &[u8], width: usize, height: usize, levels: usize, dir: Direction) -> Option<GlcmMatrix> {
    let (dx, dy) = dir.offset();
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    let xs = if dx < 0 {
        1..width
    } else {
        0..width.saturating_sub(dx as usize)
    };
    let ys = if dy < 0 {
        1..height
    } else {
        0..height.saturating_sub(dy as usize)
    };
    for y in ys {
        let ny = (y as isize + dy) as usize;
        for x in xs.clone() {
            let nx = (x as isize + dx) as usize;
            let a = quantize(plane[y * width + x], levels);
            let b = quantize(plane[ny * width + nx], levels);
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
            total += 2;
        }
    }
    if total == 0 {
        return None;
    }
    let p = counts.into_iter().map(|c| c as f64 / total as f64).collect();
    Some(GlcmMatrix { levels, p })
}

/// Matrices for the four directions, skipping those with no pairs.
pub fn glcm_all(plane: &[u8], width: usize, height: usize, levels: usize) -> Vec<GlcmMatrix> {
    Direction::ALL
        .iter()
        .filter_map(|&d| glcm(plane, width, height, levels, d))
        .collect()
}
