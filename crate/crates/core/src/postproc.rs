//! Edge smoothing of predicted masks: Canny edges of the mask are dilated with
//! a structuring element and OR-ed back into it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructuringElement {
    Octagon,
    Disk,
    Diamond,
    /// Planar footprint of a ball, i.e. the disk of the same radius.
    Sphere,
}

impl std::str::FromStr for StructuringElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "octagon" => Ok(Self::Octagon),
            "disk" => Ok(Self::Disk),
            "diamond" => Ok(Self::Diamond),
            "sphere" | "sphere-projection" => Ok(Self::Sphere),
            other => Err(Error::param(
                "element",
                format!("unknown structuring element `{other}`"),
            )),
        }
    }
}

impl StructuringElement {
    /// Whether offset `(dx, dy)` lies inside the element of the given radius.
    pub fn contains(self, dx: isize, dy: isize, radius: usize) -> bool {
        let r = radius as isize;
        let (ax, ay) = (dx.abs(), dy.abs());
        match self {
            // octagon with horizontal/vertical faces at distance r and
            // diagonal faces at |x|+|y| = 4r/3
            Self::Octagon => ax <= r && ay <= r && ax + ay <= 4 * r / 3,
            Self::Disk | Self::Sphere => ax * ax + ay * ay <= r * r,
            Self::Diamond => ax + ay <= r,
        }
    }

    pub fn offsets(self, radius: usize) -> Result<Vec<(isize, isize)>> {
        if radius == 0 {
            return Err(Error::param("element_radius", "must be at least 1"));
        }
        if self == Self::Octagon && !radius.is_multiple_of(3) {
            return Err(Error::param(
                "element_radius",
                format!("octagon radius must be a multiple of 3, got {radius}"),
            ));
        }
        let r = radius as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if self.contains(dx, dy, radius) {
                    out.push((dx, dy));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostprocParams {
    pub gaussian_sigma: f64,
    /// Fractions of the maximum gradient magnitude.
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub element: StructuringElement,
    pub element_radius: usize,
}

impl Default for PostprocParams {
    fn default() -> Self {
        PostprocParams {
            gaussian_sigma: 1.4,
            low_threshold: 0.1,
            high_threshold: 0.3,
            element: StructuringElement::Octagon,
            element_radius: 3,
        }
    }
}

impl PostprocParams {
    pub fn validate(&self) -> Result<()> {
        if self.gaussian_sigma.is_nan() || self.gaussian_sigma <= 0.0 {
            return Err(Error::param("gaussian_sigma", "must be positive"));
        }
        if !(0.0 < self.low_threshold && self.low_threshold < self.high_threshold && self.high_threshold <= 1.0) {
            return Err(Error::param("thresholds", "need 0 < low < high <= 1"));
        }
        self.element.offsets(self.element_radius).map(|_| ())
    }
}

struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.v[y * self.w + x]
    }
}

fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    let (w, h) = (src.w, src.h);
    let mut tmp = Plane {
        w,
        h,
        v: vec![0.0; w * h],
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            tmp.v[y as usize * w + x as usize] = (-r..=r).map(|i| k[(i + r) as usize] * src.at(x + i, y)).sum();
        }
    }
    let mut out = Plane {
        w,
        h,
        v: vec![0.0; w * h],
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            out.v[y as usize * w + x as usize] = (-r..=r).map(|i| k[(i + r) as usize] * tmp.at(x, y + i)).sum();
        }
    }
    out
}

/// Canny edge map of a mask treated as a 0/255 image.
pub fn canny_edges(mask: &BinaryMask, params: &PostprocParams) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let img = Plane {
        w,
        h,
        v: mask.bits().iter().map(|&b| b as f64 * 255.0).collect(),
    };
    let s = gaussian_blur(&img, params.gaussian_sigma);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (s.at(x + 1, y - 1) + 2.0 * s.at(x + 1, y) + s.at(x + 1, y + 1))
                - (s.at(x - 1, y - 1) + 2.0 * s.at(x - 1, y) + s.at(x - 1, y + 1));
            gy[i] = (s.at(x - 1, y + 1) + 2.0 * s.at(x, y + 1) + s.at(x + 1, y + 1))
                - (s.at(x - 1, y - 1) + 2.0 * s.at(x, y - 1) + s.at(x + 1, y - 1));
            mag[i] = gx[i].hypot(gy[i]);
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let mut edges = BinaryMask::zeros(w, h);
    // the blurred mask of a constant image has round-off gradients only
    if max < 1e-6 {
        return edges;
    }
    let m = Plane { w, h, v: mag };
    let mut thin = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let g = m.v[i];
            if g == 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            // strict on one side so a plateau of two equal maxima keeps one pixel
            if g > m.at(x - dx, y - dy) && g >= m.at(x + dx, y + dy) {
                thin[i] = g;
            }
        }
    }
    let (low, high) = (params.low_threshold * max, params.high_threshold * max);
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if thin[i] >= high && !edges.get(i % w, i / w) {
            edges.set(i % w, i / w, true);
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (cx, cy) = ((j % w) as isize, (j / w) as isize);
                for ny in cy - 1..=cy + 1 {
                    for nx in cx - 1..=cx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (ux, uy) = (nx as usize, ny as usize);
                        if thin[uy * w + ux] >= low && !edges.get(ux, uy) {
                            edges.set(ux, uy, true);
                            queue.push_back(uy * w + ux);
                        }
                    }
                }
            }
        }
    }
    edges
}

pub fn dilate(mask: &BinaryMask, element: StructuringElement, radius: usize) -> Result<BinaryMask> {
    let offsets = element.offsets(radius)?;
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    Ok(out)
}

pub fn union(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::dims(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    let bits = a.bits().iter().zip(b.bits()).map(|(x, y)| x | y).collect();
    BinaryMask::new(a.width(), a.height(), bits)
}

/// `mask ∪ dilate(canny(mask))`.
pub fn postprocess(mask: &BinaryMask, params: &PostprocParams) -> Result<BinaryMask> {
    params.validate()?;
    let band = dilate(&canny_edges(mask, params), params.element, params.element_radius)?;
    union(mask, &band)
}
