//! Raster types, replicate padding, patch tiling and patch labelling.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patch class driving the cascade.
///
/// Declaration order is the vote tie-break order: `Gland < Mix < NonGland`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Gland,
    Mix,
    NonGland,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Gland, Label::Mix, Label::NonGland];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }
}

/// 8-bit RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

/// Binary raster, row-major. `1` is gland (white), `0` is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

/// Integer-labelled annotation raster (gland instance ids, 0 = background).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

/// Square patch located in a (padded) raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PatchRef {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width * height != len {
        return Err(Error::dims(
            format!("{} elements ({width}x{height})", width * height),
            format!("{len} elements"),
        ));
    }
    Ok(())
}

fn pad_plane<T: Copy>(src: &[T], width: usize, height: usize, w: usize) -> (usize, usize, Vec<T>) {
    let w = w.max(1);
    let pw = width.div_ceil(w) * w;
    let ph = height.div_ceil(w) * w;
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let row = &src[y.min(height - 1) * width..][..width];
        out.extend_from_slice(row);
        out.extend(std::iter::repeat_n(row[width - 1], pw - width));
    }
    (pw, ph, out)
}

fn crop_plane<T: Copy>(src: &[T], width: usize, x0: usize, y0: usize, w: usize, h: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        out.extend_from_slice(&src[y * width + x0..][..w]);
    }
    out
}

fn check_crop(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> Result<()> {
    if x0 + w > width || y0 + h > height {
        return Err(Error::dims(
            format!("region inside {width}x{height}"),
            format!("{w}x{h} at ({x0},{y0})"),
        ));
    }
    Ok(())
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    let wrap = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(wrap)
}

impl ImageRGB {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput);
        }
        check_len(width, height, data.len())?;
        Ok(ImageRGB { width, height, data })
    }

    pub fn filled(width: usize, height: usize, px: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        ImageRGB {
            width,
            height,
            data: vec![px; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ImageRGB { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    /// Single channel (0 = R, 1 = G, 2 = B) as a plane.
    pub fn channel(&self, c: usize) -> Vec<u8> {
        self.data.iter().map(|p| p[c]).collect()
    }

    /// Pads to the smallest multiples of `w` by replicating the last row/column.
    pub fn pad_replicate(&self, w: usize) -> ImageRGB {
        let (width, height, data) = pad_plane(&self.data, self.width, self.height, w);
        ImageRGB { width, height, data }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageRGB> {
        check_crop(self.width, self.height, x0, y0, w, h)?;
        ImageRGB::new(w, h, crop_plane(&self.data, self.width, x0, y0, w, h))
    }

    pub fn patch(&self, p: PatchRef) -> Result<ImageRGB> {
        self.crop(p.x0, p.y0, p.w, p.w)
    }

    /// Reads a BMP/PNG (or any format the decoder recognizes) as 8-bit RGB.
    pub fn open(path: impl AsRef<Path>) -> Result<ImageRGB> {
        let path = path.as_ref();
        let rgb = open_image(path)?.to_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let data = rgb.pixels().map(|p| p.0).collect();
        ImageRGB::new(w, h, data).map_err(|_| Error::EmptyInput)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let flat: Vec<u8> = self.data.iter().flatten().copied().collect();
        let img =
            RgbImage::from_raw(self.width as u32, self.height as u32, flat).expect("buffer length matches dimensions");
        img.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput);
        }
        check_len(width, height, bits.len())?;
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::param("bits", "mask values must be 0 or 1"));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: usize, height: usize, white: bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        BinaryMask {
            width,
            height,
            bits: vec![white as u8; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y) as u8);
            }
        }
        BinaryMask { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, white: bool) {
        self.bits[y * self.width + x] = white as u8;
    }

    pub fn count_white(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    /// Sets every pixel of the square region to white.
    pub fn paint_white(&mut self, p: PatchRef) {
        for y in p.y0..p.y0 + p.w {
            self.bits[y * self.width + p.x0..][..p.w].fill(1);
        }
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn pad_replicate(&self, w: usize) -> BinaryMask {
        let (width, height, bits) = pad_plane(&self.bits, self.width, self.height, w);
        BinaryMask { width, height, bits }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<BinaryMask> {
        check_crop(self.width, self.height, x0, y0, w, h)?;
        BinaryMask::new(w, h, crop_plane(&self.bits, self.width, x0, y0, w, h))
    }

    fn region_counts(&self, p: PatchRef) -> (usize, usize) {
        let mut white = 0;
        for y in p.y0..p.y0 + p.w {
            white += self.bits[y * self.width + p.x0..][..p.w]
                .iter()
                .filter(|&&b| b != 0)
                .count();
        }
        (white, p.w * p.w)
    }

    /// Writes a single-channel PNG/BMP with values 0 and 255.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let img = GrayImage::from_raw(
            self.width as u32,
            self.height as u32,
            self.bits.iter().map(|&b| b * 255).collect(),
        )
        .expect("buffer length matches dimensions");
        img.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a mask image; any non-zero pixel is white.
    pub fn open(path: impl AsRef<Path>) -> Result<BinaryMask> {
        binarize_ground_truth(&LabelImage::open(path)?)
    }
}

impl LabelImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput);
        }
        check_len(width, height, data.len())?;
        Ok(LabelImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u16] {
        &self.data
    }

    /// Reads an 8/16-bit single-channel annotation. Colour files are accepted;
    /// a pixel is non-zero if any of its channels is.
    pub fn open(path: impl AsRef<Path>) -> Result<LabelImage> {
        let path = path.as_ref();
        let img = open_image(path)?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data: Vec<u16> = match img {
            DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(u16::from).collect(),
            DynamicImage::ImageLuma16(g) => g.into_raw(),
            other => other
                .to_rgb16()
                .pixels()
                .map(|p| p.0.into_iter().max().unwrap_or(0))
                .collect(),
        };
        LabelImage::new(w, h, data)
    }
}

/// Pure black (exactly 0) stays black; every other value becomes white.
pub fn binarize_ground_truth(annotation: &LabelImage) -> Result<BinaryMask> {
    if annotation.data.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(BinaryMask {
        width: annotation.width,
        height: annotation.height,
        bits: annotation.data.iter().map(|&v| (v != 0) as u8).collect(),
    })
}

/// Non-overlapping `w`-tiling of a padded raster, row-major.
pub fn patch_grid(width: usize, height: usize, w: usize) -> Result<Vec<PatchRef>> {
    if w == 0 {
        return Err(Error::param("w", "window must be at least 1"));
    }
    if !width.is_multiple_of(w) || !height.is_multiple_of(w) {
        return Err(Error::UnpaddedInput {
            width,
            height,
            window: w,
        });
    }
    let mut out = Vec::with_capacity((width / w) * (height / w));
    for y0 in (0..height).step_by(w) {
        for x0 in (0..width).step_by(w) {
            out.push(PatchRef { x0, y0, w });
        }
    }
    Ok(out)
}

/// Child tile offsets along one axis of a parent window.
///
/// Offsets advance by `child` while the tile fits; if that leaves the far edge
/// uncovered, a last tile is placed flush with it (overlapping its neighbour).
pub fn sub_patch_offsets(parent: usize, child: usize) -> Result<Vec<usize>> {
    if child == 0 || child > parent {
        return Err(Error::param(
            "child window",
            format!("need 1 <= child <= parent, got child={child} parent={parent}"),
        ));
    }
    let mut offsets: Vec<usize> = (0..).map(|k| k * child).take_while(|&o| o + child <= parent).collect();
    if offsets.last().map_or(0, |&o| o + child) < parent {
        offsets.push(parent - child);
    }
    Ok(offsets)
}

/// Child patches of `parent` at window `child`, row-major.
pub fn sub_patches(parent: PatchRef, child: usize) -> Result<Vec<PatchRef>> {
    let offsets = sub_patch_offsets(parent.w, child)?;
    let mut out = Vec::with_capacity(offsets.len() * offsets.len());
    for &dy in &offsets {
        for &dx in &offsets {
            out.push(PatchRef {
                x0: parent.x0 + dx,
                y0: parent.y0 + dy,
                w: child,
            });
        }
    }
    Ok(out)
}

/// All white → `Gland`, all black → `NonGland`, otherwise `Mix`.
pub fn patch_label(mask: &BinaryMask, p: PatchRef) -> Label {
    match mask.region_counts(p) {
        (0, _) => Label::NonGland,
        (white, area) if white == area => Label::Gland,
        _ => Label::Mix,
    }
}

/// `Gland` when white pixels strictly outnumber black ones, else `NonGland`.
pub fn majority_label(mask: &BinaryMask, p: PatchRef) -> Label {
    let (white, area) = mask.region_counts(p);
    if white > area - white {
        Label::Gland
    } else {
        Label::NonGland
    }
}
