use crate::error::{Error, Result};
use crate::imaging::{majority_label, patch_grid, BinaryMask};

fn check_dims(pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::dims(
            format!("{}x{}", gt.width(), gt.height()),
            format!("{}x{}", pred.width(), pred.height()),
        ));
    }
    if gt.bits().is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Fraction of pixels on which the two masks agree.
pub fn pixel_accuracy(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred, gt)?;
    let same = pred.bits().iter().zip(gt.bits()).filter(|(a, b)| a == b).count();
    Ok(same as f64 / gt.bits().len() as f64)
}

/// Fraction of `w`-tiles whose majority labels agree. Both masks are padded
/// by replication first.
pub fn patch_accuracy(pred: &BinaryMask, gt: &BinaryMask, w: usize) -> Result<f64> {
    check_dims(pred, gt)?;
    if w == 0 {
        return Err(Error::param("w", "must be positive"));
    }
    let (p, g) = (pred.pad_replicate(w), gt.pad_replicate(w));
    let tiles = patch_grid(p.width(), p.height(), w)?;
    let same = tiles
        .iter()
        .filter(|&&t| majority_label(&p, t) == majority_label(&g, t))
        .count();
    Ok(same as f64 / tiles.len() as f64)
}
