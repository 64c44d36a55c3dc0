use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Grade;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub image: String,
    pub grade: Grade,
    pub pixel_accuracy: f64,
    pub patch_accuracy: f64,
    pub postprocessed: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub images: usize,
    pub pixel_accuracy: f64,
    pub patch_accuracy: f64,
}

/// Per-image rows for one or both output variants (raw and post-processed).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    /// Unweighted mean over the rows of one variant.
    pub fn summary(&self, postprocessed: bool) -> Summary {
        let rows: Vec<&EvalRow> = self.rows.iter().filter(|r| r.postprocessed == postprocessed).collect();
        if rows.is_empty() {
            return Summary::default();
        }
        let n = rows.len() as f64;
        Summary {
            images: rows.len(),
            pixel_accuracy: rows.iter().map(|r| r.pixel_accuracy).sum::<f64>() / n,
            patch_accuracy: rows.iter().map(|r| r.patch_accuracy).sum::<f64>() / n,
        }
    }

    /// Per-image mean across reports that share the same row layout.
    pub fn average(reports: &[EvalReport]) -> Result<EvalReport> {
        let first = reports.first().ok_or(Error::EmptyInput)?;
        let n = reports.len() as f64;
        let mut rows = first.rows.clone();
        for rep in &reports[1..] {
            if rep.rows.len() != rows.len() {
                return Err(Error::dims(
                    format!("{} rows", rows.len()),
                    format!("{} rows", rep.rows.len()),
                ));
            }
            for (acc, r) in rows.iter_mut().zip(&rep.rows) {
                if (acc.image.as_str(), acc.postprocessed) != (r.image.as_str(), r.postprocessed) {
                    return Err(Error::param(
                        "reports",
                        format!("row `{}` does not line up with `{}`", r.image, acc.image),
                    ));
                }
                acc.pixel_accuracy += r.pixel_accuracy;
                acc.patch_accuracy += r.patch_accuracy;
            }
        }
        for r in &mut rows {
            r.pixel_accuracy /= n;
            r.patch_accuracy /= n;
        }
        Ok(EvalReport { rows })
    }

    /// CSV text: rows of each variant followed by that variant's `Average` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image,grade,pixel_accuracy,patch_accuracy,postprocessed\n");
        for variant in [false, true] {
            let rows: Vec<&EvalRow> = self.rows.iter().filter(|r| r.postprocessed == variant).collect();
            if rows.is_empty() {
                continue;
            }
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.image, r.grade, r.pixel_accuracy, r.patch_accuracy, r.postprocessed
                ));
            }
            let s = self.summary(variant);
            out.push_str(&format!(
                "Average,,{},{},{}\n",
                s.pixel_accuracy, s.patch_accuracy, variant
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
