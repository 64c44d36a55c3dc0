//! GlaS directory layout: `<split>_<n>.bmp` images next to
//! `<split>_<n>_anno.bmp` annotations, with grades in `Grade.csv`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{binarize_ground_truth, BinaryMask, ImageRGB, LabelImage};
use crate::pipeline::TrainingPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    TestA,
    TestB,
}

impl Split {
    pub fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestA => "testA",
            Split::TestB => "testB",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "testA" | "testa" => Ok(Split::TestA),
            "testB" | "testb" => Ok(Split::TestB),
            other => Err(Error::param("split", format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Benign,
    Malignant,
    #[default]
    Unknown,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::Benign => "benign",
            Grade::Malignant => "malignant",
            Grade::Unknown => "unknown",
        })
    }
}

impl Grade {
    fn parse_loose(s: &str) -> Grade {
        match s.trim().to_ascii_lowercase().as_str() {
            "benign" => Grade::Benign,
            "malignant" => Grade::Malignant,
            _ => Grade::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: String,
    pub image_path: PathBuf,
    pub annotation_path: Option<PathBuf>,
    pub grade: Grade,
}

impl DatasetEntry {
    pub fn load_image(&self) -> Result<ImageRGB> {
        ImageRGB::open(&self.image_path)
    }

    /// Binarized annotation, if the entry has one.
    pub fn load_mask(&self) -> Result<Option<BinaryMask>> {
        self.annotation_path
            .as_ref()
            .map(|p| binarize_ground_truth(&LabelImage::open(p)?))
            .transpose()
    }

    pub fn load_pair(&self) -> Result<TrainingPair> {
        let image = self.load_image()?;
        let mask = self
            .load_mask()?
            .ok_or_else(|| Error::param("annotation", format!("{} has none", self.name)))?;
        Ok(TrainingPair {
            name: self.name.clone(),
            image,
            mask,
        })
    }
}

const IMAGE_EXTENSIONS: [&str; 5] = ["bmp", "png", "tif", "tiff", "jpg"];

/// Reads `Grade.csv` (any header column mentioning "GlaS" holds the grade;
/// otherwise the third column).
fn read_grades(root: &Path) -> Result<HashMap<String, Grade>> {
    let path = ["Grade.csv", "grade.csv"]
        .iter()
        .map(|n| root.join(n))
        .find(|p| p.is_file());
    let Some(path) = path else {
        return Ok(HashMap::new());
    };
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(&path)
        .map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = headers.iter().position(|h| h.contains("GlaS")).unwrap_or(2);
    let mut grades = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if let (Some(name), Some(grade)) = (rec.get(0), rec.get(col)) {
            grades.insert(name.to_string(), Grade::parse_loose(grade));
        }
    }
    Ok(grades)
}

pub fn load_glas_dataset(root: impl AsRef<Path>, split: Split) -> Result<Vec<DatasetEntry>> {
    let root = root.as_ref();
    let grades = read_grades(root)?;
    let prefix = format!("{}_", split.prefix());
    let mut images: Vec<(String, PathBuf)> = Vec::new();
    let mut annotations: HashMap<String, PathBuf> = HashMap::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        if !ext_ok || !stem.starts_with(&prefix) {
            continue;
        }
        if let Some(base) = stem.strip_suffix("_anno") {
            annotations.insert(base.to_string(), path);
        } else if stem[prefix.len()..].chars().all(|c| c.is_ascii_digit()) {
            images.push((stem, path));
        }
    }
    images.sort();
    let mut out = Vec::with_capacity(images.len());
    for (name, image_path) in images {
        let annotation_path = annotations.remove(&name);
        match &annotation_path {
            None => warn!("{name}: no annotation found; entry is unlabelled"),
            Some(ann) => {
                let dims = |p: &Path| {
                    image::image_dimensions(p).map_err(|source| Error::Image {
                        path: p.to_path_buf(),
                        source,
                    })
                };
                let (a, b) = (dims(&image_path)?, dims(ann)?);
                if a != b {
                    return Err(Error::dims(
                        format!("{}x{} annotation for {name}", a.0, a.1),
                        format!("{}x{}", b.0, b.1),
                    ));
                }
            }
        }
        out.push(DatasetEntry {
            grade: grades.get(&name).copied().unwrap_or_default(),
            name,
            image_path,
            annotation_path,
        });
    }
    Ok(out)
}
