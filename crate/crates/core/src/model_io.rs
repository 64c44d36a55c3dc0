//! Model persistence as a versioned JSON document.
//!
//! Top-level fields: `format_version`, `config`, `target_stats` and
//! `forests`. Each forest entry is `null` (absent level) or an object tagged
//! by `kind`; forest trees are flat node arrays where a node is either
//! `{feature, threshold, left, right}` or `{counts: [gland, mix, non_gland]}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pipeline::{HierarchicalModel, FORMAT_VERSION};

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

pub fn save_model(model: &HierarchicalModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, model).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses and validates a model document. `origin` names the source in errors.
pub fn model_from_str(text: &str, origin: &Path) -> Result<HierarchicalModel> {
    let json = |source| Error::Json {
        path: origin.to_path_buf(),
        source,
    };
    let probe: VersionProbe = serde_json::from_str(text).map_err(json)?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let model: HierarchicalModel = serde_json::from_str(text).map_err(json)?;
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HierarchicalModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text, path)
}
