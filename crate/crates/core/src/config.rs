//! Flat `key=value` configuration files.
//!
//! ```text
//! # comments and blank lines are ignored
//! windows=21,11,5
//! filters=7,5,3
//! trees=100
//! bins1d=32
//! bins2d=8
//! glcm_levels=8
//! classifier=rf        # or knn
//! knn_k=5
//! normalize=true
//! mode=fine            # or coarse-majority
//! seed=0
//! canny_sigma=1.4
//! canny_low=0.1
//! canny_high=0.3
//! element=octagon
//! element_radius=3
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::LevelConfig;
use crate::pipeline::{ClassifierKind, PipelineConfig, Reference};

/// Pipeline settings plus the dataset-level keys used by the CLI.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub data_dir: Option<PathBuf>,
    pub test_splits: Vec<String>,
    pub knn_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: PipelineConfig::default(),
            data_dir: None,
            test_splits: vec!["testA".into(), "testB".into()],
            knn_k: 5,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        reason: format!("invalid value `{value}` for `{key}`"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse(line, key, v.trim())).collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config {
            line,
            reason: format!("invalid boolean `{value}` for `{key}`"),
        }),
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut windows: Option<Vec<usize>> = None;
        let mut filters: Option<Vec<usize>> = None;
        let mut bins = LevelConfig::new(0, 1);
        let mut classifier = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    reason: format!("expected key=value, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let p = &mut cfg.pipeline;
            match key {
                "windows" => windows = Some(parse_list(line, key, value)?),
                "filters" => filters = Some(parse_list(line, key, value)?),
                "trees" => p.train.trees = parse(line, key, value)?,
                "bins1d" => bins.bins1d = parse(line, key, value)?,
                "bins2d" => bins.bins2d = parse(line, key, value)?,
                "glcm_levels" => bins.glcm_levels = parse(line, key, value)?,
                "knn_k" => cfg.knn_k = parse(line, key, value)?,
                "classifier" => classifier = Some(value.to_string()),
                "normalize" => p.normalize = parse_bool(line, key, value)?,
                "mode" => p.mode = parse(line, key, value)?,
                "seed" => p.train.seed = parse(line, key, value)?,
                "features_per_split" => p.train.features_per_split = Some(parse(line, key, value)?),
                "min_samples_split" => p.train.min_samples_split = parse(line, key, value)?,
                "max_depth" => p.train.max_depth = Some(parse(line, key, value)?),
                "reference" => p.reference = Reference::Image(PathBuf::from(value)),
                "canny_sigma" => p.postproc.gaussian_sigma = parse(line, key, value)?,
                "canny_low" => p.postproc.low_threshold = parse(line, key, value)?,
                "canny_high" => p.postproc.high_threshold = parse(line, key, value)?,
                "element" => p.postproc.element = parse(line, key, value)?,
                "element_radius" => p.postproc.element_radius = parse(line, key, value)?,
                "data" | "data_dir" => cfg.data_dir = Some(PathBuf::from(value)),
                "test_splits" => cfg.test_splits = value.split(',').map(|s| s.trim().to_string()).collect(),
                _ => {
                    return Err(Error::Config {
                        line,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        let defaults = PipelineConfig::default();
        let windows = windows.unwrap_or_else(|| defaults.levels.iter().map(|l| l.window).collect());
        let filters = filters.unwrap_or_else(|| defaults.levels.iter().map(|l| l.filter).collect());
        if windows.len() != filters.len() {
            return Err(Error::Config {
                line: 0,
                reason: format!("{} windows but {} filters", windows.len(), filters.len()),
            });
        }
        cfg.pipeline.levels = windows
            .iter()
            .zip(&filters)
            .map(|(&window, &filter)| LevelConfig { window, filter, ..bins })
            .collect();
        cfg.pipeline.classifier = match classifier.as_deref() {
            None | Some("rf") => ClassifierKind::Rf,
            Some("knn") => ClassifierKind::Knn { k: cfg.knn_k },
            Some(other) => {
                return Err(Error::Config {
                    line: 0,
                    reason: format!("unknown classifier `{other}`"),
                })
            }
        };
        cfg.pipeline.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }
}
