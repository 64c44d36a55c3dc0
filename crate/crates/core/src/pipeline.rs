//! Hierarchical training and cascaded prediction.
//!
//! Level 0 tiles the (normalized, padded) image into `w₀` patches labelled
//! `Gland`, `NonGland` or `Mix`. Every deeper level only sees the children of
//! patches that were `Mix` one level up. The last level is trained on binary
//! majority labels so the cascade always terminates.

use std::path::PathBuf;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colornorm::{image_stats, reinhard_normalize, ChannelStats};
use crate::error::{Error, Result};
use crate::features::{assemble_features, FeatureVector, LevelConfig};
use crate::forest::{majority, train_forest, ClassCounts, KnnModel, RandomForest, TrainParams};
use crate::imaging::{majority_label, patch_grid, patch_label, sub_patches, BinaryMask, ImageRGB, Label, PatchRef};
use crate::postproc::PostprocParams;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionMode {
    /// Each resolved sub-patch is painted at its own window size.
    #[default]
    Fine,
    /// The modal sub-patch label is assigned to the whole parent patch.
    CoarseMajority,
}

impl std::str::FromStr for PredictionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fine" => Ok(Self::Fine),
            "coarse-majority" | "coarse" => Ok(Self::CoarseMajority),
            other => Err(Error::param("mode", format!("unknown prediction mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierKind {
    Rf,
    Knn { k: usize },
}

/// Which image supplies the normalization target statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// First training pair in the order given (datasets load sorted by name).
    #[default]
    FirstTraining,
    Image(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub levels: Vec<LevelConfig>,
    pub train: TrainParams,
    pub classifier: ClassifierKind,
    pub normalize: bool,
    pub mode: PredictionMode,
    pub reference: Reference,
    pub postproc: PostprocParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            levels: vec![LevelConfig::new(21, 7), LevelConfig::new(11, 5), LevelConfig::new(5, 3)],
            train: TrainParams::default(),
            classifier: ClassifierKind::Rf,
            normalize: true,
            mode: PredictionMode::Fine,
            reference: Reference::FirstTraining,
            postproc: PostprocParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Levels from parallel window and filter lists, keeping the binning of
    /// the current first level.
    pub fn with_windows(mut self, windows: &[usize], filters: &[usize]) -> Result<Self> {
        if windows.len() != filters.len() {
            return Err(Error::param("filters", "need one filter size per window"));
        }
        let base = self.levels.first().copied().unwrap_or(LevelConfig::new(21, 7));
        self.levels = windows
            .iter()
            .zip(filters)
            .map(|(&window, &filter)| LevelConfig { window, filter, ..base })
            .collect();
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::param("levels", "at least one level required"));
        }
        for l in &self.levels {
            l.validate()?;
        }
        if self.levels.windows(2).any(|p| p[1].window >= p[0].window) {
            return Err(Error::param("levels", "windows must be strictly decreasing"));
        }
        if let ClassifierKind::Knn { k: 0 } = self.classifier {
            return Err(Error::param("knn_k", "must be at least 1"));
        }
        self.train.validate()?;
        self.postproc.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LevelClassifier {
    Forest(RandomForest),
    Knn(KnnModel),
}

impl LevelClassifier {
    pub fn feature_dim(&self) -> usize {
        match self {
            Self::Forest(f) => f.feature_dim,
            Self::Knn(k) => k.feature_dim(),
        }
    }

    /// Labels this classifier can emit.
    pub fn classes(&self) -> Vec<Label> {
        let mut c = match self {
            Self::Forest(f) => f.classes.clone(),
            Self::Knn(k) => k.labels.clone(),
        };
        c.sort();
        c.dedup();
        c
    }

    /// Predicted label plus the per-class votes behind it.
    pub fn decide(&self, x: &[f64]) -> Result<(Label, ClassCounts)> {
        match self {
            Self::Forest(f) => {
                let votes = f.vote_counts(x)?;
                Ok((majority(&votes), votes))
            }
            Self::Knn(k) => Ok((k.predict(x)?, k.neighbour_counts(x)?)),
        }
    }
}

/// Binary resolution of a `Mix` decision without a deeper level.
fn non_mix_fallback(votes: &ClassCounts) -> Label {
    if votes[Label::Gland.index()] > votes[Label::NonGland.index()] {
        Label::Gland
    } else {
        Label::NonGland
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalModel {
    pub format_version: u32,
    pub config: PipelineConfig,
    /// Normalization target; `None` when normalization is disabled.
    pub target_stats: Option<ChannelStats>,
    /// One entry per level; `None` where no training patch reached the level.
    pub forests: Vec<Option<LevelClassifier>>,
}

impl HierarchicalModel {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field: &str, reason: String| Error::InvalidModel {
            field: field.to_string(),
            reason,
        };
        if self.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        self.config.validate().map_err(|e| invalid("config", e.to_string()))?;
        if self.forests.len() != self.config.levels.len() {
            return Err(invalid(
                "forests",
                format!("{} entries for {} levels", self.forests.len(), self.config.levels.len()),
            ));
        }
        match (&self.target_stats, self.config.normalize) {
            (None, true) => return Err(invalid("target_stats", "missing while normalization is on".into())),
            (Some(s), _) if s.std.iter().chain(&s.mean).any(|v| !v.is_finite()) || s.std.iter().any(|&v| v <= 0.0) => {
                return Err(invalid("target_stats", "non-finite or non-positive statistics".into()))
            }
            _ => {}
        }
        let last = self.forests.len() - 1;
        for (i, (f, lvl)) in self.forests.iter().zip(&self.config.levels).enumerate() {
            let Some(f) = f else { continue };
            let field = format!("forests[{i}]");
            if f.feature_dim() != lvl.feature_dim() {
                return Err(invalid(
                    &field,
                    format!(
                        "feature dimension {} but level expects {}",
                        f.feature_dim(),
                        lvl.feature_dim()
                    ),
                ));
            }
            if i == last && f.classes().contains(&Label::Mix) {
                return Err(invalid(&field, "final level must be binary".into()));
            }
            match f {
                LevelClassifier::Forest(rf) => rf.validate().map_err(|e| invalid(&field, e))?,
                LevelClassifier::Knn(k) => {
                    if k.k == 0
                        || k.samples.len() != k.labels.len()
                        || k.samples.iter().any(|s| s.len() != k.feature_dim())
                    {
                        return Err(invalid(&field, "inconsistent KNN training set".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn prepare(&self, img: &ImageRGB) -> ImageRGB {
        let normalized = match &self.target_stats {
            Some(stats) if self.config.normalize => reinhard_normalize(img, stats),
            _ => img.clone(),
        };
        normalized.pad_replicate(self.config.levels[0].window)
    }
}

/// An image with its binarized ground truth.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub name: String,
    pub image: ImageRGB,
    pub mask: BinaryMask,
}

/// Features and labels gathered for one cascade level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelSamples {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<Label>,
}

/// Label of every `w`-tile of a padded mask, row-major.
pub fn label_grid(mask: &BinaryMask, w: usize) -> Result<Vec<Label>> {
    Ok(patch_grid(mask.width(), mask.height(), w)?
        .into_iter()
        .map(|p| patch_label(mask, p))
        .collect())
}

pub fn resolve_target_stats(pairs: &[TrainingPair], cfg: &PipelineConfig) -> Result<Option<ChannelStats>> {
    if !cfg.normalize {
        return Ok(None);
    }
    let stats = match &cfg.reference {
        Reference::FirstTraining => image_stats(&pairs.first().ok_or(Error::NoTrainingData)?.image),
        Reference::Image(path) => image_stats(&ImageRGB::open(path)?),
    };
    Ok(Some(stats))
}

fn image_level_samples(
    pair: &TrainingPair,
    cfg: &PipelineConfig,
    target: Option<&ChannelStats>,
) -> Result<Vec<LevelSamples>> {
    let (iw, ih) = (pair.image.width(), pair.image.height());
    if (iw, ih) != (pair.mask.width(), pair.mask.height()) {
        return Err(Error::dims(
            format!("annotation {iw}x{ih} for {}", pair.name),
            format!("{}x{}", pair.mask.width(), pair.mask.height()),
        ));
    }
    let w0 = cfg.levels[0].window;
    let image = match target {
        Some(t) => reinhard_normalize(&pair.image, t),
        None => pair.image.clone(),
    }
    .pad_replicate(w0);
    let mask = pair.mask.pad_replicate(w0);

    let last = cfg.levels.len() - 1;
    let mut out = Vec::with_capacity(cfg.levels.len());
    let mut regions = patch_grid(image.width(), image.height(), w0)?;
    for (k, lvl) in cfg.levels.iter().enumerate() {
        let mut set = LevelSamples::default();
        let mut mix = Vec::new();
        for &r in &regions {
            let label = if k == last {
                majority_label(&mask, r)
            } else {
                patch_label(&mask, r)
            };
            set.features.push(assemble_features(&image.patch(r)?, lvl)?);
            set.labels.push(label);
            if label == Label::Mix {
                mix.push(r);
            }
        }
        out.push(set);
        if k < last {
            let child = cfg.levels[k + 1].window;
            regions = mix
                .into_iter()
                .map(|r| sub_patches(r, child))
                .collect::<Result<Vec<_>>>()?
                .concat();
        }
    }
    Ok(out)
}

/// Per-level training sets, concatenated over images in input order.
pub fn collect_level_samples(
    pairs: &[TrainingPair],
    cfg: &PipelineConfig,
    target: Option<&ChannelStats>,
) -> Result<Vec<LevelSamples>> {
    let per_image: Vec<Vec<LevelSamples>> = pairs
        .par_iter()
        .map(|p| image_level_samples(p, cfg, target))
        .collect::<Result<_>>()?;
    let mut merged = vec![LevelSamples::default(); cfg.levels.len()];
    for sets in per_image {
        for (m, s) in merged.iter_mut().zip(sets) {
            m.features.extend(s.features);
            m.labels.extend(s.labels);
        }
    }
    Ok(merged)
}

pub fn train_hierarchical(pairs: &[TrainingPair], cfg: &PipelineConfig) -> Result<HierarchicalModel> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::NoTrainingData);
    }
    let target = resolve_target_stats(pairs, cfg)?;
    let sets = collect_level_samples(pairs, cfg, target.as_ref())?;
    let mut forests = Vec::with_capacity(sets.len());
    for (k, set) in sets.into_iter().enumerate() {
        if set.features.is_empty() {
            warn!(
                "level {k} (window {}) received no training patches; forest absent",
                cfg.levels[k].window
            );
            forests.push(None);
            continue;
        }
        let clf = match cfg.classifier {
            ClassifierKind::Rf => LevelClassifier::Forest(train_forest(&set.features, &set.labels, &cfg.train)?),
            ClassifierKind::Knn { k } => LevelClassifier::Knn(KnnModel::new(set.features, set.labels, k)?),
        };
        forests.push(Some(clf));
    }
    Ok(HierarchicalModel {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        target_stats: target,
        forests,
    })
}

/// Raw cascade output together with the level-0 decisions.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub mask: BinaryMask,
    /// Level-0 patches (in padded coordinates) and their first-forest labels.
    pub level0: Vec<(PatchRef, Label)>,
}

struct Cascade<'a> {
    model: &'a HierarchicalModel,
    image: ImageRGB,
}

impl Cascade<'_> {
    fn classifier(&self, level: usize) -> Option<&LevelClassifier> {
        self.model.forests.get(level).and_then(Option::as_ref)
    }

    fn decide(&self, level: usize, r: PatchRef) -> Result<(Label, ClassCounts)> {
        let clf = self.classifier(level).expect("caller checks presence");
        let x = assemble_features(&self.image.patch(r)?, &self.model.config.levels[level])?;
        clf.decide(&x)
    }

    fn deeper(&self, level: usize) -> bool {
        self.classifier(level + 1).is_some()
    }

    /// Appends the white regions of a patch already classified at `level`.
    fn paint_fine(
        &self,
        level: usize,
        r: PatchRef,
        decision: (Label, ClassCounts),
        white: &mut Vec<PatchRef>,
    ) -> Result<()> {
        let label = match decision.0 {
            Label::Mix if !self.deeper(level) => non_mix_fallback(&decision.1),
            l => l,
        };
        match label {
            Label::Gland => white.push(r),
            Label::NonGland => {}
            Label::Mix => {
                let child_w = self.model.config.levels[level + 1].window;
                for c in sub_patches(r, child_w)? {
                    let d = self.decide(level + 1, c)?;
                    self.paint_fine(level + 1, c, d, white)?;
                }
            }
        }
        Ok(())
    }

    /// Resolves a group of `Mix` patches at `level` to one label by the modal
    /// prediction of their children, descending while that mode is `Mix`.
    fn coarse_group(&self, level: usize, group: Vec<(PatchRef, ClassCounts)>) -> Result<Label> {
        let mut counts = [0u32; 3];
        if !self.deeper(level) {
            for (_, votes) in &group {
                counts[non_mix_fallback(votes).index()] += 1;
            }
            return Ok(majority(&counts));
        }
        let child_w = self.model.config.levels[level + 1].window;
        let mut mixed = Vec::new();
        for (r, _) in group {
            for c in sub_patches(r, child_w)? {
                let (label, votes) = self.decide(level + 1, c)?;
                counts[label.index()] += 1;
                if label == Label::Mix {
                    mixed.push((c, votes));
                }
            }
        }
        match majority(&counts) {
            Label::Mix => self.coarse_group(level + 1, mixed),
            l => Ok(l),
        }
    }
}

pub fn predict_image(model: &HierarchicalModel, img: &ImageRGB) -> Result<BinaryMask> {
    Ok(predict_image_with(model, img, model.config.mode)?.mask)
}

pub fn predict_image_with(model: &HierarchicalModel, img: &ImageRGB, mode: PredictionMode) -> Result<Prediction> {
    for (k, (f, lvl)) in model.forests.iter().zip(&model.config.levels).enumerate() {
        if let Some(f) = f {
            if f.feature_dim() != lvl.feature_dim() {
                return Err(Error::dims(
                    format!("level {k} features of dimension {}", lvl.feature_dim()),
                    format!("model dimension {}", f.feature_dim()),
                ));
            }
        }
    }
    if model.forests.first().is_none_or(Option::is_none) {
        return Err(Error::InvalidModel {
            field: "forests[0]".into(),
            reason: "first level has no classifier".into(),
        });
    }
    let cascade = Cascade {
        model,
        image: model.prepare(img),
    };
    let w0 = model.config.levels[0].window;
    let tiles = patch_grid(cascade.image.width(), cascade.image.height(), w0)?;
    let results: Vec<(Label, Vec<PatchRef>)> = tiles
        .par_iter()
        .map(|&t| {
            let decision = cascade.decide(0, t)?;
            let mut white = Vec::new();
            match mode {
                PredictionMode::Fine => cascade.paint_fine(0, t, decision, &mut white)?,
                PredictionMode::CoarseMajority => {
                    let label = match decision.0 {
                        Label::Mix => cascade.coarse_group(0, vec![(t, decision.1)])?,
                        l => l,
                    };
                    if label == Label::Gland {
                        white.push(t);
                    }
                }
            }
            Ok((decision.0, white))
        })
        .collect::<Result<_>>()?;

    let mut mask = BinaryMask::zeros(cascade.image.width(), cascade.image.height());
    let mut level0 = Vec::with_capacity(tiles.len());
    for (t, (label, white)) in tiles.into_iter().zip(results) {
        level0.push((t, label));
        for r in white {
            mask.paint_white(r);
        }
    }
    let mask = mask.crop(0, 0, img.width(), img.height())?;
    Ok(Prediction { mask, level0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{DecisionTree, TreeNode};

    fn leaf_forest(label: Label, dim: usize) -> LevelClassifier {
        let mut counts = [0; 3];
        counts[label.index()] = 3;
        LevelClassifier::Forest(RandomForest {
            trees: vec![DecisionTree {
                nodes: vec![TreeNode::Leaf { counts }],
            }],
            classes: vec![label],
            feature_dim: dim,
            params: TrainParams {
                trees: 1,
                ..Default::default()
            },
        })
    }

    fn model_with(forests: Vec<Option<LevelClassifier>>) -> HierarchicalModel {
        let config = PipelineConfig {
            normalize: false,
            ..Default::default()
        };
        HierarchicalModel {
            format_version: FORMAT_VERSION,
            config,
            target_stats: None,
            forests,
        }
    }

    #[test]
    fn pure_first_level_models() {
        let dim = LevelConfig::new(21, 7).feature_dim();
        let img = ImageRGB::filled(50, 30, [120, 80, 200]);
        let white = model_with(vec![Some(leaf_forest(Label::Gland, dim)), None, None]);
        let m = predict_image(&white, &img).unwrap();
        assert_eq!((m.width(), m.height()), (50, 30));
        assert_eq!(m.count_white(), 1500);
        let black = model_with(vec![Some(leaf_forest(Label::NonGland, dim)), None, None]);
        assert_eq!(predict_image(&black, &img).unwrap().count_white(), 0);
    }

    #[test]
    fn mix_without_deeper_level_falls_back() {
        let dim0 = LevelConfig::new(21, 7).feature_dim();
        let counts = [2, 3, 1];
        let forest = LevelClassifier::Forest(RandomForest {
            trees: vec![DecisionTree {
                nodes: vec![TreeNode::Leaf { counts }],
            }],
            classes: Label::ALL.to_vec(),
            feature_dim: dim0,
            params: TrainParams {
                trees: 1,
                ..Default::default()
            },
        });
        // a single tree voting Mix: non-Mix votes are 0 Gland vs 0 NonGland → NonGland
        let model = model_with(vec![Some(forest), None, None]);
        let img = ImageRGB::filled(21, 21, [1, 2, 3]);
        for mode in [PredictionMode::Fine, PredictionMode::CoarseMajority] {
            let p = predict_image_with(&model, &img, mode).unwrap();
            assert_eq!(p.level0, vec![(PatchRef { x0: 0, y0: 0, w: 21 }, Label::Mix)]);
            assert_eq!(p.mask.count_white(), 0);
        }
    }

    #[test]
    fn mix_resolves_at_deeper_level() {
        let dims: Vec<usize> = PipelineConfig::default()
            .levels
            .iter()
            .map(|l| l.feature_dim())
            .collect();
        let model = model_with(vec![
            Some(leaf_forest(Label::Mix, dims[0])),
            Some(leaf_forest(Label::Gland, dims[1])),
            Some(leaf_forest(Label::NonGland, dims[2])),
        ]);
        let img = ImageRGB::filled(42, 21, [9, 9, 9]);
        let fine = predict_image_with(&model, &img, PredictionMode::Fine).unwrap();
        assert_eq!(fine.mask.count_white(), 42 * 21);
        let coarse = predict_image_with(&model, &img, PredictionMode::CoarseMajority).unwrap();
        assert_eq!(coarse.mask.count_white(), 42 * 21);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let model = model_with(vec![Some(leaf_forest(Label::Gland, 7)), None, None]);
        assert!(predict_image(&model, &ImageRGB::filled(21, 21, [0; 3])).is_err());
    }

    #[test]
    fn grid_labels() {
        let white = BinaryMask::filled(42, 21, true);
        assert_eq!(label_grid(&white, 21).unwrap(), vec![Label::Gland; 2]);
        let black = BinaryMask::zeros(42, 42);
        assert_eq!(label_grid(&black, 21).unwrap(), vec![Label::NonGland; 4]);
        let mut one = black.clone();
        one.set(30, 5, true);
        let g = label_grid(&one, 21).unwrap();
        assert_eq!(g, vec![Label::NonGland, Label::Mix, Label::NonGland, Label::NonGland]);
    }

    #[test]
    fn config_validation() {
        PipelineConfig::default().validate().unwrap();
        let bad = PipelineConfig::default().with_windows(&[11, 21], &[5, 7]).unwrap();
        assert!(bad.validate().is_err());
        assert!(PipelineConfig::default().with_windows(&[21], &[7, 5]).is_err());
        let empty = PipelineConfig {
            levels: vec![],
            ..Default::default()
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn all_white_annotations() {
        let pairs: Vec<TrainingPair> = (0..2)
            .map(|i| TrainingPair {
                name: format!("img{i}"),
                image: ImageRGB::from_fn(42, 42, |x, y| [(x * 5) as u8, (y * 5) as u8, 100 + i as u8]),
                mask: BinaryMask::filled(42, 42, true),
            })
            .collect();
        let cfg = PipelineConfig {
            train: TrainParams {
                trees: 5,
                ..Default::default()
            },
            ..Default::default()
        };
        let model = train_hierarchical(&pairs, &cfg).unwrap();
        assert!(model.forests[0].is_some());
        assert!(model.forests[1].is_none() && model.forests[2].is_none());
        model.validate().unwrap();
        let m = predict_image(&model, &pairs[0].image).unwrap();
        assert_eq!(m.count_white(), 42 * 42);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_hierarchical(&[], &PipelineConfig::default()),
            Err(Error::NoTrainingData)
        ));
        let pair = TrainingPair {
            name: "x".into(),
            image: ImageRGB::filled(21, 21, [0; 3]),
            mask: BinaryMask::zeros(20, 21),
        };
        assert!(train_hierarchical(&[pair], &PipelineConfig::default()).is_err());
    }
}
