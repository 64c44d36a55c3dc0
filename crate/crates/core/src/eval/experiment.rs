use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::dataset::{load_glas_dataset, Grade, Split};
use super::metrics::{patch_accuracy, pixel_accuracy};
use super::report::{EvalReport, EvalRow};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, ImageRGB};
use crate::pipeline::{
    predict_image, train_hierarchical, ClassifierKind, HierarchicalModel, PipelineConfig, TrainingPair,
};
use crate::postproc::postprocess;
use crate::seed::derive_seed;

/// A labelled test image.
#[derive(Clone, Debug, PartialEq)]
pub struct TestItem {
    pub name: String,
    pub grade: Grade,
    pub image: ImageRGB,
    pub mask: BinaryMask,
}

impl From<TrainingPair> for TestItem {
    fn from(p: TrainingPair) -> Self {
        TestItem {
            name: p.name,
            grade: Grade::Unknown,
            image: p.image,
            mask: p.mask,
        }
    }
}

/// Loads every annotated entry of a split.
pub fn load_split(root: &Path, split: Split) -> Result<Vec<TestItem>> {
    let entries: Vec<_> = load_glas_dataset(root, split)?
        .into_iter()
        .filter(|e| e.annotation_path.is_some())
        .collect();
    entries
        .par_iter()
        .map(|e| {
            let p = e.load_pair()?;
            Ok(TestItem {
                name: p.name,
                grade: e.grade,
                image: p.image,
                mask: p.mask,
            })
        })
        .collect()
}

/// Scores raw and post-processed predictions. Patch accuracy uses the
/// model's coarsest window.
pub fn evaluate(model: &HierarchicalModel, items: &[TestItem]) -> Result<EvalReport> {
    let w = model.config.levels[0].window;
    let scored: Vec<[EvalRow; 2]> = items
        .par_iter()
        .map(|it| {
            let raw = predict_image(model, &it.image)?;
            let post = postprocess(&raw, &model.config.postproc)?;
            let row = |mask: &BinaryMask, postprocessed| -> Result<EvalRow> {
                Ok(EvalRow {
                    image: it.name.clone(),
                    grade: it.grade,
                    pixel_accuracy: pixel_accuracy(mask, &it.mask)?,
                    patch_accuracy: patch_accuracy(mask, &it.mask, w)?,
                    postprocessed,
                })
            };
            Ok([row(&raw, false)?, row(&post, true)?])
        })
        .collect::<Result<_>>()?;
    let (raw, post): (Vec<EvalRow>, Vec<EvalRow>) = scored.into_iter().map(|[a, b]| (a, b)).unzip();
    Ok(EvalReport {
        rows: raw.into_iter().chain(post).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub rounds: Vec<EvalReport>,
    pub average: EvalReport,
}

/// Trains and evaluates `rounds` times; round `r` uses seed
/// `derive_seed(cfg.train.seed, r)`.
pub fn run_experiment(
    cfg: &PipelineConfig,
    train: &[TrainingPair],
    test: &[TestItem],
    rounds: usize,
) -> Result<ExperimentResult> {
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let mut reports = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut round_cfg = cfg.clone();
        round_cfg.train.seed = derive_seed(cfg.train.seed, r as u64);
        let model = train_hierarchical(train, &round_cfg)?;
        let rep = evaluate(&model, test)?;
        info!(
            "round {r}: mean pixel accuracy {:.5}",
            rep.summary(false).pixel_accuracy
        );
        reports.push(rep);
    }
    let average = EvalReport::average(&reports)?;
    Ok(ExperimentResult {
        rounds: reports,
        average,
    })
}

/// Named configurations covering the single/hierarchical, normalization,
/// tree-count, window-set and classifier comparisons.
pub fn table_variants(base: &PipelineConfig, knn_k: usize) -> Result<Vec<(String, PipelineConfig)>> {
    let windows = |w: &[usize], f: &[usize]| base.clone().with_windows(w, f);
    let mut out = vec![
        ("hierarchical".to_string(), windows(&[21, 11, 5], &[7, 5, 3])?),
        ("single".to_string(), windows(&[21], &[7])?),
    ];
    let mut no_norm = windows(&[21, 11, 5], &[7, 5, 3])?;
    no_norm.normalize = false;
    out.push(("no-normalize".into(), no_norm));
    for trees in [10, 100] {
        let mut c = windows(&[21, 11, 5], &[7, 5, 3])?;
        c.train.trees = trees;
        out.push((format!("trees-{trees}"), c));
    }
    out.push(("windows-40-20-10".into(), windows(&[40, 20, 10], &[7, 5, 3])?));
    out.push(("windows-20-10-5".into(), windows(&[20, 10, 5], &[7, 5, 3])?));
    out.push(("windows-40-20-10-5".into(), windows(&[40, 20, 10, 5], &[7, 5, 3, 1])?));
    out.push(("windows-21-11-5".into(), windows(&[21, 11, 5], &[7, 5, 3])?));
    let mut knn = windows(&[21, 11, 5], &[7, 5, 3])?;
    knn.classifier = ClassifierKind::Knn { k: knn_k };
    out.push(("knn".into(), knn));
    for (name, c) in &out {
        c.validate()
            .map_err(|e| Error::param("variant", format!("{name}: {e}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::TrainParams;
    use crate::synth::gland_dataset;

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            train: TrainParams {
                trees: 5,
                seed: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn one_round_structure() {
        let train = gland_dataset(11, 0, 2, 64, 64);
        let test: Vec<TestItem> = gland_dataset(11, 100, 2, 64, 64).into_iter().map(Into::into).collect();
        let res = run_experiment(&small_cfg(), &train, &test, 1).unwrap();
        assert_eq!(res.rounds.len(), 1);
        assert_eq!(res.average, res.rounds[0]);
        assert_eq!(res.average.summary(false).images, 2);
        assert_eq!(res.average.summary(true).images, 2);
        let csv = res.average.to_csv();
        assert_eq!(csv.lines().filter(|l| l.starts_with("Average")).count(), 2);
    }

    #[test]
    fn rounds_deterministic() {
        let train = gland_dataset(12, 0, 2, 48, 48);
        let test: Vec<TestItem> = gland_dataset(12, 50, 1, 48, 48).into_iter().map(Into::into).collect();
        let a = run_experiment(&small_cfg(), &train, &test, 3).unwrap();
        let b = run_experiment(&small_cfg(), &train, &test, 3).unwrap();
        assert_eq!(a, b);
        let s = a.average.summary(false);
        let manual = a.rounds.iter().map(|r| r.summary(false).pixel_accuracy).sum::<f64>() / 3.0;
        assert!((s.pixel_accuracy - manual).abs() < 1e-12);
    }

    #[test]
    fn variants_valid() {
        let v = table_variants(&PipelineConfig::default(), 5).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[1].1.levels.len(), 1);
    }
}
