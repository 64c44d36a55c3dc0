//! Bagged Gini decision trees and a brute-force KNN baseline.

pub mod knn;
pub mod tree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Label;
use crate::seed::derived_rng;

pub use knn::{knn_predict, KnnModel};
pub use tree::{majority, ClassCounts, DecisionTree, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainParams {
    pub trees: usize,
    /// Features examined per split; `None` means `⌈√d⌉`.
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            trees: 100,
            features_per_split: None,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::param("trees", "must be at least 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::param("features_per_split", "must be at least 1"));
        }
        Ok(())
    }

    pub fn resolved_features_per_split(&self, dim: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1))
    }
}

/// How trees are scheduled. Both produce identical forests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Labels present in the training set, sorted.
    pub classes: Vec<Label>,
    pub feature_dim: usize,
    pub params: TrainParams,
}

fn check_training_set(samples: &[Vec<f64>], labels: &[Label]) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::NoTrainingData);
    }
    if samples.len() != labels.len() {
        return Err(Error::dims(
            format!("{} labels", samples.len()),
            format!("{} labels", labels.len()),
        ));
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(Error::param("samples", "feature vectors are empty"));
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(Error::dims(
            format!("dimension {dim}"),
            format!("dimension {}", bad.len()),
        ));
    }
    Ok(dim)
}

pub fn train_forest(samples: &[Vec<f64>], labels: &[Label], params: &TrainParams) -> Result<RandomForest> {
    train_forest_with(samples, labels, params, Schedule::Parallel)
}

pub fn train_forest_with(
    samples: &[Vec<f64>],
    labels: &[Label],
    params: &TrainParams,
    schedule: Schedule,
) -> Result<RandomForest> {
    params.validate()?;
    let dim = check_training_set(samples, labels)?;
    let grow = tree::GrowParams {
        features_per_split: params.resolved_features_per_split(dim),
        min_samples_split: params.min_samples_split.max(2),
        max_depth: params.max_depth,
    };
    let n = samples.len();
    let grow_one = |t: usize| {
        let mut rng = derived_rng(params.seed, t as u64);
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        DecisionTree::grow(samples, labels, bootstrap, &grow, &mut rng)
    };
    let trees = match schedule {
        Schedule::Serial => (0..params.trees).map(grow_one).collect(),
        Schedule::Parallel => (0..params.trees).into_par_iter().map(grow_one).collect(),
    };
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort();
    classes.dedup();
    Ok(RandomForest {
        trees,
        classes,
        feature_dim: dim,
        params: *params,
    })
}

impl RandomForest {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::dims(
                format!("dimension {}", self.feature_dim),
                format!("dimension {}", x.len()),
            ));
        }
        Ok(())
    }

    /// Each tree's vote (its leaf's majority class).
    pub fn tree_votes(&self, x: &[f64]) -> Result<Vec<Label>> {
        self.check_dim(x)?;
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }

    pub fn vote_counts(&self, x: &[f64]) -> Result<ClassCounts> {
        self.check_dim(x)?;
        let mut counts = [0u32; 3];
        for t in &self.trees {
            counts[t.predict(x).index()] += 1;
        }
        Ok(counts)
    }

    /// Modal tree vote; ties resolve in `Gland < Mix < NonGland` order.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(majority(&self.vote_counts(x)?))
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.trees.is_empty() {
            return Err("forest has no trees".into());
        }
        if self.trees.len() != self.params.trees {
            return Err(format!(
                "forest has {} trees but params say {}",
                self.trees.len(),
                self.params.trees
            ));
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(self.feature_dim).map_err(|e| format!("tree {i}: {e}"))?;
        }
        Ok(())
    }
}
