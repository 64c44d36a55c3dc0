use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Label;

/// Brute-force k-nearest-neighbour vote under Euclidean distance.
///
/// Equal distances keep the lower training index first. If several labels
/// share the top count, the label of the nearest such neighbour wins. `k` is
/// clamped to the training set size.
pub fn knn_predict(train: &[Vec<f64>], labels: &[Label], x: &[f64], k: usize) -> Result<Label> {
    if train.is_empty() {
        return Err(Error::NoTrainingData);
    }
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if train.len() != labels.len() {
        return Err(Error::dims(train.len(), labels.len()));
    }
    let k = k.min(train.len());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    for (i, s) in train.iter().enumerate() {
        if s.len() != x.len() {
            return Err(Error::dims(
                format!("dimension {}", s.len()),
                format!("dimension {}", x.len()),
            ));
        }
        let d: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        dist.push((d, i));
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_by(cmp);
    let mut counts = [0u32; 3];
    for &(_, i) in &dist {
        counts[labels[i].index()] += 1;
    }
    let top = *counts.iter().max().expect("three classes");
    let winner = dist
        .iter()
        .map(|&(_, i)| labels[i])
        .find(|l| counts[l.index()] == top)
        .expect("k >= 1");
    Ok(winner)
}

/// Stored training set used as a drop-in cascade classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl KnnModel {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<Label>, k: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoTrainingData);
        }
        if samples.len() != labels.len() {
            return Err(Error::dims(samples.len(), labels.len()));
        }
        if k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        Ok(KnnModel { k, samples, labels })
    }

    pub fn feature_dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        knn_predict(&self.samples, &self.labels, x, self.k)
    }

    /// Label counts among the `k` nearest neighbours.
    pub fn neighbour_counts(&self, x: &[f64]) -> Result<[u32; 3]> {
        if x.len() != self.feature_dim() {
            return Err(Error::dims(self.feature_dim(), x.len()));
        }
        let k = self.k.min(self.samples.len());
        let mut dist: Vec<(f64, usize)> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut counts = [0u32; 3];
        for &(_, i) in &dist[..k] {
            counts[self.labels[i].index()] += 1;
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_single() {
        let train = vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![1.0, 1.0]];
        let labels = vec![Label::Gland, Label::NonGland, Label::Mix];
        assert_eq!(knn_predict(&train, &labels, &[4.0, 4.5], 1).unwrap(), Label::NonGland);
        assert_eq!(knn_predict(&train, &labels, &[1.0, 1.0], 1).unwrap(), Label::Mix);
    }

    #[test]
    fn clamps_k() {
        let train = vec![vec![0.0], vec![1.0], vec![2.0]];
        let labels = vec![Label::Gland, Label::NonGland, Label::NonGland];
        assert_eq!(knn_predict(&train, &labels, &[0.0], 10).unwrap(), Label::NonGland);
    }

    #[test]
    fn tie_rules() {
        // equidistant pair: lower index is nearer
        let train = vec![vec![-1.0], vec![1.0]];
        let labels = vec![Label::NonGland, Label::Gland];
        assert_eq!(knn_predict(&train, &labels, &[0.0], 1).unwrap(), Label::NonGland);
        // label tie at k=2: nearest neighbour's label
        let train = vec![vec![3.0], vec![1.0]];
        let labels = vec![Label::NonGland, Label::Gland];
        assert_eq!(knn_predict(&train, &labels, &[0.0], 2).unwrap(), Label::Gland);
    }

    #[test]
    fn errors() {
        assert!(knn_predict(&[], &[], &[0.0], 1).is_err());
        assert!(knn_predict(&[vec![0.0]], &[Label::Gland], &[0.0], 0).is_err());
        assert!(knn_predict(&[vec![0.0]], &[Label::Gland], &[0.0, 1.0], 1).is_err());
    }
}
