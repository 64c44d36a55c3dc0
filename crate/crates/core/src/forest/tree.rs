//! CART-style classification tree with Gini splits.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::Label;

/// Per-class sample counts, indexed by [`Label::index`] (Gland, Mix, NonGland).
pub type ClassCounts = [u32; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: ClassCounts,
    },
}

/// Majority class of `counts`; ties resolve in `Gland < Mix < NonGland` order.
pub fn majority(counts: &ClassCounts) -> Label {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    Label::from_index(best).expect("three classes")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

pub(crate) struct GrowParams {
    pub features_per_split: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

fn counts_of(idx: &[usize], labels: &[Label]) -> ClassCounts {
    let mut c = [0u32; 3];
    for &i in idx {
        c[labels[i].index()] += 1;
    }
    c
}

fn sum_sq(c: &ClassCounts) -> u64 {
    c.iter().map(|&v| (v as u64) * (v as u64)).sum()
}

/// `n·n_l·n_r` times the Gini decrease of a split, exact in integers. The
/// decrease is positive iff this is.
fn scaled_gain(parent: &ClassCounts, left: &ClassCounts, right: &ClassCounts) -> i128 {
    let n = parent.iter().sum::<u32>() as i128;
    let nl = left.iter().sum::<u32>() as i128;
    let nr = right.iter().sum::<u32>() as i128;
    n * nr * sum_sq(left) as i128 + n * nl * sum_sq(right) as i128 - nl * nr * sum_sq(parent) as i128
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
    left: ClassCounts,
    right: ClassCounts,
}

fn best_split_on(
    feature: usize,
    idx: &[usize],
    samples: &[Vec<f64>],
    labels: &[Label],
    parent: &ClassCounts,
    scratch: &mut Vec<(f64, Label)>,
) -> Option<Candidate> {
    scratch.clear();
    scratch.extend(idx.iter().map(|&i| (samples[i][feature], labels[i])));
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len();
    let mut left = [0u32; 3];
    let mut best: Option<Candidate> = None;
    for k in 0..n - 1 {
        left[scratch[k].1.index()] += 1;
        let (a, b) = (scratch[k].0, scratch[k + 1].0);
        if a >= b {
            continue;
        }
        let right = [0, 1, 2].map(|c| parent[c] - left[c]);
        let (nl, nr) = ((k + 1) as f64, (n - k - 1) as f64);
        // maximizing Σc_l²/n_l + Σc_r²/n_r minimizes the weighted Gini impurity
        let score = sum_sq(&left) as f64 / nl + sum_sq(&right) as f64 / nr;
        if best.as_ref().is_none_or(|c| score > c.score) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(Candidate {
                feature,
                threshold,
                score,
                left,
                right,
            });
        }
    }
    best
}

impl DecisionTree {
    /// Grows a tree on `samples[bootstrap[..]]`.
    pub(crate) fn grow<R: Rng>(
        samples: &[Vec<f64>],
        labels: &[Label],
        mut bootstrap: Vec<usize>,
        params: &GrowParams,
        rng: &mut R,
    ) -> DecisionTree {
        let dim = samples[0].len();
        let k = params.features_per_split.clamp(1, dim);
        let mut nodes = vec![TreeNode::Leaf { counts: [0; 3] }];
        // (node slot, start, end, depth) over the shared index buffer
        let mut stack = vec![(0usize, 0usize, bootstrap.len(), 0usize)];
        let mut scratch = Vec::with_capacity(bootstrap.len());
        while let Some((slot, start, end, depth)) = stack.pop() {
            let idx = &mut bootstrap[start..end];
            let counts = counts_of(idx, labels);
            let n = idx.len();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || n < params.min_samples_split || params.max_depth.is_some_and(|d| depth >= d) {
                nodes[slot] = TreeNode::Leaf { counts };
                continue;
            }
            let mut best: Option<Candidate> = None;
            for f in index::sample(rng, dim, k) {
                if let Some(c) = best_split_on(f, idx, samples, labels, &counts, &mut scratch) {
                    if best.as_ref().is_none_or(|b| c.score > b.score) {
                        best = Some(c);
                    }
                }
            }
            let Some(split) = best.filter(|c| scaled_gain(&counts, &c.left, &c.right) > 0) else {
                nodes[slot] = TreeNode::Leaf { counts };
                continue;
            };
            // partition in place: left block first
            let mut mid = 0;
            for i in 0..n {
                if samples[idx[i]][split.feature] <= split.threshold {
                    idx.swap(i, mid);
                    mid += 1;
                }
            }
            debug_assert_eq!(mid as u32, split.left.iter().sum::<u32>());
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode::Leaf { counts: [0; 3] });
            nodes.push(TreeNode::Leaf { counts: [0; 3] });
            nodes[slot] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, start + mid, end, depth + 1));
            stack.push((left, start, start + mid, depth + 1));
        }
        DecisionTree { nodes }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> &ClassCounts {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        majority(self.leaf_counts(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural checks used when loading a model: children follow their
    /// parent (hence no cycles), features are in range, leaves are non-empty.
    pub fn validate(&self, feature_dim: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Leaf { counts } => {
                    if counts.iter().sum::<u32>() == 0 {
                        return Err(format!("leaf {i} has no samples"));
                    }
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= feature_dim {
                        return Err(format!("node {i} feature {feature} >= dim {feature_dim}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i} threshold is not finite"));
                    }
                    for c in [*left, *right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(format!("node {i} child {c} out of order or range"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
