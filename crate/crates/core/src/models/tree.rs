use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_labels, check_matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_samples_leaf: 2,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Hyperparameter {
                name: "min-samples-leaf",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Shannon entropy in bits, `−Σ p log2 p`, of a multiset of class values.
pub fn entropy(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("entropy of an empty label set".into()));
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    Ok(entropy_of_counts(counts.values().copied(), labels.len()))
}

fn entropy_of_counts(counts: impl IntoIterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        /// `[P(no flood), P(flood)]` from the leaf's training labels.
        class_probabilities: [f64; 2],
        entropy: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        entropy: f64,
        gain: f64,
        samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn samples(&self) -> usize {
        match self {
            TreeNode::Leaf { samples, .. } | TreeNode::Split { samples, .. } => *samples,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        match self {
            TreeNode::Leaf { .. } => vec![self],
            TreeNode::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }

    pub fn splits(&self) -> Vec<&TreeNode> {
        match self {
            TreeNode::Leaf { .. } => Vec::new(),
            TreeNode::Split { left, right, .. } => {
                let mut v = vec![self];
                v.extend(left.splits());
                v.extend(right.splits());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf {
                    class_probabilities,
                    ..
                } => return class_probabilities[1],
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

/// Greedy entropy tree. Candidate thresholds are midpoints between
/// consecutive distinct values; gain ties go to the lowest feature index,
/// then the lowest threshold.
pub fn train_tree(x: &[Vec<f64>], y: &[u8], config: &TreeConfig) -> Result<DecisionTree> {
    config.validate()?;
    let width = check_matrix(x, y)?;
    check_labels(y)?;
    let indices: Vec<usize> = (0..x.len()).collect();
    let root = grow(x, y, indices, 0, config);
    Ok(DecisionTree {
        n_features: width,
        root,
    })
}

const GAIN_EPS: f64 = 1e-12;

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn grow(x: &[Vec<f64>], y: &[u8], indices: Vec<usize>, depth: usize, cfg: &TreeConfig) -> TreeNode {
    let n = indices.len();
    let floods = indices.iter().filter(|&&i| y[i] == 1).count();
    let node_entropy = entropy_of_counts([n - floods, floods], n);
    let leaf = || {
        let p = floods as f64 / n as f64;
        TreeNode::Leaf {
            class_probabilities: [1.0 - p, p],
            entropy: node_entropy,
            samples: n,
        }
    };
    if floods == 0 || floods == n || depth >= cfg.max_depth || n < 2 * cfg.min_samples_leaf {
        return leaf();
    }
    let Some(best) = best_split(x, y, &indices, floods, node_entropy, cfg.min_samples_leaf) else {
        return leaf();
    };
    let (left, right): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| x[i][best.feature] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        entropy: node_entropy,
        gain: best.gain,
        samples: n,
        left: Box::new(grow(x, y, left, depth + 1, cfg)),
        right: Box::new(grow(x, y, right, depth + 1, cfg)),
    }
}

fn best_split(
    x: &[Vec<f64>],
    y: &[u8],
    indices: &[usize],
    floods: usize,
    parent_entropy: f64,
    min_leaf: usize,
) -> Option<Candidate> {
    let n = indices.len();
    let width = x[indices[0]].len();
    let mut best: Option<Candidate> = None;
    let mut order = indices.to_vec();
    for feature in 0..width {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
        let mut left_floods = 0;
        for pos in 0..n - 1 {
            left_floods += usize::from(y[order[pos]] == 1);
            let lo = x[order[pos]][feature];
            let hi = x[order[pos + 1]][feature];
            let n_left = pos + 1;
            let n_right = n - n_left;
            if lo == hi || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right_floods = floods - left_floods;
            let children = (n_left as f64 * entropy_of_counts([n_left - left_floods, left_floods], n_left)
                + n_right as f64 * entropy_of_counts([n_right - right_floods, right_floods], n_right))
                / n as f64;
            let gain = parent_entropy - children;
            if gain > GAIN_EPS && best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[1, 1, 1, 1]).unwrap(), 0.0);
        assert_eq!(entropy(&[0, 0, 1, 1]).unwrap(), 1.0);
        // −(0.75 log2 0.75 + 0.25 log2 0.25) = 0.8112781244591328
        let h = entropy(&[0, 0, 0, 0, 0, 0, 1, 1]).unwrap();
        assert!((h - 0.811278).abs() < 1e-6);
        assert!((entropy(&[0, 1, 2, 3]).unwrap() - 2.0).abs() < 1e-15);
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn pure_set_is_a_single_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let t = train_tree(&x, &[1, 1, 1], &TreeConfig::default()).unwrap();
        assert!(matches!(t.root, TreeNode::Leaf { samples: 3, .. }));
    }

    #[test]
    fn separating_feature_gives_midpoint_threshold() {
        let x = vec![vec![0.0, 5.0], vec![9.0, 5.0], vec![0.0, 15.0], vec![9.0, 15.0]];
        let t = train_tree(&x, &[0, 0, 1, 1], &TreeConfig { max_depth: 5, min_samples_leaf: 1 }).unwrap();
        match &t.root {
            TreeNode::Split { feature, threshold, gain, .. } => {
                assert_eq!(*feature, 1);
                assert_eq!(*threshold, 10.0);
                assert_eq!(*gain, 1.0);
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        assert_eq!(t.root.depth(), 1);
        assert_eq!(t.predict_proba(&[3.0, 12.0]), 1.0);
    }

    #[test]
    fn gain_ties_prefer_lowest_feature() {
        // Both features separate perfectly.
        let x = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]];
        let t = train_tree(&x, &[0, 0, 1, 1], &TreeConfig { max_depth: 3, min_samples_leaf: 1 }).unwrap();
        assert!(matches!(t.root, TreeNode::Split { feature: 0, threshold, .. } if threshold == 2.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn structural_invariants(
            rows in prop::collection::vec((prop::array::uniform3(0i32..8), 0u8..2), 2..60),
            max_depth in 0usize..6,
            min_leaf in 1usize..4,
        ) {
            let x: Vec<Vec<f64>> = rows.iter().map(|(p, _)| p.iter().map(|&v| v as f64 * 10.0).collect()).collect();
            let y: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let cfg = TreeConfig { max_depth, min_samples_leaf: min_leaf };
            let t = train_tree(&x, &y, &cfg).unwrap();
            prop_assert!(t.root.depth() <= max_depth);
            let leaves = t.root.leaves();
            prop_assert_eq!(leaves.iter().map(|l| l.samples()).sum::<usize>(), x.len());
            for leaf in leaves {
                if let TreeNode::Leaf { class_probabilities, samples, .. } = leaf {
                    prop_assert!((class_probabilities[0] + class_probabilities[1] - 1.0).abs() < 1e-12);
                    if t.root.depth() > 0 {
                        prop_assert!(*samples >= min_leaf);
                    }
                }
            }
            for split in t.root.splits() {
                if let TreeNode::Split { gain, entropy, left, right, samples, .. } = split {
                    prop_assert!(*gain >= 0.0);
                    prop_assert_eq!(left.samples() + right.samples(), *samples);
                    let child = |n: &TreeNode| match n {
                        TreeNode::Leaf { entropy, .. } | TreeNode::Split { entropy, .. } => *entropy,
                    };
                    let weighted = (left.samples() as f64 * child(left) + right.samples() as f64 * child(right))
                        / *samples as f64;
                    prop_assert!(weighted <= *entropy + 1e-12);
                }
            }
        }
    }
}
