use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{check_labels, check_matrix, squared_distance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Hyperparameter {
                name: "k",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Majority vote among the `k` nearest stored points.
///
/// Neighbours are ranked by `(distance, label)`, so equal distances resolve
/// toward no-flood regardless of row order. A tied vote goes to the label of
/// the nearest neighbour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

pub fn train_knn(x: &[Vec<f64>], y: &[u8], config: &KnnConfig) -> Result<KnnModel> {
    config.validate()?;
    check_matrix(x, y)?;
    check_labels(y)?;
    if config.k > x.len() {
        return Err(Error::Hyperparameter {
            name: "k",
            reason: format!("k = {} exceeds the {} training rows", config.k, x.len()),
        });
    }
    Ok(KnnModel {
        k: config.k,
        points: x.to_vec(),
        labels: y.to_vec(),
    })
}

fn by_distance_then_label(a: &(f64, u8), b: &(f64, u8)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnModel {
    /// The `k` nearest `(squared distance, label)` pairs, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<(f64, u8)> {
        let mut all: Vec<(f64, u8)> = self
            .points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| (squared_distance(p, x), l))
            .collect();
        if self.k < all.len() {
            all.select_nth_unstable_by(self.k - 1, by_distance_then_label);
            all.truncate(self.k);
        }
        all.sort_unstable_by(by_distance_then_label);
        all
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let nn = self.neighbours(x);
        let floods = nn.iter().filter(|n| n.1 == 1).count();
        match (2 * floods).cmp(&nn.len()) {
            Ordering::Greater => 1,
            Ordering::Less => 0,
            Ordering::Equal => nn[0].1,
        }
    }

    /// Fraction of flood labels among the neighbours. On a tied vote that
    /// the nearest neighbour breaks toward no-flood the value is nudged just
    /// below 0.5, so thresholding at 0.5 reproduces [`KnnModel::predict`].
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let nn = self.neighbours(x);
        let floods = nn.iter().filter(|n| n.1 == 1).count();
        if 2 * floods == nn.len() && nn[0].1 == 0 {
            return 0.5f64.next_down();
        }
        floods as f64 / nn.len() as f64
    }
}
