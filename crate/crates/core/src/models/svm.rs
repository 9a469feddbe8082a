use serde::{Deserialize, Serialize};

use super::{check_matrix, require_both_classes, sigmoid};
use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 2000,
            learning_rate: 0.1,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Hyperparameter {
                name: "c",
                reason: format!("must be positive, got {}", self.c),
            });
        }
        if self.epochs == 0 {
            return Err(Error::Hyperparameter {
                name: "epochs",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Hyperparameter {
                name: "lr",
                reason: format!("must be positive, got {}", self.learning_rate),
            });
        }
        Ok(())
    }
}

/// Linear soft-margin classifier `w·x + b`. The probability output is the
/// logistic of the decision value and is not calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.decision_function(x) >= 0.0)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision_function(x))
    }
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Primal objective `½|w|² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`.
pub fn svm_objective(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[u8], c: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &l)| (1.0 - signed(l) * (dot(weights, row) + bias)).max(0.0))
        .sum();
    0.5 * dot(weights, weights) + c * hinge
}

pub fn train_svm(x: &[Vec<f64>], y: &[u8], config: &SvmConfig) -> Result<SvmModel> {
    train_svm_with_history(x, y, config).map(|(m, _)| m)
}

/// Full-batch subgradient descent on the primal objective (divided by `n`)
/// with step `lr / √(t + 1)`. Both the raw iterate and the running average
/// are scored each epoch and the best one seen is returned; the history is
/// that best objective per epoch.
pub fn train_svm_with_history(
    x: &[Vec<f64>],
    y: &[u8],
    config: &SvmConfig,
) -> Result<(SvmModel, Vec<f64>)> {
    config.validate()?;
    let width = check_matrix(x, y)?;
    require_both_classes(y)?;
    let n = x.len() as f64;
    let c = config.c;

    let mut w = vec![0.0; width];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; width];
    let mut avg_b = 0.0;
    let mut best = (w.clone(), b, svm_objective(&w, b, x, y, c));
    let mut history = Vec::with_capacity(config.epochs);

    for t in 0..config.epochs {
        let mut gw: Vec<f64> = w.iter().map(|wi| wi / n).collect();
        let mut gb = 0.0;
        for (row, &l) in x.iter().zip(y) {
            let s = signed(l);
            if s * (dot(&w, row) + b) < 1.0 {
                for (g, v) in gw.iter_mut().zip(row) {
                    *g -= c * s * v / n;
                }
                gb -= c * s / n;
            }
        }
        let step = config.learning_rate / ((t + 1) as f64).sqrt();
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;

        let k = (t + 1) as f64;
        for (a, wi) in avg_w.iter_mut().zip(&w) {
            *a += (wi - *a) / k;
        }
        avg_b += (b - avg_b) / k;

        for (cw, cb) in [(&w, b), (&avg_w, avg_b)] {
            let obj = svm_objective(cw, cb, x, y, c);
            if obj < best.2 {
                best = (cw.clone(), cb, obj);
            }
        }
        history.push(best.2);
    }

    let (weights, bias, _) = best;
    Ok((SvmModel { weights, bias, c }, history))
}
