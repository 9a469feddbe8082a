use serde::{Deserialize, Serialize};

use super::{check_matrix, require_both_classes, sigmoid};
use crate::dataset::Scaler;
use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 5000,
            l2: 1e-4,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Hyperparameter {
                name: "lr",
                reason: format!("learning rate must be positive, got {}", self.learning_rate),
            });
        }
        if self.epochs == 0 {
            return Err(Error::Hyperparameter {
                name: "epochs",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Hyperparameter {
                name: "l2",
                reason: format!("must be non-negative, got {}", self.l2),
            });
        }
        Ok(())
    }
}

/// `P(flood | x) = σ(intercept + weights·x)`, in raw feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_odds(x))
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean negative log-likelihood plus `l2/2 · |w|²` (intercept unpenalised),
/// with its gradient `(∂/∂w, ∂/∂b)`.
pub fn logistic_loss_and_gradient(
    weights: &[f64],
    intercept: f64,
    x: &[Vec<f64>],
    y: &[u8],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = intercept + dot(weights, row);
        let t = f64::from(label);
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in grad_w.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * dot(weights, weights);
    (loss, grad_w, grad_b)
}

pub fn train_logistic(x: &[Vec<f64>], y: &[u8], config: &LogisticConfig) -> Result<LogisticModel> {
    train_logistic_with_history(x, y, config).map(|(m, _)| m)
}

/// Full-batch gradient descent. The optimisation runs on standardised
/// features (so one learning rate suits millimetre-scale inputs) and the
/// result is mapped back to raw units. The returned history holds the loss
/// before the first step and after every epoch.
pub fn train_logistic_with_history(
    x: &[Vec<f64>],
    y: &[u8],
    config: &LogisticConfig,
) -> Result<(LogisticModel, Vec<f64>)> {
    config.validate()?;
    let width = check_matrix(x, y)?;
    require_both_classes(y)?;

    let scaler = Scaler::fit(x)?;
    let z = scaler.transform_rows(x);
    let mut w = vec![0.0; width];
    let mut b = 0.0;
    let mut history = Vec::with_capacity(config.epochs + 1);
    for _ in 0..config.epochs {
        let (loss, gw, gb) = logistic_loss_and_gradient(&w, b, &z, y, config.l2);
        history.push(loss);
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= config.learning_rate * gi;
        }
        b -= config.learning_rate * gb;
    }
    history.push(logistic_loss_and_gradient(&w, b, &z, y, config.l2).0);

    let weights: Vec<f64> = w.iter().zip(&scaler.std).map(|(wi, s)| wi / s).collect();
    let intercept = b - dot(&weights, &scaler.mean);
    Ok((LogisticModel { weights, intercept }, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_one_half() {
        let m = LogisticModel {
            weights: vec![0.0; 12],
            intercept: 0.0,
        };
        assert_eq!(m.predict_proba(&[123.0; 12]), 0.5);
    }

    #[test]
    fn one_dimensional_toy_learns_positive_weight() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![0, 1];
        // At w = 0 the gradient is Σ(σ(0) − t)·x = 0.5·(−1) − 0.5·(1) = −1 < 0.
        let (_, gw, _) = logistic_loss_and_gradient(&[0.0], 0.0, &x, &y, 0.0);
        assert!(gw[0] < 0.0);
        let m = train_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logistic(&x, &[1, 1], &LogisticConfig::default()),
            Err(Error::SingleClass(1))
        ));
    }

    #[test]
    fn loss_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..800.0)).collect())
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + r[2] > 800.0)).collect();
        let (_, history) = train_logistic_with_history(&x, &y, &LogisticConfig::default()).unwrap();
        assert_eq!(history.len(), 5001);
        for pair in history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(3..12);
            let p = rng.gen_range(1..5);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            let l2 = 0.1;
            let (_, gw, gb) = logistic_loss_and_gradient(&w, b, &x, &y, l2);
            let h = 1e-5;
            let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            for j in 0..p {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fd = (logistic_loss_and_gradient(&wp, b, &x, &y, l2).0
                    - logistic_loss_and_gradient(&wm, b, &x, &y, l2).0)
                    / (2.0 * h);
                assert!(rel(gw[j], fd) <= 1e-5, "w{j}: {} vs {fd}", gw[j]);
            }
            let fd = (logistic_loss_and_gradient(&w, b + h, &x, &y, l2).0
                - logistic_loss_and_gradient(&w, b - h, &x, &y, l2).0)
                / (2.0 * h);
            assert!(rel(gb, fd) <= 1e-5);
        }
    }

    #[test]
    fn log_odds_is_linear_in_raw_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.gen_range(0.0..500.0)).collect())
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[1] > 250.0)).collect();
        let m = train_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..500.0)).collect();
            let p = m.predict_proba(&q);
            let logit = (p / (1.0 - p)).ln();
            let linear = m.intercept + dot(&m.weights, &q);
            assert!((logit - linear).abs() <= 1e-9 * linear.abs().max(1.0));
        }
    }
}
