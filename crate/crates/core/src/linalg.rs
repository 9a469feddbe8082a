//! Weighted (optionally ridge-penalised) least squares on small dense systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coefficients, x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimise `Σ w_i (y_i − b − x_i·β)² + ridge·|β|²`.
///
/// With `fit_intercept` the intercept is unpenalised and obtained from the
/// weighted means; otherwise `b = 0`. Solved through the normal equations by
/// Cholesky, so a singular system is reported instead of silently picking a
/// minimum-norm solution.
pub fn weighted_least_squares(
    design: &[Vec<f64>],
    target: &[f64],
    weights: &[f64],
    ridge: f64,
    fit_intercept: bool,
) -> Result<LinearFit> {
    let n = design.len();
    if n == 0 {
        return Err(Error::Degenerate("no rows in design matrix".into()));
    }
    if target.len() != n || weights.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: target.len().min(weights.len()),
        });
    }
    let p = design[0].len();
    let total_weight: f64 = weights.iter().sum();
    if !(total_weight > 0.0) {
        return Err(Error::Degenerate("sample weights sum to zero".into()));
    }

    let (x_mean, y_mean) = if fit_intercept {
        let mut xm = vec![0.0; p];
        let mut ym = 0.0;
        for ((row, y), w) in design.iter().zip(target).zip(weights) {
            for (m, v) in xm.iter_mut().zip(row) {
                *m += w * v;
            }
            ym += w * y;
        }
        xm.iter_mut().for_each(|m| *m /= total_weight);
        (xm, ym / total_weight)
    } else {
        (vec![0.0; p], 0.0)
    };

    if p == 0 {
        return Ok(LinearFit {
            coefficients: Vec::new(),
            intercept: y_mean,
        });
    }

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut centred = vec![0.0; p];
    for ((row, y), w) in design.iter().zip(target).zip(weights) {
        if row.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: row.len(),
            });
        }
        for (c, (v, m)) in centred.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = y - y_mean;
        for a in 0..p {
            let wa = w * centred[a];
            if wa == 0.0 {
                continue;
            }
            rhs[a] += wa * yc;
            for b in a..p {
                gram[(a, b)] += wa * centred[b];
            }
        }
    }
    for a in 0..p {
        gram[(a, a)] += ridge;
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::Degenerate(format!(
            "normal equations ({p}x{p}) are not positive definite; some column is constant or collinear"
        ))
    })?;
    // nalgebra accepts pivots that are zero up to rounding.
    let l = chol.l_dirty();
    for a in 0..p {
        let pivot = l[(a, a)] * l[(a, a)];
        if !(pivot > 1e-12 * gram[(a, a)]) {
            return Err(Error::Degenerate(format!(
                "normal equations are singular at column {a}; some column is constant or collinear"
            )));
        }
    }
    let mut beta = chol.solve(&rhs);
    // One step of iterative refinement.
    let residual = &rhs - &gram * &beta;
    beta += chol.solve(&residual);

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = if fit_intercept {
        y_mean - dot(&coefficients, &x_mean)
    } else {
        0.0
    };
    Ok(LinearFit {
        coefficients,
        intercept,
    })
}

/// Weighted coefficient of determination. A constant target that is fit
/// exactly scores 1.
pub fn weighted_r2(fit: &LinearFit, design: &[Vec<f64>], target: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean = target.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / total;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((row, y), w) in design.iter().zip(target).zip(weights) {
        let r = y - fit.predict(row);
        ss_res += w * r * r;
        ss_tot += w * (y - mean) * (y - mean);
    }
    if ss_tot <= f64::EPSILON * total {
        return if ss_res <= f64::EPSILON * total { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}
