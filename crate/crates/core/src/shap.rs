//! Shapley-value attributions for any [`BlackBoxModel`].
//!
//! A coalition `S` is a bitmask over features. Its value `v(S)` is the mean
//! model output over the background rows after overwriting the features in
//! `S` with the explained instance's values (interventional expectation).
//! The explanation is additive:
//!
//! ```text
//! f(x) = φ0 + Σ φi,    φ0 = v(∅) = mean background output
//! ```
//!
//! [`exact_shapley`] enumerates all `2^M` coalitions and is the reference.
//! [`kernel_shap`] fits the additive surrogate by weighted least squares
//! under the Shapley kernel, with efficiency imposed as a hard constraint.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::check_width;
use crate::error::{Error, Result};
use crate::linalg::weighted_least_squares;
use crate::models::BlackBoxModel;

/// Largest feature count [`exact_shapley`] will enumerate.
pub const EXACT_FEATURE_LIMIT: usize = 20;

/// Largest feature count representable in a coalition mask.
pub const KERNEL_FEATURE_LIMIT: usize = 63;

pub type Coalition = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundKind {
    /// Every training row.
    Trainset,
    /// The single training-set mean vector.
    Mean,
    Custom,
}

/// Reference rows that supply values for features absent from a coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub kind: BackgroundKind,
    pub rows: Vec<Vec<f64>>,
}

impl Background {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(BackgroundKind::Trainset, rows)
    }

    pub fn single(row: Vec<f64>) -> Result<Self> {
        Self::build(BackgroundKind::Custom, vec![row])
    }

    pub fn mean_of(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Empty("background rows".into()))?;
        let mut mean = vec![0.0; first.len()];
        for row in rows {
            check_width(row, mean.len())?;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Self::build(BackgroundKind::Mean, vec![mean])
    }

    fn build(kind: BackgroundKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Empty("background rows".into()))?;
        let width = first.len();
        for row in &rows {
            check_width(row, width)?;
        }
        Ok(Self { kind, rows })
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for row in &self.rows {
            for v in row {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoalitionBudget {
    /// All `2^M − 2` interior coalitions.
    Exhaustive,
    /// At most this many distinct interior coalitions.
    Samples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    pub budget: CoalitionBudget,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            budget: CoalitionBudget::Samples(2048),
            seed: 42,
        }
    }
}

impl ShapConfig {
    pub fn minimum_samples(n_features: usize) -> usize {
        2 * n_features + 2
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if let CoalitionBudget::Samples(budget) = self.budget {
            let minimum = Self::minimum_samples(n_features);
            if budget < minimum {
                return Err(Error::SampleBudget { budget, minimum });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// φ0, the mean model output over the background.
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub instance: Vec<f64>,
    pub model_output: f64,
    /// `φ0 + Σφ − f(x)`.
    pub additivity_residual: f64,
    /// Number of interior coalitions that entered the computation.
    pub coalitions: usize,
}

impl ShapExplanation {
    fn new(base_value: f64, phi: Vec<f64>, instance: &[f64], model_output: f64, coalitions: usize) -> Self {
        let additivity_residual = base_value + phi.iter().sum::<f64>() - model_output;
        Self {
            base_value,
            phi,
            instance: instance.to_vec(),
            model_output,
            additivity_residual,
            coalitions,
        }
    }

    /// Feature indices by descending |φ|, ties in index order.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.phi.iter().map(|p| p.abs()).collect::<Vec<_>>())
    }
}

pub(crate) fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

fn check_inputs<M: BlackBoxModel + ?Sized>(model: &M, instance: &[f64], background: &Background) -> Result<usize> {
    let m = instance.len();
    check_width(instance, model.n_features())?;
    check_width(&background.rows[0], m)?;
    Ok(m)
}

/// `v(S)`: mean output over background rows with the features in `subset`
/// taken from `instance`.
pub fn coalition_value<M: BlackBoxModel + ?Sized>(
    model: &M,
    instance: &[f64],
    subset: Coalition,
    background: &Background,
) -> f64 {
    let mut hybrid = vec![0.0; instance.len()];
    let mut total = 0.0;
    for row in &background.rows {
        for (j, h) in hybrid.iter_mut().enumerate() {
            *h = if subset >> j & 1 == 1 { instance[j] } else { row[j] };
        }
        total += model.predict_proba(&hybrid);
    }
    total / background.rows.len() as f64
}

fn coalition_values<M: BlackBoxModel + ?Sized>(
    model: &M,
    instance: &[f64],
    masks: &[Coalition],
    background: &Background,
) -> Vec<f64> {
    masks
        .par_iter()
        .map(|&s| coalition_value(model, instance, s, background))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of one coalition of size `s` among `m` features.
pub fn kernel_weight(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

/// Exact Shapley values over all `2^M` coalitions:
/// `φi = Σ_{S ⊆ F∖{i}} |S|!(M−|S|−1)!/M! · [v(S ∪ {i}) − v(S)]`.
pub fn exact_shapley<M: BlackBoxModel + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &Background,
) -> Result<ShapExplanation> {
    let m = check_inputs(model, instance, background)?;
    if m > EXACT_FEATURE_LIMIT {
        return Err(Error::TooManyFeatures {
            features: m,
            limit: EXACT_FEATURE_LIMIT,
        });
    }
    let output = model.predict_proba(instance);
    let masks: Vec<Coalition> = (0..1u64 << m).collect();
    let values = coalition_values(model, instance, &masks, background);
    // |S|!(M−|S|−1)!/M! = 1 / (M · C(M−1, |S|))
    let weights: Vec<f64> = (0..m.max(1))
        .map(|s| 1.0 / (m as f64 * binomial(m - 1, s)))
        .collect();
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        for &s in &masks {
            if s & bit == 0 {
                let size = s.count_ones() as usize;
                *p += weights[size] * (values[(s | bit) as usize] - values[s as usize]);
            }
        }
    }
    let interior = masks.len().saturating_sub(2);
    Ok(ShapExplanation::new(values[0], phi, instance, output, interior))
}

/// Weighted interior coalitions for the Kernel SHAP regression, in mask
/// order. Coalition sizes are handled in complementary pairs from the
/// outside in: a pair is enumerated completely when the remaining budget
/// covers it in proportion to its kernel mass; the rest of the budget is
/// spent on random coalitions drawn by kernel mass, each added together
/// with its complement.
pub fn coalition_design(m: usize, budget: CoalitionBudget, seed: u64) -> BTreeMap<Coalition, f64> {
    let mut out = BTreeMap::new();
    if m < 2 {
        return out;
    }
    let full: Coalition = (1u64 << m) - 1;
    let interior = if m >= 64 { usize::MAX } else { (1usize << m) - 2 };
    let budget = match budget {
        CoalitionBudget::Exhaustive => interior,
        CoalitionBudget::Samples(n) => n.min(interior),
    };

    // Size groups {s, m−s}; `mass` is the kernel mass C(m,s)·w(s) of the group.
    let groups: Vec<(usize, f64, f64)> = (1..=m / 2)
        .map(|s| {
            let per_size = (m - 1) as f64 / (s * (m - s)) as f64;
            let paired = s != m - s;
            let count = if paired { 2.0 * binomial(m, s) } else { binomial(m, s) };
            let mass = if paired { 2.0 * per_size } else { per_size };
            (s, count, mass)
        })
        .collect();

    let mut remaining_budget = budget as f64;
    let mut remaining_mass: f64 = groups.iter().map(|g| g.2).sum();
    let mut next_group = 0;
    for &(s, count, mass) in &groups {
        if remaining_budget * mass / remaining_mass + 1e-9 < count {
            break;
        }
        let w = kernel_weight(m, s);
        for subset in subsets_of_size(m, s) {
            out.insert(subset, w);
            out.insert(full ^ subset, w);
        }
        remaining_budget -= count;
        remaining_mass -= mass;
        next_group += 1;
    }

    let left = &groups[next_group..];
    let target = remaining_budget.round() as usize;
    if left.is_empty() || target == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left_mass: f64 = left.iter().map(|g| g.2).sum();
    let mut counts: BTreeMap<Coalition, usize> = BTreeMap::new();
    let mut draws = 0usize;
    let max_draws = target.saturating_mul(20).max(100);
    while counts.len() < target && draws < max_draws {
        let mut u = rng.gen::<f64>() * left_mass;
        let mut s = left[left.len() - 1].0;
        for g in left {
            if u < g.2 {
                s = g.0;
                break;
            }
            u -= g.2;
        }
        let mut subset: Coalition = 0;
        for j in index::sample(&mut rng, m, s) {
            subset |= 1 << j;
        }
        *counts.entry(subset).or_default() += 1;
        *counts.entry(full ^ subset).or_default() += 1;
        draws += 1;
    }
    // Sampled coalitions share the kernel mass left over by the enumerated
    // groups, so both parts sit on the same weight scale.
    let per_draw = remaining_mass / (2 * draws) as f64;
    for (subset, c) in counts {
        *out.entry(subset).or_default() += per_draw * c as f64;
    }
    out
}

fn subsets_of_size(m: usize, s: usize) -> impl Iterator<Item = Coalition> {
    (0..1u64 << m).filter(move |c| c.count_ones() as usize == s)
}

/// Kernel SHAP: weighted least-squares fit of `g(z) = φ0 + Σ φi zi` with the
/// Shapley kernel. `φ0 = v(∅)` is fixed and `Σφ = f(x) − φ0` is imposed by
/// eliminating the last coefficient. With an exhaustive budget the result is
/// the exact Shapley vector.
pub fn kernel_shap<M: BlackBoxModel + ?Sized>(
    model: &M,
    instance: &[f64],
    background: &Background,
    config: &ShapConfig,
) -> Result<ShapExplanation> {
    let m = check_inputs(model, instance, background)?;
    if m > KERNEL_FEATURE_LIMIT {
        return Err(Error::TooManyFeatures {
            features: m,
            limit: KERNEL_FEATURE_LIMIT,
        });
    }
    config.validate(m)?;
    let output = model.predict_proba(instance);
    let base = coalition_value(model, instance, 0, background);
    let delta = output - base;
    if m == 0 {
        return Ok(ShapExplanation::new(base, Vec::new(), instance, output, 0));
    }
    if m == 1 {
        return Ok(ShapExplanation::new(base, vec![delta], instance, output, 0));
    }

    let design = coalition_design(m, config.budget, config.seed);
    let masks: Vec<Coalition> = design.keys().copied().collect();
    let weights: Vec<f64> = design.values().copied().collect();
    let values = coalition_values(model, instance, &masks, background);

    let last = m - 1;
    let mut rows = Vec::with_capacity(masks.len());
    let mut target = Vec::with_capacity(masks.len());
    for (&mask, v) in masks.iter().zip(&values) {
        let z_last = (mask >> last & 1) as f64;
        rows.push(
            (0..last)
                .map(|i| (mask >> i & 1) as f64 - z_last)
                .collect::<Vec<f64>>(),
        );
        target.push(v - base - z_last * delta);
    }
    let fit = weighted_least_squares(&rows, &target, &weights, 0.0, false)?;
    let mut phi = fit.coefficients;
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(ShapExplanation::new(base, phi, instance, output, masks.len()))
}

/// Mean absolute (and mean signed) φ per feature over a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub importance: Vec<f64>,
    pub mean_phi: Vec<f64>,
    /// Feature indices by descending importance, ties in feature order.
    pub ranking: Vec<usize>,
    pub rows: usize,
    pub max_abs_residual: f64,
}

impl GlobalImportance {
    pub fn top(&self, k: usize) -> Vec<&str> {
        self.ranking
            .iter()
            .take(k)
            .map(|&i| self.feature_names[i].as_str())
            .collect()
    }

    pub fn bottom(&self, k: usize) -> Vec<&str> {
        let n = self.ranking.len();
        self.ranking[n.saturating_sub(k)..]
            .iter()
            .map(|&i| self.feature_names[i].as_str())
            .collect()
    }
}

pub fn global_importance<M: BlackBoxModel + ?Sized>(
    model: &M,
    rows: &[Vec<f64>],
    background: &Background,
    config: &ShapConfig,
    feature_names: &[String],
) -> Result<GlobalImportance> {
    if rows.is_empty() {
        return Err(Error::Empty("no rows to explain".into()));
    }
    let m = rows[0].len();
    if feature_names.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: feature_names.len(),
        });
    }
    let explanations = rows
        .par_iter()
        .map(|row| kernel_shap(model, row, background, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&explanations, feature_names))
}

pub fn aggregate(explanations: &[ShapExplanation], feature_names: &[String]) -> GlobalImportance {
    let m = feature_names.len();
    let n = explanations.len() as f64;
    let mut importance = vec![0.0; m];
    let mut mean_phi = vec![0.0; m];
    let mut max_abs_residual: f64 = 0.0;
    for e in explanations {
        for j in 0..m {
            importance[j] += e.phi[j].abs();
            mean_phi[j] += e.phi[j];
        }
        max_abs_residual = max_abs_residual.max(e.additivity_residual.abs());
    }
    importance.iter_mut().for_each(|v| *v /= n);
    mean_phi.iter_mut().for_each(|v| *v /= n);
    GlobalImportance {
        feature_names: feature_names.to_vec(),
        ranking: rank_descending(&importance),
        importance,
        mean_phi,
        rows: explanations.len(),
        max_abs_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;

    fn linear(w: Vec<f64>) -> impl BlackBoxModel {
        FnModel::new(w.len(), move |x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    #[test]
    fn coalition_value_endpoints() {
        let model = linear(vec![1.0, 2.0, 3.0]);
        let bg = Background::from_rows(vec![vec![0.0, 0.0, 0.0], vec![2.0, 2.0, 2.0]]).unwrap();
        let x = [1.0, 1.0, 1.0];
        assert_eq!(coalition_value(&model, &x, 0b111, &bg), 6.0);
        assert_eq!(coalition_value(&model, &x, 0, &bg), 6.0);
        // S = {0}: 1·1 + mean(2·r1 + 3·r2) = 1 + 5
        assert_eq!(coalition_value(&model, &x, 0b001, &bg), 6.0);
        let r = Background::single(vec![10.0, 20.0, 30.0]).unwrap();
        // S = {1}: 1·10 + 2·1 + 3·30
        assert_eq!(coalition_value(&model, &x, 0b010, &r), 102.0);
    }

    #[test]
    fn exact_linear_closed_form() {
        let w = vec![0.5, -1.5, 2.0, 0.0];
        let model = linear(w.clone());
        let r = vec![1.0, 2.0, 3.0, 4.0];
        let x = [3.0, -1.0, 0.5, 9.0];
        let e = exact_shapley(&model, &x, &Background::single(r.clone()).unwrap()).unwrap();
        for i in 0..4 {
            assert!((e.phi[i] - w[i] * (x[i] - r[i])).abs() < 1e-12);
        }
        assert!(e.additivity_residual.abs() < 1e-12);
    }

    #[test]
    fn constant_model_gets_nothing() {
        let model = FnModel::new(5, |_| 0.3);
        let bg = Background::from_rows(vec![vec![1.0; 5], vec![2.0; 5]]).unwrap();
        let x = [9.0; 5];
        let e = exact_shapley(&model, &x, &bg).unwrap();
        assert!(e.phi.iter().all(|p| *p == 0.0));
        assert!((e.base_value - 0.3).abs() < 1e-15);
        let k = kernel_shap(&model, &x, &bg, &ShapConfig { budget: CoalitionBudget::Samples(12), seed: 1 }).unwrap();
        assert!(k.phi.iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn exact_rejects_wide_inputs() {
        let model = FnModel::new(21, |_| 0.0);
        let bg = Background::single(vec![0.0; 21]).unwrap();
        assert!(matches!(
            exact_shapley(&model, &[0.0; 21], &bg),
            Err(Error::TooManyFeatures { .. })
        ));
    }

    #[test]
    fn budget_minimum_enforced() {
        let model = FnModel::new(12, |_| 0.0);
        let bg = Background::single(vec![0.0; 12]).unwrap();
        let cfg = ShapConfig { budget: CoalitionBudget::Samples(25), seed: 0 };
        assert!(matches!(
            kernel_shap(&model, &[0.0; 12], &bg, &cfg),
            Err(Error::SampleBudget { budget: 25, minimum: 26 })
        ));
    }

    #[test]
    fn exhaustive_design_covers_every_interior_coalition() {
        let d = coalition_design(6, CoalitionBudget::Exhaustive, 0);
        assert_eq!(d.len(), 62);
        for (mask, w) in &d {
            assert_eq!(*w, kernel_weight(6, mask.count_ones() as usize));
        }
        // A large enough sample budget is promoted to exhaustive.
        assert_eq!(coalition_design(6, CoalitionBudget::Samples(1000), 3), d);
    }

    #[test]
    fn sampled_design_respects_budget_and_seed() {
        let a = coalition_design(12, CoalitionBudget::Samples(2048), 7);
        let b = coalition_design(12, CoalitionBudget::Samples(2048), 7);
        assert_eq!(a, b);
        assert!(a.len() <= 2048 + 1);
        assert!(a.len() > 1900);
        assert!(a.keys().all(|&k| k != 0 && k != (1 << 12) - 1));
    }

    #[test]
    fn kernel_exhaustive_matches_exact_on_nonlinear_model() {
        let model = FnModel::new(5, |x: &[f64]| {
            let t = 0.3 * x[0] - 0.2 * x[1] * x[2] + 0.1 * x[3].powi(2) - 0.4 * x[4] * x[0];
            1.0 / (1.0 + (-t).exp())
        });
        let bg = Background::from_rows(vec![
            vec![0.0, 1.0, -1.0, 2.0, 0.5],
            vec![1.0, -2.0, 0.0, 1.0, -1.0],
            vec![2.0, 0.5, 1.5, -1.0, 0.0],
        ])
        .unwrap();
        let x = [1.5, -0.5, 2.0, 0.3, 1.0];
        let exact = exact_shapley(&model, &x, &bg).unwrap();
        let kernel = kernel_shap(&model, &x, &bg, &ShapConfig { budget: CoalitionBudget::Exhaustive, seed: 0 }).unwrap();
        for (a, b) in exact.phi.iter().zip(&kernel.phi) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(kernel.additivity_residual.abs() < 1e-12);
    }

    #[test]
    fn global_ranking_ties_follow_feature_order() {
        let model = FnModel::new(3, |_| 0.7);
        let bg = Background::single(vec![0.0; 3]).unwrap();
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let g = global_importance(&model, &[vec![1.0; 3], vec![2.0; 3]], &bg, &ShapConfig::default(), &names).unwrap();
        assert_eq!(g.importance, vec![0.0; 3]);
        assert_eq!(g.ranking, vec![0, 1, 2]);
    }
}
