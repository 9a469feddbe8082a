//! Shapley values checked against the permutation definition: the average
//! marginal contribution of a feature over every ordering of the features.

use floodxai::models::FnModel;
use floodxai::shap::{exact_shapley, kernel_shap, Background, CoalitionBudget, ShapConfig};
use floodxai::BlackBoxModel;
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Interventional value of a coalition, averaged over background rows.
fn value<M: BlackBoxModel>(model: &M, x: &[f64], present: &[bool], background: &[Vec<f64>]) -> f64 {
    background
        .iter()
        .map(|r| {
            let z: Vec<f64> = (0..x.len()).map(|j| if present[j] { x[j] } else { r[j] }).collect();
            model.predict_proba(&z)
        })
        .sum::<f64>()
        / background.len() as f64
}

fn permutation_shapley<M: BlackBoxModel>(model: &M, x: &[f64], background: &[Vec<f64>]) -> Vec<f64> {
    let m = x.len();
    let perms = permutations(m);
    let mut phi = vec![0.0; m];
    for order in &perms {
        let mut present = vec![false; m];
        let mut before = value(model, x, &present, background);
        for &j in order {
            present[j] = true;
            let after = value(model, x, &present, background);
            phi[j] += after - before;
            before = after;
        }
    }
    phi.iter().map(|p| p / perms.len() as f64).collect()
}

fn nonlinear(x: &[f64]) -> f64 {
    let m = x.len();
    let mut t = 0.3 * x[0] - x[m - 1] * x[0].abs();
    if m > 2 {
        t += (x[1] * x[2]).sin() + if x[2] > 0.5 { 0.7 } else { 0.0 };
    }
    if m > 3 {
        t += x[3].powi(2) * 0.2 - x[1].max(x[3]);
    }
    1.0 / (1.0 + (-t).exp())
}

fn row(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, m)
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (2usize..=5).prop_flat_map(|m| (row(m), prop::collection::vec(row(m), 1..4)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_matches_permutation_oracle((x, bg) in case()) {
        let model = FnModel::new(x.len(), nonlinear);
        let oracle = permutation_shapley(&model, &x, &bg);
        let got = exact_shapley(&model, &x, &Background::from_rows(bg).unwrap()).unwrap();
        for (a, b) in got.phi.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", got.phi, oracle);
        }
    }

    #[test]
    fn exhaustive_kernel_matches_permutation_oracle((x, bg) in case()) {
        let model = FnModel::new(x.len(), nonlinear);
        let oracle = permutation_shapley(&model, &x, &bg);
        let cfg = ShapConfig { budget: CoalitionBudget::Exhaustive, seed: 0 };
        let got = kernel_shap(&model, &x, &Background::from_rows(bg).unwrap(), &cfg).unwrap();
        for (a, b) in got.phi.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", got.phi, oracle);
        }
    }

    #[test]
    fn sampled_kernel_is_efficient(x in row(9), bg in prop::collection::vec(row(9), 1..3), seed in any::<u64>()) {
        let model = FnModel::new(9, nonlinear);
        let cfg = ShapConfig { budget: CoalitionBudget::Samples(40), seed };
        let e = kernel_shap(&model, &x, &Background::from_rows(bg).unwrap(), &cfg).unwrap();
        prop_assert!(e.additivity_residual.abs() < 1e-9);
        let total = e.base_value + e.phi.iter().sum::<f64>();
        prop_assert!((total - model.predict_proba(&x)).abs() < 1e-9);
    }
}
