//! Local surrogate explanations.
//!
//! Each feature is cut into quantile bins on the training data. Around one
//! instance, samples are generated by independently keeping each feature in
//! the instance's bin (interpretable bit 1) or moving it into another bin
//! (bit 0). The black box is probed on every sample, samples are weighted by
//! proximity `exp(−d²/σ²)` in standardised space, and a sparse ridge model
//! over the bits is fit:
//!
//! ```text
//! E(x) = argmin_g  Σ π(z) (f(z) − g(z'))²  +  Ω(g)
//! ```
//!
//! Ω is a hard cap on the number of bits, chosen by forward selection.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_width, Scaler};
use crate::error::{Error, Result};
use crate::linalg::{weighted_least_squares, weighted_r2, LinearFit};
use crate::models::{squared_distance, BlackBoxModel};
use crate::shap::{GlobalImportance, ShapExplanation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinSampling {
    /// Uniform over the range of training values seen in the bin.
    Uniform,
    /// Normal with the bin's training mean and deviation, kept inside the bin.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_perturbations: usize,
    /// σ of the proximity kernel, in standardised units.
    pub kernel_width: f64,
    pub n_selected_features: usize,
    pub n_bins: usize,
    pub ridge: f64,
    pub sampling: BinSampling,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self::for_features(12)
    }
}

impl LimeConfig {
    pub fn for_features(m: usize) -> Self {
        Self {
            n_perturbations: 2000,
            kernel_width: 0.75 * (m as f64).sqrt(),
            n_selected_features: 6.min(m.max(1)),
            n_bins: 4,
            ridge: 1e-3,
            sampling: BinSampling::Uniform,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::Hyperparameter { name, reason });
        if self.n_selected_features == 0 {
            return bad("top-features", "must be at least 1".into());
        }
        if self.n_perturbations < 10 * self.n_selected_features {
            return bad(
                "perturbations",
                format!(
                    "{} perturbations is below 10 x {} selected features",
                    self.n_perturbations, self.n_selected_features
                ),
            );
        }
        if !(self.kernel_width > 0.0) {
            return bad("kernel-width", format!("must be positive, got {}", self.kernel_width));
        }
        if self.n_bins < 2 {
            return bad("bins", format!("need at least 2 bins, got {}", self.n_bins));
        }
        if !(self.ridge >= 0.0) {
            return bad("ridge", format!("must be non-negative, got {}", self.ridge));
        }
        Ok(())
    }
}

/// Training statistics of one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    /// Strictly increasing cut points. Bin `b` is `(t[b−1], t[b]]`.
    pub thresholds: Vec<f64>,
    pub bins: Vec<BinStats>,
    /// Set when the training column is constant.
    pub degenerate: bool,
}

impl FeatureBins {
    pub fn bin_of(&self, value: f64) -> usize {
        self.thresholds.iter().filter(|&&t| t < value).count()
    }

    pub fn n_bins(&self) -> usize {
        self.thresholds.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub feature_names: Vec<String>,
    pub features: Vec<FeatureBins>,
}

/// Quantile of sorted data with linear interpolation between order
/// statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn fit_discretizer(train: &[Vec<f64>], feature_names: &[String], n_bins: usize) -> Result<Discretizer> {
    let first = train
        .first()
        .ok_or_else(|| Error::Empty("discretizer training rows".into()))?;
    let m = first.len();
    if feature_names.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: feature_names.len(),
        });
    }
    if n_bins < 2 {
        return Err(Error::Hyperparameter {
            name: "bins",
            reason: format!("need at least 2 bins, got {n_bins}"),
        });
    }
    for row in train {
        check_width(row, m)?;
    }
    let features = (0..m)
        .map(|j| {
            let mut column: Vec<f64> = train.iter().map(|r| r[j]).collect();
            column.sort_by(f64::total_cmp);
            let (min, max) = (column[0], column[column.len() - 1]);
            let mut thresholds: Vec<f64> = Vec::new();
            if min < max {
                for k in 1..n_bins {
                    let t = quantile(&column, k as f64 / n_bins as f64);
                    if t < max && thresholds.last().is_none_or(|&p| t > p) {
                        thresholds.push(t);
                    }
                }
            } else {
                log::warn!("feature {} is constant; single degenerate bin", feature_names[j]);
            }
            let bins = bin_stats(&column, &thresholds);
            FeatureBins {
                degenerate: thresholds.is_empty(),
                thresholds,
                bins,
            }
        })
        .collect();
    Ok(Discretizer {
        feature_names: feature_names.to_vec(),
        features,
    })
}

fn bin_stats(sorted: &[f64], thresholds: &[f64]) -> Vec<BinStats> {
    let n_bins = thresholds.len() + 1;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for &v in sorted {
        members[thresholds.iter().filter(|&&t| t < v).count()].push(v);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(b, vals)| {
            if vals.is_empty() {
                let lo = if b == 0 { sorted[0] } else { thresholds[b - 1] };
                let hi = thresholds.get(b).copied().unwrap_or(sorted[sorted.len() - 1]);
                return BinStats {
                    lo,
                    hi,
                    mean: (lo + hi) / 2.0,
                    std: 0.0,
                    count: 0,
                };
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            BinStats {
                lo: vals[0],
                hi: vals[vals.len() - 1],
                mean,
                std,
                count: vals.len(),
            }
        })
        .collect()
}

impl Discretizer {
    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn bins_of(&self, x: &[f64]) -> Vec<usize> {
        self.features.iter().zip(x).map(|(f, &v)| f.bin_of(v)).collect()
    }

    /// Human-readable condition for `feature` lying in `bin`, e.g.
    /// `AUG > 510.02` or `100.00 < MAY <= 250.00`.
    pub fn describe(&self, feature: usize, bin: usize) -> (String, Option<f64>, Option<f64>) {
        let name = &self.feature_names[feature];
        let t = &self.features[feature].thresholds;
        if t.is_empty() {
            return (format!("{name} (constant)"), None, None);
        }
        let lower = bin.checked_sub(1).map(|b| t[b]);
        let upper = t.get(bin).copied();
        let label = match (lower, upper) {
            (None, Some(u)) => format!("{name} <= {u:.2}"),
            (Some(l), None) => format!("{name} > {l:.2}"),
            (Some(l), Some(u)) => format!("{l:.2} < {name} <= {u:.2}"),
            (None, None) => unreachable!(),
        };
        (label, lower, upper)
    }

    fn draw<R: Rng>(&self, feature: usize, bin: usize, sampling: BinSampling, rng: &mut R) -> f64 {
        let stats = &self.features[feature].bins[bin];
        let uniform = |rng: &mut R| {
            if stats.hi > stats.lo {
                rng.gen_range(stats.lo..=stats.hi)
            } else {
                stats.lo
            }
        };
        match sampling {
            BinSampling::Uniform => uniform(rng),
            BinSampling::Normal => match Normal::new(stats.mean, stats.std) {
                Ok(normal) if stats.std > 0.0 => {
                    for _ in 0..32 {
                        let v = normal.sample(rng);
                        if v >= stats.lo && v <= stats.hi {
                            return v;
                        }
                    }
                    uniform(rng)
                }
                _ => uniform(rng),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSample {
    pub values: Vec<f64>,
    /// 1 where the feature stayed in the instance's bin.
    pub bits: Vec<u8>,
}

/// Sample 0 is the instance itself. For every other sample each feature
/// draws a bin uniformly; drawing the instance's own bin keeps the
/// instance's value, any other bin resamples a value inside that bin.
pub fn perturb(instance: &[f64], discretizer: &Discretizer, config: &LimeConfig) -> Result<Vec<PerturbedSample>> {
    check_width(instance, discretizer.width())?;
    let own = discretizer.bins_of(instance);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.n_perturbations);
    samples.push(PerturbedSample {
        values: instance.to_vec(),
        bits: vec![1; instance.len()],
    });
    for _ in 1..config.n_perturbations {
        let mut values = instance.to_vec();
        let mut bits = vec![1u8; instance.len()];
        for (j, feature) in discretizer.features.iter().enumerate() {
            let n_bins = feature.n_bins();
            if n_bins == 1 {
                continue;
            }
            let bin = rng.gen_range(0..n_bins);
            if bin != own[j] {
                values[j] = discretizer.draw(j, bin, config.sampling, &mut rng);
                bits[j] = 0;
            }
        }
        samples.push(PerturbedSample { values, bits });
    }
    Ok(samples)
}

/// Proximity weight of a sample at standardised distance `d`.
pub fn proximity(distance: f64, kernel_width: f64) -> f64 {
    (-(distance * distance) / (kernel_width * kernel_width)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    /// Selected interpretable features, in selection order.
    pub selected: Vec<usize>,
    /// One coefficient per feature; zero for unselected features.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted R² of the final fit.
    pub r2: f64,
}

fn ridge_on(
    columns: &[usize],
    bits: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    ridge: f64,
) -> Result<(LinearFit, Vec<Vec<f64>>)> {
    let design: Vec<Vec<f64>> = bits
        .iter()
        .map(|row| columns.iter().map(|&c| row[c]).collect())
        .collect();
    let fit = weighted_least_squares(&design, targets, weights, ridge, true)?;
    Ok((fit, design))
}

/// Forward selection of `n_select` bits by weighted R², then a ridge fit on
/// the selected bits.
pub fn fit_surrogate(
    bits: &[Vec<u8>],
    targets: &[f64],
    weights: &[f64],
    n_select: usize,
    ridge: f64,
) -> Result<SurrogateFit> {
    let distinct: HashSet<&Vec<u8>> = bits.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} distinct interpretable vectors among {} samples; need at least 2",
            distinct.len(),
            bits.len()
        )));
    }
    let m = bits[0].len();
    let as_f64: Vec<Vec<f64>> = bits
        .iter()
        .map(|r| r.iter().map(|&b| f64::from(b)).collect())
        .collect();

    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < n_select.min(m) {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..m).filter(|j| !selected.contains(j)) {
            let mut cols = selected.clone();
            cols.push(j);
            let (fit, design) = ridge_on(&cols, &as_f64, targets, weights, ridge)?;
            let score = weighted_r2(&fit, &design, targets, weights);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        match best {
            Some((j, _)) => selected.push(j),
            None => break,
        }
    }

    let (fit, design) = ridge_on(&selected, &as_f64, targets, weights, ridge)?;
    let r2 = weighted_r2(&fit, &design, targets, weights);
    let mut coefficients = vec![0.0; m];
    for (&j, &c) in selected.iter().zip(&fit.coefficients) {
        coefficients[j] = c;
    }
    Ok(SurrogateFit {
        selected,
        coefficients,
        intercept: fit.intercept,
        r2,
    })
}

/// Probe the model on every sample, weight by proximity to sample 0 in
/// standardised space, and fit the sparse surrogate.
pub fn fit_local_surrogate<M: BlackBoxModel + ?Sized>(
    model: &M,
    samples: &[PerturbedSample],
    scaler: &Scaler,
    config: &LimeConfig,
) -> Result<SurrogateFit> {
    let anchor = samples
        .first()
        .ok_or_else(|| Error::Degenerate("no samples".into()))?;
    let anchor_scaled = scaler.transform(&anchor.values);
    let targets: Vec<f64> = samples
        .par_iter()
        .map(|s| model.predict_proba(&s.values))
        .collect();
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| {
            let d = squared_distance(&scaler.transform(&s.values), &anchor_scaled).sqrt();
            proximity(d, config.kernel_width)
        })
        .collect();
    let bits: Vec<Vec<u8>> = samples.iter().map(|s| s.bits.clone()).collect();
    fit_surrogate(&bits, &targets, &weights, config.n_selected_features, config.ridge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature_index: usize,
    pub feature: String,
    /// E.g. `AUG > 510.02`.
    pub condition: String,
    pub value: f64,
    pub bin: usize,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Positive supports flood, negative opposes it.
    pub weight: f64,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (value {:.1}): {:+.4}", self.condition, self.value, self.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    pub instance: Vec<f64>,
    pub predicted_class: u8,
    pub probability: f64,
    pub intercept: f64,
    /// Ordered by descending |weight|, ties in feature order.
    pub conditions: Vec<Condition>,
    pub local_fidelity: f64,
    pub n_samples: usize,
}

impl LimeExplanation {
    pub fn condition_for(&self, feature: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.feature == feature)
    }

    pub fn supporting(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| c.weight > 0.0)
    }

    pub fn opposing(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| c.weight < 0.0)
    }
}

/// Discretizer and scaler fitted on training rows, ready to explain
/// individual instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplainer {
    pub discretizer: Discretizer,
    pub scaler: Scaler,
    pub config: LimeConfig,
}

impl LimeExplainer {
    pub fn new(train: &[Vec<f64>], feature_names: &[String], config: LimeConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            discretizer: fit_discretizer(train, feature_names, config.n_bins)?,
            scaler: Scaler::fit(train)?,
            config,
        })
    }

    pub fn explain<M: BlackBoxModel + ?Sized>(&self, model: &M, instance: &[f64]) -> Result<LimeExplanation> {
        check_width(instance, model.n_features())?;
        let samples = perturb(instance, &self.discretizer, &self.config)?;
        let fit = fit_local_surrogate(model, &samples, &self.scaler, &self.config)?;
        let own = self.discretizer.bins_of(instance);
        let mut conditions: Vec<Condition> = fit
            .selected
            .iter()
            .map(|&j| {
                let (condition, lower, upper) = self.discretizer.describe(j, own[j]);
                Condition {
                    feature_index: j,
                    feature: self.discretizer.feature_names[j].clone(),
                    condition,
                    value: instance[j],
                    bin: own[j],
                    lower,
                    upper,
                    weight: fit.coefficients[j],
                }
            })
            .collect();
        conditions.sort_by(|a, b| {
            b.weight
                .abs()
                .total_cmp(&a.weight.abs())
                .then(a.feature_index.cmp(&b.feature_index))
        });
        let probability = model.predict_proba(instance);
        Ok(LimeExplanation {
            instance: instance.to_vec(),
            predicted_class: u8::from(probability >= 0.5),
            probability,
            intercept: fit.intercept,
            conditions,
            local_fidelity: fit.r2,
            n_samples: samples.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAgreement {
    pub feature: String,
    pub lime_weight: f64,
    pub in_shap_top: bool,
    pub shap_phi: Option<f64>,
    pub sign_agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub top_k: usize,
    pub shap_top: Vec<String>,
    pub lime_features: Vec<String>,
    pub shared: Vec<String>,
    /// `|shared| / min(k, |lime features|)`; 0 when either side is empty.
    pub overlap: f64,
    /// Fraction of LIME features whose weight sign matches the local φ sign.
    pub sign_agreement: Option<f64>,
    pub features: Vec<FeatureAgreement>,
}

pub fn compare_explanations(
    shap_global: &GlobalImportance,
    lime_local: &LimeExplanation,
    local_shap: Option<&ShapExplanation>,
    top_k: usize,
) -> AgreementReport {
    let shap_top: Vec<String> = shap_global.top(top_k).into_iter().map(String::from).collect();
    let lime_features: Vec<String> = lime_local.conditions.iter().map(|c| c.feature.clone()).collect();
    let shared: Vec<String> = shap_top
        .iter()
        .filter(|f| lime_features.contains(f))
        .cloned()
        .collect();
    let denom = shap_top.len().min(lime_features.len());
    let overlap = if denom == 0 {
        0.0
    } else {
        shared.len() as f64 / denom as f64
    };
    let features: Vec<FeatureAgreement> = lime_local
        .conditions
        .iter()
        .map(|c| {
            let shap_phi = local_shap.and_then(|e| e.phi.get(c.feature_index).copied());
            let sign_agrees = shap_phi
                .filter(|p| *p != 0.0 && c.weight != 0.0)
                .map(|p| (p > 0.0) == (c.weight > 0.0));
            FeatureAgreement {
                feature: c.feature.clone(),
                lime_weight: c.weight,
                in_shap_top: shap_top.contains(&c.feature),
                shap_phi,
                sign_agrees,
            }
        })
        .collect();
    let judged: Vec<bool> = features.iter().filter_map(|f| f.sign_agrees).collect();
    let sign_agreement =
        (!judged.is_empty()).then(|| judged.iter().filter(|&&a| a).count() as f64 / judged.len() as f64);
    AgreementReport {
        top_k,
        shap_top,
        lime_features,
        shared,
        overlap,
        sign_agreement,
        features,
    }
}
