//! Classifiers behind a shared probability-prediction contract.
//!
//! Explainers only see [`BlackBoxModel`]: a map from a raw feature vector
//! (millimetres) to the probability of the flood class. Models that need
//! standardised inputs (KNN and SVM) carry their [`Scaler`] and apply it
//! inside [`TrainedModel::predict_proba`].

mod knn;
mod logistic;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use knn::{train_knn, KnnConfig, KnnModel};
pub use logistic::{
    logistic_loss_and_gradient, train_logistic, train_logistic_with_history, LogisticConfig,
    LogisticModel,
};
pub use svm::{svm_objective, train_svm, train_svm_with_history, SvmConfig, SvmModel};
pub use tree::{entropy, train_tree, DecisionTree, TreeConfig, TreeNode};

use crate::dataset::{check_width, Dataset, ImputeStrategy, Scaler};
use crate::error::{Error, Result};

/// A trained binary classifier seen as a black box.
pub trait BlackBoxModel: Send + Sync {
    fn n_features(&self) -> usize;

    /// Probability of the flood class, in `[0, 1]`.
    fn predict_proba(&self, x: &[f64]) -> f64;

    /// Class label; a probability of exactly 0.5 maps to flood.
    fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.predict_proba(x) >= 0.5)
    }
}

impl<M: BlackBoxModel + ?Sized> BlackBoxModel for &M {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn predict_proba(&self, x: &[f64]) -> f64 {
        (**self).predict_proba(x)
    }
}

/// Wraps a plain function as a black box.
pub struct FnModel<F> {
    n_features: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(n_features: usize, f: F) -> Self {
        Self { n_features, f }
    }
}

impl<F> BlackBoxModel for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_proba(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_width(b, a.len())?;
    Ok(squared_distance(a, b).sqrt())
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|&&l| l > 1) {
        Some(&l) => Err(Error::InvalidLabel(l)),
        None => Ok(()),
    }
}

pub(crate) fn require_both_classes(labels: &[u8]) -> Result<()> {
    check_labels(labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if labels.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if positives == 0 {
        return Err(Error::SingleClass(0));
    }
    if positives == labels.len() {
        return Err(Error::SingleClass(1));
    }
    Ok(())
}

pub(crate) fn check_matrix(features: &[Vec<f64>], labels: &[u8]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let width = features[0].len();
    for row in features {
        check_width(row, width)?;
    }
    Ok(width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Knn,
    Tree,
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logistic,
        ModelKind::Knn,
        ModelKind::Tree,
        ModelKind::Svm,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::Knn => "KNN",
            ModelKind::Tree => "Decision Tree",
            ModelKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Knn => "knn",
            ModelKind::Tree => "tree",
            ModelKind::Svm => "svm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "lr" => Ok(ModelKind::Logistic),
            "knn" => Ok(ModelKind::Knn),
            "tree" | "decision-tree" => Ok(ModelKind::Tree),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!(
                "unknown model kind {other:?} (expected logistic, knn, tree or svm)"
            )),
        }
    }
}

/// Hyperparameters for all four model kinds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub logistic: LogisticConfig,
    pub knn: KnnConfig,
    pub tree: TreeConfig,
    pub svm: SvmConfig,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        self.logistic.validate()?;
        self.knn.validate()?;
        self.tree.validate()?;
        self.svm.validate()
    }

    pub fn for_kind(&self, kind: ModelKind) -> ModelConfig {
        match kind {
            ModelKind::Logistic => ModelConfig::Logistic(self.logistic),
            ModelKind::Knn => ModelConfig::Knn(self.knn),
            ModelKind::Tree => ModelConfig::Tree(self.tree),
            ModelKind::Svm => ModelConfig::Svm(self.svm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Logistic(LogisticConfig),
    Knn(KnnConfig),
    Tree(TreeConfig),
    Svm(SvmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Knn { scaler: Scaler, model: KnnModel },
    Tree(DecisionTree),
    Svm { scaler: Scaler, model: SvmModel },
}

impl TrainedModel {
    /// Train one model kind on a complete dataset. KNN and SVM fit a scaler
    /// on `train` and consume standardised features; logistic regression and
    /// the tree are expressed in raw millimetres.
    pub fn fit(kind: ModelKind, train: &Dataset, hp: &Hyperparameters) -> Result<Self> {
        let x = train.features()?;
        let y = train.labels();
        Self::fit_matrix(kind, &x, &y, hp)
    }

    pub fn fit_matrix(
        kind: ModelKind,
        x: &[Vec<f64>],
        y: &[u8],
        hp: &Hyperparameters,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Logistic => TrainedModel::Logistic(train_logistic(x, y, &hp.logistic)?),
            ModelKind::Knn => {
                let scaler = Scaler::fit(x)?;
                let model = train_knn(&scaler.transform_rows(x), y, &hp.knn)?;
                TrainedModel::Knn { scaler, model }
            }
            ModelKind::Tree => TrainedModel::Tree(train_tree(x, y, &hp.tree)?),
            ModelKind::Svm => {
                let scaler = Scaler::fit(x)?;
                let model = train_svm(&scaler.transform_rows(x), y, &hp.svm)?;
                TrainedModel::Svm { scaler, model }
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Logistic(_) => ModelKind::Logistic,
            TrainedModel::Knn { .. } => ModelKind::Knn,
            TrainedModel::Tree(_) => ModelKind::Tree,
            TrainedModel::Svm { .. } => ModelKind::Svm,
        }
    }
}

impl BlackBoxModel for TrainedModel {
    fn n_features(&self) -> usize {
        match self {
            TrainedModel::Logistic(m) => m.weights.len(),
            TrainedModel::Knn { scaler, .. } | TrainedModel::Svm { scaler, .. } => scaler.width(),
            TrainedModel::Tree(t) => t.n_features,
        }
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Logistic(m) => m.predict_proba(x),
            TrainedModel::Knn { scaler, model } => model.predict_proba(&scaler.transform(x)),
            TrainedModel::Tree(t) => t.predict_proba(x),
            TrainedModel::Svm { scaler, model } => model.predict_proba(&scaler.transform(x)),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub train_fraction: f64,
    pub impute: ImputeStrategy,
    pub label_column: String,
    pub dataset_fingerprint: String,
    pub n_train: usize,
    pub feature_names: Vec<String>,
}

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub kind: ModelKind,
    pub hyperparameters: ModelConfig,
    pub metadata: TrainingMetadata,
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(model: TrainedModel, hp: &Hyperparameters, metadata: TrainingMetadata) -> Self {
        let kind = model.kind();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            hyperparameters: hp.for_kind(kind),
            metadata,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::Version(version));
        }
        Ok(serde_json::from_value(value)?)
    }
}
