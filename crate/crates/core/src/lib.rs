//! Flood prediction from monthly rainfall, with model-agnostic explanations.
//!
//! The crate is organised as a pipeline:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`dataset`] | CSV ingestion, imputation, seeded splits, standardisation |
//! | [`models`] | logistic regression, KNN, entropy decision tree, linear SVM |
//! | [`metrics`] | confusion matrix and accuracy / precision / recall / F1 |
//! | [`shap`] | exact Shapley enumeration, Kernel SHAP, global importance |
//! | [`lime`] | quantile discretisation, perturbation, sparse local surrogates |
//! | [`render`] | plain-text and SVG bar charts for reports |
//!
//! Every trained model implements [`models::BlackBoxModel`], which is the only
//! thing the explainers need.

pub mod dataset;
pub mod error;
pub mod lime;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod render;
pub mod shap;
pub mod synthetic;

pub use dataset::{Dataset, RainfallRecord, Scaler, SplitDataset, MONTHS, MONTH_NAMES};
pub use error::{Error, Result};
pub use models::{BlackBoxModel, ModelKind, TrainedModel};
