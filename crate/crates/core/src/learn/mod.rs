//! Classifiers, resampling, cross-validation and metrics.
//!
//! Good is the positive class everywhere in this module: probabilities are
//! probabilities of Good, and ratios are written good:bad.

mod baseline;
mod cv;
mod data;
mod forest;
mod metrics;
mod model;
mod tree;

use thiserror::Error;

pub use baseline::{LogisticModel, LogisticParams, NaiveBayesModel};
pub use cv::{kfold_cv, stratified_folds, CvResult};
pub use data::{downsample, Dataset, Ratio, SWEEP_RATIOS};
pub use forest::{train_forest, ForestHyperparams, ForestModel};
pub use metrics::{auc, evaluate, EvalMetrics, Prediction};
pub use model::{train_model, Model, ModelKind, ModelSpec};
pub use tree::{Tree, TreeNode, TreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("dataset needs rows of both classes")]
    DegenerateData,
    #[error("ratio {ratio} cannot be reached from {good} good and {bad} bad rows")]
    RatioUnachievable { ratio: Ratio, good: usize, bad: usize },
    #[error("{k}-fold cross-validation needs at least {k} rows of each class, got {good} good and {bad} bad")]
    TooFewSamples { k: usize, good: usize, bad: usize },
    #[error("model expects {expected} features, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("no tree found a useful split, so feature importances are undefined")]
    NoInformativeSplit,
    #[error("nothing to evaluate")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}
