use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    train_forest, Dataset, ForestHyperparams, ForestModel, LearnError, LogisticModel,
    LogisticParams, NaiveBayesModel, Tree, TreeParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "RF")]
    Forest,
    #[serde(rename = "LR")]
    Logistic,
    #[serde(rename = "DT")]
    Tree,
    #[serde(rename = "NB")]
    NaiveBayes,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Forest,
        ModelKind::Logistic,
        ModelKind::Tree,
        ModelKind::NaiveBayes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "RF",
            ModelKind::Logistic => "LR",
            ModelKind::Tree => "DT",
            ModelKind::NaiveBayes => "NB",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model '{s}'"))
    }
}

/// Hyperparameters for every model kind; the seed comes separately.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelSpec {
    pub forest: ForestHyperparams,
    pub logistic: LogisticParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Model {
    #[serde(rename = "RF")]
    Forest(ForestModel),
    #[serde(rename = "LR")]
    Logistic {
        feature_names: Vec<String>,
        model: LogisticModel,
    },
    #[serde(rename = "DT")]
    Tree {
        feature_names: Vec<String>,
        tree: Tree,
    },
    #[serde(rename = "NB")]
    NaiveBayes {
        feature_names: Vec<String>,
        model: NaiveBayesModel,
    },
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Forest(_) => ModelKind::Forest,
            Model::Logistic { .. } => ModelKind::Logistic,
            Model::Tree { .. } => ModelKind::Tree,
            Model::NaiveBayes { .. } => ModelKind::NaiveBayes,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Forest(m) => &m.feature_names,
            Model::Logistic { feature_names, .. }
            | Model::Tree { feature_names, .. }
            | Model::NaiveBayes { feature_names, .. } => feature_names,
        }
    }

    /// Probability of Good.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        let expected = self.feature_names().len();
        if x.len() != expected {
            return Err(LearnError::SchemaMismatch {
                expected,
                got: x.len(),
            });
        }
        let p = match self {
            Model::Forest(m) => m.predict(x),
            Model::Logistic { model, .. } => model.predict(x),
            Model::Tree { tree, .. } => tree.predict(x),
            Model::NaiveBayes { model, .. } => model.predict(x),
        };
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Fit one model. The single decision tree uses every feature at each
/// split, leaves of one row and no depth limit.
pub fn train_model(
    kind: ModelKind,
    spec: &ModelSpec,
    data: &Dataset,
    seed: u64,
) -> Result<Model, LearnError> {
    data.require_both_classes()?;
    let feature_names = data.feature_names.clone();
    Ok(match kind {
        ModelKind::Forest => Model::Forest(train_forest(
            data,
            &ForestHyperparams {
                seed,
                ..spec.forest
            },
        )?),
        ModelKind::Logistic => Model::Logistic {
            feature_names,
            model: LogisticModel::fit(data, &spec.logistic)?,
        },
        ModelKind::Tree => {
            let idx: Vec<usize> = (0..data.len()).collect();
            let params = TreeParams {
                max_depth: None,
                min_leaf: 1,
                max_features: None,
            };
            let (tree, _) = Tree::fit(data, &idx, params, &mut crate::seed::rng(seed));
            Model::Tree {
                feature_names,
                tree,
            }
        }
        ModelKind::NaiveBayes => Model::NaiveBayes {
            feature_names,
            model: NaiveBayesModel::fit(data)?,
        },
    })
}
