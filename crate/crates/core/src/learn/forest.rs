use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError, Tree, TreeParams};
use crate::seed::{derive_indexed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features per split; `ceil(sqrt(d))` when `None`.
    pub max_features: Option<usize>,
    /// Bootstrap size; the row count when `None`.
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: None,
            min_leaf: 5,
            max_features: None,
            bootstrap: None,
            seed: 0,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.n_trees == 0 || self.min_leaf == 0 {
            return Err(LearnError::Invalid(
                "forest needs at least one tree and min leaf >= 1".into(),
            ));
        }
        if self.max_features == Some(0) || self.bootstrap == Some(0) {
            return Err(LearnError::Invalid(
                "features per split and bootstrap size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub feature_names: Vec<String>,
    pub hyperparams: ForestHyperparams,
    pub trees: Vec<Tree>,
    /// Normalized Gini importances, one per feature.
    pub importances: Vec<f64>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        (s / self.trees.len() as f64).clamp(0.0, 1.0)
    }

    pub fn importance(&self, name: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.importances[i])
    }
}

pub fn train_forest(data: &Dataset, hp: &ForestHyperparams) -> Result<ForestModel, LearnError> {
    hp.validate()?;
    data.require_both_classes()?;
    let d = data.n_features();
    let params = TreeParams {
        max_depth: hp.max_depth,
        min_leaf: hp.min_leaf,
        max_features: Some(
            hp.max_features
                .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
                .min(d),
        ),
    };
    let n = data.len();
    let draws = hp.bootstrap.unwrap_or(n);
    let fitted: Vec<(Tree, Vec<f64>)> = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng(derive_indexed(hp.seed, t as u64));
            let idx: Vec<usize> = (0..draws).map(|_| r.random_range(0..n)).collect();
            Tree::fit(data, &idx, params, &mut r)
        })
        .collect();
    let mut raw = vec![0.0; d];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        for (a, b) in raw.iter_mut().zip(imp) {
            *a += b;
        }
        trees.push(tree);
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(LearnError::NoInformativeSplit);
    }
    Ok(ForestModel {
        feature_names: data.feature_names.clone(),
        hyperparams: *hp,
        trees,
        importances: raw.iter().map(|v| v / total).collect(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::featx::Label;
    use crate::seed::rng;
    use rand_distr::{Distribution, Uniform};

    /// Good iff x1 > 0; x2 is pure noise.
    pub(crate) fn separable(n: usize, seed: u64) -> Dataset {
        let mut r = rng(seed);
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![u.sample(&mut r), u.sample(&mut r)]).collect();
        let labels = x
            .iter()
            .map(|v| if v[0] > 0.0 { Label::Good } else { Label::Bad })
            .collect();
        Dataset::new(vec!["x1".into(), "x2".into()], (0..n as u32).collect(), x, labels).unwrap()
    }

    fn accuracy(pred: impl Fn(&[f64]) -> f64, d: &Dataset) -> f64 {
        let ok = (0..d.len())
            .filter(|&i| (pred(&d.x[i]) >= 0.5) == d.is_good(i))
            .count();
        ok as f64 / d.len() as f64
    }

    #[test]
    fn separable_data() {
        let train = separable(200, 1);
        let test = separable(200, 2);
        let m = train_forest(&train, &ForestHyperparams { seed: 5, ..Default::default() }).unwrap();
        assert!(accuracy(|x| m.predict(x), &test) >= 0.95);
        assert!(m.importances[0] > m.importances[1]);
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_feature_has_zero_importance() {
        let mut d = separable(150, 3);
        d.feature_names.push("c".into());
        for row in &mut d.x {
            row.push(4.2);
        }
        let m = train_forest(&d, &ForestHyperparams { n_trees: 30, ..Default::default() }).unwrap();
        assert_eq!(m.importances[2], 0.0);
    }

    #[test]
    fn identical_single_leaf_trees() {
        let leaf = Tree {
            nodes: vec![crate::learn::TreeNode::Leaf {
                good_fraction: 0.7,
                samples: 10,
            }],
        };
        let m = ForestModel {
            feature_names: vec!["a".into()],
            hyperparams: ForestHyperparams::default(),
            trees: vec![leaf; 5],
            importances: vec![1.0],
        };
        assert!((m.predict(&[3.0]) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_errors() {
        let d = separable(120, 4);
        let hp = ForestHyperparams { n_trees: 20, seed: 77, ..Default::default() };
        assert_eq!(train_forest(&d, &hp).unwrap(), train_forest(&d, &hp).unwrap());

        let mut one = d.clone();
        one.labels.iter_mut().for_each(|l| *l = Label::Good);
        assert_eq!(train_forest(&one, &hp), Err(LearnError::DegenerateData));

        let mut flat = d.clone();
        flat.x.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 1.0));
        assert_eq!(train_forest(&flat, &hp), Err(LearnError::NoInformativeSplit));

        let bad = ForestHyperparams { n_trees: 0, ..hp };
        assert!(matches!(train_forest(&d, &bad), Err(LearnError::Invalid(_))));
    }
}
