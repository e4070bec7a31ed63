use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    downsample, evaluate, train_model, Dataset, EvalMetrics, LearnError, ModelKind, ModelSpec,
    Prediction, Ratio,
};
use crate::seed::{derive_indexed, derive_seed, rng};

/// Fold index of every row. Each class is shuffled and dealt round-robin,
/// so every fold's class counts are within one of each other.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    let (good, bad) = (data.n_good(), data.n_bad());
    if k < 2 || good < k || bad < k {
        return Err(LearnError::TooFewSamples { k, good, bad });
    }
    let mut fold = vec![0; data.len()];
    let mut r = rng(seed);
    let mut offset = 0;
    for class_good in [true, false] {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.is_good(i) == class_good).collect();
        idx.shuffle(&mut r);
        for (j, i) in idx.iter().enumerate() {
            fold[*i] = (j + offset) % k;
        }
        // Continue dealing where the first class stopped so fold sizes stay even.
        offset = (offset + idx.len()) % k;
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: ModelKind,
    pub folds: Vec<EvalMetrics>,
    pub mean: EvalMetrics,
}

/// Stratified k-fold cross-validation. With `train_ratio`, each training
/// fold is downsampled to that good:bad ratio while the validation fold
/// keeps its natural class mix.
pub fn kfold_cv(
    data: &Dataset,
    k: usize,
    kind: ModelKind,
    spec: &ModelSpec,
    seed: u64,
    train_ratio: Option<Ratio>,
) -> Result<CvResult, LearnError> {
    let fold = stratified_folds(data, k, derive_seed(seed, "folds"))?;
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| fold[i] != f).collect();
        let mut train = data.subset(&train_idx);
        if let Some(r) = train_ratio {
            train = downsample(&train, r, derive_indexed(derive_seed(seed, "resample"), f as u64))?;
        }
        let model = train_model(kind, spec, &train, derive_indexed(derive_seed(seed, "model"), f as u64))?;
        let preds = (0..data.len())
            .filter(|&i| fold[i] == f)
            .map(|i| Ok(Prediction::from_prob(model.predict_proba(&data.x[i])?, data.labels[i])))
            .collect::<Result<Vec<_>, LearnError>>()?;
        folds.push(evaluate(&preds)?);
    }
    let mean = EvalMetrics::mean(&folds).ok_or(LearnError::Empty)?;
    Ok(CvResult { kind, folds, mean })
}
