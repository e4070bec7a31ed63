use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::featx::Label;

/// Probabilities at or above this are predicted Good.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Probability of Good.
    pub prob: f64,
    pub predicted: Label,
    pub actual: Label,
}

impl Prediction {
    pub fn from_prob(prob: f64, actual: Label) -> Self {
        let predicted = if prob >= THRESHOLD { Label::Good } else { Label::Bad };
        Self {
            prob,
            predicted,
            actual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision_good: f64,
    pub auc: f64,
    /// Nothing was predicted Good; `precision_good` is reported as 1.
    pub no_predicted_good: bool,
    /// Only one class present; `auc` is reported as 0.5.
    pub auc_undefined: bool,
}

impl EvalMetrics {
    /// Field-wise mean; flags are set if any input had them.
    pub fn mean(all: &[EvalMetrics]) -> Option<EvalMetrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        Some(EvalMetrics {
            accuracy: all.iter().map(|m| m.accuracy).sum::<f64>() / n,
            precision_good: all.iter().map(|m| m.precision_good).sum::<f64>() / n,
            auc: all.iter().map(|m| m.auc).sum::<f64>() / n,
            no_predicted_good: all.iter().any(|m| m.no_predicted_good),
            auc_undefined: all.iter().any(|m| m.auc_undefined),
        })
    }
}

/// Mann-Whitney statistic: the share of (good, bad) pairs where the good
/// row has the higher probability, ties counting one half. `None` unless
/// both classes are present.
pub fn auc(preds: &[Prediction]) -> Option<f64> {
    let mut sorted: Vec<(f64, bool)> = preds
        .iter()
        .map(|p| (p.prob, !p.actual.is_bad()))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_good = sorted.iter().filter(|p| p.1).count();
    let n_bad = sorted.len() - n_good;
    if n_good == 0 || n_bad == 0 {
        return None;
    }
    // Count in half-pairs so the sum stays an exact integer.
    let mut halves: u128 = 0;
    let mut bad_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut g, mut b) = (0u128, 0u128);
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                g += 1;
            } else {
                b += 1;
            }
            j += 1;
        }
        halves += 2 * g * bad_below + g * b;
        bad_below += b;
        i = j;
    }
    Some(halves as f64 / (2 * n_good as u128 * n_bad as u128) as f64)
}

pub fn evaluate(preds: &[Prediction]) -> Result<EvalMetrics, LearnError> {
    if preds.is_empty() {
        return Err(LearnError::Empty);
    }
    let correct = preds.iter().filter(|p| p.predicted == p.actual).count();
    let predicted_good: Vec<&Prediction> =
        preds.iter().filter(|p| p.predicted == Label::Good).collect();
    let true_good = predicted_good
        .iter()
        .filter(|p| p.actual == Label::Good)
        .count();
    let auc_value = auc(preds);
    Ok(EvalMetrics {
        accuracy: correct as f64 / preds.len() as f64,
        precision_good: if predicted_good.is_empty() {
            1.0
        } else {
            true_good as f64 / predicted_good.len() as f64
        },
        auc: auc_value.unwrap_or(0.5),
        no_predicted_good: predicted_good.is_empty(),
        auc_undefined: auc_value.is_none(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: count over every (good, bad) pair.
    pub(crate) fn brute_auc(preds: &[Prediction]) -> Option<f64> {
        let good: Vec<f64> = preds.iter().filter(|p| !p.actual.is_bad()).map(|p| p.prob).collect();
        let bad: Vec<f64> = preds.iter().filter(|p| p.actual.is_bad()).map(|p| p.prob).collect();
        if good.is_empty() || bad.is_empty() {
            return None;
        }
        let mut wins = 0.0;
        for g in &good {
            for b in &bad {
                if g > b {
                    wins += 1.0;
                } else if g == b {
                    wins += 0.5;
                }
            }
        }
        Some(wins / (good.len() * bad.len()) as f64)
    }

    fn p(prob: f64, good: bool) -> Prediction {
        Prediction::from_prob(prob, if good { Label::Good } else { Label::Bad })
    }

    #[test]
    fn four_point_auc() {
        let v = [p(0.9, true), p(0.8, false), p(0.3, true), p(0.2, false)];
        assert_eq!(auc(&v), Some(0.75));
        assert_eq!(brute_auc(&v), Some(0.75));
    }

    #[test]
    fn perfect_and_tied() {
        let v = [p(0.9, true), p(0.7, true), p(0.2, false)];
        assert_eq!(auc(&v), Some(1.0));
        let t = [p(0.5, true), p(0.5, false)];
        assert_eq!(auc(&t), Some(0.5));
    }

    #[test]
    fn precision_of_good() {
        let mk = |pred: Label, actual: Label| Prediction {
            prob: 0.5,
            predicted: pred,
            actual,
        };
        use Label::*;
        // predicted good {a, b, c}, labelled good {a, b}
        let v = [mk(Good, Good), mk(Good, Good), mk(Good, Bad), mk(Bad, Bad)];
        let m = evaluate(&v).unwrap();
        assert!((m.precision_good - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.accuracy, 0.75);

        let none = [mk(Bad, Good), mk(Bad, Bad)];
        let m = evaluate(&none).unwrap();
        assert_eq!(m.precision_good, 1.0);
        assert!(m.no_predicted_good);
        assert_eq!(evaluate(&[]), Err(LearnError::Empty));
    }

    #[test]
    fn single_class_auc_flagged() {
        let m = evaluate(&[p(0.3, true), p(0.8, true)]).unwrap();
        assert!(m.auc_undefined);
        assert_eq!(m.auc, 0.5);
    }

    proptest! {
        #[test]
        fn matches_pair_counting(rows in proptest::collection::vec((0u8..20, any::<bool>()), 1..500)) {
            let v: Vec<Prediction> = rows.iter().map(|&(q, g)| p(f64::from(q) / 19.0, g)).collect();
            prop_assert_eq!(auc(&v), brute_auc(&v));
        }

        #[test]
        fn monotone_transform_invariant(rows in proptest::collection::vec((0u32..1000, any::<bool>()), 2..200)) {
            let v: Vec<Prediction> = rows.iter().map(|&(q, g)| p(f64::from(q) / 1000.0, g)).collect();
            let w: Vec<Prediction> = rows
                .iter()
                .map(|&(q, g)| p(f64::from(q).powi(3) / 1e9 * 0.5 + 0.25, g))
                .collect();
            prop_assert_eq!(auc(&v), auc(&w));
        }

        #[test]
        fn metrics_in_unit_range(rows in proptest::collection::vec((0.0..1.0f64, any::<bool>()), 1..100)) {
            let v: Vec<Prediction> = rows.iter().map(|&(q, g)| p(q, g)).collect();
            let m = evaluate(&v).unwrap();
            for x in [m.accuracy, m.precision_good, m.auc] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
