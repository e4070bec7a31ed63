use serde::{Deserialize, Serialize};

use super::{discretize_feature, interval_of, Cuts, ScorecardError};
use crate::featx::Label;
use crate::learn::Dataset;

/// Indices of features whose weight is at least `min_weight`, defaulting to
/// half the uniform share `1 / (2 |S|)`.
pub fn select_features(
    weights: &[f64],
    min_weight: Option<f64>,
) -> Result<Vec<usize>, ScorecardError> {
    let min_weight = min_weight.unwrap_or(1.0 / (2.0 * weights.len() as f64));
    let kept: Vec<usize> = (0..weights.len())
        .filter(|&i| weights[i] >= min_weight)
        .collect();
    if kept.is_empty() {
        Err(ScorecardError::AllFiltered { min_weight })
    } else {
        Ok(kept)
    }
}

/// Rescale to points summing to 100.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>, ScorecardError> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(ScorecardError::ZeroMass);
    }
    Ok(weights.iter().map(|w| w / total * 100.0).collect())
}

/// Per-interval counts and bad proportions of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub count: [usize; 3],
    pub bad: [usize; 3],
    pub p: [f64; 3],
    /// Interval had no rows; `p` holds the overall bad rate instead.
    pub empty: [bool; 3],
}

pub fn interval_bad_proportion(values: &[f64], labels: &[Label], c1: f64, c2: f64) -> IntervalStats {
    let mut count = [0; 3];
    let mut bad = [0; 3];
    for (v, l) in values.iter().zip(labels) {
        let j = interval_of(*v, c1, c2);
        count[j] += 1;
        bad[j] += usize::from(l.is_bad());
    }
    let n: usize = count.iter().sum();
    let base = if n == 0 {
        0.0
    } else {
        bad.iter().sum::<usize>() as f64 / n as f64
    };
    let mut p = [0.0; 3];
    let mut empty = [false; 3];
    for j in 0..3 {
        if count[j] == 0 {
            p[j] = base;
            empty[j] = true;
        } else {
            p[j] = bad[j] as f64 / count[j] as f64;
        }
    }
    IntervalStats { count, bad, p, empty }
}

/// Interval factors `f = (1 - p) / max(1 - p)` and scores `h = f * nw`.
pub fn interval_scores(
    name: &str,
    p: [f64; 3],
    nw: f64,
) -> Result<([f64; 3], [f64; 3]), ScorecardError> {
    let best = p.iter().map(|x| 1.0 - x).fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return Err(ScorecardError::AllBadFeature(name.to_string()));
    }
    let f = p.map(|x| (1.0 - x) / best);
    let h = f.map(|x| x * nw);
    Ok((f, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardFeature {
    pub name: String,
    /// Forest importance before normalization.
    pub weight: f64,
    /// Normalized points.
    pub nw: f64,
    pub cuts: Cuts,
    pub stats: IntervalStats,
    pub f: [f64; 3],
    pub h: [f64; 3],
}

impl CardFeature {
    pub fn points(&self, x: f64) -> f64 {
        self.h[interval_of(x, self.cuts.c1, self.cuts.c2)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub features: Vec<CardFeature>,
    pub min_weight: f64,
    /// Selected features removed because every interval was all bad.
    pub dropped: Vec<String>,
}

impl Scorecard {
    /// Build from importances aligned with `data.feature_names`. Binning and
    /// bad proportions use the rows of `data`.
    pub fn build(
        data: &Dataset,
        importances: &[f64],
        min_weight: Option<f64>,
    ) -> Result<Self, ScorecardError> {
        if importances.len() != data.n_features() {
            return Err(ScorecardError::Invalid(format!(
                "{} importances for {} features",
                importances.len(),
                data.n_features()
            )));
        }
        if data.is_empty() {
            return Err(ScorecardError::Invalid("no training rows".into()));
        }
        let min_weight = min_weight.unwrap_or(1.0 / (2.0 * importances.len() as f64));
        let selected = select_features(importances, Some(min_weight))?;
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for i in selected {
            let name = &data.feature_names[i];
            let col: Vec<f64> = data.x.iter().map(|r| r[i]).collect();
            let cuts = discretize_feature(&col, &data.labels);
            let stats = interval_bad_proportion(&col, &data.labels, cuts.c1, cuts.c2);
            if stats.p.iter().all(|p| *p >= 1.0) {
                log::warn!("dropping {name}: every interval is all bad");
                dropped.push(name.clone());
                continue;
            }
            kept.push((name.clone(), importances[i], cuts, stats));
        }
        if kept.is_empty() {
            return Err(ScorecardError::AllFiltered { min_weight });
        }
        let nw = normalize_weights(&kept.iter().map(|k| k.1).collect::<Vec<_>>())?;
        let features = kept
            .into_iter()
            .zip(nw)
            .map(|((name, weight, cuts, stats), nw)| {
                let (f, h) = interval_scores(&name, stats.p, nw)?;
                Ok(CardFeature {
                    name,
                    weight,
                    nw,
                    cuts,
                    stats,
                    f,
                    h,
                })
            })
            .collect::<Result<Vec<_>, ScorecardError>>()?;
        Ok(Self {
            features,
            min_weight,
            dropped,
        })
    }

    /// Sum of interval scores for a row laid out as `names`.
    pub fn score(&self, names: &[String], row: &[f64]) -> Result<f64, ScorecardError> {
        let mut total = 0.0;
        for feat in &self.features {
            let i = names
                .iter()
                .position(|n| *n == feat.name)
                .filter(|&i| i < row.len())
                .ok_or_else(|| ScorecardError::MissingFeature(feat.name.clone()))?;
            total += feat.points(row[i]);
        }
        Ok(total.clamp(0.0, 100.0))
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn selection() {
        assert_eq!(select_features(&[0.5, 0.3, 0.15, 0.05], None).unwrap(), vec![0, 1, 2]);
        assert_eq!(select_features(&[0.25; 4], None).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(select_features(&[0.9, 0.1, 0.0], Some(0.0)).unwrap(), vec![0, 1, 2]);
        assert!(matches!(
            select_features(&[0.5, 0.5], Some(0.6)),
            Err(ScorecardError::AllFiltered { .. })
        ));
    }

    #[test]
    fn normalization() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        assert!(close(&normalize_weights(&[0.5, 0.3, 0.2]).unwrap(), &[50.0, 30.0, 20.0]));
        assert!(close(&normalize_weights(&[0.07]).unwrap(), &[100.0]));
        assert!(close(&normalize_weights(&[0.4, 0.4]).unwrap(), &[50.0, 50.0]));
        assert_eq!(normalize_weights(&[0.0, 0.0]), Err(ScorecardError::ZeroMass));
    }

    #[test]
    fn proportions() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        let mut l = vec![Label::Good; 10];
        l[3] = Label::Bad;
        l[8] = Label::Bad;
        let s = interval_bad_proportion(&v, &l, 100.0, 200.0);
        assert_eq!(s.p[0], 0.2);
        assert!(s.empty[1] && s.empty[2]);
        assert_eq!(s.p[1], 0.2);

        let s = interval_bad_proportion(&[1.0, 2.0, 9.0], &[Label::Good, Label::Good, Label::Bad], 1.5, 5.0);
        assert_eq!(s.p, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn factors_and_scores() {
        let (f, h) = interval_scores("x", [0.1, 0.5, 0.9], 20.0).unwrap();
        let want = [1.0, 0.5556, 0.1111];
        for j in 0..3 {
            assert!((f[j] - want[j]).abs() < 1e-4);
            assert!((h[j] - 20.0 * f[j]).abs() < 1e-12);
        }
        let (f, _) = interval_scores("x", [0.3; 3], 10.0).unwrap();
        assert_eq!(f, [1.0; 3]);
        let (_, h) = interval_scores("x", [0.2, 0.6, 0.2], 20.0).unwrap();
        assert!((h[1] - 10.0).abs() < 1e-12);
        assert_eq!(
            interval_scores("x", [1.0; 3], 5.0),
            Err(ScorecardError::AllBadFeature("x".into()))
        );
    }

    fn card(parts: &[(&str, f64, [f64; 3])]) -> Scorecard {
        Scorecard {
            features: parts
                .iter()
                .map(|&(name, nw, f)| CardFeature {
                    name: name.into(),
                    weight: nw / 100.0,
                    nw,
                    cuts: Cuts {
                        c1: 1.0,
                        c2: 2.0,
                        entropy: 0.0,
                        fallback: false,
                    },
                    stats: IntervalStats {
                        count: [1; 3],
                        bad: [0; 3],
                        p: [0.0; 3],
                        empty: [false; 3],
                    },
                    f,
                    h: f.map(|x| x * nw),
                })
                .collect(),
            min_weight: 0.0,
            dropped: vec![],
        }
    }

    #[test]
    fn driver_scores() {
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let c = card(&[("a", 60.0, [1.0, 0.2, 0.0]), ("b", 40.0, [0.3, 0.5, 1.0])]);
        assert!((c.score(&names, &[0.0, 5.0]).unwrap() - 100.0).abs() < 1e-9);
        assert!((c.score(&names, &[0.0, 1.5]).unwrap() - 80.0).abs() < 1e-9);
        let z = card(&[("a", 60.0, [1.0, 0.2, 0.0]), ("b", 40.0, [1.0, 0.0, 0.0])]);
        assert_eq!(z.score(&names, &[9.0, 9.0]).unwrap(), 0.0);
        assert_eq!(
            c.score(&["a".to_string()], &[0.0]),
            Err(ScorecardError::MissingFeature("b".into()))
        );
    }

    proptest! {
        #[test]
        fn lowering_p_never_lowers_h(p in proptest::array::uniform3(0.0..0.99f64), j in 0usize..3, d in 0.0..1.0f64, nw in 0.1..100.0f64) {
            let (_, h) = interval_scores("x", p, nw).unwrap();
            let mut q = p;
            q[j] *= d;
            let (_, h2) = interval_scores("x", q, nw).unwrap();
            prop_assert!(h2[j] >= h[j] - 1e-12);
        }

        #[test]
        fn max_score_is_weight(p in proptest::array::uniform3(0.0..1.0f64), nw in 0.1..100.0f64) {
            prop_assume!(p.iter().any(|x| *x < 1.0));
            let (f, h) = interval_scores("x", p, nw).unwrap();
            let top = h.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!((top - nw).abs() < 1e-9);
            prop_assert!(f.iter().all(|x| (0.0..=1.0 + 1e-12).contains(x)));
            prop_assert!(h.iter().all(|x| *x >= 0.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn built_cards_are_normalized_and_bounded(
            rows in prop::collection::vec((prop::array::uniform4(0u8..6), any::<bool>()), 6..60),
            w in prop::array::uniform4(0.0..1.0f64),
        ) {
            let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
            let x: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let labels: Vec<Label> = rows.iter().map(|(_, b)| if *b { Label::Bad } else { Label::Good }).collect();
            let ids = (0..rows.len() as u32).collect();
            let data = Dataset::new(names.clone(), ids, x.clone(), labels).unwrap();
            let card = match Scorecard::build(&data, &w, None) {
                Ok(c) => c,
                Err(ScorecardError::AllFiltered { .. } | ScorecardError::ZeroMass) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let mass: f64 = card.features.iter().map(|f| f.nw).sum();
            prop_assert!((mass - 100.0).abs() < 1e-9);
            for f in &card.features {
                let top = f.h.iter().cloned().fold(f64::MIN, f64::max);
                prop_assert!((top - f.nw).abs() < 1e-9);
                prop_assert!(f.h.iter().all(|h| *h >= 0.0));
            }
            for row in &x {
                let raw: f64 = card.features.iter().map(|f| {
                    let i = names.iter().position(|n| *n == f.name).unwrap();
                    f.points(row[i])
                }).sum();
                prop_assert!((0.0..=100.0 + 1e-9).contains(&raw));
            }
            prop_assert_eq!(Scorecard::build(&data, &w, None).unwrap(), card);
        }
    }
}
