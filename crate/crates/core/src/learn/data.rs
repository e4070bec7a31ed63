use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::featx::{DriverRow, Label, FEATURE_NAMES};
use crate::seed::rng;

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub ids: Vec<u32>,
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        ids: Vec<u32>,
        x: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self, LearnError> {
        if ids.len() != x.len() || labels.len() != x.len() {
            return Err(LearnError::Invalid("ids, rows and labels differ in length".into()));
        }
        if let Some(i) = x.iter().position(|r| r.len() != feature_names.len()) {
            return Err(LearnError::Invalid(format!(
                "row {i} has {} values for {} features",
                x[i].len(),
                feature_names.len()
            )));
        }
        Ok(Self {
            feature_names,
            ids,
            x,
            labels,
        })
    }

    pub fn from_rows(rows: &[DriverRow]) -> Self {
        Self {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            ids: rows.iter().map(|r| r.driver.0).collect(),
            x: rows.iter().map(|r| r.features.to_array().to_vec()).collect(),
            labels: rows.iter().map(|r| r.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_good(&self) -> usize {
        self.labels.iter().filter(|l| !l.is_bad()).count()
    }

    pub fn n_bad(&self) -> usize {
        self.len() - self.n_good()
    }

    pub fn is_good(&self, i: usize) -> bool {
        !self.labels[i].is_bad()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn require_both_classes(&self) -> Result<(), LearnError> {
        if self.n_good() == 0 || self.n_bad() == 0 {
            Err(LearnError::DegenerateData)
        } else {
            Ok(())
        }
    }
}

/// Class ratio good:bad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub good: u32,
    pub bad: u32,
}

impl Ratio {
    pub const fn new(good: u32, bad: u32) -> Self {
        Self { good, bad }
    }

    /// Share of good rows implied by the ratio.
    pub fn good_share(&self) -> f64 {
        f64::from(self.good) / f64::from(self.good + self.bad)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.good, self.bad)
    }
}

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("ratio '{s}' is not of the form P:N"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u32>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| format!("ratio '{s}' needs positive integers"))
        };
        Ok(Ratio::new(parse(a)?, parse(b)?))
    }
}

/// Ratios of the imbalance sweep.
pub const SWEEP_RATIOS: [Ratio; 7] = [
    Ratio::new(1, 10),
    Ratio::new(1, 2),
    Ratio::new(1, 1),
    Ratio::new(2, 1),
    Ratio::new(4, 1),
    Ratio::new(8, 1),
    Ratio::new(10, 1),
];

/// Subsample whichever class is in excess of `ratio`, keeping the other
/// class whole. Rows keep their original order.
pub fn downsample(data: &Dataset, ratio: Ratio, seed: u64) -> Result<Dataset, LearnError> {
    data.require_both_classes()?;
    let (good, bad): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| data.is_good(i));
    let (ng, nb) = (good.len() as u64, bad.len() as u64);
    let (rg, rb) = (u64::from(ratio.good), u64::from(ratio.bad));
    let (keep_good, keep_bad) = if ng * rb >= nb * rg {
        ((nb * rg / rb) as usize, bad.len())
    } else {
        (good.len(), (ng * rb / rg) as usize)
    };
    if keep_good == 0 || keep_bad == 0 {
        return Err(LearnError::RatioUnachievable {
            ratio,
            good: good.len(),
            bad: bad.len(),
        });
    }
    let mut r = rng(seed);
    let mut pick = |pool: &[usize], k: usize| -> Vec<usize> {
        if k == pool.len() {
            pool.to_vec()
        } else {
            sample(&mut r, pool.len(), k).into_iter().map(|j| pool[j]).collect()
        }
    };
    let mut idx = pick(&good, keep_good);
    idx.extend(pick(&bad, keep_bad));
    idx.sort_unstable();
    Ok(data.subset(&idx))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn counts(good: usize, bad: usize) -> Dataset {
        let n = good + bad;
        Dataset::new(
            vec!["x".into()],
            (0..n as u32).collect(),
            (0..n).map(|i| vec![i as f64]).collect(),
            (0..n)
                .map(|i| if i < good { Label::Good } else { Label::Bad })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_to_one_keeps_every_bad_row() {
        let d = counts(21305, 1326);
        let s = downsample(&d, Ratio::new(1, 1), 9).unwrap();
        assert_eq!((s.n_good(), s.n_bad()), (1326, 1326));
    }

    #[test]
    fn two_to_one() {
        let d = counts(21305, 1326);
        let s = downsample(&d, Ratio::new(2, 1), 9).unwrap();
        assert_eq!((s.n_good(), s.n_bad()), (2652, 1326));
    }

    #[test]
    fn already_balanced_is_identity() {
        let d = counts(40, 20);
        assert_eq!(downsample(&d, Ratio::new(2, 1), 3).unwrap(), d);
    }

    #[test]
    fn bad_side_can_be_trimmed() {
        let d = counts(30, 50);
        let s = downsample(&d, Ratio::new(2, 1), 3).unwrap();
        assert_eq!((s.n_good(), s.n_bad()), (30, 15));
    }

    #[test]
    fn unreachable_and_degenerate() {
        let d = counts(5, 3);
        assert!(matches!(
            downsample(&d, Ratio::new(1, 10), 0),
            Err(LearnError::RatioUnachievable { .. })
        ));
        assert_eq!(
            downsample(&counts(5, 0), Ratio::new(1, 1), 0),
            Err(LearnError::DegenerateData)
        );
    }

    #[test]
    fn ratio_parse() {
        assert_eq!("4:1".parse::<Ratio>().unwrap(), Ratio::new(4, 1));
        assert!("4".parse::<Ratio>().is_err());
        assert!("0:1".parse::<Ratio>().is_err());
        assert_eq!(Ratio::new(8, 1).to_string(), "8:1");
    }

    proptest! {
        #[test]
        fn subset_of_input(good in 1usize..200, bad in 1usize..200, g in 1u32..9, b in 1u32..9, seed: u64) {
            let d = counts(good, bad);
            if let Ok(s) = downsample(&d, Ratio::new(g, b), seed) {
                prop_assert!(s.ids.windows(2).all(|w| w[0] < w[1]));
                for (k, id) in s.ids.iter().enumerate() {
                    let i = *id as usize;
                    prop_assert_eq!(&s.x[k], &d.x[i]);
                    prop_assert_eq!(s.labels[k], d.labels[i]);
                }
                prop_assert!(s.n_good() as u64 * u64::from(b) <= s.n_bad() as u64 * u64::from(g) + u64::from(b) * u64::from(g));
                prop_assert_eq!(s, downsample(&d, Ratio::new(g, b), seed).unwrap());
            }
        }
    }
}
