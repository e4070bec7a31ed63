use serde::{Deserialize, Serialize};

use super::ScorecardError;
use crate::featx::Label;

/// Band start ranks of the reference 22,631-driver report.
pub const REFERENCE_BAND_STARTS: [usize; 7] = [1, 500, 1000, 5000, 10000, 15000, 20000];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedDriver {
    pub driver: u32,
    pub score: f64,
    /// 1 is the best score.
    pub rank: usize,
    pub label: Option<Label>,
}

/// Sort by score descending, breaking ties by driver id.
pub fn rank_drivers(scores: &[(u32, f64, Option<Label>)]) -> Vec<RankedDriver> {
    let mut v: Vec<_> = scores.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter()
        .enumerate()
        .map(|(i, (driver, score, label))| RankedDriver {
            driver,
            score,
            rank: i + 1,
            label,
        })
        .collect()
}

/// Start ranks of consecutive bands; the last band runs to the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandSpec {
    pub starts: Vec<usize>,
}

impl BandSpec {
    pub fn new(starts: Vec<usize>) -> Self {
        Self { starts }
    }

    /// The reference band starts scaled to a population of `n`.
    pub fn scaled(n: usize) -> Self {
        let mut starts = vec![1];
        for &s in &REFERENCE_BAND_STARTS[1..] {
            let r = ((s as f64) * n as f64 / 22631.0).round() as usize;
            if r > *starts.last().unwrap() && r <= n {
                starts.push(r);
            }
        }
        Self { starts }
    }

    /// Inclusive rank intervals covering 1..=n.
    pub fn intervals(&self, n: usize) -> Result<Vec<(usize, usize)>, ScorecardError> {
        let s = &self.starts;
        let ok = n > 0
            && s.first() == Some(&1)
            && s.windows(2).all(|w| w[0] < w[1])
            && s.last().is_some_and(|&l| l <= n);
        if !ok {
            return Err(ScorecardError::BandsInvalid { n });
        }
        Ok(s.iter()
            .enumerate()
            .map(|(k, &a)| (a, s.get(k + 1).map_or(n, |b| b - 1)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub first_rank: usize,
    pub last_rank: usize,
    pub score_high: f64,
    pub score_low: f64,
    pub drivers: usize,
    /// `None` when labels are unavailable.
    pub bad: Option<usize>,
    pub share_of_bad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub population: usize,
    pub total_bad: Option<usize>,
    pub bands: Vec<Band>,
}

fn labelled(ranked: &[RankedDriver]) -> bool {
    !ranked.is_empty() && ranked.iter().all(|r| r.label.is_some())
}

fn bad_in(ranked: &[RankedDriver]) -> usize {
    ranked
        .iter()
        .filter(|r| r.label.is_some_and(Label::is_bad))
        .count()
}

/// Per-band score range and bad counts over a ranked population.
pub fn rank_report(ranked: &[RankedDriver], bands: &BandSpec) -> Result<RankReport, ScorecardError> {
    let n = ranked.len();
    let intervals = bands.intervals(n)?;
    let has_labels = labelled(ranked);
    let total_bad = has_labels.then(|| bad_in(ranked));
    let bands = intervals
        .into_iter()
        .map(|(a, b)| {
            let slice = &ranked[a - 1..b];
            let bad = has_labels.then(|| bad_in(slice));
            Band {
                first_rank: a,
                last_rank: b,
                score_high: slice[0].score,
                score_low: slice[slice.len() - 1].score,
                drivers: slice.len(),
                bad,
                share_of_bad: match (bad, total_bad) {
                    (Some(x), Some(t)) if t > 0 => Some(x as f64 / t as f64),
                    (Some(_), Some(_)) => Some(0.0),
                    _ => None,
                },
            }
        })
        .collect();
    Ok(RankReport {
        population: n,
        total_bad,
        bands,
    })
}

/// Bad share among the `n` best-ranked drivers; `None` without labels or
/// when `n` is out of range.
pub fn top_n_bad_proportion(ranked: &[RankedDriver], n: usize) -> Option<f64> {
    if n == 0 || n > ranked.len() || !labelled(ranked) {
        return None;
    }
    Some(bad_in(&ranked[..n]) as f64 / n as f64)
}

/// Share of all bad drivers found in the worst `floor(fraction * n)` ranks.
pub fn bottom_share(ranked: &[RankedDriver], fraction: f64) -> Option<f64> {
    if !labelled(ranked) {
        return None;
    }
    let total = bad_in(ranked);
    if total == 0 {
        return None;
    }
    let k = (fraction * ranked.len() as f64).floor() as usize;
    Some(bad_in(&ranked[ranked.len() - k..]) as f64 / total as f64)
}
