//! 0-100 driving safety scorecard: feature filtering, weight normalization,
//! three-interval entropy binning, interval scores and rank reports.

mod card;
mod discretize;
mod report;

use thiserror::Error;

pub use card::{
    interval_bad_proportion, interval_scores, normalize_weights, select_features, CardFeature,
    IntervalStats, Scorecard,
};
pub use discretize::{discretize_feature, interval_of, Cuts, MAX_CANDIDATES};
pub use report::{
    bottom_share, rank_drivers, rank_report, top_n_bad_proportion, Band, BandSpec, RankReport,
    RankedDriver, REFERENCE_BAND_STARTS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScorecardError {
    #[error("no feature reaches the minimum weight {min_weight}")]
    AllFiltered { min_weight: f64 },
    #[error("selected weights sum to zero")]
    ZeroMass,
    #[error("every interval of {0} is all bad")]
    AllBadFeature(String),
    #[error("feature {0} is missing from the input")]
    MissingFeature(String),
    #[error("band starts must begin at rank 1, increase strictly and stay within {n} drivers")]
    BandsInvalid { n: usize },
    #[error("{0}")]
    Invalid(String),
}
