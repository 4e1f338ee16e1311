//! Feature extraction: hourly observations → per-cell feature vectors.
//!
//! Each cell's hourly record is expanded into 22 derived variables (raw
//! counts and footfall fractions), summarized over tumbling windows of one
//! hour, four hours, and one day plus the whole period, and combined with
//! second-order statistics across windows. The resulting vocabulary is closed
//! ([`TOTAL_FEATURE_COUNT`] columns) and uses a dotted naming scheme such as
//! `smartSteps.daily.athome.mean.sd`. Borough metrics join each row as
//! `borough.m01`..`borough.m68` via nearest-profile assignment.

mod extract;
mod vocabulary;
mod windows;

pub use extract::{
    cell_feature_row, featurize, group_by_cell, observation_span, ObservationSpan,
};
pub use vocabulary::{
    borough_metric_name, feature_name, full_feature_names, smartsteps_feature_names,
    smartsteps_features, FeatureKey, Granularity, Variable, BOROUGH_PREFIX,
    FEATURES_PER_VARIABLE, SMARTSTEPS_FEATURE_COUNT, SMARTSTEPS_PREFIX, TOTAL_FEATURE_COUNT,
};
pub use windows::{second_order, windowed_stats};
