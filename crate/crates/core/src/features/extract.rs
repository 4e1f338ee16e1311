//! Per-cell feature extraction over the shared observation calendar.
//!
//! All cells share one hourly calendar spanning the earliest to the latest
//! observed hour; hours a cell was not observed hold NaN. Extraction is
//! per-cell pure — [`cell_feature_row`] depends only on its arguments — so
//! callers may fan rows out across threads and assemble them in ascending
//! cell-id order to get a result identical to the serial [`featurize`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::calendar::HourStamp;
use crate::data::{BoroughProfile, HourlyObservation};
use crate::error::{Error, Result};
use crate::geo::{self, CellId, CellUniverse};
use crate::matrix::FeatureMatrix;
use crate::stats::{self, Stat};

use super::vocabulary::{full_feature_names, Granularity, Variable, SMARTSTEPS_FEATURE_COUNT};
use super::windows::windowed_stats;

/// The hourly calendar common to all cells: first observed hour and length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationSpan {
    pub start: HourStamp,
    pub n_hours: usize,
}

impl ObservationSpan {
    /// Offset of `hour` within the span, if it falls inside.
    fn offset(&self, hour: HourStamp) -> Option<usize> {
        let delta = hour.0 - self.start.0;
        if delta < 0 || delta >= self.n_hours as i64 {
            None
        } else {
            Some(delta as usize)
        }
    }
}

/// Calendar covered by a set of observations; fails on an empty set.
pub fn observation_span(observations: &[HourlyObservation]) -> Result<ObservationSpan> {
    let first = observations
        .iter()
        .map(|o| o.hour.0)
        .min()
        .ok_or_else(|| Error::InvalidInput("no observations to featurize".into()))?;
    let last = observations.iter().map(|o| o.hour.0).max().unwrap();
    Ok(ObservationSpan {
        start: HourStamp(first),
        n_hours: (last - first + 1) as usize,
    })
}

/// Validate observations and group their indices by cell.
///
/// Rejects rows with invalid counts and rows referencing cells outside the
/// universe. Duplicate (cell, hour) pairs are caught later, during series
/// construction.
pub fn group_by_cell(
    observations: &[HourlyObservation],
    universe: &CellUniverse,
) -> Result<BTreeMap<CellId, Vec<usize>>> {
    let mut groups: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, obs) in observations.iter().enumerate() {
        obs.validate()?;
        if !universe.contains(obs.cell) {
            return Err(Error::InvalidInput(alloc::format!(
                "observation row {i} references unknown cell {}",
                obs.cell
            )));
        }
        groups.entry(obs.cell).or_default().push(i);
    }
    Ok(groups)
}

/// Dense hourly series for each derived variable of one cell.
struct CellSeries {
    start: HourStamp,
    /// `values[v][h]` = variable `Variable::ALL[v]` at hour offset `h`.
    values: Vec<Vec<f64>>,
}

fn build_cell_series(
    span: ObservationSpan,
    observations: &[HourlyObservation],
    indices: &[usize],
) -> Result<CellSeries> {
    let mut values = alloc::vec![alloc::vec![f64::NAN; span.n_hours]; Variable::ALL.len()];
    let mut seen = alloc::vec![false; span.n_hours];
    for &i in indices {
        let obs = &observations[i];
        let offset = span.offset(obs.hour).ok_or_else(|| {
            Error::InvalidInput(alloc::format!(
                "observation hour {} outside the span starting at {}",
                obs.hour.0,
                span.start.0
            ))
        })?;
        if seen[offset] {
            return Err(Error::InvalidInput(alloc::format!(
                "duplicate observation for cell {} at hour {}",
                obs.cell,
                obs.hour.0
            )));
        }
        seen[offset] = true;
        let counts = obs.counts();
        for (v, variable) in Variable::ALL.iter().enumerate() {
            values[v][offset] = variable.evaluate(&counts);
        }
    }
    Ok(CellSeries {
        start: span.start,
        values,
    })
}

/// The mobility-feature block of one cell, in canonical vocabulary order.
/// Statistics that are undefined for the cell's data are NaN.
fn smartsteps_row(series: &CellSeries) -> Vec<f64> {
    let mut row = Vec::with_capacity(SMARTSTEPS_FEATURE_COUNT);
    for (v, _) in Variable::ALL.iter().enumerate() {
        let values = &series.values[v];
        // Whole-period summary; also the outer layer of one-hour windows,
        // whose inner mean/median/min/max all equal the raw value.
        let whole = stats::summarize(values).ok();
        for granularity in [Granularity::Hourly, Granularity::FourHour, Granularity::Daily] {
            match granularity {
                Granularity::Hourly => {
                    for _inner in granularity.inner_stats() {
                        for outer in Stat::ALL {
                            row.push(
                                whole.and_then(|b| b.get(outer)).unwrap_or(f64::NAN),
                            );
                        }
                    }
                }
                _ => {
                    let window = granularity.window_hours().unwrap();
                    let bundles = windowed_stats(series.start, values, window).ok();
                    for &inner in granularity.inner_stats() {
                        let outer_bundle = bundles.as_ref().and_then(|bs| {
                            let inner_series: Vec<f64> = bs
                                .iter()
                                .map(|b| b.get(inner).unwrap_or(f64::NAN))
                                .collect();
                            stats::summarize(&inner_series).ok()
                        });
                        for outer in Stat::ALL {
                            row.push(
                                outer_bundle.and_then(|b| b.get(outer)).unwrap_or(f64::NAN),
                            );
                        }
                    }
                }
            }
        }
        for stat in Stat::ALL {
            row.push(whole.and_then(|b| b.get(stat)).unwrap_or(f64::NAN));
        }
    }
    debug_assert_eq!(row.len(), SMARTSTEPS_FEATURE_COUNT);
    row
}

/// Full feature row for one cell: mobility features followed by the assigned
/// borough metrics.
pub fn cell_feature_row(
    span: ObservationSpan,
    observations: &[HourlyObservation],
    indices: &[usize],
    profile_metrics: &[f64],
) -> Result<Vec<f64>> {
    let series = build_cell_series(span, observations, indices)?;
    let mut row = smartsteps_row(&series);
    row.extend_from_slice(profile_metrics);
    Ok(row)
}

/// Extract the full feature matrix: one row per cell with at least one
/// observation, columns in canonical vocabulary order.
pub fn featurize(
    observations: &[HourlyObservation],
    universe: &CellUniverse,
    profiles: &[BoroughProfile],
) -> Result<FeatureMatrix> {
    let span = observation_span(observations)?;
    let groups = group_by_cell(observations, universe)?;
    for profile in profiles {
        profile.validate()?;
    }
    let assignment = geo::georeference_profiles(profiles, universe)?;
    let names = full_feature_names();
    let row_ids: Vec<CellId> = groups.keys().copied().collect();
    let mut columns = alloc::vec![Vec::with_capacity(row_ids.len()); names.len()];
    for (cell, indices) in &groups {
        let metrics = &profiles[assignment[cell]].metrics;
        let row = cell_feature_row(span, observations, indices, metrics)?;
        for (column, value) in columns.iter_mut().zip(row) {
            column.push(value);
        }
    }
    FeatureMatrix::new(row_ids, names, columns)
}
