//! Tumbling-window summaries and second-order statistics.
//!
//! Windows are non-overlapping and aligned to midnight UTC: an hour with
//! stamp `h` falls into window `h div w` for window length `w`, and the
//! supported lengths (1, 4, 24) all divide a day evenly. Windows at the edges
//! of a series may be partial; they are summarized like any other. A window
//! whose values are all missing is skipped.

use alloc::vec::Vec;

use crate::calendar::HourStamp;
use crate::error::{Error, Result};
use crate::stats::{self, Stat, StatBundle};

/// Summarize an hourly series (starting at `start`, one value per hour,
/// missing values as NaN) over tumbling windows of `window_hours`.
///
/// Fails when the series is shorter than one window. The result holds one
/// bundle per window that contains at least one non-missing value, in
/// chronological order.
pub fn windowed_stats(
    start: HourStamp,
    values: &[f64],
    window_hours: i64,
) -> Result<Vec<StatBundle>> {
    if window_hours <= 0 {
        return Err(Error::InvalidInput(alloc::format!(
            "window length {window_hours} must be positive"
        )));
    }
    if (values.len() as i64) < window_hours {
        return Err(Error::EmptyWindow(alloc::format!(
            "series of {} hours is shorter than one {window_hours}-hour window",
            values.len()
        )));
    }
    let mut bundles = Vec::new();
    let mut begin = 0usize;
    while begin < values.len() {
        let window_index = (start.0 + begin as i64).div_euclid(window_hours);
        // First hour of the next window, clipped to the series end.
        let window_end = (window_index + 1) * window_hours - start.0;
        let end = usize::min(window_end as usize, values.len());
        if let Ok(bundle) = stats::summarize(&values[begin..end]) {
            bundles.push(bundle);
        }
        begin = end;
    }
    Ok(bundles)
}

/// Apply `outer` across the `inner` statistic of each window bundle.
///
/// Window bundles missing the inner statistic contribute a missing value.
/// Fails when no window defines the inner statistic or when the outer
/// statistic is undefined over the resulting series (too few windows for sd,
/// degenerate mass for entropy).
pub fn second_order(bundles: &[StatBundle], inner: Stat, outer: Stat) -> Result<f64> {
    if bundles.is_empty() {
        return Err(Error::EmptyWindow(
            "no windows to take a second-order statistic over".into(),
        ));
    }
    let inner_series: Vec<f64> = bundles
        .iter()
        .map(|b| b.get(inner).unwrap_or(f64::NAN))
        .collect();
    let summary = stats::summarize(&inner_series)
        .map_err(|_| Error::EmptyWindow("inner statistic is missing in every window".into()))?;
    match summary.get(outer) {
        Some(v) => Ok(v),
        None => match outer {
            Stat::Sd => Err(Error::EmptyWindow(
                "outer sd needs at least two windows".into(),
            )),
            Stat::Entropy => Err(Error::UndefinedEntropy(
                "outer entropy is undefined for this inner series".into(),
            )),
            _ => unreachable!("mean/median/min/max always defined on a summarized series"),
        },
    }
}
