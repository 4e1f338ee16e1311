//! Per-cell crime counts for a target month and the median-split labels.
//!
//! By default only cells with at least one crime enter the labeled
//! population; zero-count cells can be added explicitly when the split
//! threshold should reflect the full universe. Labels are binary: a cell is
//! `High` exactly when its count strictly exceeds the split threshold.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::data::CrimeEvent;
use crate::error::{Error, Result};
use crate::geo::{self, CellId, CellUniverse};
use crate::stats;

/// Monthly crime counts per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrimeCounts {
    pub month: Month,
    counts: BTreeMap<CellId, u64>,
}

impl CrimeCounts {
    pub fn new(month: Month, counts: BTreeMap<CellId, u64>) -> Self {
        CrimeCounts { month, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// True when no cell recorded a crime in the month.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, cell: CellId) -> Option<u64> {
        self.counts.get(&cell).copied()
    }

    /// (cell, count) pairs in ascending cell order.
    pub fn iter(&self) -> impl Iterator<Item = (CellId, u64)> + '_ {
        self.counts.iter().map(|(c, n)| (*c, *n))
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.values().map(|&n| n as f64).collect()
    }

    /// Extend the population with an explicit zero for every universe cell
    /// that recorded no crime. Changes the median, and therefore the split.
    pub fn including_zero_cells(&self, universe: &CellUniverse) -> CrimeCounts {
        let mut counts = self.counts.clone();
        for cell in universe.cells() {
            counts.entry(cell.id).or_insert(0);
        }
        CrimeCounts {
            month: self.month,
            counts,
        }
    }
}

/// Count crimes per cell for one month. Cells without crimes do not appear.
///
/// A month absent from the data is not an error: the result is simply empty,
/// and callers decide whether to warn.
pub fn count_crimes(events: &[CrimeEvent], universe: &CellUniverse, month: Month) -> CrimeCounts {
    let assignment = geo::georeference_events(events, universe);
    let mut counts = BTreeMap::new();
    for (cell, indices) in assignment {
        let in_month = indices
            .iter()
            .filter(|&&i| events[i].month == month)
            .count() as u64;
        if in_month > 0 {
            counts.insert(cell, in_month);
        }
    }
    CrimeCounts { month, counts }
}

/// Distributional summary of a count population (the shape of the target).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// `m3 / m2^{3/2}`; `None` when the distribution is degenerate (m2 = 0).
    pub skewness: Option<f64>,
    /// Non-excess `m4 / m2^2`; `None` when degenerate. Subtract 3 for the
    /// excess convention.
    pub kurtosis: Option<f64>,
}

/// Summarize a count population; needs at least two cells.
pub fn summarize_counts(counts: &CrimeCounts) -> Result<DistributionSummary> {
    let values = counts.values();
    if values.len() < 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "distribution summary needs >= 2 cells, got {}",
            values.len()
        )));
    }
    Ok(DistributionSummary {
        min: stats::quantile(&values, 0.0)?,
        q1: stats::quantile(&values, 0.25)?,
        median: stats::median(&values)?,
        mean: stats::mean(&values)?,
        q3: stats::quantile(&values, 0.75)?,
        max: stats::quantile(&values, 1.0)?,
        skewness: stats::skewness(&values),
        kurtosis: stats::kurtosis(&values),
    })
}

/// Binary crime level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Low,
    High,
}

impl Label {
    pub fn is_high(self) -> bool {
        matches!(self, Label::High)
    }

    /// Class index: low = 0, high = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Low => 0,
            Label::High => 1,
        }
    }
}

/// Labels for a cell population plus the threshold that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    labels: BTreeMap<CellId, Label>,
    split_threshold: f64,
    /// True when the split produced an empty high class (all counts at or
    /// below the threshold) — legal but worth a warning upstream.
    degenerate: bool,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, cell: CellId) -> Option<Label> {
        self.labels.get(&cell).copied()
    }

    /// (cell, label) pairs in ascending cell order.
    pub fn iter(&self) -> impl Iterator<Item = (CellId, Label)> + '_ {
        self.labels.iter().map(|(c, l)| (*c, *l))
    }

    pub fn split_threshold(&self) -> f64 {
        self.split_threshold
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn n_high(&self) -> usize {
        self.labels.values().filter(|l| l.is_high()).count()
    }

    pub fn high_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.n_high() as f64 / self.labels.len() as f64
        }
    }

    /// Labels aligned to an explicit cell order; fails on a cell without a
    /// label.
    pub fn aligned_to(&self, cells: &[CellId]) -> Result<Vec<Label>> {
        cells
            .iter()
            .map(|c| {
                self.get(*c).ok_or_else(|| {
                    Error::InvalidInput(alloc::format!("cell {c} has no label"))
                })
            })
            .collect()
    }
}

/// Label a count population against an explicit threshold: high iff
/// count > threshold.
pub fn split_with_threshold(counts: &CrimeCounts, threshold: f64) -> LabelSet {
    let labels: BTreeMap<CellId, Label> = counts
        .iter()
        .map(|(cell, n)| {
            let label = if (n as f64) > threshold {
                Label::High
            } else {
                Label::Low
            };
            (cell, label)
        })
        .collect();
    let degenerate = labels.values().all(|l| !l.is_high());
    LabelSet {
        labels,
        split_threshold: threshold,
        degenerate,
    }
}

/// Median split: threshold is the population median, high means strictly
/// above it. Needs at least two cells.
pub fn median_split(counts: &CrimeCounts) -> Result<LabelSet> {
    let summary = summarize_counts(counts)?;
    Ok(split_with_threshold(counts, summary.median))
}
