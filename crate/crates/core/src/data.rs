//! Validated record types for the three input feeds.
//!
//! Parsing from files lives in the companion crate; this module only defines
//! the in-memory shapes and their domain checks, so every downstream stage can
//! assume records are well-formed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calendar::{HourStamp, Month};
use crate::error::{Error, Result};
use crate::geo::{CellId, GeoPoint};

/// Number of aggregate count columns in one hourly observation.
pub const OBSERVATION_COUNT_COLUMNS: usize = 12;

/// Number of census-style metrics attached to one borough profile.
pub const PROFILE_METRIC_COUNT: usize = 68;

/// One hour of aggregate mobile-presence counts for one cell.
///
/// Counts are stored as `f64` because the upstream aggregates are themselves
/// estimates (extrapolated from a market-share sample) and need not be whole
/// numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyObservation {
    pub cell: CellId,
    pub hour: HourStamp,
    /// Total people present.
    pub footfall: f64,
    /// People whose home location is this cell.
    pub residents: f64,
    /// People whose work location is this cell.
    pub workers: f64,
    /// People neither living nor working here.
    pub visitors: f64,
    pub males: f64,
    pub females: f64,
    pub age_0_20: f64,
    pub age_21_30: f64,
    pub age_31_40: f64,
    pub age_41_50: f64,
    pub age_51_60: f64,
    pub age_over_60: f64,
}

impl HourlyObservation {
    /// The count columns in schema order (matching [`count_column_names`]).
    pub fn counts(&self) -> [f64; OBSERVATION_COUNT_COLUMNS] {
        [
            self.footfall,
            self.residents,
            self.workers,
            self.visitors,
            self.males,
            self.females,
            self.age_0_20,
            self.age_21_30,
            self.age_31_40,
            self.age_41_50,
            self.age_51_60,
            self.age_over_60,
        ]
    }

    /// Reject non-finite or negative counts.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in count_column_names().iter().zip(self.counts()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidInput(alloc::format!(
                    "cell {} hour {}: {name} = {value} (must be finite and >= 0)",
                    self.cell,
                    self.hour.0
                )));
            }
        }
        Ok(())
    }
}

/// Schema-order names of the observation count columns.
pub const fn count_column_names() -> &'static [&'static str; OBSERVATION_COUNT_COLUMNS] {
    &[
        "footfall",
        "residents",
        "workers",
        "visitors",
        "males",
        "females",
        "a0_20",
        "a21_30",
        "a31_40",
        "a41_50",
        "a51_60",
        "a_over60",
    ]
}

/// One recorded crime, located by coordinates and dated to month precision.
#[derive(Debug, Clone, PartialEq)]
pub struct CrimeEvent {
    pub id: String,
    pub month: Month,
    pub location: GeoPoint,
    pub lsoa_code: String,
    pub crime_type: String,
}

/// A point-anchored vector of `PROFILE_METRIC_COUNT` area statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BoroughProfile {
    pub id: String,
    pub location: GeoPoint,
    pub metrics: Vec<f64>,
}

impl BoroughProfile {
    /// Reject profiles with the wrong metric count or non-finite entries.
    pub fn validate(&self) -> Result<()> {
        if self.metrics.len() != PROFILE_METRIC_COUNT {
            return Err(Error::Schema(alloc::format!(
                "profile {}: expected {PROFILE_METRIC_COUNT} metrics, got {}",
                self.id,
                self.metrics.len()
            )));
        }
        if let Some(i) = self.metrics.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "profile {}: metric m{:02} is not finite",
                self.id,
                i + 1
            )));
        }
        Ok(())
    }
}
