//! Hour-resolution UTC timestamps and calendar months.
//!
//! The core represents time as whole hours since the Unix epoch; the
//! companion crate converts to and from RFC 3339 text at the file boundary.

use core::fmt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A UTC timestamp truncated to the hour, stored as hours since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HourStamp(pub i64);

impl HourStamp {
    /// Day index (days since the Unix epoch, UTC midnight boundary).
    pub fn day(self) -> i64 {
        self.0.div_euclid(24)
    }

    /// Hour of day in `0..24`.
    pub fn hour_of_day(self) -> u8 {
        self.0.rem_euclid(24) as u8
    }

    /// Calendar month containing this hour.
    pub fn month(self) -> Month {
        let (year, month, _) = civil_from_days(self.day());
        Month { year, month }
    }
}

/// A calendar (year, month) pair.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Month {
    pub year: i32,
    /// 1-based month number.
    pub month: u8,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(alloc::format!(
                "month {month} outside 1..=12"
            )));
        }
        Ok(Month {
            year,
            month: month as u8,
        })
    }

    /// The month immediately after this one.
    pub fn next(self) -> Month {
        if self.month == 12 {
            Month {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Month {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Days since the Unix epoch for a proleptic-Gregorian civil date.
pub fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year } as i64;
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let m = month as i64;
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + day as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Civil date `(year, month, day)` for days since the Unix epoch.
pub fn civil_from_days(days: i64) -> (i32, u8, u8) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    (
        (if m <= 2 { y + 1 } else { y }) as i32,
        m as u8,
        d as u8,
    )
}
