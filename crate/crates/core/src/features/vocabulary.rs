//! The closed feature vocabulary and dotted naming convention.
//!
//! A feature name is `smartSteps.<granularity>.<variable>.<stat>[.<stat>]`:
//! windowed layers carry an inner statistic (within each window) and an outer
//! statistic (across windows), while the whole-period `monthly` layer carries
//! a single statistic. Entropy renders as the two-segment token
//! `entropy.empirical`. Borough metrics are named `borough.m01`..`borough.m68`.
//!
//! The vocabulary is closed so the total column count is a compile-time
//! constant; changing it is a schema change, not a runtime option.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::PROFILE_METRIC_COUNT;
use crate::error::{Error, Result};
use crate::stats::Stat;

/// Per-hour variables derived from one observation row: the twelve raw counts
/// plus ten fractions of footfall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    Footfall,
    Residents,
    Workers,
    Visitors,
    Males,
    Females,
    Age020,
    Age2130,
    Age3140,
    Age4150,
    Age5160,
    AgeOver60,
    /// residents / footfall.
    AtHome,
    /// workers / footfall.
    AtWork,
    /// visitors / footfall.
    Visiting,
    /// males / footfall.
    MaleFrac,
    Age020Frac,
    Age2130Frac,
    Age3140Frac,
    Age4150Frac,
    Age5160Frac,
    AgeOver60Frac,
}

impl Variable {
    pub const ALL: [Variable; 22] = [
        Variable::Footfall,
        Variable::Residents,
        Variable::Workers,
        Variable::Visitors,
        Variable::Males,
        Variable::Females,
        Variable::Age020,
        Variable::Age2130,
        Variable::Age3140,
        Variable::Age4150,
        Variable::Age5160,
        Variable::AgeOver60,
        Variable::AtHome,
        Variable::AtWork,
        Variable::Visiting,
        Variable::MaleFrac,
        Variable::Age020Frac,
        Variable::Age2130Frac,
        Variable::Age3140Frac,
        Variable::Age4150Frac,
        Variable::Age5160Frac,
        Variable::AgeOver60Frac,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Variable::Footfall => "footfall",
            Variable::Residents => "residents",
            Variable::Workers => "workers",
            Variable::Visitors => "visitors",
            Variable::Males => "males",
            Variable::Females => "females",
            Variable::Age020 => "age020",
            Variable::Age2130 => "age2130",
            Variable::Age3140 => "age3140",
            Variable::Age4150 => "age4150",
            Variable::Age5160 => "age5160",
            Variable::AgeOver60 => "ageover60",
            Variable::AtHome => "athome",
            Variable::AtWork => "atwork",
            Variable::Visiting => "visiting",
            Variable::MaleFrac => "malefrac",
            Variable::Age020Frac => "age020frac",
            Variable::Age2130Frac => "age2130frac",
            Variable::Age3140Frac => "age3140frac",
            Variable::Age4150Frac => "age4150frac",
            Variable::Age5160Frac => "age5160frac",
            Variable::AgeOver60Frac => "ageover60frac",
        }
    }

    pub fn from_token(token: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.token() == token)
    }

    /// Evaluate the variable for one hour given the twelve count columns in
    /// schema order. Fractions are undefined (NaN) when footfall is zero —
    /// an empty cell has no "share at home".
    pub fn evaluate(self, counts: &[f64; 12]) -> f64 {
        let footfall = counts[0];
        let frac = |numerator: f64| {
            if footfall > 0.0 {
                numerator / footfall
            } else {
                f64::NAN
            }
        };
        match self {
            Variable::Footfall => counts[0],
            Variable::Residents => counts[1],
            Variable::Workers => counts[2],
            Variable::Visitors => counts[3],
            Variable::Males => counts[4],
            Variable::Females => counts[5],
            Variable::Age020 => counts[6],
            Variable::Age2130 => counts[7],
            Variable::Age3140 => counts[8],
            Variable::Age4150 => counts[9],
            Variable::Age5160 => counts[10],
            Variable::AgeOver60 => counts[11],
            Variable::AtHome => frac(counts[1]),
            Variable::AtWork => frac(counts[2]),
            Variable::Visiting => frac(counts[3]),
            Variable::MaleFrac => frac(counts[4]),
            Variable::Age020Frac => frac(counts[6]),
            Variable::Age2130Frac => frac(counts[7]),
            Variable::Age3140Frac => frac(counts[8]),
            Variable::Age4150Frac => frac(counts[9]),
            Variable::Age5160Frac => frac(counts[10]),
            Variable::AgeOver60Frac => frac(counts[11]),
        }
    }
}

/// Aggregation layers. The three windowed layers summarize within windows of
/// 1, 4, and 24 hours and then across windows; `Monthly` summarizes the whole
/// period in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    Hourly,
    FourHour,
    Daily,
    Monthly,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::Hourly,
        Granularity::FourHour,
        Granularity::Daily,
        Granularity::Monthly,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Granularity::Hourly => "hourly",
            Granularity::FourHour => "4hour",
            Granularity::Daily => "daily",
            Granularity::Monthly => "monthly",
        }
    }

    pub fn from_token(token: &str) -> Option<Granularity> {
        Granularity::ALL.into_iter().find(|g| g.token() == token)
    }

    /// Window length in hours; `None` for the whole-period layer.
    pub fn window_hours(self) -> Option<i64> {
        match self {
            Granularity::Hourly => Some(1),
            Granularity::FourHour => Some(4),
            Granularity::Daily => Some(24),
            Granularity::Monthly => None,
        }
    }

    /// Inner statistics materialized for this layer. One-hour windows hold a
    /// single value, so their sd and entropy are undefined and excluded.
    pub fn inner_stats(self) -> &'static [Stat] {
        match self {
            Granularity::Hourly => &[Stat::Mean, Stat::Median, Stat::Min, Stat::Max],
            Granularity::FourHour | Granularity::Daily => &Stat::ALL,
            Granularity::Monthly => &[],
        }
    }
}

/// One fully-specified mobility feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureKey {
    pub granularity: Granularity,
    pub variable: Variable,
    /// Within-window statistic; for `Monthly` this is the single statistic.
    pub inner: Stat,
    /// Across-window statistic; `None` for `Monthly`.
    pub outer: Option<Stat>,
}

impl FeatureKey {
    /// Dotted feature name.
    pub fn name(&self) -> String {
        match self.outer {
            Some(outer) => alloc::format!(
                "smartSteps.{}.{}.{}.{}",
                self.granularity.token(),
                self.variable.token(),
                self.inner.token(),
                outer.token()
            ),
            None => alloc::format!(
                "smartSteps.{}.{}.{}",
                self.granularity.token(),
                self.variable.token(),
                self.inner.token()
            ),
        }
    }
}

/// Mobility features per variable: 4·6 (hourly) + 6·6 (4-hour) + 6·6 (daily)
/// + 6 (monthly).
pub const FEATURES_PER_VARIABLE: usize = 102;

/// Total mobility features: 22 variables × 102.
pub const SMARTSTEPS_FEATURE_COUNT: usize = Variable::ALL.len() * FEATURES_PER_VARIABLE;

/// Full column count including the appended borough metrics.
pub const TOTAL_FEATURE_COUNT: usize = SMARTSTEPS_FEATURE_COUNT + PROFILE_METRIC_COUNT;

/// Column name prefix of the mobility feature family.
pub const SMARTSTEPS_PREFIX: &str = "smartSteps.";

/// Column name prefix of the borough metric family.
pub const BOROUGH_PREFIX: &str = "borough.";

/// The canonical feature layout: for each variable, the three windowed layers
/// (inner-major, then outer in [`Stat::ALL`] order) followed by the monthly
/// statistics.
pub fn smartsteps_features() -> Vec<FeatureKey> {
    let mut keys = Vec::with_capacity(SMARTSTEPS_FEATURE_COUNT);
    for variable in Variable::ALL {
        for granularity in [
            Granularity::Hourly,
            Granularity::FourHour,
            Granularity::Daily,
        ] {
            for &inner in granularity.inner_stats() {
                for outer in Stat::ALL {
                    keys.push(FeatureKey {
                        granularity,
                        variable,
                        inner,
                        outer: Some(outer),
                    });
                }
            }
        }
        for stat in Stat::ALL {
            keys.push(FeatureKey {
                granularity: Granularity::Monthly,
                variable,
                inner: stat,
                outer: None,
            });
        }
    }
    debug_assert_eq!(keys.len(), SMARTSTEPS_FEATURE_COUNT);
    keys
}

/// Names of the mobility features in canonical order.
pub fn smartsteps_feature_names() -> Vec<String> {
    smartsteps_features().iter().map(FeatureKey::name).collect()
}

/// Name of the i-th (0-based) borough metric column: `borough.m01`…
pub fn borough_metric_name(index: usize) -> String {
    alloc::format!("borough.m{:02}", index + 1)
}

/// All column names: mobility features then borough metrics.
pub fn full_feature_names() -> Vec<String> {
    let mut names = smartsteps_feature_names();
    names.extend((0..PROFILE_METRIC_COUNT).map(borough_metric_name));
    names
}

fn stat_from_input(token: &str) -> Option<Stat> {
    // Accept the bare word "entropy" as well as the rendered two-segment
    // token.
    if token == "entropy" {
        return Some(Stat::Entropy);
    }
    Stat::from_token(token)
}

/// Build a dotted feature name from string tokens, validating every part
/// against the closed vocabulary.
///
/// `outer` must be absent for the `monthly` layer and present otherwise;
/// one-hour windows reject `sd`/`entropy` as the inner statistic.
pub fn feature_name(
    source: &str,
    granularity: &str,
    variable: &str,
    stat: &str,
    outer: Option<&str>,
) -> Result<String> {
    if source != "smartSteps" {
        return Err(Error::Naming(alloc::format!("unknown source {source:?}")));
    }
    let granularity = Granularity::from_token(granularity)
        .ok_or_else(|| Error::Naming(alloc::format!("unknown granularity {granularity:?}")))?;
    let variable = Variable::from_token(variable)
        .ok_or_else(|| Error::Naming(alloc::format!("unknown variable {variable:?}")))?;
    let inner = stat_from_input(stat)
        .ok_or_else(|| Error::Naming(alloc::format!("unknown statistic {stat:?}")))?;
    let outer = match (granularity, outer) {
        (Granularity::Monthly, None) => None,
        (Granularity::Monthly, Some(extra)) => {
            return Err(Error::Naming(alloc::format!(
                "monthly features take no outer statistic, got {extra:?}"
            )));
        }
        (_, None) => {
            return Err(Error::Naming(alloc::format!(
                "{} features need an outer statistic",
                granularity.token()
            )));
        }
        (_, Some(token)) => Some(stat_from_input(token).ok_or_else(|| {
            Error::Naming(alloc::format!("unknown statistic {token:?}"))
        })?),
    };
    if granularity == Granularity::Hourly && !granularity.inner_stats().contains(&inner) {
        return Err(Error::Naming(alloc::format!(
            "{} is undefined inside one-hour windows",
            inner.token()
        )));
    }
    Ok(FeatureKey {
        granularity,
        variable,
        inner,
        outer,
    }
    .name())
}
