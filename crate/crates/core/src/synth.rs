//! Seeded synthetic data with a planted, recoverable signal.
//!
//! The generator lays out cells in a bounding box, draws two latent traits
//! per cell (smooth spatial fields plus cell-level noise, rank-mapped to
//! `(0, 1)`), and wires them into the data so the pipeline can rediscover
//! them:
//!
//! * trait `u` sets the day-to-day variability of the at-home fraction, so
//!   it surfaces as `smartSteps.daily.athome.mean.sd`;
//! * trait `v` does the same for the over-60 fraction, surfacing as
//!   `smartSteps.daily.ageover60frac.mean.sd`;
//! * crime counts are Poisson with a rate increasing in
//!   `signal_strength · (u + v)`, so at full strength the planted features
//!   predict the labels and at zero strength nothing does;
//! * profile metrics `m01`/`m02` observe the two spatial fields at the
//!   profile location, a deliberately coarser view of the same signal.
//!
//! Everything is drawn from per-purpose and per-cell RNG streams, so output
//! is a pure function of the configuration and independent of evaluation
//! order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::calendar::{days_from_civil, HourStamp, Month};
use crate::data::{BoroughProfile, CrimeEvent, HourlyObservation};
use crate::error::{Error, Result};
use crate::geo::{Cell, CellId, CellUniverse, GeoPoint, EARTH_RADIUS_M};
use crate::math;
use crate::rng::stream_rng;

/// Feature names the generator plants signal into, strongest first.
pub const PLANTED_FEATURES: [&str; 2] = [
    "smartSteps.daily.athome.mean.sd",
    "smartSteps.daily.ageover60frac.mean.sd",
];

// RNG stream layout. Per-cell streams are offset far above the shared ones
// so no two purposes ever read the same stream.
const STREAM_GEOMETRY: u64 = 0;
const STREAM_FIELDS: u64 = 1;
const STREAM_PROFILES: u64 = 2;
const CELL_STREAM_BASE: u64 = 1 << 32;
const CRIME_STREAM_BASE: u64 = 1 << 33;

// Crime intensity: `rate = BASE_RATE + LAMBDA0 · exp(GAMMA · s · (u + v − 1))`
// with the traits uniform on (0, 1). BASE_RATE keeps even the calmest cells
// reporting a few crimes (so they stay in the labeled population), LAMBDA0
// sets the median count, and GAMMA sets how sharply the traits separate
// high- from low-crime cells.
const BASE_RATE: f64 = 1.8;
const LAMBDA0: f64 = 5.8;
const GAMMA: f64 = 2.4;
/// Variance share of the latent traits explained by the spatial fields; the
/// rest is cell-idiosyncratic (invisible to the profile metrics).
const FIELD_SHARE: f64 = 0.4;
/// Day-to-day standard deviation of the planted daily means, as a function
/// of the trait: `DAY_SD_MIN + trait · (DAY_SD_MAX − DAY_SD_MIN)`.
const DAY_SD_MIN: f64 = 0.03;
const DAY_SD_MAX: f64 = 0.30;
/// Within-day noise of the two planted fractions: typical level, and the
/// log-scale spread of the per-cell level around it. Large relative to the
/// hour-to-hour structure on purpose, and varying cell to cell independently
/// of the traits: daily means average it away (keeping the planted
/// day-to-day signal crisp), while window-level summaries of the same
/// series — total standard deviations, window extremes, entropies — mostly
/// measure this nuisance level, so the signal surfaces through the planted
/// feature names rather than through every correlated cousin.
const FRACTION_HOUR_SD: f64 = 0.15;
const FRACTION_HOUR_SD_LOG_SPREAD: f64 = 0.4;
/// Trait-independent day-to-day variation of the crowd volume, the working
/// share, and the age-bucket shares. The planted traits modulate *fraction*
/// variability, but fractions also bleed into every derived count and share
/// column (residents = footfall · at-home, and so on); this masking noise
/// keeps those columns' day-to-day movement dominated by something the
/// labels do not depend on, so the derived columns cannot act as stand-ins
/// for the planted features.
const FOOTFALL_DAY_SD: f64 = 0.40;
const WORK_DAY_SD: f64 = 0.30;
const SHARE_DAY_SD: f64 = 0.40;

/// Within-day structure: each day splits into six 4-hour blocks whose offsets
/// (mean-centered, so daily means are untouched) perturb the at-home and
/// over-60 fractions. Sub-daily windows therefore carry extra variation that
/// day-level summaries never see, instead of acting as redundant copies of
/// the day-to-day spread the traits control.
const BLOCK_SD: f64 = 0.12;

/// Geographic extent of the generated cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    fn validate(&self) -> Result<()> {
        GeoPoint::new(self.lat_min, self.lon_min)?;
        GeoPoint::new(self.lat_max, self.lon_max)?;
        if !(self.lat_min < self.lat_max && self.lon_min < self.lon_max) {
            return Err(Error::Config(format!(
                "degenerate bounding box [{}, {}] x [{}, {}]",
                self.lat_min, self.lat_max, self.lon_min, self.lon_max
            )));
        }
        Ok(())
    }

    fn mid_lat(&self) -> f64 {
        (self.lat_min + self.lat_max) / 2.0
    }
}

/// Generator configuration. The default is the desk-scale benchmark: 1000
/// cells, three weeks of hours, full signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_cells: usize,
    /// Observation span in hours, starting at `start`.
    pub n_hours: usize,
    /// First observed hour; must be midnight UTC so daily summaries line up
    /// with the generator's day blocks.
    pub start: HourStamp,
    pub bbox: BoundingBox,
    /// 0 removes the planted signal entirely; 1 is full strength.
    pub signal_strength: f64,
    pub n_profiles: usize,
    /// Names the planted signal surfaces as; must be drawn from
    /// [`PLANTED_FEATURES`].
    pub planted_features: Vec<String>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            n_cells: 1000,
            n_hours: 21 * 24,
            start: HourStamp(days_from_civil(2020, 12, 7) * 24),
            bbox: BoundingBox {
                lat_min: 51.30,
                lat_max: 51.70,
                lon_min: -0.50,
                lon_max: 0.30,
            },
            signal_strength: 1.0,
            n_profiles: 6,
            planted_features: PLANTED_FEATURES.iter().map(|s| String::from(*s)).collect(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=10_000).contains(&self.n_cells) {
            return Err(Error::Config(format!(
                "n_cells {} outside 2..=10000",
                self.n_cells
            )));
        }
        if !(24..=20_000).contains(&self.n_hours) {
            return Err(Error::Config(format!(
                "n_hours {} outside 24..=20000",
                self.n_hours
            )));
        }
        if self.start.hour_of_day() != 0 {
            return Err(Error::Config(
                "observation start must be midnight UTC".into(),
            ));
        }
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::Config(format!(
                "signal_strength {} outside [0, 1]",
                self.signal_strength
            )));
        }
        if self.n_profiles == 0 || self.n_profiles > self.n_cells {
            return Err(Error::Config(format!(
                "n_profiles {} outside 1..=n_cells",
                self.n_profiles
            )));
        }
        for name in &self.planted_features {
            if !PLANTED_FEATURES.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "cannot plant signal into unknown feature {name}"
                )));
            }
        }
        Ok(())
    }
}

/// One generated world: geometry, observations, crime, and profiles.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub universe: CellUniverse,
    pub observations: Vec<HourlyObservation>,
    pub events: Vec<CrimeEvent>,
    pub profiles: Vec<BoroughProfile>,
    /// The month all crime events fall in: the one after the last observed
    /// hour.
    pub crime_month: Month,
}

/// A smooth random scalar field: a handful of signed Gaussian bumps.
struct BumpField {
    bumps: Vec<(f64, f64, f64)>, // (lat, lon, weight)
    inv_two_scale_sq: f64,
    cos_mid_lat: f64,
}

impl BumpField {
    fn random(rng: &mut ChaCha8Rng, bbox: &BoundingBox) -> Self {
        use rand::Rng;
        let extent = (bbox.lat_max - bbox.lat_min).max(bbox.lon_max - bbox.lon_min);
        let scale = 0.35 * extent;
        let bumps = (0..6)
            .map(|k| {
                let lat = bbox.lat_min + rng.random::<f64>() * (bbox.lat_max - bbox.lat_min);
                let lon = bbox.lon_min + rng.random::<f64>() * (bbox.lon_max - bbox.lon_min);
                let magnitude = 0.5 + rng.random::<f64>();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (lat, lon, sign * magnitude)
            })
            .collect();
        BumpField {
            bumps,
            inv_two_scale_sq: 1.0 / (2.0 * scale * scale),
            cos_mid_lat: math::cos(bbox.mid_lat().to_radians()),
        }
    }

    fn value(&self, p: GeoPoint) -> f64 {
        self.bumps
            .iter()
            .map(|&(lat, lon, w)| {
                let dlat = p.lat() - lat;
                let dlon = (p.lon() - lon) * self.cos_mid_lat;
                w * math::exp(-(dlat * dlat + dlon * dlon) * self.inv_two_scale_sq)
            })
            .sum()
    }
}

/// Standardize in place, returning `(mean, sd)`; a zero-spread slice
/// becomes all zeros.
fn standardize(values: &mut [f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = math::sqrt(var);
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
    (mean, sd)
}

/// Map values to `(0, 1)` by rank: the r-th smallest of n becomes
/// `(r + 0.5) / n`. Ties break by index, so the map is total.
fn rank_to_unit(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut unit = alloc::vec![0.0f64; n];
    for (rank, &i) in order.iter().enumerate() {
        unit[i] = (rank as f64 + 0.5) / n as f64;
    }
    unit
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random::<f64>()
}

/// Unit-variance hour noise with two humps instead of one. Sample means
/// average it away like any other noise, but sample medians churn between
/// the humps, which keeps median-of-hours statistics from tracking slow
/// day-to-day movements as cleanly as the hourly mean does.
fn bimodal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (sign + 0.8 * normal(rng)) / math::sqrt(1.64)
}

/// Six 4-hour block offsets for one day, mean-centered and scaled by
/// [`BLOCK_SD`] so they redistribute a fraction within the day without
/// moving its daily mean.
fn centered_blocks(rng: &mut ChaCha8Rng) -> [f64; 6] {
    let mut blocks = [0.0f64; 6];
    for b in &mut blocks {
        *b = normal(rng);
    }
    let mean: f64 = blocks.iter().sum::<f64>() / 6.0;
    for b in &mut blocks {
        *b = BLOCK_SD * (*b - mean);
    }
    blocks
}

const CRIME_TYPES: [&str; 5] = ["burglary", "robbery", "vehicle", "violence", "theft"];

/// Generate a full synthetic world from the configuration.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let n = config.n_cells;

    // Geometry: uniform cell centroids and areas.
    let mut geo_rng = stream_rng(config.seed, STREAM_GEOMETRY);
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let lat = config.bbox.lat_min
            + uniform(&mut geo_rng) * (config.bbox.lat_max - config.bbox.lat_min);
        let lon = config.bbox.lon_min
            + uniform(&mut geo_rng) * (config.bbox.lon_max - config.bbox.lon_min);
        let area = 1.0e5 + uniform(&mut geo_rng) * 4.0e5;
        cells.push(Cell::new(CellId(i as u64), GeoPoint::new(lat, lon)?, area)?);
    }
    let universe = CellUniverse::new(cells)?;

    // Largest safe jitter radius: events stay strictly nearest to their own
    // centroid as long as the radius is below half the minimum spacing.
    let mut min_spacing = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = crate::geo::haversine_distance(
                universe.cells()[i].centroid,
                universe.cells()[j].centroid,
            );
            if d < min_spacing {
                min_spacing = d;
            }
        }
    }
    if !(min_spacing > 0.0) {
        return Err(Error::Config(
            "two generated cells coincide; use a different seed".into(),
        ));
    }
    let jitter_radius_m = 0.4 * min_spacing / 2.0;

    // Latent traits: spatial field value plus cell noise, rank-mapped. Two
    // independent six-bump fields can still land highly correlated over the
    // cell population (a handful of bumps has few effective degrees of
    // freedom), which would couple the two traits and flatten the u + v
    // crime gradient; orthogonalizing the second field against the first
    // guarantees two genuinely separate factors at every seed.
    let mut field_rng = stream_rng(config.seed, STREAM_FIELDS);
    let field_a = BumpField::random(&mut field_rng, &config.bbox);
    let field_b = BumpField::random(&mut field_rng, &config.bbox);
    let mut field_a_at_cell: Vec<f64> = universe
        .cells()
        .iter()
        .map(|c| field_a.value(c.centroid))
        .collect();
    let mut field_b_at_cell: Vec<f64> = universe
        .cells()
        .iter()
        .map(|c| field_b.value(c.centroid))
        .collect();
    let (mu_a, sd_a) = standardize(&mut field_a_at_cell);
    let (mu_b, sd_b) = standardize(&mut field_b_at_cell);
    let nf = n as f64;
    let beta = field_a_at_cell
        .iter()
        .zip(&field_b_at_cell)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / nf;
    for (b, a) in field_b_at_cell.iter_mut().zip(&field_a_at_cell) {
        *b -= beta * a;
    }
    let (mu_r, sd_r) = standardize(&mut field_b_at_cell);
    // The same transform, applicable at any point (profiles sample it too).
    let z_a = |p: GeoPoint| {
        if sd_a > 0.0 {
            (field_a.value(p) - mu_a) / sd_a
        } else {
            0.0
        }
    };
    let z_b = |p: GeoPoint| {
        let raw = if sd_b > 0.0 {
            (field_b.value(p) - mu_b) / sd_b
        } else {
            0.0
        };
        if sd_r > 0.0 {
            (raw - beta * z_a(p) - mu_r) / sd_r
        } else {
            0.0
        }
    };

    let field_w = math::sqrt(FIELD_SHARE);
    let noise_w = math::sqrt(1.0 - FIELD_SHARE);
    let mut cell_rngs: Vec<ChaCha8Rng> = Vec::with_capacity(n);
    let mut raw_u = Vec::with_capacity(n);
    let mut raw_v = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(config.seed, CELL_STREAM_BASE + i as u64);
        raw_u.push(field_w * field_a_at_cell[i] + noise_w * normal(&mut rng));
        raw_v.push(field_w * field_b_at_cell[i] + noise_w * normal(&mut rng));
        cell_rngs.push(rng);
    }
    let trait_u = rank_to_unit(&raw_u);
    let trait_v = rank_to_unit(&raw_v);

    // Hourly observations, cell by cell.
    let n_days = config.n_hours.div_ceil(24);
    let mut observations = Vec::with_capacity(n * config.n_hours);
    for i in 0..n {
        let rng = &mut cell_rngs[i];
        let day_sd_home = DAY_SD_MIN + trait_u[i] * (DAY_SD_MAX - DAY_SD_MIN);
        let day_sd_over60 = DAY_SD_MIN + trait_v[i] * (DAY_SD_MAX - DAY_SD_MIN);

        let scale = math::exp(math::ln(80.0) + 0.4 * normal(rng));
        let peak_hour = 24.0 * uniform(rng);
        let male_base = 0.44 + 0.12 * uniform(rng);
        let work_share_base = 0.3 + 0.4 * uniform(rng);
        let share_gamma = Gamma::new(2.0, 1.0).expect("valid gamma");
        let base_shares: Vec<f64> = {
            let draws: Vec<f64> = (0..5).map(|_| share_gamma.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|d| d / total).collect()
        };
        let home_hour_sd =
            FRACTION_HOUR_SD * math::exp(FRACTION_HOUR_SD_LOG_SPREAD * normal(rng));
        let over60_hour_sd =
            FRACTION_HOUR_SD * math::exp(FRACTION_HOUR_SD_LOG_SPREAD * normal(rng));

        let home_day_mean: Vec<f64> = (0..n_days)
            .map(|_| (0.5 + day_sd_home * normal(rng)).clamp(0.05, 0.95))
            .collect();
        let over60_day_mean: Vec<f64> = (0..n_days)
            .map(|_| (0.5 + day_sd_over60 * normal(rng)).clamp(0.05, 0.95))
            .collect();
        let footfall_day: Vec<f64> = (0..n_days)
            .map(|_| math::exp(FOOTFALL_DAY_SD * normal(rng)))
            .collect();
        let work_day_mean: Vec<f64> = (0..n_days)
            .map(|_| (work_share_base + WORK_DAY_SD * normal(rng)).clamp(0.05, 0.95))
            .collect();
        let share_day: Vec<Vec<f64>> = (0..n_days)
            .map(|_| {
                base_shares
                    .iter()
                    .map(|s| s * math::exp(SHARE_DAY_SD * normal(rng)))
                    .collect()
            })
            .collect();
        let home_blocks: Vec<[f64; 6]> = (0..n_days).map(|_| centered_blocks(rng)).collect();
        let over60_blocks: Vec<[f64; 6]> = (0..n_days).map(|_| centered_blocks(rng)).collect();

        for t in 0..config.n_hours {
            let hour = HourStamp(config.start.0 + t as i64);
            let day = t / 24;
            let hour_angle = core::f64::consts::TAU * (hour.hour_of_day() as f64) / 24.0;
            let footfall = scale
                * footfall_day[day]
                * (1.0 + 0.5 * math::sin(hour_angle - core::f64::consts::TAU * peak_hour / 24.0))
                * math::exp(0.30 * normal(rng));
            let block = (hour.hour_of_day() as usize) / 4;
            let at_home = (home_day_mean[day]
                + home_blocks[day][block]
                + 0.10 * math::cos(hour_angle)
                + home_hour_sd * bimodal(rng))
            .clamp(0.02, 0.98);
            let over60 = (over60_day_mean[day]
                + over60_blocks[day][block]
                + 0.10 * math::cos(hour_angle - 0.75 * core::f64::consts::TAU)
                + over60_hour_sd * bimodal(rng))
            .clamp(0.02, 0.98);
            let work_share = (work_day_mean[day] + 0.05 * normal(rng)).clamp(0.05, 0.95);
            let male_frac = (male_base + 0.05 * normal(rng)).clamp(0.05, 0.95);

            let residents = footfall * at_home;
            let workers = footfall * (1.0 - at_home) * work_share;
            let visitors = footfall - residents - workers;
            let males = footfall * male_frac;
            let age_over_60 = footfall * over60;
            let younger_total = footfall - age_over_60;
            let jittered: Vec<f64> = share_day[day]
                .iter()
                .map(|s| s * math::exp(0.1 * normal(rng)))
                .collect();
            let jitter_total: f64 = jittered.iter().sum();
            let younger: Vec<f64> = jittered
                .iter()
                .map(|s| younger_total * s / jitter_total)
                .collect();

            observations.push(HourlyObservation {
                cell: CellId(i as u64),
                hour,
                footfall,
                residents,
                workers,
                visitors,
                males,
                females: footfall - males,
                age_0_20: younger[0],
                age_21_30: younger[1],
                age_31_40: younger[2],
                age_41_50: younger[3],
                age_51_60: younger[4],
                age_over_60,
            });
        }
    }

    // Profiles: coarse observers of the same two fields.
    let mut profile_rng = stream_rng(config.seed, STREAM_PROFILES);
    let mut profiles = Vec::with_capacity(config.n_profiles);
    for j in 0..config.n_profiles {
        let lat = config.bbox.lat_min
            + uniform(&mut profile_rng) * (config.bbox.lat_max - config.bbox.lat_min);
        let lon = config.bbox.lon_min
            + uniform(&mut profile_rng) * (config.bbox.lon_max - config.bbox.lon_min);
        let location = GeoPoint::new(lat, lon)?;
        let mut metrics = Vec::with_capacity(68);
        metrics.push(z_a(location) + 0.5 * normal(&mut profile_rng));
        metrics.push(z_b(location) + 0.5 * normal(&mut profile_rng));
        for _ in 2..68 {
            metrics.push(normal(&mut profile_rng));
        }
        profiles.push(BoroughProfile {
            id: format!("P{:02}", j + 1),
            location,
            metrics,
        });
    }

    // Crime events for the month after the observation span.
    let last_hour = HourStamp(config.start.0 + config.n_hours as i64 - 1);
    let crime_month = last_hour.month().next();
    let meters_per_deg = EARTH_RADIUS_M * core::f64::consts::PI / 180.0;
    let mut events = Vec::new();
    for i in 0..n {
        let mut rng = stream_rng(config.seed, CRIME_STREAM_BASE + i as u64);
        let rate = BASE_RATE
            + LAMBDA0
                * math::exp(GAMMA * config.signal_strength * (trait_u[i] + trait_v[i] - 1.0));
        let count = Poisson::new(rate).expect("positive rate").sample(&mut rng) as u64;
        let centroid = universe.cells()[i].centroid;
        let cos_lat = math::cos(centroid.lat().to_radians());
        for _ in 0..count {
            let angle = core::f64::consts::TAU * uniform(&mut rng);
            let radius_m = jitter_radius_m * math::sqrt(uniform(&mut rng));
            let lat = centroid.lat() + radius_m * math::cos(angle) / meters_per_deg;
            let lon = centroid.lon() + radius_m * math::sin(angle) / (meters_per_deg * cos_lat);
            events.push(CrimeEvent {
                id: format!("c{:06}", events.len() + 1),
                month: crime_month,
                location: GeoPoint::new(lat, lon)?,
                lsoa_code: format!("S{:05}", i),
                crime_type: String::from(CRIME_TYPES[events.len() % CRIME_TYPES.len()]),
            });
        }
    }

    Ok(SyntheticData {
        universe,
        observations,
        events,
        profiles,
        crime_month,
    })
}
