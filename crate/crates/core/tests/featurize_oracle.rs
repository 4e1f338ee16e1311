//! Cross-checks the feature extractor against an independent, deliberately
//! naive re-implementation of the whole vocabulary.
//!
//! The oracle below recomputes every statistic from first principles (sorting
//! for medians, two-pass variance, explicit window bucketing) without touching
//! the library's stats or windowing code, so agreement on a messy dataset —
//! missing hours, zero-footfall hours, a near-empty cell — pins down the
//! semantics of all 2312 columns.

use std::collections::BTreeMap;

use hotspot_core::calendar::{days_from_civil, HourStamp};
use hotspot_core::data::{BoroughProfile, HourlyObservation, PROFILE_METRIC_COUNT};
use hotspot_core::features::{featurize, full_feature_names};
use hotspot_core::geo::{haversine_distance, Cell, CellId, CellUniverse, GeoPoint};
use hotspot_core::rng::stream_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const N_CELLS: u64 = 10;
const N_HOURS: i64 = 7 * 24;

fn start_hour() -> i64 {
    days_from_civil(2021, 3, 1) * 24
}

fn universe() -> CellUniverse {
    let cells = (0..N_CELLS)
        .map(|i| {
            let lat = 51.40 + 0.03 * (i / 3) as f64;
            let lon = -0.20 + 0.03 * (i % 3) as f64;
            Cell::new(CellId(i), GeoPoint::new(lat, lon).unwrap(), 2.0e5).unwrap()
        })
        .collect();
    CellUniverse::new(cells).unwrap()
}

fn profiles() -> Vec<BoroughProfile> {
    [(51.40, -0.20), (51.46, -0.14), (51.43, -0.17)]
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| BoroughProfile {
            id: format!("P{i}"),
            location: GeoPoint::new(lat, lon).unwrap(),
            metrics: (0..PROFILE_METRIC_COUNT)
                .map(|m| (i * 100 + m) as f64 / 7.0)
                .collect(),
        })
        .collect()
}

/// Messy but deterministic observations: some hours missing entirely, some
/// with zero footfall, one cell nearly unobserved.
fn observations() -> Vec<HourlyObservation> {
    let mut rng = stream_rng(2024, 0);
    let mut rows = Vec::new();
    for cell in 0..N_CELLS {
        for h in 0..N_HOURS {
            if cell == 9 && h >= 30 {
                continue; // sparse cell: 30 hours only
            }
            if rng.random::<f64>() < 0.08 {
                continue; // missing hour
            }
            let zero_hour = rng.random::<f64>() < 0.04;
            let footfall = if zero_hour {
                0.0
            } else {
                20.0 + 180.0 * rng.random::<f64>()
            };
            let draw = |rng: &mut ChaCha8Rng, cap: f64| -> f64 {
                if zero_hour {
                    0.0
                } else {
                    cap * rng.random::<f64>()
                }
            };
            rows.push(HourlyObservation {
                cell: CellId(cell),
                hour: HourStamp(start_hour() + h),
                footfall,
                residents: draw(&mut rng, footfall),
                workers: draw(&mut rng, footfall),
                visitors: draw(&mut rng, footfall),
                males: draw(&mut rng, footfall),
                females: draw(&mut rng, footfall),
                age_0_20: draw(&mut rng, footfall / 2.0),
                age_21_30: draw(&mut rng, footfall / 2.0),
                age_31_40: draw(&mut rng, footfall / 2.0),
                age_41_50: draw(&mut rng, footfall / 2.0),
                age_51_60: draw(&mut rng, footfall / 2.0),
                age_over_60: draw(&mut rng, footfall / 2.0),
            });
        }
    }
    rows
}

// ---- independent statistic implementations ----

fn present(values: &[f64]) -> Vec<f64> {
    values.iter().copied().filter(|v| !v.is_nan()).collect()
}

fn o_mean(values: &[f64]) -> Option<f64> {
    let xs = present(values);
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn o_median(values: &[f64]) -> Option<f64> {
    let mut xs = present(values);
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

fn o_sd(values: &[f64]) -> Option<f64> {
    let xs = present(values);
    if xs.len() < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

fn o_min(values: &[f64]) -> Option<f64> {
    present(values).into_iter().min_by(f64::total_cmp)
}

fn o_max(values: &[f64]) -> Option<f64> {
    present(values).into_iter().max_by(f64::total_cmp)
}

fn o_entropy(values: &[f64]) -> Option<f64> {
    let xs = present(values);
    if xs.is_empty() {
        return None;
    }
    let lowest = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = if lowest < 0.0 {
        xs.iter().map(|x| x - lowest).collect()
    } else {
        xs
    };
    let total: f64 = shifted.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(
        shifted
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| {
                let p = x / total;
                -p * p.log2()
            })
            .sum(),
    )
}

fn o_stat(values: &[f64], token: &str) -> Option<f64> {
    match token {
        "mean" => o_mean(values),
        "median" => o_median(values),
        "sd" => o_sd(values),
        "min" => o_min(values),
        "max" => o_max(values),
        "entropy.empirical" => o_entropy(values),
        _ => panic!("unknown stat token {token}"),
    }
}

/// Hourly value of one variable, straight from the schema definition.
fn o_variable(obs: &HourlyObservation, token: &str) -> f64 {
    let frac = |num: f64| {
        if obs.footfall > 0.0 {
            num / obs.footfall
        } else {
            f64::NAN
        }
    };
    match token {
        "footfall" => obs.footfall,
        "residents" => obs.residents,
        "workers" => obs.workers,
        "visitors" => obs.visitors,
        "males" => obs.males,
        "females" => obs.females,
        "age020" => obs.age_0_20,
        "age2130" => obs.age_21_30,
        "age3140" => obs.age_31_40,
        "age4150" => obs.age_41_50,
        "age5160" => obs.age_51_60,
        "ageover60" => obs.age_over_60,
        "athome" => frac(obs.residents),
        "atwork" => frac(obs.workers),
        "visiting" => frac(obs.visitors),
        "malefrac" => frac(obs.males),
        "age020frac" => frac(obs.age_0_20),
        "age2130frac" => frac(obs.age_21_30),
        "age3140frac" => frac(obs.age_31_40),
        "age4150frac" => frac(obs.age_41_50),
        "age5160frac" => frac(obs.age_51_60),
        "ageover60frac" => frac(obs.age_over_60),
        _ => panic!("unknown variable token {token}"),
    }
}

/// Group a dense hourly series into midnight-aligned tumbling windows and
/// drop windows with no present value.
fn o_windows(series: &[(i64, f64)], window: i64) -> Vec<Vec<f64>> {
    let mut buckets: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for &(hour, value) in series {
        buckets.entry(hour.div_euclid(window)).or_default().push(value);
    }
    buckets
        .into_values()
        .filter(|vs| vs.iter().any(|v| !v.is_nan()))
        .collect()
}

/// One expected feature value from the naive machinery; NaN when undefined.
fn o_feature(series: &[(i64, f64)], name: &str) -> f64 {
    let parts: Vec<&str> = name.splitn(3, '.').collect();
    assert_eq!(parts[0], "smartSteps");
    let (granularity, rest) = (parts[1], parts[2]);
    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    if granularity == "monthly" {
        let (_variable, stat) = rest.split_once('.').unwrap();
        return o_stat(&values, stat).unwrap_or(f64::NAN);
    }
    let window = match granularity {
        "hourly" => 1,
        "4hour" => 4,
        "daily" => 24,
        _ => panic!("unknown granularity {granularity}"),
    };
    // Split "<variable>.<inner>.<outer>" where either stat may itself be the
    // two-segment entropy token.
    let (_variable, stats_part) = rest.split_once('.').unwrap();
    let (inner, outer) = if let Some(rest) = stats_part.strip_prefix("entropy.empirical.") {
        ("entropy.empirical", rest)
    } else {
        stats_part.split_once('.').unwrap()
    };
    if (values.len() as i64) < window {
        return f64::NAN;
    }
    let inner_series: Vec<f64> = o_windows(series, window)
        .iter()
        .map(|w| o_stat(w, inner).unwrap_or(f64::NAN))
        .collect();
    if inner_series.is_empty() {
        return f64::NAN;
    }
    o_stat(&inner_series, outer).unwrap_or(f64::NAN)
}

fn assert_feature_eq(got: f64, want: f64, cell: u64, name: &str) {
    if got.is_nan() || want.is_nan() {
        assert!(
            got.is_nan() && want.is_nan(),
            "cell {cell} {name}: got {got}, oracle {want}"
        );
        return;
    }
    let tol = 1e-9 * want.abs().max(1.0);
    assert!(
        (got - want).abs() <= tol,
        "cell {cell} {name}: got {got}, oracle {want}"
    );
}

#[test]
fn every_column_matches_the_naive_oracle() {
    let universe = universe();
    let profiles = profiles();
    let observations = observations();
    let matrix = featurize(&observations, &universe, &profiles).unwrap();
    assert_eq!(matrix.names(), full_feature_names().as_slice());
    assert_eq!(matrix.n_rows(), N_CELLS as usize);

    // Shared span: every cell's series covers the same hours.
    let first = observations.iter().map(|o| o.hour.0).min().unwrap();
    let last = observations.iter().map(|o| o.hour.0).max().unwrap();

    for (row, &cell_id) in matrix.row_ids().iter().enumerate() {
        let by_hour: BTreeMap<i64, &HourlyObservation> = observations
            .iter()
            .filter(|o| o.cell == cell_id)
            .map(|o| (o.hour.0, o))
            .collect();
        for (col, name) in matrix.names().iter().enumerate() {
            let got = matrix.value(row, col);
            if let Some(rest) = name.strip_prefix("borough.m") {
                // Borough columns: metrics of the haversine-nearest profile.
                let centroid = universe.get(cell_id).unwrap().centroid;
                let nearest = profiles
                    .iter()
                    .min_by(|a, b| {
                        haversine_distance(a.location, centroid)
                            .total_cmp(&haversine_distance(b.location, centroid))
                    })
                    .unwrap();
                let metric: usize = rest.parse::<usize>().unwrap() - 1;
                assert_eq!(got, nearest.metrics[metric], "cell {cell_id} {name}");
                continue;
            }
            let token = name.split('.').nth(2).unwrap();
            let series: Vec<(i64, f64)> = (first..=last)
                .map(|h| {
                    let v = by_hour
                        .get(&h)
                        .map(|o| o_variable(o, token))
                        .unwrap_or(f64::NAN);
                    (h, v)
                })
                .collect();
            let want = o_feature(&series, name);
            assert_feature_eq(got, want, cell_id.0, name);
        }
    }
}

#[test]
fn per_cell_rows_reassemble_into_the_full_matrix() {
    use hotspot_core::features::{cell_feature_row, group_by_cell, observation_span};
    use hotspot_core::geo::georeference_profiles;

    let universe = universe();
    let profiles = profiles();
    let observations = observations();
    let matrix = featurize(&observations, &universe, &profiles).unwrap();

    let span = observation_span(&observations).unwrap();
    let groups = group_by_cell(&observations, &universe).unwrap();
    let assignment = georeference_profiles(&profiles, &universe).unwrap();
    // Assemble in reverse cell order to show order does not matter.
    for (row, (cell, indices)) in groups.iter().enumerate().collect::<Vec<_>>().into_iter().rev()
    {
        let metrics = &profiles[assignment[cell]].metrics;
        let rebuilt = cell_feature_row(span, &observations, indices, metrics).unwrap();
        let direct = matrix.row(row);
        assert_eq!(rebuilt.len(), direct.len());
        for (a, b) in rebuilt.iter().zip(&direct) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
