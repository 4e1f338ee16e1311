//! CSV schemas for every artifact the pipeline reads or writes.
//!
//! Loaders are strict about structure and lenient about rows: a header that
//! does not match the documented schema is fatal, while a malformed row is
//! collected into a rejection report (line number plus reason) and skipped.
//! Writers emit floats in Rust's shortest round-trip notation and missing
//! values as empty fields, so writing a table and loading it back restores
//! the exact in-memory values.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use hotspot_core::calendar::{HourStamp, Month};
use hotspot_core::data::{BoroughProfile, CrimeEvent, HourlyObservation, PROFILE_METRIC_COUNT};
use hotspot_core::eval::SplitPlan;
use hotspot_core::geo::{Cell, CellId, GeoPoint};
use hotspot_core::labeling::{CrimeCounts, Label, LabelSet};
use hotspot_core::matrix::FeatureMatrix;
use hotspot_core::selection::{CorrelationReport, FeatureRanking};
use hotspot_core::Error;

pub const CELLS_HEADER: [&str; 4] = ["cell_id", "lat", "lon", "area_m2"];
pub const HOURLY_HEADER: [&str; 14] = [
    "cell_id", "hour_start", "footfall", "residents", "workers", "visitors", "males", "females",
    "a0_20", "a21_30", "a31_40", "a41_50", "a51_60", "a_over60",
];
pub const CRIMES_HEADER: [&str; 7] = [
    "crime_id", "year", "month", "lat", "lon", "lsoa_code", "crime_type",
];
pub const LABELS_HEADER: [&str; 3] = ["cell_id", "crime_count", "label"];
pub const RANKING_HEADER: [&str; 4] = ["rank", "feature", "mean_decrease_gini", "percent"];
pub const CORRELATIONS_HEADER: [&str; 3] = ["feature_a", "feature_b", "r"];
pub const REPORT_HEADER: [&str; 6] = ["model", "accuracy", "ci_lo", "ci_hi", "f1", "auc"];
pub const PREDICTIONS_HEADER: [&str; 3] = ["cell_id", "class", "score"];
pub const SPLIT_HEADER: [&str; 2] = ["cell_id", "side"];

/// A skipped input row: 1-based line number in the file plus the reason.
#[derive(Debug, Clone)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

/// Result of loading one table: parsed rows, skipped rows, and free-form
/// notes (currently only borough-metric imputations).
#[derive(Debug)]
pub struct LoadOutcome<T> {
    pub rows: Vec<T>,
    pub rejections: Vec<Rejection>,
    pub notes: Vec<String>,
}

impl<T> LoadOutcome<T> {
    fn new(rows: Vec<T>, rejections: Vec<Rejection>) -> Self {
        LoadOutcome {
            rows,
            rejections,
            notes: Vec::new(),
        }
    }
}

/// Render a float for CSV: shortest string that parses back to the same
/// bits, with NaN (the missing-value marker) as an empty field.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn parse_f64(field: &str) -> std::result::Result<f64, String> {
    if field.is_empty() {
        return Ok(f64::NAN);
    }
    field
        .parse::<f64>()
        .map_err(|_| format!("not a number: {field:?}"))
}

fn parse_finite(field: &str, what: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(field)?;
    if !v.is_finite() {
        return Err(format!("{what} must be a finite number, got {field:?}"));
    }
    Ok(v)
}

fn parse_count(field: &str, what: &str) -> std::result::Result<f64, String> {
    let v = parse_finite(field, what)?;
    if v < 0.0 {
        return Err(format!("{what} is negative: {v}"));
    }
    Ok(v)
}

fn parse_cell_id(field: &str) -> std::result::Result<CellId, String> {
    field
        .parse::<u64>()
        .map(CellId)
        .map_err(|_| format!("cell_id must be an unsigned integer, got {field:?}"))
}

fn parse_point(lat: &str, lon: &str) -> std::result::Result<GeoPoint, String> {
    let lat = parse_finite(lat, "lat")?;
    let lon = parse_finite(lon, "lon")?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

/// Hours since the Unix epoch rendered as RFC 3339 UTC, e.g.
/// `2020-12-07T05:00:00Z`.
pub fn hour_to_rfc3339(hour: HourStamp) -> String {
    DateTime::<Utc>::from_timestamp(hour.0 * 3600, 0)
        .expect("hour stamp out of chrono's range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_hour(field: &str) -> std::result::Result<HourStamp, String> {
    let t = DateTime::parse_from_rfc3339(field)
        .map_err(|e| format!("hour_start {field:?} is not RFC 3339: {e}"))?;
    let secs = t.timestamp();
    if secs.rem_euclid(3600) != 0 {
        return Err(format!("hour_start {field:?} is not on an hour boundary"));
    }
    Ok(HourStamp(secs.div_euclid(3600)))
}

fn open_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file)))
}

fn open_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(file)))
}

/// Check the header row against the documented schema; any deviation is a
/// fatal schema error naming the file.
fn expect_header(
    reader: &mut csv::Reader<BufReader<File>>,
    expected: &[&str],
    path: &Path,
) -> Result<()> {
    let got = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?;
    let got: Vec<&str> = got.iter().collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "{}: header is [{}], expected [{}]",
            path.display(),
            got.join(","),
            expected.join(",")
        ))
        .into());
    }
    Ok(())
}

/// Iterate data records, pushing unreadable ones into the rejection list.
fn for_each_record(
    reader: &mut csv::Reader<BufReader<File>>,
    n_fields: usize,
    rejections: &mut Vec<Rejection>,
    mut handle: impl FnMut(u64, &csv::StringRecord) -> std::result::Result<(), String>,
) -> Result<()> {
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n_fields {
            rejections.push(Rejection {
                line,
                reason: format!("{} fields, expected {n_fields}", record.len()),
            });
            continue;
        }
        if let Err(reason) = handle(line, &record) {
            rejections.push(Rejection { line, reason });
        }
    }
    Ok(())
}

// ---- dataset tables ----

pub fn load_cells(path: &Path) -> Result<LoadOutcome<Cell>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &CELLS_HEADER, path)?;
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    for_each_record(&mut reader, CELLS_HEADER.len(), &mut rejections, |_, r| {
        let id = parse_cell_id(&r[0])?;
        let centroid = parse_point(&r[1], &r[2])?;
        let area = parse_finite(&r[3], "area_m2")?;
        rows.push(Cell::new(id, centroid, area).map_err(|e| e.to_string())?);
        Ok(())
    })?;
    Ok(LoadOutcome::new(rows, rejections))
}

pub fn write_cells(path: &Path, cells: &[Cell]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(CELLS_HEADER)?;
    for c in cells {
        w.write_record([
            c.id.to_string(),
            fmt_f64(c.centroid.lat()),
            fmt_f64(c.centroid.lon()),
            fmt_f64(c.surface_area_m2),
        ])?;
    }
    Ok(w.flush()?)
}

pub fn load_hourly(path: &Path) -> Result<LoadOutcome<HourlyObservation>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &HOURLY_HEADER, path)?;
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    for_each_record(&mut reader, HOURLY_HEADER.len(), &mut rejections, |_, r| {
        let mut counts = [0.0; 12];
        for (slot, (field, name)) in counts
            .iter_mut()
            .zip(r.iter().skip(2).zip(HOURLY_HEADER.iter().skip(2)))
        {
            *slot = parse_count(field, name)?;
        }
        let obs = HourlyObservation {
            cell: parse_cell_id(&r[0])?,
            hour: parse_hour(&r[1])?,
            footfall: counts[0],
            residents: counts[1],
            workers: counts[2],
            visitors: counts[3],
            males: counts[4],
            females: counts[5],
            age_0_20: counts[6],
            age_21_30: counts[7],
            age_31_40: counts[8],
            age_41_50: counts[9],
            age_51_60: counts[10],
            age_over_60: counts[11],
        };
        obs.validate().map_err(|e| e.to_string())?;
        rows.push(obs);
        Ok(())
    })?;
    Ok(LoadOutcome::new(rows, rejections))
}

pub fn write_hourly(path: &Path, observations: &[HourlyObservation]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(HOURLY_HEADER)?;
    for o in observations {
        let mut record = vec![o.cell.to_string(), hour_to_rfc3339(o.hour)];
        record.extend(o.counts().iter().map(|&v| fmt_f64(v)));
        w.write_record(record)?;
    }
    Ok(w.flush()?)
}

pub fn load_crimes(path: &Path) -> Result<LoadOutcome<CrimeEvent>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &CRIMES_HEADER, path)?;
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    for_each_record(&mut reader, CRIMES_HEADER.len(), &mut rejections, |_, r| {
        let year: i32 = r[1]
            .parse()
            .map_err(|_| format!("year must be an integer, got {:?}", &r[1]))?;
        let month: u32 = r[2]
            .parse()
            .map_err(|_| format!("month must be an integer, got {:?}", &r[2]))?;
        let month = Month::new(year, month).map_err(|e| e.to_string())?;
        rows.push(CrimeEvent {
            id: r[0].to_string(),
            month,
            location: parse_point(&r[3], &r[4])?,
            lsoa_code: r[5].to_string(),
            crime_type: r[6].to_string(),
        });
        Ok(())
    })?;
    Ok(LoadOutcome::new(rows, rejections))
}

pub fn write_crimes(path: &Path, events: &[CrimeEvent]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(CRIMES_HEADER)?;
    for e in events {
        w.write_record([
            e.id.clone(),
            e.month.year.to_string(),
            e.month.month.to_string(),
            fmt_f64(e.location.lat()),
            fmt_f64(e.location.lon()),
            e.lsoa_code.clone(),
            e.crime_type.clone(),
        ])?;
    }
    Ok(w.flush()?)
}

fn profiles_header() -> Vec<String> {
    let mut h = vec![
        "profile_id".to_string(),
        "lat".to_string(),
        "lon".to_string(),
    ];
    h.extend((1..=PROFILE_METRIC_COUNT).map(|i| format!("m{i:02}")));
    h
}

/// Borough profiles: blank metric cells are imputed with the column median
/// over the file, each imputation noted in the outcome. A metric column that
/// is blank in every row cannot be imputed and is a fatal schema error.
pub fn load_profiles(path: &Path) -> Result<LoadOutcome<BoroughProfile>> {
    let mut reader = open_reader(path)?;
    let expected = profiles_header();
    let expected_refs: Vec<&str> = expected.iter().map(String::as_str).collect();
    expect_header(&mut reader, &expected_refs, path)?;
    let mut rows: Vec<BoroughProfile> = Vec::new();
    let mut rejections = Vec::new();
    for_each_record(&mut reader, expected.len(), &mut rejections, |_, r| {
        let mut metrics = Vec::with_capacity(PROFILE_METRIC_COUNT);
        for (field, name) in r.iter().skip(3).zip(expected.iter().skip(3)) {
            // NaN here means "blank, impute later"; non-numeric text is
            // still a row rejection.
            let v = parse_f64(field).map_err(|e| format!("{name}: {e}"))?;
            if !field.is_empty() && !v.is_finite() {
                return Err(format!("{name} must be finite, got {field:?}"));
            }
            metrics.push(v);
        }
        rows.push(BoroughProfile {
            id: r[0].to_string(),
            location: parse_point(&r[1], &r[2])?,
            metrics,
        });
        Ok(())
    })?;

    let mut notes = Vec::new();
    for m in 0..PROFILE_METRIC_COUNT {
        let mut present: Vec<f64> = rows
            .iter()
            .map(|p| p.metrics[m])
            .filter(|v| !v.is_nan())
            .collect();
        let blanks: Vec<String> = rows
            .iter()
            .filter(|p| p.metrics[m].is_nan())
            .map(|p| p.id.clone())
            .collect();
        if blanks.is_empty() {
            continue;
        }
        if present.is_empty() {
            return Err(Error::Schema(format!(
                "{}: metric column m{:02} is blank in every profile",
                path.display(),
                m + 1
            ))
            .into());
        }
        present.sort_by(f64::total_cmp);
        let median = if present.len() % 2 == 1 {
            present[present.len() / 2]
        } else {
            (present[present.len() / 2 - 1] + present[present.len() / 2]) / 2.0
        };
        for p in rows.iter_mut().filter(|p| p.metrics[m].is_nan()) {
            p.metrics[m] = median;
        }
        notes.push(format!(
            "imputed m{:02} = {median} for {} blank profile(s): {}",
            m + 1,
            blanks.len(),
            blanks.join(", ")
        ));
    }
    for p in &rows {
        p.validate()?;
    }
    Ok(LoadOutcome {
        rows,
        rejections,
        notes,
    })
}

pub fn write_profiles(path: &Path, profiles: &[BoroughProfile]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(profiles_header())?;
    for p in profiles {
        let mut record = vec![
            p.id.clone(),
            fmt_f64(p.location.lat()),
            fmt_f64(p.location.lon()),
        ];
        record.extend(p.metrics.iter().map(|&v| fmt_f64(v)));
        w.write_record(record)?;
    }
    Ok(w.flush()?)
}

// ---- derived artifacts ----

/// Feature matrix: `cell_id` column followed by one column per feature name,
/// rows in matrix order, missing values as empty fields.
pub fn write_features(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    let mut w = open_writer(path)?;
    let mut header = vec!["cell_id".to_string()];
    header.extend(matrix.names().iter().cloned());
    w.write_record(header)?;
    for (i, id) in matrix.row_ids().iter().enumerate() {
        let mut record = vec![id.to_string()];
        record.extend(matrix.row(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(record)?;
    }
    Ok(w.flush()?)
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = open_reader(path)?;
    let header = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?
        .clone();
    if header.len() < 2 || &header[0] != "cell_id" {
        return Err(Error::Schema(format!(
            "{}: feature matrix must start with a cell_id column",
            path.display()
        ))
        .into());
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "{}:{line}: {} fields, expected {}",
                path.display(),
                record.len(),
                header.len()
            ))
            .into());
        }
        ids.push(
            parse_cell_id(&record[0])
                .map_err(|e| Error::Schema(format!("{}:{line}: {e}", path.display())))?,
        );
        for (column, field) in columns.iter_mut().zip(record.iter().skip(1)) {
            column.push(
                parse_f64(field)
                    .map_err(|e| Error::Schema(format!("{}:{line}: {e}", path.display())))?,
            );
        }
    }
    Ok(FeatureMatrix::new(ids, names, columns)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRow {
    pub cell: CellId,
    pub count: u64,
    pub label: Label,
}

fn label_token(label: Label) -> &'static str {
    match label {
        Label::Low => "low",
        Label::High => "high",
    }
}

fn parse_label(field: &str) -> std::result::Result<Label, String> {
    match field {
        "low" => Ok(Label::Low),
        "high" => Ok(Label::High),
        other => Err(format!("label must be low or high, got {other:?}")),
    }
}

pub fn write_labels(path: &Path, counts: &CrimeCounts, labels: &LabelSet) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(LABELS_HEADER)?;
    for (cell, label) in labels.iter() {
        let count = counts.get(cell).ok_or_else(|| {
            Error::InvalidInput(format!("labeled cell {cell} has no crime count"))
        })?;
        w.write_record([cell.to_string(), count.to_string(), label_token(label).into()])?;
    }
    Ok(w.flush()?)
}

pub fn load_labels(path: &Path) -> Result<LoadOutcome<LabelRow>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &LABELS_HEADER, path)?;
    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    for_each_record(&mut reader, LABELS_HEADER.len(), &mut rejections, |_, r| {
        rows.push(LabelRow {
            cell: parse_cell_id(&r[0])?,
            count: r[1]
                .parse()
                .map_err(|_| format!("crime_count must be an unsigned integer, got {:?}", &r[1]))?,
            label: parse_label(&r[2])?,
        });
        Ok(())
    })?;
    Ok(LoadOutcome::new(rows, rejections))
}

pub fn write_ranking(path: &Path, ranking: &FeatureRanking) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(RANKING_HEADER)?;
    for rank in 0..ranking.len() {
        let (name, score) = ranking.entry(rank);
        w.write_record([
            (rank + 1).to_string(),
            name.to_string(),
            fmt_f64(score),
            fmt_f64(ranking.percent(rank)),
        ])?;
    }
    Ok(w.flush()?)
}

/// Feature names in rank order (scores are redundant for downstream stages).
pub fn load_ranking(path: &Path) -> Result<Vec<String>> {
    Ok(load_ranking_entries(path)?
        .into_iter()
        .map(|(name, _, _)| name)
        .collect())
}

/// `(feature, mean_decrease_gini, percent)` triples in rank order.
pub fn load_ranking_entries(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &RANKING_HEADER, path)?;
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |e: String| Error::Schema(format!("{}:{line}: {e}", path.display()));
        if record.len() != RANKING_HEADER.len() {
            return Err(fail(format!("{} fields, expected 4", record.len())).into());
        }
        entries.push((
            record[1].to_string(),
            parse_f64(&record[2]).map_err(fail)?,
            parse_f64(&record[3]).map_err(fail)?,
        ));
    }
    Ok(entries)
}

pub fn write_correlations(path: &Path, report: &CorrelationReport) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(CORRELATIONS_HEADER)?;
    for pair in &report.pairs {
        w.write_record([
            pair.feature_a.clone(),
            pair.feature_b.clone(),
            fmt_f64(pair.r),
        ])?;
    }
    Ok(w.flush()?)
}

/// One line of the model-comparison table. Accuracy, the confidence bounds,
/// and AUC are fractions; f1 is in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub accuracy: f64,
    pub ci: (f64, f64),
    pub f1: f64,
    pub auc: f64,
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            fmt_f64(r.accuracy),
            fmt_f64(r.ci.0),
            fmt_f64(r.ci.1),
            fmt_f64(r.f1),
            fmt_f64(r.auc),
        ])?;
    }
    Ok(w.flush()?)
}

pub fn load_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &REPORT_HEADER, path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |e: String| Error::Schema(format!("{}:{line}: {e}", path.display()));
        if record.len() != REPORT_HEADER.len() {
            return Err(fail(format!("{} fields, expected 6", record.len())).into());
        }
        rows.push(ReportRow {
            model: record[0].to_string(),
            accuracy: parse_f64(&record[1]).map_err(fail)?,
            ci: (
                parse_f64(&record[2]).map_err(fail)?,
                parse_f64(&record[3]).map_err(fail)?,
            ),
            f1: parse_f64(&record[4]).map_err(fail)?,
            auc: parse_f64(&record[5]).map_err(fail)?,
        });
    }
    Ok(rows)
}

/// Persisted train/test assignment, so later stages can reuse the exact
/// split that selection saw instead of trusting seed arithmetic.
pub fn write_split(path: &Path, row_ids: &[CellId], plan: &SplitPlan) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(SPLIT_HEADER)?;
    let mut side = vec!["test"; row_ids.len()];
    for &i in &plan.train {
        side[i] = "train";
    }
    for (cell, side) in row_ids.iter().zip(side) {
        w.write_record([cell.to_string(), side.to_string()])?;
    }
    Ok(w.flush()?)
}

/// `(cell, is_train)` pairs in file order.
pub fn load_split(path: &Path) -> Result<Vec<(CellId, bool)>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &SPLIT_HEADER, path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |e: String| Error::Schema(format!("{}:{line}: {e}", path.display()));
        if record.len() != SPLIT_HEADER.len() {
            return Err(fail(format!("{} fields, expected 2", record.len())).into());
        }
        let is_train = match &record[1] {
            "train" => true,
            "test" => false,
            other => return Err(fail(format!("side must be train or test, got {other:?}")).into()),
        };
        rows.push((parse_cell_id(&record[0]).map_err(fail)?, is_train));
    }
    Ok(rows)
}

pub fn write_predictions(path: &Path, rows: &[(CellId, Label, f64)]) -> Result<()> {
    let mut w = open_writer(path)?;
    w.write_record(PREDICTIONS_HEADER)?;
    for (cell, label, score) in rows {
        w.write_record([cell.to_string(), label_token(*label).into(), fmt_f64(*score)])?;
    }
    Ok(w.flush()?)
}

pub fn load_predictions(path: &Path) -> Result<Vec<(CellId, Label, f64)>> {
    let mut reader = open_reader(path)?;
    expect_header(&mut reader, &PREDICTIONS_HEADER, path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |e: String| Error::Schema(format!("{}:{line}: {e}", path.display()));
        if record.len() != PREDICTIONS_HEADER.len() {
            return Err(fail(format!("{} fields, expected 3", record.len())).into());
        }
        rows.push((
            parse_cell_id(&record[0]).map_err(fail)?,
            parse_label(&record[1]).map_err(fail)?,
            parse_f64(&record[2]).map_err(fail)?,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hotspot_core::calendar::days_from_civil;

    fn temp_path(dir: &tempfile::TempDir, name: &str) -> std::path::PathBuf {
        dir.path().join(name)
    }

    #[test]
    fn hour_stamps_render_and_parse_round_trip() {
        let hour = HourStamp(days_from_civil(2020, 12, 7) * 24 + 5);
        let text = hour_to_rfc3339(hour);
        assert_eq!(text, "2020-12-07T05:00:00Z");
        assert_eq!(parse_hour(&text).unwrap(), hour);
        assert!(parse_hour("2020-12-07T05:30:00Z")
            .unwrap_err()
            .contains("hour boundary"));
    }

    #[test]
    fn cells_round_trip_and_reject_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "cells.csv");
        let cells = vec![
            Cell::new(CellId(3), GeoPoint::new(51.5, -0.1).unwrap(), 1234.5).unwrap(),
            Cell::new(CellId(7), GeoPoint::new(51.6, 0.07).unwrap(), 0.125).unwrap(),
        ];
        write_cells(&path, &cells).unwrap();
        let loaded = load_cells(&path).unwrap();
        assert!(loaded.rejections.is_empty());
        assert_eq!(loaded.rows, cells);

        std::fs::write(
            &path,
            "cell_id,lat,lon,area_m2\n1,51.5,-0.1,100\n2,95.0,-0.1,100\n3,51.5,oops,100\n",
        )
        .unwrap();
        let loaded = load_cells(&path).unwrap();
        assert_eq!(loaded.rows.len(), 1);
        assert_eq!(loaded.rejections.len(), 2);
        assert_eq!(loaded.rejections[0].line, 3);
        assert!(loaded.rejections[0].reason.contains("latitude"));
    }

    #[test]
    fn wrong_header_is_fatal_not_a_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "cells.csv");
        std::fs::write(&path, "cell,lat,lon,area\n1,51.5,-0.1,100\n").unwrap();
        let err = load_cells(&path).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<Error>(),
            Some(Error::Schema(_))
        ));
    }

    #[test]
    fn hourly_rejects_negative_counts_but_keeps_the_rest() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "hourly.csv");
        let good = HourlyObservation {
            cell: CellId(1),
            hour: HourStamp(447_288),
            footfall: 120.5,
            residents: 60.25,
            workers: 30.0,
            visitors: 30.25,
            males: 55.0,
            females: 65.5,
            age_0_20: 20.0,
            age_21_30: 25.0,
            age_31_40: 25.5,
            age_41_50: 20.0,
            age_51_60: 15.0,
            age_over_60: 15.0,
        };
        write_hourly(&path, &[good.clone()]).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("1,2021-01-05T00:00:00Z,-5,0,0,0,0,0,0,0,0,0,0,0\n");
        std::fs::write(&path, text).unwrap();
        let loaded = load_hourly(&path).unwrap();
        assert_eq!(loaded.rows, vec![good]);
        assert_eq!(loaded.rejections.len(), 1);
        assert!(loaded.rejections[0].reason.contains("footfall is negative"));
    }

    #[test]
    fn crimes_reject_month_13() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "crimes.csv");
        std::fs::write(
            &path,
            "crime_id,year,month,lat,lon,lsoa_code,crime_type\n\
             c1,2021,1,51.5,-0.1,E01,burglary\n\
             c2,2021,13,51.5,-0.1,E01,burglary\n",
        )
        .unwrap();
        let loaded = load_crimes(&path).unwrap();
        assert_eq!(loaded.rows.len(), 1);
        assert_eq!(loaded.rows[0].id, "c1");
        assert_eq!(loaded.rejections.len(), 1);
        assert!(loaded.rejections[0].reason.contains("13"));
    }

    #[test]
    fn blank_profile_metric_gets_the_column_median() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "profiles.csv");
        let mut header = profiles_header().join(",");
        header.push('\n');
        // Three profiles; the second has a blank m02.
        let mut body = String::new();
        for (id, m02) in [("P1", "4.5"), ("P2", ""), ("P3", "10.5")] {
            let metrics: Vec<String> = (1..=PROFILE_METRIC_COUNT)
                .map(|i| if i == 2 { m02.to_string() } else { i.to_string() })
                .collect();
            body.push_str(&format!("{id},51.5,-0.1,{}\n", metrics.join(",")));
        }
        std::fs::write(&path, header + &body).unwrap();
        let loaded = load_profiles(&path).unwrap();
        assert_eq!(loaded.rows.len(), 3);
        // Median of the two present values 4.5 and 10.5.
        assert_eq!(loaded.rows[1].metrics[1], 7.5);
        assert_eq!(loaded.notes.len(), 1);
        assert!(loaded.notes[0].contains("m02"));
        assert!(loaded.notes[0].contains("P2"));
    }

    #[test]
    fn profile_file_with_wrong_metric_count_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "profiles.csv");
        let mut header: Vec<String> = profiles_header();
        header.pop(); // 67 metric columns
        std::fs::write(&path, header.join(",") + "\n").unwrap();
        let err = load_profiles(&path).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<Error>(),
            Some(Error::Schema(_))
        ));
    }

    #[test]
    fn feature_matrix_round_trips_bit_for_bit_including_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "features.csv");
        let matrix = FeatureMatrix::new(
            vec![CellId(1), CellId(2)],
            vec!["a".into(), "b".into()],
            vec![
                vec![0.1 + 0.2, f64::NAN],
                vec![-1.0 / 3.0, 1.2345678901234567e-300],
            ],
        )
        .unwrap();
        write_features(&path, &matrix).unwrap();
        let loaded = load_features(&path).unwrap();
        assert_eq!(loaded.row_ids(), matrix.row_ids());
        assert_eq!(loaded.names(), matrix.names());
        for j in 0..2 {
            for (a, b) in loaded.column(j).iter().zip(matrix.column(j)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        use std::collections::BTreeMap;
        let dir = tempfile::tempdir().unwrap();
        let path = temp_path(&dir, "labels.csv");
        let month = Month::new(2021, 1).unwrap();
        let counts = CrimeCounts::new(
            month,
            BTreeMap::from([(CellId(1), 4), (CellId(2), 9), (CellId(3), 1)]),
        );
        let labels = hotspot_core::labeling::median_split(&counts).unwrap();
        write_labels(&path, &counts, &labels).unwrap();
        let loaded = load_labels(&path).unwrap();
        assert!(loaded.rejections.is_empty());
        let rows: Vec<(u64, u64, Label)> = loaded
            .rows
            .iter()
            .map(|r| (r.cell.0, r.count, r.label))
            .collect();
        assert_eq!(
            rows,
            vec![
                (1, 4, Label::Low),
                (2, 9, Label::High),
                (3, 1, Label::Low)
            ]
        );
    }
}
