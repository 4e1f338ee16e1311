//! Subcommand implementations.
//!
//! Every stage reads and writes plain-file artifacts (CSV, JSON, GeoJSON) so
//! a pipeline can be resumed or re-run from any point; `run` chains all the
//! stages in memory and persists the same artifacts in one go. All settings
//! resolve as: command-line flag, else config-file key of the same spelling,
//! else documented default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use hotspot_core::calendar::Month;
use hotspot_core::data::{BoroughProfile, CrimeEvent, HourlyObservation};
use hotspot_core::eval::{evaluate, majority_baseline, split, EvaluationReport, SplitPlan};
use hotspot_core::forest::{importance_permutation, oob_error, predict_matrix, ForestParams};
use hotspot_core::geo::{CellId, CellUniverse};
use hotspot_core::labeling::{
    count_crimes, median_split, summarize_counts, CrimeCounts, DistributionSummary, Label,
    LabelSet,
};
use hotspot_core::matrix::FeatureMatrix;
use hotspot_core::selection::{correlation_report, rank_from_model, select_top_k, FeatureRanking};
use hotspot_core::synth::{generate, SyntheticConfig};
use hotspot_core::Error;

use crate::config::{parse_month, parse_start_day, ConfigFile};
use crate::csv_io::{self, LabelRow, LoadOutcome, ReportRow};
use crate::geojson;
use crate::model_io;
use crate::parallel;

const DEFAULT_TOP_K: usize = 68;
const DEFAULT_TREES: usize = 500;
const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
const DEFAULT_CORR_THRESHOLD: f64 = 0.75;
const CI_LEVEL: f64 = 0.95;

/// Which kurtosis number the distribution summary prints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KurtosisConvention {
    /// Plain fourth standardized moment `m4/m2²` (3.0 for a normal).
    Moment,
    /// Excess kurtosis `m4/m2² − 3` (0.0 for a normal).
    Excess,
}

impl FromStr for KurtosisConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "moment" => Ok(KurtosisConvention::Moment),
            "excess" => Ok(KurtosisConvention::Excess),
            other => Err(format!("unknown kurtosis convention {other:?}")),
        }
    }
}

/// Everything commands share: resolved config file and the worker pool.
pub struct Ctx {
    pub config: ConfigFile,
    pub pool: rayon::ThreadPool,
}

fn report_load<T>(name: &str, outcome: &LoadOutcome<T>) {
    for note in &outcome.notes {
        eprintln!("{name}: {note}");
    }
    let n = outcome.rejections.len();
    if n > 0 {
        eprintln!("{name}: skipped {n} malformed row(s):");
        for r in outcome.rejections.iter().take(5) {
            eprintln!("  line {}: {}", r.line, r.reason);
        }
        if n > 5 {
            eprintln!("  ... and {} more", n - 5);
        }
    }
}

fn load_universe(path: &Path) -> Result<CellUniverse> {
    let outcome = csv_io::load_cells(path)?;
    report_load(&path.display().to_string(), &outcome);
    Ok(CellUniverse::new(outcome.rows)?)
}

/// Restrict a feature matrix to the labeled cells, in matrix row order.
/// Every labeled cell must be present in the matrix.
fn align_to_labels(
    matrix: &FeatureMatrix,
    labels: &[LabelRow],
) -> Result<(FeatureMatrix, Vec<Label>)> {
    let mut by_cell: BTreeMap<CellId, Label> = BTreeMap::new();
    for row in labels {
        if by_cell.insert(row.cell, row.label).is_some() {
            return Err(Error::InvalidInput(format!(
                "cell {} appears twice in the label file",
                row.cell
            ))
            .into());
        }
    }
    let keep: Vec<usize> = matrix
        .row_ids()
        .iter()
        .enumerate()
        .filter(|(_, id)| by_cell.contains_key(id))
        .map(|(i, _)| i)
        .collect();
    if keep.len() != by_cell.len() {
        let missing = by_cell
            .keys()
            .find(|id| !matrix.row_ids().contains(id))
            .expect("some labeled cell is absent");
        return Err(Error::InvalidInput(format!(
            "labeled cell {missing} has no feature row; were features and labels \
             built from the same cells?"
        ))
        .into());
    }
    let aligned = matrix.select_rows(&keep)?;
    let y = aligned.row_ids().iter().map(|id| by_cell[id]).collect();
    Ok((aligned, y))
}

/// Turn a persisted cell→side assignment into row indices of `row_ids`.
/// The file must cover exactly the matrix's cells.
fn plan_from_split_file(rows: &[(CellId, bool)], row_ids: &[CellId]) -> Result<SplitPlan> {
    let sides: BTreeMap<CellId, bool> = rows.iter().copied().collect();
    if sides.len() != rows.len() {
        return Err(Error::InvalidInput("split file lists a cell twice".into()).into());
    }
    if sides.len() != row_ids.len() || row_ids.iter().any(|id| !sides.contains_key(id)) {
        return Err(Error::InvalidInput(format!(
            "split file covers {} cells but the matrix has {}; they must match exactly",
            sides.len(),
            row_ids.len()
        ))
        .into());
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, id) in row_ids.iter().enumerate() {
        if sides[id] {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidInput("split file has an empty side".into()).into());
    }
    Ok(SplitPlan { train, test })
}

/// Replace missing values with the per-column median over the training rows
/// (or over all rows when no split is in play).
fn impute(matrix: &mut FeatureMatrix, plan: Option<&SplitPlan>) -> Result<()> {
    let fills = match plan {
        Some(p) => matrix.select_rows(&p.train)?.column_medians(),
        None => matrix.column_medians(),
    };
    matrix.fill_missing(&fills)?;
    if !matrix.is_complete() {
        return Err(Error::InsufficientData(
            "some feature column has no observed value to impute from".into(),
        )
        .into());
    }
    Ok(())
}

fn forest_params(trees: usize, mtry: Option<usize>, seed: u64) -> ForestParams {
    ForestParams {
        n_trees: trees,
        mtry,
        seed,
        ..ForestParams::default()
    }
}

fn percent(f: f64) -> String {
    format!("{:.2}%", 100.0 * f)
}

fn print_distribution(s: &DistributionSummary, convention: KurtosisConvention) {
    println!(
        "counts   min {}  q1 {}  median {}  mean {:.2}  q3 {}  max {}",
        s.min, s.q1, s.median, s.mean, s.q3, s.max
    );
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    let kurtosis = match convention {
        KurtosisConvention::Moment => s.kurtosis,
        KurtosisConvention::Excess => s.kurtosis.map(|k| k - 3.0),
    };
    let tag = match convention {
        KurtosisConvention::Moment => "moment",
        KurtosisConvention::Excess => "excess",
    };
    println!(
        "         skewness {}  kurtosis ({tag}) {}",
        fmt(s.skewness),
        fmt(kurtosis)
    );
}

fn print_report_table(rows: &[ReportRow]) {
    println!(
        "{:<12} {:>9} {:>19} {:>7} {:>6}",
        "model", "accuracy", "95% CI", "F1", "AUC"
    );
    for r in rows {
        println!(
            "{:<12} {:>9} {:>19} {:>7.2} {:>6.3}",
            r.model,
            percent(r.accuracy),
            format!("[{} – {}]", percent(r.ci.0), percent(r.ci.1)),
            r.f1,
            r.auc
        );
    }
}

fn to_report_row(model: &str, r: &EvaluationReport) -> ReportRow {
    ReportRow {
        model: model.to_string(),
        accuracy: r.accuracy,
        ci: r.ci,
        f1: r.f1_percent,
        auc: r.auc,
    }
}

// ---- synth ----

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory for cells.csv, hourly.csv, crimes.csv, profiles.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of grid cells in the generated city.
    #[arg(long)]
    pub n_cells: Option<usize>,
    /// Observed hours (whole days, starting at midnight UTC).
    #[arg(long)]
    pub n_hours: Option<usize>,
    /// Number of borough profiles scattered over the bounding box.
    #[arg(long)]
    pub n_profiles: Option<usize>,
    /// Planted crime-signal strength in [0, 1].
    #[arg(long)]
    pub signal: Option<f64>,
    /// First observed day, YYYY-MM-DD.
    #[arg(long)]
    pub start: Option<String>,
}

/// Synthetic config shared by `synth` and `run --synthetic`.
fn synthetic_config(ctx: &Ctx, args: &SynthArgs) -> Result<SyntheticConfig> {
    let defaults = SyntheticConfig::default();
    let start = match ctx.config.get(args.start.clone(), "start")? {
        Some(s) => parse_start_day(&s)?,
        None => defaults.start,
    };
    Ok(SyntheticConfig {
        seed: ctx.config.get_or(args.seed, "seed", defaults.seed)?,
        n_cells: ctx.config.get_or(args.n_cells, "n-cells", defaults.n_cells)?,
        n_hours: ctx.config.get_or(args.n_hours, "n-hours", defaults.n_hours)?,
        start,
        signal_strength: ctx.config.get_or(args.signal, "signal", defaults.signal_strength)?,
        n_profiles: ctx
            .config
            .get_or(args.n_profiles, "n-profiles", defaults.n_profiles)?,
        ..defaults
    })
}

pub fn cmd_synth(ctx: &Ctx, args: &SynthArgs) -> Result<()> {
    let config = synthetic_config(ctx, args)?;
    let out = ctx
        .config
        .get_or(args.out.clone(), "out", PathBuf::from("data"))?;
    let data = generate(&config)?;
    std::fs::create_dir_all(&out)?;
    csv_io::write_cells(&out.join("cells.csv"), data.universe.cells())?;
    csv_io::write_hourly(&out.join("hourly.csv"), &data.observations)?;
    csv_io::write_crimes(&out.join("crimes.csv"), &data.events)?;
    csv_io::write_profiles(&out.join("profiles.csv"), &data.profiles)?;
    println!(
        "wrote {} cells, {} hourly rows, {} crimes ({}), {} profiles to {}",
        data.universe.len(),
        data.observations.len(),
        data.events.len(),
        data.crime_month,
        data.profiles.len(),
        out.display()
    );
    Ok(())
}

// ---- featurize ----

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// Cell table (cells.csv).
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Hourly observation table (hourly.csv).
    #[arg(long)]
    pub hourly: Option<PathBuf>,
    /// Borough profile table (profiles.csv).
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Output feature matrix.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

pub fn cmd_featurize(ctx: &Ctx, args: &FeaturizeArgs) -> Result<()> {
    let cells = ctx.config.require(args.cells.clone(), "cells", "--cells")?;
    let hourly = ctx.config.require(args.hourly.clone(), "hourly", "--hourly")?;
    let profiles = ctx
        .config
        .require(args.profiles.clone(), "profiles", "--profiles")?;
    let out = ctx
        .config
        .get_or(args.features.clone(), "features", PathBuf::from("features.csv"))?;

    let universe = load_universe(&cells)?;
    let hourly_outcome = csv_io::load_hourly(&hourly)?;
    report_load(&hourly.display().to_string(), &hourly_outcome);
    let profile_outcome = csv_io::load_profiles(&profiles)?;
    report_load(&profiles.display().to_string(), &profile_outcome);

    let started = Instant::now();
    let matrix = parallel::featurize(
        &ctx.pool,
        &hourly_outcome.rows,
        &universe,
        &profile_outcome.rows,
    )?;
    eprintln!(
        "extracted {} features for {} cells in {:.1?}",
        matrix.n_cols(),
        matrix.n_rows(),
        started.elapsed()
    );
    csv_io::write_features(&out, &matrix)?;
    println!(
        "wrote {} x {} feature matrix to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        out.display()
    );
    Ok(())
}

// ---- label ----

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// Cell table (cells.csv).
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Crime event table (crimes.csv).
    #[arg(long)]
    pub crimes: Option<PathBuf>,
    /// Target month, YYYY-MM.
    #[arg(long)]
    pub month: Option<String>,
    /// Label cells with zero crimes too (default: only crime-reporting
    /// cells, matching a count table whose minimum is 1).
    #[arg(long)]
    pub include_zero_cells: bool,
    /// Kurtosis convention for the printed count summary.
    #[arg(long, value_enum)]
    pub kurtosis: Option<KurtosisConvention>,
    /// Output label table.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

fn build_labels(
    events: &[CrimeEvent],
    universe: &CellUniverse,
    month: Month,
    include_zero_cells: bool,
    convention: KurtosisConvention,
) -> Result<(CrimeCounts, LabelSet)> {
    let mut counts = count_crimes(events, universe, month);
    if counts.is_empty() {
        eprintln!("warning: no crime events dated {month}");
    }
    if include_zero_cells {
        counts = counts.including_zero_cells(universe);
    }
    let labels = median_split(&counts)?;
    print_distribution(&summarize_counts(&counts)?, convention);
    if labels.is_degenerate() {
        eprintln!(
            "warning: degenerate split, no cell exceeds the median count \
             ({})",
            labels.split_threshold()
        );
    }
    println!(
        "labels   {} cells, {} high ({}), median threshold {}",
        labels.len(),
        labels.n_high(),
        percent(labels.high_fraction()),
        labels.split_threshold()
    );
    Ok((counts, labels))
}

pub fn cmd_label(ctx: &Ctx, args: &LabelArgs) -> Result<()> {
    let cells = ctx.config.require(args.cells.clone(), "cells", "--cells")?;
    let crimes = ctx.config.require(args.crimes.clone(), "crimes", "--crimes")?;
    let month = parse_month(&ctx.config.require(args.month.clone(), "month", "--month")?)?;
    let include_zero = ctx
        .config
        .get_flag(args.include_zero_cells, "include-zero-cells")?;
    let convention = ctx
        .config
        .get_or(args.kurtosis, "kurtosis", KurtosisConvention::Moment)?;
    let out = ctx
        .config
        .get_or(args.labels.clone(), "labels", PathBuf::from("labels.csv"))?;

    let universe = load_universe(&cells)?;
    let crime_outcome = csv_io::load_crimes(&crimes)?;
    report_load(&crimes.display().to_string(), &crime_outcome);

    let (counts, labels) = build_labels(
        &crime_outcome.rows,
        &universe,
        month,
        include_zero,
        convention,
    )?;
    csv_io::write_labels(&out, &counts, &labels)?;
    println!("wrote {} labels to {}", labels.len(), out.display());
    Ok(())
}

// ---- select ----

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Feature matrix from `featurize`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Label table from `label`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Trees in the ranking forest.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Features drawn per split (default sqrt of the feature count).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training fraction of the train/test split.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Features kept for the correlation report.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Absolute Pearson r above which a selected feature pair is reported.
    #[arg(long)]
    pub corr_threshold: Option<f64>,
    /// Output ranking table.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// Output train/test assignment.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

pub fn cmd_select(ctx: &Ctx, args: &SelectArgs) -> Result<()> {
    let features = ctx
        .config
        .require(args.features.clone(), "features", "--features")?;
    let labels_path = ctx.config.require(args.labels.clone(), "labels", "--labels")?;
    let trees = ctx.config.get_or(args.trees, "trees", DEFAULT_TREES)?;
    let mtry = ctx.config.get(args.mtry, "mtry")?;
    let seed = ctx.config.get_or(args.seed, "seed", 0)?;
    let fraction = ctx
        .config
        .get_or(args.train_fraction, "train-fraction", DEFAULT_TRAIN_FRACTION)?;
    let top_k = ctx.config.get_or(args.top_k, "top-k", DEFAULT_TOP_K)?;
    let corr_threshold = ctx
        .config
        .get_or(args.corr_threshold, "corr-threshold", DEFAULT_CORR_THRESHOLD)?;
    let ranking_out = ctx
        .config
        .get_or(args.ranking.clone(), "ranking", PathBuf::from("ranking.csv"))?;
    let split_out = ctx
        .config
        .get_or(args.split.clone(), "split", PathBuf::from("split.csv"))?;

    let matrix = csv_io::load_features(&features)?;
    let label_outcome = csv_io::load_labels(&labels_path)?;
    report_load(&labels_path.display().to_string(), &label_outcome);
    let (mut matrix, y) = align_to_labels(&matrix, &label_outcome.rows)?;

    let plan = split(matrix.n_rows(), fraction, seed)?;
    csv_io::write_split(&split_out, matrix.row_ids(), &plan)?;
    impute(&mut matrix, Some(&plan))?;
    let train = matrix.select_rows(&plan.train)?;
    let train_y: Vec<Label> = plan.train.iter().map(|&i| y[i]).collect();

    let started = Instant::now();
    let model = parallel::fit(&ctx.pool, &train, &train_y, &forest_params(trees, mtry, seed))?;
    let ranking = rank_from_model(&model);
    eprintln!(
        "ranked {} features with {trees} trees in {:.1?}",
        ranking.len(),
        started.elapsed()
    );
    csv_io::write_ranking(&ranking_out, &ranking)?;

    let kept = select_top_k(&ranking, top_k.min(ranking.len()))?;
    let cols: Vec<usize> = kept
        .iter()
        .map(|n| train.column_index(n).expect("ranked name came from train"))
        .collect();
    let corr = correlation_report(&train.select_columns(&cols)?, corr_threshold)?;
    let corr_out = ranking_out.with_file_name("correlations.csv");
    csv_io::write_correlations(&corr_out, &corr)?;

    println!("top features by mean decrease in Gini impurity:");
    for rank in 0..ranking.len().min(10) {
        let (name, score) = ranking.entry(rank);
        println!(
            "  {:>2}. {:<55} {:>9.4} ({:.2}%)",
            rank + 1,
            name,
            score,
            ranking.percent(rank)
        );
    }
    println!(
        "wrote ranking to {}, correlations (|r| > {corr_threshold}) to {}, split to {}",
        ranking_out.display(),
        corr_out.display(),
        split_out.display()
    );
    Ok(())
}

// ---- train ----

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature matrix from `featurize`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Label table from `label`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Ranking from `select`; training is restricted to its top features.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// Train/test assignment from `select`; only the train side is fit.
    /// Without it the model trains on every labeled cell.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Features kept from the ranking.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Trees in the forest.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Features drawn per split (default sqrt of the feature count).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Columns of `matrix` named by `names`, in that order; unknown names are a
/// schema error.
fn columns_by_name(matrix: &FeatureMatrix, names: &[String]) -> Result<FeatureMatrix> {
    let mut cols = Vec::with_capacity(names.len());
    for name in names {
        cols.push(matrix.column_index(name).ok_or_else(|| {
            Error::Schema(format!("feature {name:?} is not in the feature matrix"))
        })?);
    }
    Ok(matrix.select_columns(&cols)?)
}

pub fn cmd_train(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    let features = ctx
        .config
        .require(args.features.clone(), "features", "--features")?;
    let labels_path = ctx.config.require(args.labels.clone(), "labels", "--labels")?;
    let ranking_path = ctx.config.get(args.ranking.clone(), "ranking")?;
    let split_path = ctx.config.get(args.split.clone(), "split")?;
    let top_k = ctx.config.get_or(args.top_k, "top-k", DEFAULT_TOP_K)?;
    let trees = ctx.config.get_or(args.trees, "trees", DEFAULT_TREES)?;
    let mtry = ctx.config.get(args.mtry, "mtry")?;
    let seed = ctx.config.get_or(args.seed, "seed", 0)?;
    let model_out = ctx
        .config
        .get_or(args.model.clone(), "model", PathBuf::from("model.json"))?;

    let matrix = csv_io::load_features(&features)?;
    let label_outcome = csv_io::load_labels(&labels_path)?;
    report_load(&labels_path.display().to_string(), &label_outcome);
    let (mut matrix, y) = align_to_labels(&matrix, &label_outcome.rows)?;

    let plan = match &split_path {
        Some(p) => Some(plan_from_split_file(&csv_io::load_split(p)?, matrix.row_ids())?),
        None => None,
    };
    impute(&mut matrix, plan.as_ref())?;

    if let Some(path) = &ranking_path {
        let ranked = csv_io::load_ranking(path)?;
        let kept: Vec<String> = ranked.into_iter().take(top_k).collect();
        matrix = columns_by_name(&matrix, &kept)?;
    }

    let (train, train_y) = match &plan {
        Some(p) => (
            matrix.select_rows(&p.train)?,
            p.train.iter().map(|&i| y[i]).collect::<Vec<_>>(),
        ),
        None => (matrix.clone(), y.clone()),
    };

    let started = Instant::now();
    let model = parallel::fit(&ctx.pool, &train, &train_y, &forest_params(trees, mtry, seed))?;
    eprintln!(
        "fit {trees} trees on {} cells x {} features in {:.1?}",
        train.n_rows(),
        train.n_cols(),
        started.elapsed()
    );
    let oob = oob_error(&model, &train, &train_y)?;
    println!(
        "out-of-bag error {:.4} over {} cells ({} skipped)",
        oob.error, oob.n_evaluated, oob.n_skipped
    );
    model_io::save_model(&model_out, &model)?;
    println!("wrote model to {}", model_out.display());
    Ok(())
}

// ---- evaluate ----

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Model file from `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature matrix from `featurize`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Label table from `label`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Train/test assignment; scoring uses its test side. Without it every
    /// labeled cell is scored (for models trained on other data).
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Also compute permutation importances (mean decrease in accuracy).
    /// Needs --split covering the cells the model was trained on.
    #[arg(long)]
    pub permutation: bool,
    /// Output comparison table.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Output per-cell predictions.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn cmd_evaluate(ctx: &Ctx, args: &EvaluateArgs) -> Result<()> {
    let model_path = ctx.config.require(args.model.clone(), "model", "--model")?;
    let features = ctx
        .config
        .require(args.features.clone(), "features", "--features")?;
    let labels_path = ctx.config.require(args.labels.clone(), "labels", "--labels")?;
    let split_path = ctx.config.get(args.split.clone(), "split")?;
    let report_out = ctx.config.get(args.report.clone(), "report")?;
    let predictions_out = ctx.config.get(args.predictions.clone(), "predictions")?;
    let seed = ctx.config.get_or(args.seed, "seed", 0)?;

    let model = model_io::load_model(&model_path)?;
    let matrix = csv_io::load_features(&features)?;
    let label_outcome = csv_io::load_labels(&labels_path)?;
    report_load(&labels_path.display().to_string(), &label_outcome);
    let (matrix, y) = align_to_labels(&matrix, &label_outcome.rows)?;

    let plan = match &split_path {
        Some(p) => Some(plan_from_split_file(&csv_io::load_split(p)?, matrix.row_ids())?),
        None => None,
    };
    let mut matrix = columns_by_name(&matrix, &model.feature_names)?;
    impute(&mut matrix, plan.as_ref())?;

    let model_name = model_path
        .file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    let mut rows = Vec::new();
    let report = match &plan {
        Some(p) => {
            let report = evaluate(&model, &matrix, &y, p, CI_LEVEL)?;
            let train_y: Vec<Label> = p.train.iter().map(|&i| y[i]).collect();
            let test_y: Vec<Label> = p.test.iter().map(|&i| y[i]).collect();
            rows.push(to_report_row(&model_name, &report));
            rows.push(to_report_row(
                "baseline",
                &majority_baseline(&train_y, &test_y, CI_LEVEL)?,
            ));
            report
        }
        None => {
            let all: Vec<usize> = (0..matrix.n_rows()).collect();
            let plan = SplitPlan {
                train: Vec::new(),
                test: all,
            };
            let report = evaluate(&model, &matrix, &y, &plan, CI_LEVEL)?;
            rows.push(to_report_row(&model_name, &report));
            report
        }
    };
    print_report_table(&rows);
    println!(
        "confusion: {} true high, {} false high, {} false low, {} true low over {} cells",
        report.confusion.true_high,
        report.confusion.false_high,
        report.confusion.false_low,
        report.confusion.true_low,
        report.n_test
    );

    if let Some(out) = &report_out {
        csv_io::write_report(out, &rows)?;
        println!("wrote report to {}", out.display());
    }
    if let Some(out) = &predictions_out {
        let predicted = predict_matrix(&model, &matrix)?;
        let rows: Vec<(CellId, Label, f64)> = matrix
            .row_ids()
            .iter()
            .zip(&predicted)
            .map(|(id, &(label, score))| (*id, label, score))
            .collect();
        csv_io::write_predictions(out, &rows)?;
        println!("wrote predictions to {}", out.display());
    }

    if args.permutation {
        let plan = plan.as_ref().ok_or_else(|| {
            Error::Config("--permutation needs --split to recover the training rows".into())
        })?;
        let train = matrix.select_rows(&plan.train)?;
        let train_y: Vec<Label> = plan.train.iter().map(|&i| y[i]).collect();
        let scores = importance_permutation(&model, &train, &train_y, seed)?;
        let mut order: Vec<usize> = (0..scores.feature_names.len()).collect();
        order.sort_by(|&a, &b| {
            scores.overall[b]
                .total_cmp(&scores.overall[a])
                .then_with(|| scores.feature_names[a].cmp(&scores.feature_names[b]))
        });
        println!("top features by mean decrease in accuracy (overall / low / high):");
        for &i in order.iter().take(10) {
            println!(
                "  {:<55} {:>8.4} / {:>8.4} / {:>8.4}",
                scores.feature_names[i],
                scores.overall[i],
                scores.class_low[i],
                scores.class_high[i]
            );
        }
    }
    Ok(())
}

// ---- run ----

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Generate the dataset instead of loading it.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Cell table (real-data mode).
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Hourly observation table (real-data mode).
    #[arg(long)]
    pub hourly: Option<PathBuf>,
    /// Crime event table (real-data mode).
    #[arg(long)]
    pub crimes: Option<PathBuf>,
    /// Borough profile table (real-data mode).
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Target month, YYYY-MM (real-data mode; synthetic data targets the
    /// month after its observation window).
    #[arg(long)]
    pub month: Option<String>,
    #[arg(long)]
    pub include_zero_cells: bool,
    #[arg(long, value_enum)]
    pub kurtosis: Option<KurtosisConvention>,
    /// Features kept per feature family.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Trees per forest.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Features drawn per split (default sqrt of the feature count).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub corr_threshold: Option<f64>,
}

struct Dataset {
    universe: CellUniverse,
    observations: Vec<HourlyObservation>,
    events: Vec<CrimeEvent>,
    profiles: Vec<BoroughProfile>,
    month: Month,
}

fn load_dataset(ctx: &Ctx, args: &RunArgs) -> Result<Dataset> {
    if ctx.config.get_flag(args.synthetic, "synthetic")? {
        let config = synthetic_config(ctx, &args.synth)?;
        let data = generate(&config)?;
        eprintln!(
            "generated {} cells x {} hours (seed {}, signal {})",
            config.n_cells, config.n_hours, config.seed, config.signal_strength
        );
        return Ok(Dataset {
            universe: data.universe,
            observations: data.observations,
            events: data.events,
            profiles: data.profiles,
            month: data.crime_month,
        });
    }
    let cells = ctx.config.require(args.cells.clone(), "cells", "--cells")?;
    let hourly = ctx.config.require(args.hourly.clone(), "hourly", "--hourly")?;
    let crimes = ctx.config.require(args.crimes.clone(), "crimes", "--crimes")?;
    let profiles = ctx
        .config
        .require(args.profiles.clone(), "profiles", "--profiles")?;
    let month = parse_month(&ctx.config.require(args.month.clone(), "month", "--month")?)?;
    let universe = load_universe(&cells)?;
    let hourly_outcome = csv_io::load_hourly(&hourly)?;
    report_load(&hourly.display().to_string(), &hourly_outcome);
    let crime_outcome = csv_io::load_crimes(&crimes)?;
    report_load(&crimes.display().to_string(), &crime_outcome);
    let profile_outcome = csv_io::load_profiles(&profiles)?;
    report_load(&profiles.display().to_string(), &profile_outcome);
    Ok(Dataset {
        universe,
        observations: hourly_outcome.rows,
        events: crime_outcome.rows,
        profiles: profile_outcome.rows,
        month,
    })
}

/// The three compared feature families: the full ranking's top slice, the
/// top mobility-only slice, and all borough metrics.
fn family_features(ranking: &FeatureRanking, top_k: usize) -> Vec<(&'static str, Vec<String>)> {
    use hotspot_core::features::{BOROUGH_PREFIX, SMARTSTEPS_PREFIX};
    let take = |prefix: Option<&str>, k: usize| -> Vec<String> {
        ranking
            .iter()
            .filter(|(name, _)| prefix.is_none_or(|p| name.starts_with(p)))
            .take(k)
            .map(|(name, _)| name.to_string())
            .collect()
    };
    vec![
        ("combined", take(None, top_k)),
        ("smartsteps", take(Some(SMARTSTEPS_PREFIX), top_k)),
        // The borough family is the whole profile vector, not a ranked
        // subset: the comparison asks what the official statistics alone
        // can do.
        ("borough", take(Some(BOROUGH_PREFIX), usize::MAX)),
    ]
}

pub fn cmd_run(ctx: &Ctx, args: &RunArgs) -> Result<()> {
    let out = ctx
        .config
        .get_or(args.synth.out.clone(), "out", PathBuf::from("out"))?;
    let seed = ctx.config.get_or(args.synth.seed, "seed", 0)?;
    let trees = ctx.config.get_or(args.trees, "trees", DEFAULT_TREES)?;
    let mtry = ctx.config.get(args.mtry, "mtry")?;
    let top_k = ctx.config.get_or(args.top_k, "top-k", DEFAULT_TOP_K)?;
    let fraction = ctx
        .config
        .get_or(args.train_fraction, "train-fraction", DEFAULT_TRAIN_FRACTION)?;
    let corr_threshold = ctx
        .config
        .get_or(args.corr_threshold, "corr-threshold", DEFAULT_CORR_THRESHOLD)?;
    let include_zero = ctx
        .config
        .get_flag(args.include_zero_cells, "include-zero-cells")?;
    let convention = ctx
        .config
        .get_or(args.kurtosis, "kurtosis", KurtosisConvention::Moment)?;

    let data = load_dataset(ctx, args)?;
    std::fs::create_dir_all(&out)?;

    let started = Instant::now();
    let matrix = parallel::featurize(&ctx.pool, &data.observations, &data.universe, &data.profiles)?;
    eprintln!(
        "featurized {} cells x {} columns in {:.1?}",
        matrix.n_rows(),
        matrix.n_cols(),
        started.elapsed()
    );

    let (counts, labels) = build_labels(
        &data.events,
        &data.universe,
        data.month,
        include_zero,
        convention,
    )?;
    csv_io::write_labels(&out.join("labels.csv"), &counts, &labels)?;

    // Keep only labeled cells, aligned; then split, impute, rank.
    let labeled: Vec<LabelRow> = labels
        .iter()
        .map(|(cell, label)| LabelRow {
            cell,
            count: counts.get(cell).expect("labeled cells come from counts"),
            label,
        })
        .collect();
    let (mut matrix, y) = align_to_labels(&matrix, &labeled)?;
    let plan = split(matrix.n_rows(), fraction, seed)?;
    csv_io::write_split(&out.join("split.csv"), matrix.row_ids(), &plan)?;
    impute(&mut matrix, Some(&plan))?;
    let train = matrix.select_rows(&plan.train)?;
    let train_y: Vec<Label> = plan.train.iter().map(|&i| y[i]).collect();
    let test_y: Vec<Label> = plan.test.iter().map(|&i| y[i]).collect();

    let started = Instant::now();
    let ranking_model = parallel::fit(&ctx.pool, &train, &train_y, &forest_params(trees, mtry, seed))?;
    let ranking = rank_from_model(&ranking_model);
    eprintln!(
        "ranked {} features with {trees} trees in {:.1?}",
        ranking.len(),
        started.elapsed()
    );
    csv_io::write_ranking(&out.join("ranking.csv"), &ranking)?;

    let combined_names = family_features(&ranking, top_k)[0].1.clone();
    let corr = correlation_report(&columns_by_name(&train, &combined_names)?, corr_threshold)?;
    csv_io::write_correlations(&out.join("correlations.csv"), &corr)?;

    let mut rows = Vec::new();
    let mut combined_model = None;
    for (name, names) in family_features(&ranking, top_k) {
        let family_train = columns_by_name(&train, &names)?;
        let family_all = columns_by_name(&matrix, &names)?;
        let started = Instant::now();
        let model = parallel::fit(
            &ctx.pool,
            &family_train,
            &train_y,
            &forest_params(trees, mtry, seed),
        )?;
        let report = evaluate(&model, &family_all, &y, &plan, CI_LEVEL)?;
        eprintln!(
            "{name}: {} features, trained and evaluated in {:.1?}",
            names.len(),
            started.elapsed()
        );
        rows.push(to_report_row(name, &report));
        if name == "combined" {
            let predicted = predict_matrix(&model, &family_all)?;
            let predictions: Vec<(CellId, Label, f64)> = matrix
                .row_ids()
                .iter()
                .zip(&predicted)
                .map(|(id, &(label, score))| (*id, label, score))
                .collect();
            csv_io::write_predictions(&out.join("predictions.csv"), &predictions)?;
            let map = geojson::prediction_map(&data.universe, &predictions)?;
            geojson::write_geojson(&out.join("hotspots_predicted.geojson"), &map)?;
            combined_model = Some(model);
        }
    }
    rows.push(to_report_row(
        "baseline",
        &majority_baseline(&train_y, &test_y, CI_LEVEL)?,
    ));
    csv_io::write_report(&out.join("report.csv"), &rows)?;
    model_io::save_model(
        &out.join("model.json"),
        &combined_model.expect("combined family is always present"),
    )?;
    let truth = geojson::label_map(&data.universe, &labels)?;
    geojson::write_geojson(&out.join("hotspots_truth.geojson"), &truth)?;

    println!();
    print_report_table(&rows);
    println!();
    println!("artifacts in {}:", out.display());
    for name in [
        "labels.csv",
        "split.csv",
        "ranking.csv",
        "correlations.csv",
        "model.json",
        "report.csv",
        "predictions.csv",
        "hotspots_predicted.geojson",
        "hotspots_truth.geojson",
    ] {
        println!("  {name}");
    }
    Ok(())
}

// ---- export-map ----

#[derive(Args, Debug)]
pub struct ExportMapArgs {
    /// Cell table (cells.csv).
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Prediction table from `evaluate` or `run` (exclusive with --labels).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Label table from `label` (exclusive with --predictions).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output GeoJSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_export_map(ctx: &Ctx, args: &ExportMapArgs) -> Result<()> {
    let cells = ctx.config.require(args.cells.clone(), "cells", "--cells")?;
    let predictions = ctx.config.get(args.predictions.clone(), "predictions")?;
    let labels = ctx.config.get(args.labels.clone(), "labels")?;
    let out = ctx
        .config
        .get_or(args.out.clone(), "out", PathBuf::from("hotspots.geojson"))?;

    let universe = load_universe(&cells)?;
    let map = match (&predictions, &labels) {
        (Some(p), None) => geojson::prediction_map(&universe, &csv_io::load_predictions(p)?)?,
        (None, Some(l)) => {
            let outcome = csv_io::load_labels(l)?;
            report_load(&l.display().to_string(), &outcome);
            let rows: Vec<(CellId, Label, Option<f64>)> = outcome
                .rows
                .iter()
                .map(|r| (r.cell, r.label, None))
                .collect();
            geojson::hotspot_map(&universe, &rows)?
        }
        _ => {
            return Err(Error::Config(
                "pass exactly one of --predictions or --labels".into(),
            )
            .into())
        }
    };
    geojson::write_geojson(&out, &map)?;
    println!(
        "wrote {} features to {}",
        map["features"].as_array().map_or(0, Vec::len),
        out.display()
    );
    Ok(())
}

// ---- report ----

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Comparison table from `run` or `evaluate`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Ranking table from `select` or `run`; prints its top entries.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// How many ranking entries to show.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

pub fn cmd_report(ctx: &Ctx, args: &ReportArgs) -> Result<()> {
    let report_path = ctx.config.require(args.report.clone(), "report", "--report")?;
    let ranking_path = ctx.config.get(args.ranking.clone(), "ranking")?;

    let rows = csv_io::load_report(&report_path)?;
    print_report_table(&rows);
    if let Some(path) = &ranking_path {
        let entries = csv_io::load_ranking_entries(path)?;
        println!();
        println!("top features by mean decrease in Gini impurity:");
        for (i, (name, gini, pct)) in entries.iter().take(args.top).enumerate() {
            println!("  {:>2}. {:<55} {:>9.4} ({pct:.2}%)", i + 1, name, gini);
        }
    }
    Ok(())
}
