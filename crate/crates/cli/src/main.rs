//! `hotspot` — forecast next-month crime hotspots for a city grid from
//! aggregated mobile-network activity and borough statistics.
//!
//! The pipeline runs as composable stages (`synth`/`featurize`/`label`/
//! `select`/`train`/`evaluate`) that exchange plain CSV and JSON artifacts,
//! or end to end with `run`. Every stage is deterministic given its seed:
//! rerunning a command reproduces its outputs byte for byte, independent of
//! the thread count.

mod commands;
mod config;
mod csv_io;
mod geojson;
mod model_io;
mod parallel;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hotspot_core::Error;

use commands::Ctx;
use config::ConfigFile;

#[derive(Parser)]
#[command(version, about = "Forecast next-month crime hotspots from mobile-network activity")]
struct Cli {
    /// Config file of `key = value` lines; flags override its entries.
    /// Defaults to $HOTSPOT_CONFIG when that is set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for feature extraction and tree growing (0 = all
    /// cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic city dataset.
    Synth(commands::SynthArgs),
    /// Extract the per-cell feature matrix from hourly observations.
    Featurize(commands::FeaturizeArgs),
    /// Count crimes per cell and label each side of the median.
    Label(commands::LabelArgs),
    /// Rank features by forest importance and report redundancy.
    Select(commands::SelectArgs),
    /// Fit a random forest on labeled feature rows.
    Train(commands::TrainArgs),
    /// Score a trained model against labeled cells.
    Evaluate(commands::EvaluateArgs),
    /// Full pipeline: dataset to comparison report in one command.
    Run(commands::RunArgs),
    /// Render predictions or labels as a GeoJSON point map.
    ExportMap(commands::ExportMapArgs),
    /// Pretty-print saved report and ranking tables.
    Report(commands::ReportArgs),
}

/// Process exit code and human-readable category for an error chain.
/// Scripted callers can branch on the code; the category prefixes stderr.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => (2, "config"),
                Error::Schema(_) => (3, "schema"),
                Error::InvalidInput(_) => (4, "invalid-input"),
                Error::InsufficientData(_)
                | Error::EmptyWindow(_)
                | Error::UndefinedEntropy(_)
                | Error::UndefinedCorrelation(_)
                | Error::UndefinedAuc(_)
                | Error::Coverage(_) => (5, "insufficient-data"),
                Error::Naming(_) => (6, "naming"),
                Error::Training(_) => (7, "training"),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (10, "io");
        }
    }
    (1, "error")
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let config = ConfigFile::load(cli.config.as_deref())?;
    let threads = config.get_or(cli.threads, "threads", 0)?;
    let ctx = Ctx {
        pool: parallel::make_pool(threads)?,
        config,
    };
    match &cli.command {
        Command::Synth(args) => commands::cmd_synth(&ctx, args),
        Command::Featurize(args) => commands::cmd_featurize(&ctx, args),
        Command::Label(args) => commands::cmd_label(&ctx, args),
        Command::Select(args) => commands::cmd_select(&ctx, args),
        Command::Train(args) => commands::cmd_train(&ctx, args),
        Command::Evaluate(args) => commands::cmd_evaluate(&ctx, args),
        Command::Run(args) => commands::cmd_run(&ctx, args),
        Command::ExportMap(args) => commands::cmd_export_map(&ctx, args),
        Command::Report(args) => commands::cmd_report(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, category) = classify(&err);
            eprintln!("error[{category}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
