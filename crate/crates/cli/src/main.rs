//! Pipeline driver. Every subcommand reads one experiment config; the
//! stages write their outputs under the config's output directory so the
//! next stage can pick them up. Failures print a single machine-parseable
//! line to stderr and exit nonzero.

mod config;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::load_config;

#[derive(Parser)]
#[command(name = "schoolconn", version, about = "School connectivity prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Root seed, overriding the config's split seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the command's report file instead of the default.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the record-cleaning cascade and write the cleaned roster.
    Clean(Common),
    /// Build the feature table from the cleaned roster.
    Featurize(Common),
    /// Grid-search hyperparameters and fit the final model.
    Train(Common),
    /// Score the tuned model over repeated seeded splits.
    Evaluate(Common),
    /// Predict connectivity for a roster with a trained model.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Model artifact; defaults to model.json in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Schools CSV; defaults to cleaned.csv in the output directory.
        #[arg(long)]
        schools: Option<PathBuf>,
    },
    /// Export predictions as a GeoJSON point map.
    ExportMap {
        #[command(flatten)]
        common: Common,
        /// Predictions CSV; defaults to predictions.csv in the output
        /// directory.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Schools CSV the predictions were made for; defaults to
        /// cleaned.csv in the output directory.
        #[arg(long)]
        schools: Option<PathBuf>,
    },
    /// Run the whole pipeline plus the buffer-radius sweep.
    RunExperiment(Common),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Clean(c)
        | Command::Featurize(c)
        | Command::Train(c)
        | Command::Evaluate(c)
        | Command::RunExperiment(c) => c,
        Command::Predict { common, .. } | Command::ExportMap { common, .. } => common,
    };
    let loaded = load_config(&common.config, common.seed, common.out.as_deref())?;
    match &cli.command {
        Command::Clean(c) => ops::cmd_clean(&loaded, c.report.as_deref()),
        Command::Featurize(_) => ops::cmd_featurize(&loaded),
        Command::Train(c) => ops::cmd_train(&loaded, c.report.as_deref()),
        Command::Evaluate(c) => ops::cmd_evaluate(&loaded, c.report.as_deref()),
        Command::Predict { model, schools, .. } => {
            ops::cmd_predict(&loaded, model.as_deref(), schools.as_deref())
        }
        Command::ExportMap {
            common,
            predictions,
            schools,
        } => ops::cmd_export_map(
            &loaded,
            predictions.as_deref(),
            schools.as_deref(),
            common.report.as_deref(),
        ),
        Command::RunExperiment(_) => ops::cmd_run_experiment(&loaded),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let message = format!("{err:#}").replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
