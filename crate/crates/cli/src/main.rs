//! `audit`: stage-by-stage corpus auditing pipeline with a resumable
//! workspace directory. See README for the config schema and examples.

mod config;
mod error;
mod figures;
mod manifest;
mod report;
mod stages;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{load_config, Overrides};
use crate::error::CliError;
use crate::workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "audit", version, about = "Audit story corpora for implicit protagonist gender bias")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Workspace directory (defaults to $AUDIT_WORKSPACE).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override corpus.path.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Override backends.inference.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Override analysis.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override any config key: --set section.key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Md,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and tokenize the corpus into the workspace.
    Ingest,
    /// Run coreference, pick protagonists, resolve gender, anonymize.
    Annotate,
    /// Collect commonsense inferences for every eligible sentence.
    Infer,
    /// Score inferences against lexicons and compute group medians.
    Score,
    /// Fit the per-category motivation regression.
    Regress,
    /// Run the gender-leakage probes.
    Probe,
    /// Assemble report.json and figures from prior stages.
    Report {
        /// Also render report.md when `md`.
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Run every stage in order.
    RunAll,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli.config.as_ref().ok_or_else(|| {
        CliError::Validation("--config <file> is required".to_string())
    })?;
    let overrides = Overrides {
        corpus: cli.corpus.clone(),
        backend: cli.backend.clone(),
        seed: cli.seed,
        set: cli.set.clone(),
    };
    let loaded = load_config(config_path, &overrides)?;
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("AUDIT_WORKSPACE").map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Validation(
                "no workspace: pass --out <dir> or set AUDIT_WORKSPACE".to_string(),
            )
        })?;
    let ws = Workspace::open(&out)?;
    match &cli.command {
        Command::Ingest => stages::ingest(&ws, &loaded),
        Command::Annotate => stages::annotate(&ws, &loaded),
        Command::Infer => stages::infer(&ws, &loaded),
        Command::Score => stages::score(&ws, &loaded),
        Command::Regress => stages::regress(&ws, &loaded),
        Command::Probe => stages::probe(&ws, &loaded),
        Command::Report { format } => {
            report::report_stage(&ws, &loaded, *format == ReportFormat::Md)
        }
        Command::RunAll => {
            stages::ingest(&ws, &loaded)?;
            stages::annotate(&ws, &loaded)?;
            stages::infer(&ws, &loaded)?;
            stages::score(&ws, &loaded)?;
            stages::regress(&ws, &loaded)?;
            stages::probe(&ws, &loaded)?;
            report::report_stage(&ws, &loaded, false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("audit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
