use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod manifest;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cultura", version, about = "Cultural artifact repository pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Pipeline config (TOML). Defaults to ./cultura.toml when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repository file, overriding `paths.store`.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Compute and report without writing the store or outputs.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    ToEnglish,
    ToLocal,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract knowledge-base artifacts from a Wikidata JSON dump.
    Extract {
        /// Dump path, or `-` for stdin.
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        schemas: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Where to write the extraction summary (default: next to the store).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Generate candidates with the exclusion-list loop.
    Generate {
        /// Restrict to these countries (repeatable).
        #[arg(long)]
        country: Vec<String>,
        /// Restrict to these concepts (repeatable).
        #[arg(long)]
        concept: Vec<String>,
    },
    /// Score generated candidates and pick the least popular for validation.
    Triage {
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Serve the annotation API for triaged candidates.
    ServeValidation {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Apply completed validation verdicts to the store.
    Aggregate,
    /// Import a community contribution CSV.
    IngestCommunity {
        #[arg(long)]
        file: PathBuf,
    },
    /// Export translation jobs as JSONL.
    TranslateExport {
        #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
        direction: DirectionArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Import completed translation jobs.
    TranslateImport {
        #[arg(long)]
        jobs: PathBuf,
    },
    /// Query audited models with the prompt battery and score them.
    Audit {
        /// Model tags to audit (repeatable; default every configured model).
        #[arg(long)]
        model: Vec<String>,
        /// Score archived answers without querying.
        #[arg(long)]
        score_only: bool,
    },
    /// Render report tables from saved audit reports.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    let mut chain = Vec::new();
    let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(e);
    while let Some(c) = cur {
        chain.push(c.to_string());
        cur = c.source();
    }
    let body = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "causes": chain,
        "resumable": e.resumable(),
    });
    eprintln!("{body}");
    if e.resumable() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}
