//! Pipeline CLI. Stages communicate only through files; identical inputs,
//! config, and providers produce identical outputs.

mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neon_core::PipelineConfig;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "neon",
    about = "Entity-interaction graphs from news streams, temporal retrieval, and judged QA"
)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Force the deterministic in-process providers (no network).
    #[arg(long, global = true)]
    mock_providers: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse annotated articles into deduplicated sentence chunks.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Extract the interaction graph from chunks.
    Extract {
        #[arg(long)]
        chunks: PathBuf,
        /// Subject entities, JSON-lines of {"id", "name"}.
        #[arg(long)]
        subjects: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Overrides extraction.variant from the config (m1 or m2).
        #[arg(long)]
        variant: Option<String>,
        /// Metrics sidecar path; defaults to the output path with a
        /// `.metrics.json` extension.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Build a dense temporal datastore from a graph or chunk file.
    Index {
        #[arg(long)]
        input: PathBuf,
        /// What the input file holds: interactions or chunks.
        #[arg(long, default_value = "interactions")]
        source: String,
        #[arg(long)]
        store: PathBuf,
    },
    /// Answer temporal queries against a datastore.
    Query {
        #[arg(long)]
        store: PathBuf,
        /// Queries, JSON-lines of {"query", "date"}.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// temporal, generic, or hybrid; overrides the config.
        #[arg(long)]
        strategy: Option<String>,
        /// Retrieval depth; overrides the config and the store default.
        #[arg(long)]
        k: Option<usize>,
        /// Back-off day range; overrides the config.
        #[arg(long)]
        r: Option<u32>,
        /// Query date override applied to every row (YYYYMMDD).
        #[arg(long)]
        date: Option<String>,
        /// Entity linker dictionary, JSON-lines of {"surface", "entity_id", "name"}.
        #[arg(long)]
        linker: Option<PathBuf>,
        /// Method label recorded on answers (used for eval grouping).
        #[arg(long, default_value = "neon")]
        method_label: String,
    },
    /// Judge answers attribute-by-attribute and aggregate a report.
    Eval {
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// all, h(elpfulness), r(elevance), or f(aithfulness).
        #[arg(long, default_value = "all")]
        attribute: String,
        /// zero or few; overrides the config.
        #[arg(long)]
        mode: Option<String>,
        /// Few-shot in-context examples (JSON); overrides the config.
        #[arg(long)]
        examples: Option<PathBuf>,
    },
    /// Detect spiking dates in per-entity query volumes.
    Spikes {
        /// CSV (entity,date,count,distinct_users) or JSON-lines input.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Drop rows seen by fewer than this many distinct users.
        #[arg(long, default_value_t = 5)]
        min_users: u64,
        /// Rolling-sum window in days.
        #[arg(long, default_value_t = 3)]
        window: usize,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    stage: &'a str,
    kind: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let stage = match &cli.command {
        Command::Ingest { .. } => "ingest",
        Command::Extract { .. } => "extract",
        Command::Index { .. } => "index",
        Command::Query { .. } => "query",
        Command::Eval { .. } => "eval",
        Command::Spikes { .. } => "spikes",
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err
                .downcast_ref::<stages::StageError>()
                .map(|e| e.kind())
                .unwrap_or("error");
            let report = ErrorReport {
                error: ErrorBody {
                    stage,
                    kind,
                    message: format!("{err:#}"),
                },
            };
            eprintln!(
                "{}",
                serde_json::to_string(&report).unwrap_or_else(|_| format!("{err:#}"))
            );
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(stages::StageError::config)?,
        None => PipelineConfig::default(),
    };

    match cli.command {
        Command::Ingest { input, output } => stages::ingest(&config, &input, &output),
        Command::Extract {
            chunks,
            subjects,
            output,
            variant,
            metrics,
        } => stages::extract(
            &config,
            cli.mock_providers,
            &chunks,
            &subjects,
            &output,
            variant.as_deref(),
            metrics.as_deref(),
        ),
        Command::Index {
            input,
            source,
            store,
        } => stages::index(&config, cli.mock_providers, &input, &source, &store),
        Command::Query {
            store,
            queries,
            output,
            strategy,
            k,
            r,
            date,
            linker,
            method_label,
        } => stages::query(
            &config,
            cli.mock_providers,
            &store,
            &queries,
            &output,
            stages::QueryOverrides {
                strategy,
                k,
                r,
                date,
                linker,
                method_label,
            },
        ),
        Command::Eval {
            answers,
            output_dir,
            attribute,
            mode,
            examples,
        } => stages::eval(
            &config,
            cli.mock_providers,
            &answers,
            &output_dir,
            &attribute,
            mode.as_deref(),
            examples.as_deref(),
        ),
        Command::Spikes {
            input,
            output,
            min_users,
            window,
        } => stages::spikes(&input, &output, min_users, window),
    }
}
