//! `te`: command-line front end for Telegraph English documents.

mod bench_cmd;
mod config;
mod doc_cmd;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

/// Bad flags, unreadable config and other caller mistakes; exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "te", version, about = "Parse, lint, index, assemble and benchmark Telegraph English")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Token counter: DEFAULT-V1, or `recorded` to use counts stored in the transcript.
    #[arg(long, global = true)]
    pub counter: Option<String>,
    /// Token budget for assembly.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Treat warnings and non-conforming results as failures.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Base seed for option shuffling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Replay model calls from this transcript instead of calling a backend.
    #[arg(long, global = true)]
    pub transcript: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the parsed document.
    Parse { file: PathBuf },
    /// Print the canonical rendering.
    Fmt {
        file: PathBuf,
        /// Exit 1 if the file is not already canonical.
        #[arg(long)]
        check: bool,
        /// Rewrite the file in place.
        #[arg(long, conflicts_with = "check")]
        write: bool,
    },
    /// Run the line rules.
    Lint {
        file: PathBuf,
        /// Also check numbers and references against this source text.
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Check that numbers and references in the source survive compression.
    CheckPreserve {
        #[arg(long)]
        source: PathBuf,
        file: PathBuf,
    },
    /// Build the line index as JSONL.
    Index {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Rank fact lines by term overlap.
    Retrieve {
        /// TE document, or an index written by `te index` (.jsonl).
        input: PathBuf,
        #[arg(short, long, num_args = 1.., required = true)]
        query: Vec<String>,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Render a document within a token budget.
    Assemble {
        file: PathBuf,
        /// JSON object mapping section titles to relevance scores.
        #[arg(long, conflicts_with = "query")]
        scores: Option<PathBuf>,
        /// Score sections by their best retrieval hit for these terms.
        #[arg(short, long, num_args = 1..)]
        query: Vec<String>,
        /// Always render this line id.
        #[arg(long)]
        keep: Vec<u64>,
        /// Never render this line id.
        #[arg(long)]
        drop: Vec<u64>,
        /// Print the plan instead of the text.
        #[arg(long)]
        plan: bool,
    },
    /// Apply or replay fact store operations.
    #[command(subcommand)]
    State(StateCmd),
    /// Compress a source text into TE.
    Compress {
        source: PathBuf,
        /// Write every backend exchange to this transcript.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Evaluation pipeline.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    /// Apply one op, append it to the log and print the result.
    Apply {
        file: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Operation as JSON, e.g. '{"op":"demote","section":10}'.
        #[arg(long)]
        op: String,
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Rebuild the current state from the initial document and the log.
    Replay {
        file: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchCmd {
    /// Split a source text into sentence-aligned chunks (JSONL).
    Chunk {
        file: PathBuf,
        #[arg(long)]
        doc_id: Option<String>,
        #[arg(long)]
        max_words: Option<usize>,
    },
    /// Build one multiple-choice item per chunk (JSONL).
    Mcq {
        chunks: PathBuf,
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Ask every item against the original and the compressed chunk.
    Eval {
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        chunks: PathBuf,
        /// JSONL of {"doc_id", "index", "text"} compressed chunks.
        #[arg(long)]
        compressed: PathBuf,
        /// Write the eval records here (JSONL).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "Compressed")]
        label: String,
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Accuracy table from stored records.
    Accuracy {
        #[arg(long, conflicts_with = "outcomes")]
        records: Option<PathBuf>,
        /// Compact CSV: item_id,ratio,original_correct,compressed_correct.
        #[arg(long, requires = "model")]
        outcomes: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value = "Compressed")]
        label: String,
    },
    /// Items correct on the original but wrong on the compressed text.
    Errors {
        #[arg(long, conflicts_with = "outcomes", requires = "ratios")]
        records: Option<PathBuf>,
        /// CSV with item_id,ratio columns.
        #[arg(long)]
        ratios: Option<PathBuf>,
        #[arg(long)]
        outcomes: Option<PathBuf>,
        /// Also list the error items.
        #[arg(long)]
        items: bool,
    },
    /// Compression ratio statistics.
    Stats {
        /// CSV with source_tokens,compressed_tokens columns.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Token cost of a multi-stage pipeline.
    Cost {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Check stored accuracy tables for original ≥ TE ≥ LLML2 and consistent changes.
    Hierarchy {
        #[arg(long)]
        tables: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("te: {e:#}");
            if e.chain().any(|c| c.is::<Usage>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let cfg = config::Config::load(cli.global.config.as_deref()).map_err(usage)?;
    let g = &cli.global;
    match &cli.command {
        Command::Parse { file } => doc_cmd::parse(g, file),
        Command::Fmt { file, check, write } => doc_cmd::fmt(file, *check, *write),
        Command::Lint { file, source } => doc_cmd::lint(g, &cfg, file, source.as_deref()),
        Command::CheckPreserve { source, file } => doc_cmd::check_preserve(g, source, file),
        Command::Index { file, out } => doc_cmd::index(file, out.as_deref()),
        Command::Retrieve { input, query, k } => doc_cmd::retrieve(g, input, query, *k),
        Command::Assemble { file, scores, query, keep, drop, plan } => {
            doc_cmd::assemble(g, file, scores.as_deref(), query, keep, drop, *plan)
        }
        Command::State(StateCmd::Apply { file, log, op, timestamp }) => {
            doc_cmd::state_apply(g, &cfg, file, log, op, timestamp.clone())
        }
        Command::State(StateCmd::Replay { file, log }) => doc_cmd::state_replay(g, &cfg, file, log),
        Command::Compress { source, record } => model::compress(g, &cfg, source, record.as_deref()),
        Command::Bench(b) => bench_cmd::run(g, &cfg, b),
    }
}
