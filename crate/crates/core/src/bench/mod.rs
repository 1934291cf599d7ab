//! Evaluation pipeline: chunking, QA construction, original-vs-compressed
//! scoring, ratio statistics, error analysis and a token cost model.

pub mod chunk;
pub mod cost;
pub mod errors;
pub mod eval;
pub mod hierarchy;
pub mod mcq;
pub mod stats;
pub mod table;

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::compress::BackendError;

pub use chunk::{chunk_source, split_sentences, word_count, Chunk};
pub use cost::{cost_table, method_tokens, pipeline_cost, CostScenario, Method, MethodCost, Stage};
pub use errors::{error_analysis, ErrorItem, ErrorReport};
pub use eval::{
    accuracy, accuracy_table, eval_prompt, evaluate_suite, extract_choice, read_outcomes_csv, AccuracySummary,
    Condition, EvalCase, EvalRecord, OutcomeRow,
};
pub use hierarchy::{check_drops, check_hierarchy, AccuracyRow, AccuracyTable, Violation};
pub use mcq::{build_mcq, shuffle_options, ChunkRef, QAItem, Templates};
pub use stats::{percentile, ratio_stats, stats_from_ratios, RatioStats};
pub use table::Table;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("generation failed at {stage} (transcript {transcript_id}): {message}")]
    Generation { stage: &'static str, transcript_id: String, message: String },
    #[error("item {item}: duplicate option {option:?}")]
    DuplicateOption { item: String, option: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("line {line}: {message}")]
    Decode { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| BenchError::Decode { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}
