//! LLM compression boundary: prompt construction, a pluggable text backend
//! with record/replay, and lint-driven retries.

mod backend;
mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{text_sha256, CounterId, TokenCounter};
use crate::grammar::{parse_document, Document};
use crate::lint::{check_preservation, lint_document, Diagnostic, LintConfig, Severity};

pub use backend::{
    read_transcript, write_transcript, BackendError, FnBackend, GenParams, RecordedCounts, RecordingBackend,
    ReplayBackend, TextBackend, TranscriptEntry,
};
#[cfg(feature = "http")]
pub use backend::{HttpBackend, HttpConfig};
pub use prompt::{build_prompt, retry_prompt, GrammarPrompt, BUILTIN_GRAMMAR, BUILTIN_GRAMMAR_VERSION, PASSES};

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("service error after {attempts} attempt(s): {source}")]
    Service { attempts: u32, source: BackendError },
    #[error("protocol error on attempt {attempt}: {message}")]
    Protocol { attempt: u32, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Diagnostics at or above this severity trigger another attempt.
    pub retry_on: Severity,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, retry_on: Severity::Error }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionRequest {
    pub source: String,
    pub grammar: GrammarPrompt,
    pub params: GenParams,
    pub retry: RetryPolicy,
    pub lint: LintConfig,
}

impl CompressionRequest {
    pub fn new(source: &str) -> Self {
        Self {
            source: source.to_string(),
            grammar: GrammarPrompt::builtin(),
            params: GenParams::default(),
            retry: RetryPolicy::default(),
            lint: LintConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub te_text: String,
    pub document: Document,
    /// Lint findings on the final attempt.
    pub diagnostics: Vec<Diagnostic>,
    /// Number and citation checks against the source.
    pub preservation: Vec<Diagnostic>,
    pub counter: CounterId,
    pub source_tokens: usize,
    pub compressed_tokens: usize,
    pub ratio: f64,
    pub attempts: u32,
    /// False when attempts ran out with retry-level findings left.
    pub conforming: bool,
    pub grammar_version: String,
    pub model: String,
    /// SHA-256 of the final prompt, the transcript key of the answer used.
    pub transcript_id: String,
}

fn blocking(diags: &[Diagnostic], at: Severity) -> Vec<Diagnostic> {
    diags.iter().filter(|d| d.severity >= at).cloned().collect()
}

/// Compresses `req.source`, re-prompting with the lint findings while
/// findings remain and attempts are left.
pub fn compress(
    req: &CompressionRequest,
    backend: &dyn TextBackend,
    counter: &dyn TokenCounter,
) -> Result<CompressionResult, CompressError> {
    if req.source.trim().is_empty() {
        return Err(CompressError::InvalidRequest("source is empty".into()));
    }
    if req.retry.max_attempts == 0 {
        return Err(CompressError::InvalidRequest("max_attempts must be at least 1".into()));
    }
    let base = build_prompt(&req.grammar.text, &req.source)
        .ok_or_else(|| CompressError::InvalidRequest("grammar text is empty".into()))?;
    let mut prompt = base.clone();
    let mut attempt = 0;
    loop {
        attempt += 1;
        let response = backend
            .send(&prompt, &req.params)
            .map_err(|source| CompressError::Service { attempts: attempt, source })?;
        let te_text = response.trim().to_string();
        if te_text.is_empty() {
            return Err(CompressError::Protocol { attempt, message: "empty response".into() });
        }
        let document = parse_document(&te_text);
        let diagnostics = lint_document(&document, &req.lint);
        let blockers = blocking(&diagnostics, req.retry.retry_on);
        if !blockers.is_empty() && attempt < req.retry.max_attempts {
            prompt = retry_prompt(&base, attempt, &te_text, &blockers);
            continue;
        }
        let source_tokens = counter.count(&req.source);
        let compressed_tokens = counter.count(&te_text);
        return Ok(CompressionResult {
            preservation: check_preservation(&req.source, &document),
            ratio: if source_tokens == 0 { 0.0 } else { compressed_tokens as f64 / source_tokens as f64 },
            conforming: blockers.is_empty(),
            counter: counter.id(),
            source_tokens,
            compressed_tokens,
            attempts: attempt,
            grammar_version: req.grammar.version.clone(),
            model: backend.model().to_string(),
            transcript_id: text_sha256(&prompt),
            te_text,
            document,
            diagnostics,
        });
    }
}

/// Runs `compress` over many requests with at most `max_in_flight`
/// concurrent backend calls. Results come back in request order.
pub fn compress_batch(
    reqs: &[CompressionRequest],
    backend: &dyn TextBackend,
    counter: &dyn TokenCounter,
    max_in_flight: usize,
) -> Vec<Result<CompressionResult, CompressError>> {
    let workers = max_in_flight.max(1).min(reqs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<CompressionResult, CompressError>>>> =
        reqs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= reqs.len() {
                    break;
                }
                let r = compress(&reqs[i], backend, counter);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}
