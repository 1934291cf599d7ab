use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use telegraph::assemble::{counter_by_name, DefaultCounter, TokenCounter};
use telegraph::compress::{
    compress as run_compress, CompressError, CompressionRequest, GrammarPrompt, RecordingBackend, ReplayBackend,
    RetryPolicy, TextBackend,
};

use crate::config::Config;
use crate::output::{json_pretty, print, Format};
use crate::{usage, Global};

pub fn replay_backend(g: &Global) -> anyhow::Result<Option<ReplayBackend>> {
    g.transcript
        .as_deref()
        .map(|p| ReplayBackend::from_path(p).map_err(|e| usage(format!("{}: {e}", p.display()))))
        .transpose()
}

/// `--counter` wins; otherwise counts recorded in the transcript, then DEFAULT-V1.
pub fn counter(g: &Global, replay: Option<&ReplayBackend>) -> anyhow::Result<Box<dyn TokenCounter>> {
    let recorded = replay.and_then(ReplayBackend::recorded_counter);
    match g.counter.as_deref() {
        None => Ok(recorded.map_or_else(|| Box::new(DefaultCounter) as Box<dyn TokenCounter>, |c| Box::new(c.clone()))),
        Some("recorded") => recorded
            .map(|c| Box::new(c.clone()) as Box<dyn TokenCounter>)
            .ok_or_else(|| usage("--counter recorded needs a transcript with token counts")),
        Some(name) => counter_by_name(name).ok_or_else(|| usage(format!("unknown counter `{name}`"))),
    }
}

/// The backend for model calls plus an optional recorder around it.
pub struct Session {
    plain: Option<Box<dyn TextBackend>>,
    recording: Option<(RecordingBackend<Box<dyn TextBackend>>, PathBuf)>,
    pub counter: Box<dyn TokenCounter>,
}

impl Session {
    pub fn open(g: &Global, cfg: &Config, record: Option<&Path>) -> anyhow::Result<Self> {
        let replay = replay_backend(g)?;
        let counter = counter(g, replay.as_ref())?;
        let inner: Box<dyn TextBackend> = match replay {
            Some(r) => Box::new(r),
            None => live(cfg)?,
        };
        Ok(match record {
            Some(p) => Self { plain: None, recording: Some((RecordingBackend::new(inner), p.to_path_buf())), counter },
            None => Self { plain: Some(inner), recording: None, counter },
        })
    }

    pub fn backend(&self) -> &dyn TextBackend {
        match (&self.plain, &self.recording) {
            (Some(b), _) => b.as_ref(),
            (None, Some((r, _))) => r,
            (None, None) => unreachable!("session holds a backend"),
        }
    }

    /// Writes the transcript when recording.
    pub fn finish(self) -> anyhow::Result<()> {
        if let Some((r, path)) = self.recording {
            r.write_to(&path).with_context(|| path.display().to_string())?;
        }
        Ok(())
    }
}

#[cfg(feature = "http")]
fn live(cfg: &Config) -> anyhow::Result<Box<dyn TextBackend>> {
    let hc = cfg.backend.clone().ok_or_else(|| usage("no backend: pass --transcript or add a [backend] config section"))?;
    Ok(Box::new(telegraph::compress::HttpBackend::new(hc).map_err(|e| usage(e.to_string()))?))
}

#[cfg(not(feature = "http"))]
fn live(_: &Config) -> anyhow::Result<Box<dyn TextBackend>> {
    Err(usage("built without HTTP support: pass --transcript"))
}

pub fn request(cfg: &Config, source: String) -> anyhow::Result<CompressionRequest> {
    let mut req = CompressionRequest::new(&source);
    if let Some(p) = &cfg.compress.grammar {
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let version = cfg.compress.grammar_version.clone().unwrap_or_else(|| "custom".into());
        req.grammar = GrammarPrompt { version, text };
    }
    req.retry = RetryPolicy { max_attempts: cfg.compress.max_attempts, retry_on: cfg.compress.retry_on };
    req.params.max_tokens = cfg.compress.max_tokens;
    req.lint = cfg.lint_config().map_err(usage)?;
    Ok(req)
}

pub fn compress(g: &Global, cfg: &Config, source: &Path, record: Option<&Path>) -> anyhow::Result<ExitCode> {
    let text = crate::doc_cmd::read(source)?;
    let req = request(cfg, text)?;
    let session = Session::open(g, cfg, record)?;
    let result = run_compress(&req, session.backend(), session.counter.as_ref());
    session.finish()?;
    let r = match result {
        Ok(r) => r,
        Err(e @ CompressError::InvalidRequest(_)) => return Err(usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    match g.format {
        Format::Json => print(&json_pretty(&r))?,
        _ => print(&format!("{}\n", r.te_text))?,
    }
    eprintln!(
        "te: {} → {} tokens (ratio {:.3}, {}), {} attempt(s)",
        r.source_tokens, r.compressed_tokens, r.ratio, r.counter, r.attempts
    );
    for d in r.diagnostics.iter().chain(&r.preservation) {
        eprintln!("te: {} {} {}", d.severity, d.rule_id, d.message);
    }
    let failed = !r.conforming || !r.preservation.is_empty();
    Ok(if g.strict && failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
