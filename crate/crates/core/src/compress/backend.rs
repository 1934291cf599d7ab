use std::collections::{BTreeMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{text_sha256, CounterId, LookupCounter};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("no transcript entry for prompt {0}")]
    MissingTranscript(String),
    #[error("transcript line {line}: {source}")]
    Decode { line: usize, source: serde_json::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decoding parameters. The default is greedy decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { temperature: 0.0, max_tokens: None, seed: None }
    }
}

impl GenParams {
    pub fn with_temperature(temperature: f64) -> Self {
        Self { temperature, ..Self::default() }
    }
}

/// A text-generation service.
pub trait TextBackend: Send + Sync {
    fn model(&self) -> &str;
    fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError>;
}

impl<T: TextBackend + ?Sized> TextBackend for &T {
    fn model(&self) -> &str {
        (**self).model()
    }
    fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        (**self).send(prompt, params)
    }
}

impl<T: TextBackend + ?Sized> TextBackend for Box<T> {
    fn model(&self) -> &str {
        (**self).model()
    }
    fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        (**self).send(prompt, params)
    }
}

/// Token counts measured by an external tokenizer, keyed by text SHA-256.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedCounts {
    pub counter: CounterId,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_sha256: String,
    pub response: String,
    pub model: String,
    pub params: GenParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_counts: Option<RecordedCounts>,
}

pub fn read_transcript<R: BufRead>(r: R) -> Result<Vec<TranscriptEntry>, BackendError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| BackendError::Decode { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_transcript<W: Write>(mut w: W, entries: &[TranscriptEntry]) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Answers from a transcript. Entries with the same prompt hash are served
/// in file order.
#[derive(Debug)]
pub struct ReplayBackend {
    model: String,
    queues: Mutex<BTreeMap<String, VecDeque<TranscriptEntry>>>,
    counts: Option<LookupCounter>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let model = entries.first().map(|e| e.model.clone()).unwrap_or_else(|| "replay".into());
        let mut counts: Option<LookupCounter> = None;
        let mut queues: BTreeMap<String, VecDeque<TranscriptEntry>> = BTreeMap::new();
        for e in entries {
            if let Some(tc) = &e.token_counts {
                let lc = counts.get_or_insert_with(|| LookupCounter::new(&tc.counter.name, &tc.counter.version));
                lc.counts.extend(tc.counts.iter().map(|(k, v)| (k.clone(), *v)));
            }
            queues.entry(e.prompt_sha256.clone()).or_default().push_back(e);
        }
        Self { model, queues: Mutex::new(queues), counts }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::new(read_transcript(BufReader::new(File::open(path)?))?))
    }

    /// The counter recorded alongside the transcript, if any.
    pub fn recorded_counter(&self) -> Option<&LookupCounter> {
        self.counts.as_ref()
    }
}

impl TextBackend for ReplayBackend {
    fn model(&self) -> &str {
        &self.model
    }

    fn send(&self, prompt: &str, _params: &GenParams) -> Result<String, BackendError> {
        let sha = text_sha256(prompt);
        let mut q = self.queues.lock().expect("replay queue lock");
        let entry = q.get_mut(&sha).and_then(VecDeque::pop_front).ok_or(BackendError::MissingTranscript(sha))?;
        Ok(entry.response)
    }
}

/// Forwards to an inner backend and records every exchange.
pub struct RecordingBackend<B> {
    inner: B,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl<B: TextBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, entries: Mutex::new(Vec::new()) }
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().expect("recording lock").clone()
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        write_transcript(File::create(path)?, &self.entries())
    }
}

impl<B: TextBackend> TextBackend for RecordingBackend<B> {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        let response = self.inner.send(prompt, params)?;
        self.entries.lock().expect("recording lock").push(TranscriptEntry {
            prompt_sha256: text_sha256(prompt),
            response: response.clone(),
            model: self.inner.model().to_string(),
            params: params.clone(),
            token_counts: None,
        });
        Ok(response)
    }
}

/// Backend driven by a closure; handy for scripted fixtures.
pub struct FnBackend<F> {
    model: String,
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&str, &GenParams) -> Result<String, BackendError> + Send + Sync,
{
    pub fn new(model: &str, f: F) -> Self {
        Self { model: model.into(), f }
    }
}

impl<F> TextBackend for FnBackend<F>
where
    F: Fn(&str, &GenParams) -> Result<String, BackendError> + Send + Sync,
{
    fn model(&self) -> &str {
        &self.model
    }

    fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
        (self.f)(prompt, params)
    }
}

#[cfg(feature = "http")]
pub use http::{HttpBackend, HttpConfig};

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};
    use serde_json::{json, Value};

    use super::{BackendError, GenParams, TextBackend};

    /// OpenAI-compatible chat completions endpoint.
    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct HttpConfig {
        pub endpoint: String,
        pub model: String,
        #[serde(default = "default_token_env")]
        pub token_env: String,
        #[serde(default = "default_timeout")]
        pub timeout_secs: u64,
        #[serde(default = "default_retries")]
        pub max_retries: u32,
    }

    fn default_token_env() -> String {
        "TE_API_KEY".into()
    }

    fn default_timeout() -> u64 {
        120
    }

    fn default_retries() -> u32 {
        3
    }

    pub struct HttpBackend {
        cfg: HttpConfig,
        token: String,
        agent: ureq::Agent,
    }

    impl HttpBackend {
        pub fn new(cfg: HttpConfig) -> Result<Self, BackendError> {
            let token = std::env::var(&cfg.token_env)
                .map_err(|_| BackendError::Config(format!("environment variable {} is not set", cfg.token_env)))?;
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .new_agent();
            Ok(Self { cfg, token, agent })
        }

        fn once(&self, body: &Value) -> Result<Result<String, BackendError>, BackendError> {
            let url = format!("{}/chat/completions", self.cfg.endpoint.trim_end_matches('/'));
            let mut resp = match self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {}", self.token))
                .send_json(body)
            {
                Ok(r) => r,
                Err(e) => return Err(BackendError::Transport(e.to_string())),
            };
            let status = resp.status().as_u16();
            if status == 429 || status >= 500 {
                return Err(BackendError::Transport(format!("HTTP {status}")));
            }
            let v: Value = match resp.body_mut().read_json() {
                Ok(v) => v,
                Err(e) => return Ok(Err(BackendError::Protocol(format!("HTTP {status}: {e}")))),
            };
            if status >= 400 {
                return Ok(Err(BackendError::Protocol(format!("HTTP {status}: {v}"))));
            }
            Ok(v["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| BackendError::Protocol("response has no choices[0].message.content".into())))
        }
    }

    impl TextBackend for HttpBackend {
        fn model(&self) -> &str {
            &self.cfg.model
        }

        fn send(&self, prompt: &str, params: &GenParams) -> Result<String, BackendError> {
            let mut body = json!({
                "model": self.cfg.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": params.temperature,
            });
            if let Some(m) = params.max_tokens {
                body["max_tokens"] = json!(m);
            }
            if let Some(s) = params.seed {
                body["seed"] = json!(s);
            }
            let mut last = BackendError::Transport("no attempt made".into());
            for attempt in 0..=self.cfg.max_retries {
                if attempt > 0 {
                    std::thread::sleep(Duration::from_millis(500 << attempt.min(6)));
                }
                match self.once(&body) {
                    Ok(result) => return result,
                    Err(e) => last = e,
                }
            }
            Err(last)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_serves_in_order() {
        let e = |r: &str| TranscriptEntry {
            prompt_sha256: text_sha256("p"),
            response: r.into(),
            model: "m".into(),
            params: GenParams::default(),
            token_counts: None,
        };
        let b = ReplayBackend::new(vec![e("one"), e("two")]);
        assert_eq!(b.send("p", &GenParams::default()).unwrap(), "one");
        assert_eq!(b.send("p", &GenParams::default()).unwrap(), "two");
        assert!(matches!(b.send("p", &GenParams::default()), Err(BackendError::MissingTranscript(_))));
        assert!(matches!(b.send("q", &GenParams::default()), Err(BackendError::MissingTranscript(_))));
    }

    #[test]
    fn record_then_replay() {
        let rec = RecordingBackend::new(FnBackend::new("echo", |p: &str, _: &GenParams| Ok(p.to_uppercase())));
        assert_eq!(rec.send("abc", &GenParams::default()).unwrap(), "ABC");
        let mut buf = Vec::new();
        write_transcript(&mut buf, &rec.entries()).unwrap();
        let replay = ReplayBackend::new(read_transcript(&buf[..]).unwrap());
        assert_eq!(replay.model(), "echo");
        assert_eq!(replay.send("abc", &GenParams::default()).unwrap(), "ABC");
    }

    #[test]
    fn transcript_json_shape() {
        let e = TranscriptEntry {
            prompt_sha256: "ab".into(),
            response: "X".into(),
            model: "m".into(),
            params: GenParams::default(),
            token_counts: None,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"prompt_sha256":"ab","response":"X","model":"m","params":{"temperature":0.0}}"#
        );
    }
}
