use std::path::{Path, PathBuf};

use serde::Deserialize;
use telegraph::lint::{LintConfig, RuleConfig, Severity};

#[cfg(feature = "http")]
pub use telegraph::compress::HttpConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub lint: LintSection,
    #[cfg(feature = "http")]
    pub backend: Option<HttpConfig>,
    #[serde(default)]
    pub compress: CompressSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LintSection {
    #[serde(default)]
    pub rules: Vec<RuleConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressSection {
    #[serde(default = "three")]
    pub max_attempts: u32,
    #[serde(default = "error")]
    pub retry_on: Severity,
    pub grammar: Option<PathBuf>,
    pub grammar_version: Option<String>,
    pub max_tokens: Option<u32>,
}

impl Default for CompressSection {
    fn default() -> Self {
        Self { max_attempts: 3, retry_on: Severity::Error, grammar: None, grammar_version: None, max_tokens: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "thousand")]
    pub max_words: usize,
    #[serde(default = "four")]
    pub max_in_flight: usize,
    pub templates: Option<PathBuf>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { max_words: 1000, max_in_flight: 4, templates: None }
    }
}

fn three() -> u32 {
    3
}

fn four() -> usize {
    4
}

fn thousand() -> usize {
    1000
}

fn error() -> Severity {
    Severity::Error
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.compress.grammar, &mut cfg.bench.templates].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn lint_config(&self) -> Result<LintConfig, String> {
        LintConfig::new(self.lint.rules.clone()).map_err(|e| e.to_string())
    }
}
