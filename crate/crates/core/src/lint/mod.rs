//! Deterministic quality gate over parsed TE documents.
//!
//! `lint_document` runs the line rules from [`registry::RULES`];
//! `check_preservation` compares a compressed document against its source
//! text for dropped numbers and citations.

mod preserve;
pub mod registry;
mod rules;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Document, LineId, Span};

pub use preserve::{check_preservation, extract_numerals, normalize_numeral};
pub use registry::{RuleInfo, CHECKLIST, RULES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule_id: String,
    pub severity: Severity,
    /// Line the finding belongs to; 0 for source-level findings.
    pub line_id: LineId,
    /// Char range in the line content (or in the source text for
    /// preservation findings).
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    /// `file:line:col: severity RULE message`
    pub fn to_text(&self, file: &str, line: usize, col: usize) -> String {
        format!("{file}:{line}:{col}: {} {} {}", self.severity, self.rule_id, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown lint rule `{0}`")]
    UnknownRule(String),
    #[error("rule {rule}: unknown parameter `{param}`")]
    UnknownParam { rule: String, param: String },
    #[error("rule {rule}: parameter `{param}` {problem}")]
    BadParam { rule: String, param: String, problem: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub rule_id: String,
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

fn default_true() -> bool {
    true
}

impl RuleConfig {
    pub fn new(rule_id: &str) -> Self {
        Self { rule_id: rule_id.to_string(), enabled: true, severity: None, params: BTreeMap::new() }
    }

    pub fn disabled(rule_id: &str) -> Self {
        Self { enabled: false, ..Self::new(rule_id) }
    }

    pub fn with_param(mut self, name: &str, value: serde_json::Value) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = Some(severity);
        self
    }
}

/// A validated set of rule overrides. Rules without an entry run with
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LintConfig {
    rules: BTreeMap<String, RuleConfig>,
}

impl LintConfig {
    pub fn new(overrides: impl IntoIterator<Item = RuleConfig>) -> Result<Self, ConfigError> {
        let mut rules = BTreeMap::new();
        for rc in overrides {
            validate(&rc)?;
            rules.insert(rc.rule_id.clone(), rc);
        }
        Ok(Self { rules })
    }

    pub fn enabled(&self, rule: &str) -> bool {
        self.rules.get(rule).is_none_or(|r| r.enabled)
    }

    pub fn severity(&self, rule: &str) -> Severity {
        self.rules
            .get(rule)
            .and_then(|r| r.severity)
            .or_else(|| registry::rule(rule).map(|r| r.default_severity))
            .unwrap_or(Severity::Warning)
    }

    fn param(&self, rule: &str, name: &str) -> Option<&serde_json::Value> {
        self.rules.get(rule).and_then(|r| r.params.get(name))
    }

    pub fn max_consecutive_symbols(&self) -> usize {
        self.param(registry::R_DENSITY, "max_consecutive")
            .and_then(|v| v.as_u64())
            .map_or(3, |v| v as usize)
    }

    pub fn case_allow_list(&self) -> Vec<String> {
        self.param(registry::R_CASE, "allow")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}

fn validate(rc: &RuleConfig) -> Result<(), ConfigError> {
    let info = registry::rule(&rc.rule_id).ok_or_else(|| ConfigError::UnknownRule(rc.rule_id.clone()))?;
    for (name, value) in &rc.params {
        let spec = info.params.iter().find(|p| p.name == name).ok_or_else(|| ConfigError::UnknownParam {
            rule: rc.rule_id.clone(),
            param: name.clone(),
        })?;
        let bad = |problem: &str| ConfigError::BadParam {
            rule: rc.rule_id.clone(),
            param: name.clone(),
            problem: problem.to_string(),
        };
        match spec.kind {
            registry::ParamType::PositiveInt => {
                if !value.as_u64().is_some_and(|v| v >= 1) {
                    return Err(bad("must be an integer >= 1"));
                }
            }
            registry::ParamType::StringList => {
                if !value.as_array().is_some_and(|a| a.iter().all(|v| v.is_string())) {
                    return Err(bad("must be a list of strings"));
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.line_id, a.span, &a.rule_id, &a.message).cmp(&(b.line_id, b.span, &b.rule_id, &b.message))
    });
}

/// Runs every enabled line rule plus the structural checks.
pub fn lint_document(doc: &Document, config: &LintConfig) -> Vec<Diagnostic> {
    let mut out = rules::run(doc, config);
    sort_diagnostics(&mut out);
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
