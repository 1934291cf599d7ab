//! Rule registry: ids, default severities, parameter schemas, and how the
//! rules cover the quality-gate checklist.

use serde::{Deserialize, Serialize};

use super::Severity;

pub const R_CASE: &str = "R-CASE";
pub const R_DENSITY: &str = "R-DENSITY";
pub const R_ATOMIC: &str = "R-ATOMIC";
pub const R_QUANTITY: &str = "R-QUANTITY";
pub const R_CITATION: &str = "R-CITATION";
pub const R_VS_CAUSAL: &str = "R-VS-CAUSAL";
pub const R_TAG_POSITION: &str = "R-TAG-POSITION";
pub const S_STRUCTURE: &str = "S-STRUCTURE";
pub const P_NUM: &str = "P-NUM";
pub const P_CITE: &str = "P-CITE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    PositiveInt,
    StringList,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamType,
    pub description: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScope {
    /// Runs on the parsed document alone.
    Document,
    /// Needs the uncompressed source text.
    Source,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuleInfo {
    pub id: &'static str,
    pub checklist: &'static str,
    pub default_severity: Severity,
    pub scope: RuleScope,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
}

pub const RULES: &[RuleInfo] = &[
    RuleInfo {
        id: R_CASE,
        checklist: "formatting consistency",
        default_severity: Severity::Warning,
        scope: RuleScope::Document,
        description: "Terms are written in upper case. Lower case is kept only where it carries information: \
                      listed proper names, code identifiers (letters mixed with digits) and SI unit symbols.",
        params: &[ParamSpec {
            name: "allow",
            kind: ParamType::StringList,
            description: "extra words that may keep their case",
        }],
    },
    RuleInfo {
        id: R_DENSITY,
        checklist: "symbol precision",
        default_severity: Severity::Error,
        scope: RuleScope::Document,
        description: "No more than three operator symbols in a row on one line.",
        params: &[ParamSpec {
            name: "max_consecutive",
            kind: ParamType::PositiveInt,
            description: "longest allowed run of symbol atoms",
        }],
    },
    RuleInfo {
        id: R_ATOMIC,
        checklist: "formatting consistency",
        default_severity: Severity::Warning,
        scope: RuleScope::Document,
        description: "Each line states exactly one claim, step, event or question: at most one sentence-final \
                      mark and no second clause group split off by one.",
        params: &[],
    },
    RuleInfo {
        id: R_QUANTITY,
        checklist: "number formatting",
        default_severity: Severity::Warning,
        scope: RuleScope::Document,
        description: "Every number is a quantity: VAR=VALUEUNIT, a signed change (+2.5PT, -12%), a frame \
                      (Y/Y+5%), a currency amount (USD10.5 M), a duration (30 D) or a test statistic (p<0.001).",
        params: &[],
    },
    RuleInfo {
        id: R_CITATION,
        checklist: "citation integrity",
        default_severity: Severity::Error,
        scope: RuleScope::Document,
        description: "Bracketed references use [AUTHOR:YYYY] with an upper-case author and a four-digit year; \
                      other references use DOI:, ARXIV: or a full URL.",
        params: &[],
    },
    RuleInfo {
        id: R_VS_CAUSAL,
        checklist: "symbol precision",
        default_severity: Severity::Error,
        scope: RuleScope::Document,
        description: "VS marks a contrast and is never combined with a causal operator (→, ∵) in the same clause.",
        params: &[],
    },
    RuleInfo {
        id: R_TAG_POSITION,
        checklist: "formatting consistency",
        default_severity: Severity::Warning,
        scope: RuleScope::Document,
        description: "A tag (CTX:, PAST:, DEF:, Q:, ...) opens the line it qualifies.",
        params: &[],
    },
    RuleInfo {
        id: S_STRUCTURE,
        checklist: "formatting consistency",
        default_severity: Severity::Warning,
        scope: RuleScope::Document,
        description: "Indented lines sit inside a section or ctx scope; fact lines contain a term.",
        params: &[],
    },
    RuleInfo {
        id: P_NUM,
        checklist: "information preservation",
        default_severity: Severity::Error,
        scope: RuleScope::Source,
        description: "Every number in the source appears in the compressed text.",
        params: &[],
    },
    RuleInfo {
        id: P_CITE,
        checklist: "citation integrity",
        default_severity: Severity::Error,
        scope: RuleScope::Source,
        description: "Every author-year reference in the source appears as [AUTHOR:YYYY].",
        params: &[],
    },
];

/// Checklist categories and the rules that implement them. Categories
/// with no rule are open slots.
pub const CHECKLIST: &[(&str, &[&str])] = &[
    ("formatting consistency", &[R_CASE, R_ATOMIC, R_TAG_POSITION, S_STRUCTURE]),
    ("symbol precision", &[R_DENSITY, R_VS_CAUSAL]),
    ("abbreviation policy", &[]),
    ("number formatting", &[R_QUANTITY]),
    ("information preservation", &[P_NUM]),
    ("citation integrity", &[R_CITATION, P_CITE]),
];

pub fn rule(id: &str) -> Option<&'static RuleInfo> {
    RULES.iter().find(|r| r.id == id)
}

/// The seven line rules run by `lint_document`.
pub fn line_rules() -> impl Iterator<Item = &'static RuleInfo> {
    RULES.iter().filter(|r| r.id.starts_with("R-"))
}
