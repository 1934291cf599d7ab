use crate::lint::{Diagnostic, CHECKLIST};

pub const BUILTIN_GRAMMAR_VERSION: &str = "v5-public-subset";
pub const BUILTIN_GRAMMAR: &str = include_str!("../../assets/grammar_v5_public_subset.md");

/// Ordered reasoning passes the compressor is asked to follow.
pub const PASSES: [(&str, &str); 6] = [
    ("Concepts", "list the entities, measures and named methods the source talks about"),
    ("Claims", "pull out each assertion the source makes about them, one per line"),
    ("Relations", "connect claims with the operators: cause, implication, contrast, trend"),
    ("Redundancy", "remove repeats and filler; keep every distinct fact"),
    ("Numbers", "verify every figure against the source digit by digit, with its unit"),
    ("Citations", "attach each reference to the claim it supports as [AUTHOR:YEAR], DOI: or ARXIV:"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarPrompt {
    pub version: String,
    pub text: String,
}

impl GrammarPrompt {
    pub fn builtin() -> Self {
        Self { version: BUILTIN_GRAMMAR_VERSION.into(), text: BUILTIN_GRAMMAR.into() }
    }
}

impl Default for GrammarPrompt {
    fn default() -> Self {
        Self::builtin()
    }
}

pub const SOURCE_OPEN: &str = "=== SOURCE ===";
pub const SOURCE_CLOSE: &str = "=== END SOURCE ===";

/// Grammar, pass order, quality gate and source, in that order. `None` if
/// the grammar text is blank.
pub fn build_prompt(grammar_spec: &str, source: &str) -> Option<String> {
    if grammar_spec.trim().is_empty() {
        return None;
    }
    let mut p = String::new();
    p.push_str("=== GRAMMAR ===\n");
    p.push_str(grammar_spec.trim_end());
    p.push_str("\n\n=== PROCEDURE ===\nWork through these passes in order before writing any output:\n");
    for (i, (name, what)) in PASSES.iter().enumerate() {
        p.push_str(&format!("{}. {name}: {what}.\n", i + 1));
    }
    p.push_str("\n=== QUALITY GATE ===\nCheck the draft against each item and fix every failure before answering.\n");
    for (category, rules) in CHECKLIST {
        p.push_str(&format!("{category}:\n"));
        if rules.is_empty() {
            p.push_str("- follow the grammar above\n");
        }
        for id in *rules {
            let info = crate::lint::registry::rule(id).expect("checklist rules are registered");
            p.push_str(&format!("- {id}: {}\n", info.description));
        }
    }
    p.push_str("\n=== OUTPUT ===\nReply with TE lines only: no commentary, no code fences.\n\n");
    p.push_str(SOURCE_OPEN);
    p.push('\n');
    p.push_str(source.trim_end());
    p.push('\n');
    p.push_str(SOURCE_CLOSE);
    p.push('\n');
    Some(p)
}

/// The base prompt plus the findings from the rejected attempt.
pub fn retry_prompt(base: &str, attempt: u32, previous: &str, diags: &[Diagnostic]) -> String {
    let mut p = base.to_string();
    p.push_str(&format!("\n=== FEEDBACK (attempt {attempt}) ===\nYour previous answer was:\n"));
    p.push_str(previous.trim_end());
    p.push_str("\nIt failed these checks:\n");
    for d in diags {
        p.push_str(&format!("- line {}: {} {} {}\n", d.line_id, d.severity, d.rule_id, d.message));
    }
    p.push_str("Rewrite the whole answer so that every check passes.\n");
    p
}
