use crate::grammar::{Atom, Document, IssueKind, Line, Span, SymbolCategory};

use super::registry::{R_ATOMIC, R_CASE, R_CITATION, R_DENSITY, R_QUANTITY, R_TAG_POSITION, R_VS_CAUSAL, S_STRUCTURE};
use super::{Diagnostic, LintConfig};

/// SI base/derived unit symbols and common prefixed forms.
const SI_UNITS: &[&str] = &[
    "m", "s", "g", "kg", "mg", "ug", "μg", "mol", "cd", "Hz", "kHz", "MHz", "GHz", "Pa", "kPa", "hPa", "Wb", "lm",
    "lx", "Bq", "Gy", "Sv", "kat", "ms", "us", "μs", "ns", "ps", "km", "cm", "mm", "um", "μm", "nm", "ml", "mL",
    "dL", "kW", "MW", "GW", "kWh", "MWh", "GWh", "kV", "mV", "mA", "kJ", "MJ", "kB", "MB", "GB", "TB", "Gb",
    "Mb", "kb", "bps", "kbps", "Mbps", "Gbps", "h", "min", "d", "mmHg", "dB", "rpm",
];

fn is_code(word: &str) -> bool {
    let has_digit = word.chars().any(|c| c.is_ascii_digit());
    let has_lower = word.chars().any(char::is_lowercase);
    (has_digit && has_lower) || word.contains('_') || word.contains("::") || word.contains("()")
}

fn case_exempt(part: &str, allow: &[String]) -> bool {
    !part.chars().any(char::is_lowercase)
        || allow.iter().any(|a| a == part)
        || is_code(part)
        || SI_UNITS.contains(&part)
        || (part.chars().count() == 1)
}

fn content_span(line: &Line) -> Span {
    match (line.atoms.first(), line.atoms.last()) {
        (Some(a), Some(b)) => Span::new(a.span.start, b.span.end),
        _ => Span::new(0, 0),
    }
}

struct Ctx<'a> {
    config: &'a LintConfig,
    out: Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn emit(&mut self, rule: &str, line: &Line, span: Span, message: String) {
        self.out.push(Diagnostic {
            rule_id: rule.to_string(),
            severity: self.config.severity(rule),
            line_id: line.id,
            span,
            message,
        });
    }
}

fn r_case(cx: &mut Ctx<'_>, line: &Line, allow: &[String]) {
    for a in &line.atoms {
        let Some(term) = a.as_term() else { continue };
        if term.contains('[') || term.contains(']') || allow.iter().any(|w| w == term) {
            continue;
        }
        if term.split('-').any(|p| !case_exempt(p, allow)) {
            cx.emit(R_CASE, line, a.span, format!("lower-case term `{term}`"));
        }
    }
}

fn is_run_member(a: &Atom) -> bool {
    a.as_symbol().is_some()
}

/// Maximal runs of consecutive symbol atoms as (first, last) atom indices.
pub(crate) fn symbol_runs(atoms: &[Atom]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, a) in atoms.iter().enumerate() {
        match (is_run_member(a), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, atoms.len() - 1));
    }
    runs
}

fn r_density(cx: &mut Ctx<'_>, line: &Line, max: usize) {
    for (s, e) in symbol_runs(&line.atoms) {
        let len = e - s + 1;
        if len > max {
            let span = Span::new(line.atoms[s].span.start, line.atoms[e].span.end);
            cx.emit(R_DENSITY, line, span, format!("{len} consecutive symbols (max {max})"));
        }
    }
}

fn is_final(a: &Atom) -> bool {
    matches!(a.as_punctuation(), Some('.' | '?' | '!'))
}

fn r_atomic(cx: &mut Ctx<'_>, line: &Line) {
    if !line.is_fact_like() {
        return;
    }
    let marks = line.atoms.iter().filter(|a| is_final(a)).count();
    let groups = line.atoms.split(is_final).filter(|g| !g.is_empty()).count();
    if marks >= 2 || groups >= 2 {
        cx.emit(
            R_ATOMIC,
            line,
            content_span(line),
            format!("line holds more than one statement ({marks} sentence marks, {groups} groups)"),
        );
    }
}

fn numeric_word(term: &str) -> bool {
    term.split('-').next().and_then(|p| p.chars().next()).is_some_and(|c| c.is_ascii_digit())
}

fn r_quantity(cx: &mut Ctx<'_>, line: &Line) {
    for a in &line.atoms {
        let Some(term) = a.as_term() else { continue };
        if term.starts_with('[') {
            continue;
        }
        if numeric_word(term) {
            cx.emit(R_QUANTITY, line, a.span, format!("number `{term}` is not written as a quantity"));
        }
    }
}

fn r_citation(cx: &mut Ctx<'_>, line: &Line) {
    for a in &line.atoms {
        let Some(term) = a.as_term() else { continue };
        if term.contains('[') || term.contains(']') {
            cx.emit(R_CITATION, line, a.span, format!("malformed reference `{term}`"));
        }
    }
}

fn is_group_break(a: &Atom) -> bool {
    a.as_punctuation().is_some()
}

fn r_vs_causal(cx: &mut Ctx<'_>, line: &Line) {
    let atoms = &line.atoms;
    for (i, a) in atoms.iter().enumerate() {
        if a.as_symbol().is_none_or(|s| s.category != SymbolCategory::Contrast) {
            continue;
        }
        let left = atoms[..i].iter().rev().take_while(|b| !is_group_break(b)).find_map(Atom::as_symbol);
        let right = atoms[i + 1..].iter().take_while(|b| !is_group_break(b)).find_map(Atom::as_symbol);
        for s in [left, right].into_iter().flatten() {
            if s.category == SymbolCategory::Causal {
                cx.emit(R_VS_CAUSAL, line, a.span, format!("VS combined with causal `{}`", s.glyph));
                break;
            }
        }
    }
}

fn r_tag_position(cx: &mut Ctx<'_>, line: &Line) {
    for a in line.atoms.iter().skip(1) {
        if let Some(t) = a.as_tag() {
            cx.emit(R_TAG_POSITION, line, a.span, format!("tag `{}` is not at line start", t.surface));
        }
    }
}

pub(super) fn run(doc: &Document, config: &LintConfig) -> Vec<Diagnostic> {
    let mut cx = Ctx { config, out: Vec::new() };
    let allow = config.case_allow_list();
    let max = config.max_consecutive_symbols();
    let lines = doc.lines();
    for line in &lines {
        if config.enabled(R_CASE) {
            r_case(&mut cx, line, &allow);
        }
        if config.enabled(R_DENSITY) {
            r_density(&mut cx, line, max);
        }
        if config.enabled(R_ATOMIC) {
            r_atomic(&mut cx, line);
        }
        if config.enabled(R_QUANTITY) {
            r_quantity(&mut cx, line);
        }
        if config.enabled(R_CITATION) {
            r_citation(&mut cx, line);
        }
        if config.enabled(R_VS_CAUSAL) {
            r_vs_causal(&mut cx, line);
        }
        if config.enabled(R_TAG_POSITION) {
            r_tag_position(&mut cx, line);
        }
    }
    if config.enabled(S_STRUCTURE) {
        for issue in &doc.issues {
            let Some(line) = lines.iter().find(|l| l.id == issue.line_id) else { continue };
            let what = match issue.kind {
                IssueKind::DanglingIndent => "dangling indent",
                IssueKind::FactWithoutTerm => "fact without term",
            };
            cx.emit(S_STRUCTURE, line, content_span(line), format!("{what}: {}", issue.message));
        }
    }
    cx.out
}

#[cfg(test)]
mod tests {
    use super::super::{lint_document, RuleConfig, Severity};
    use super::*;
    use crate::grammar::parse_document;
    use serde_json::json;

    fn ids(text: &str) -> Vec<String> {
        lint_document(&parse_document(text), &LintConfig::default()).into_iter().map(|d| d.rule_id).collect()
    }

    #[test]
    fn chained_causal_is_not_dense() {
        assert!(ids("A→B→C→D→E").is_empty());
    }

    #[test]
    fn four_symbols_in_a_row() {
        let d = lint_document(&parse_document("A∧∨¬≈B"), &LintConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule_id, "R-DENSITY");
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].span, Span::new(1, 5));
    }

    #[test]
    fn density_threshold_is_configurable() {
        let cfg = LintConfig::new([RuleConfig::new("R-DENSITY").with_param("max_consecutive", json!(4))]).unwrap();
        assert!(lint_document(&parse_document("A∧∨¬≈B"), &cfg).is_empty());
    }

    #[test]
    fn case_rule() {
        assert_eq!(ids("Johnson→RESULT"), ["R-CASE"]);
        assert!(ids("API LATENCY=12ms").is_empty());
        assert!(ids("RUN parse_document").is_empty());
        assert!(ids("MODEL=gpt4o").is_empty());
        let cfg = LintConfig::new([RuleConfig::new("R-CASE").with_param("allow", json!(["Johnson"]))]).unwrap();
        assert!(lint_document(&parse_document("Johnson→RESULT"), &cfg).is_empty());
    }

    #[test]
    fn atomic_rule() {
        assert_eq!(ids("A→B. C→D."), ["R-ATOMIC"]);
        assert_eq!(ids("A→B. C→D"), ["R-ATOMIC"]);
        assert!(ids("A→B.").is_empty());
        assert!(ids("Q: WHY?").is_empty());
    }

    #[test]
    fn bare_number_term() {
        assert_eq!(ids("SAMPLE 2400"), ["R-QUANTITY"]);
        assert_eq!(ids("NOTICE 30D-AFTER"), ["R-QUANTITY"]);
        assert!(ids("COVID-19 ∧ GPT-4").is_empty());
    }

    #[test]
    fn malformed_bracket() {
        assert_eq!(ids("RESULT [JOHNSON-2023"), ["R-CITATION"]);
        assert_eq!(ids("RESULT [johnson:23]"), ["R-CITATION"]);
        assert!(ids("RESULT [JOHNSON:2023]").is_empty());
    }

    #[test]
    fn vs_with_causal() {
        assert_eq!(ids("A VS B→C"), ["R-VS-CAUSAL"]);
        assert_eq!(ids("A→B VS C"), ["R-VS-CAUSAL"]);
        assert!(ids("A→B; X VS C").is_empty());
        assert!(ids("X↓23% VS PLACEBO").is_empty());
    }

    #[test]
    fn tag_position() {
        assert_eq!(ids("X → PAST: Y"), ["R-TAG-POSITION"]);
        assert!(ids("PAST: Y").is_empty());
    }

    #[test]
    fn structural_issues_surface() {
        let d = lint_document(&parse_document("  ORPHAN"), &LintConfig::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule_id, "S-STRUCTURE");
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn sorted_by_line_then_span() {
        let d = lint_document(&parse_document("B→A VS C Johnson\nA∧∨¬≈B"), &LintConfig::default());
        let keys: Vec<_> = d.iter().map(|d| (d.line_id, d.span)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn disabled_rule_is_silent() {
        let cfg = LintConfig::new([RuleConfig::disabled("R-CASE")]).unwrap();
        assert!(lint_document(&parse_document("Johnson"), &cfg).is_empty());
    }
}
