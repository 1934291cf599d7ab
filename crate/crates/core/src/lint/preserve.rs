use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::grammar::{Citation, Document, Span};

use super::registry::{P_CITE, P_NUM};
use super::{sort_diagnostics, Diagnostic, Severity};

fn numeral_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:,\d{3})*(?:\.\d+)?").unwrap())
}

fn cite_res() -> &'static [Regex; 2] {
    static RE: OnceLock<[Regex; 2]> = OnceLock::new();
    RE.get_or_init(|| {
        let name = r"\p{Lu}[\p{L}'\-]+";
        [
            Regex::new(&format!(r"({name})(?:\s+et\s+al\.?|\s+and\s+colleagues|\s+and\s+{name}|\s*&\s*{name})?\s+\((\d{{4}})\)"))
                .unwrap(),
            Regex::new(&format!(r"\(({name})(?:\s+et\s+al\.?|\s+and\s+{name}|\s*&\s*{name})?,\s*(\d{{4}})\)")).unwrap(),
        ]
    })
}

/// Strips thousands separators and redundant zeros: `2,400` → `2400`,
/// `0.50` → `0.5`, `007` → `7`, `3.0` → `3`.
pub fn normalize_numeral(raw: &str) -> String {
    let s: String = raw.chars().filter(|&c| c != ',').collect();
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f.trim_end_matches('0')),
        None => (s.as_str(), ""),
    };
    let int = int.trim_start_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}

/// Numerals in `text` as (normalized value, char span).
pub fn extract_numerals(text: &str) -> Vec<(String, Span)> {
    numeral_re()
        .find_iter(text)
        .map(|m| {
            let start = text[..m.start()].chars().count();
            let len = m.as_str().chars().count();
            (normalize_numeral(m.as_str()), Span::new(start, start + len))
        })
        .collect()
}

fn compressed_numerals(doc: &Document) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for line in doc.lines() {
        for a in &line.atoms {
            let text = if let Some(q) = a.as_quantity() {
                q.canonical()
            } else if let Some(t) = a.as_term() {
                t.to_string()
            } else if let Some(c) = a.as_citation() {
                c.to_string()
            } else {
                continue;
            };
            out.extend(extract_numerals(&text).into_iter().map(|(n, _)| n));
        }
    }
    out
}

fn char_span(text: &str, start: usize, end: usize) -> Span {
    let s = text[..start].chars().count();
    Span::new(s, s + text[start..end].chars().count())
}

/// Source-aware checks: every numeral and every author-year reference in
/// `source` must survive into `compressed`. Spans index chars of `source`.
pub fn check_preservation(source: &str, compressed: &Document) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let have = compressed_numerals(compressed);
    let mut reported = BTreeSet::new();
    for (n, span) in extract_numerals(source) {
        if !have.contains(&n) && reported.insert(n.clone()) {
            out.push(Diagnostic {
                rule_id: P_NUM.into(),
                severity: Severity::Error,
                line_id: 0,
                span,
                message: format!("number {n} from the source is missing"),
            });
        }
    }

    let cites: Vec<(String, u16)> = compressed
        .lines()
        .iter()
        .flat_map(|l| l.citations())
        .filter_map(Citation::author_year)
        .map(|(a, y)| (a.to_uppercase(), y))
        .collect();
    let mut seen = BTreeSet::new();
    for re in cite_res() {
        for cap in re.captures_iter(source) {
            let name = cap[1].to_uppercase();
            let year: u16 = cap[2].parse().expect("four digits");
            if !seen.insert((name.clone(), year)) {
                continue;
            }
            let found = cites.iter().any(|(a, y)| *y == year && (a == &name || a.starts_with(&format!("{name}-"))));
            if !found {
                let m = cap.get(0).unwrap();
                out.push(Diagnostic {
                    rule_id: P_CITE.into(),
                    severity: Severity::Error,
                    line_id: 0,
                    span: char_span(source, m.start(), m.end()),
                    message: format!("reference {} ({year}) has no [{name}:{year}] citation", &cap[1]),
                });
            }
        }
    }
    sort_diagnostics(&mut out);
    out
}
