use sha2::{Digest, Sha256};

use super::lexer::Lexer;
use super::{
    Document, GrammarError, IssueKind, Line, LineId, LineKind, Section, StructuralIssue, AST_SCHEMA_VERSION,
};

/// Columns of leading whitespace; a tab counts as two.
fn indent_columns(line: &str) -> (usize, &str) {
    let mut cols = 0;
    for (idx, c) in line.char_indices() {
        match c {
            '\t' => cols += 2,
            c if c.is_whitespace() => cols += 1,
            _ => return (cols, &line[idx..]),
        }
    }
    (cols, "")
}

/// Two columns per depth level; any indentation at all is depth >= 1.
fn depth_for(cols: usize) -> u8 {
    cols.div_ceil(2).min(u8::MAX as usize) as u8
}

fn classify(atoms: &[super::Atom]) -> (LineKind, Option<u8>) {
    let Some(tag) = atoms.first().and_then(|a| a.as_tag()) else {
        return (LineKind::Fact, None);
    };
    if let Some(level) = tag.heading_level() {
        return (LineKind::Heading, Some(level));
    }
    let kind = match tag.id.as_str() {
        "ctx" => LineKind::Ctx,
        "def" => LineKind::Def,
        "q" | "a" => LineKind::Qa,
        _ => LineKind::Fact,
    };
    (kind, None)
}

pub(crate) fn build_line(lexer: &Lexer<'_>, id: LineId, raw: &str) -> Line {
    let (cols, content) = indent_columns(raw);
    let atoms = lexer.tokenize(content).expect("physical lines contain no newline");
    let (kind, level) = classify(&atoms);
    Line { id, kind, depth: level.unwrap_or_else(|| depth_for(cols)), atoms, raw: raw.to_string() }
}

/// Parses TE text with the built-in vocabulary. Blank lines are skipped and
/// do not consume ids; ids start at 1 in textual order.
pub fn parse_document(text: &str) -> Document {
    parse_document_with(&Lexer::builtin(), text)
}

pub fn parse_document_bytes(bytes: &[u8]) -> Result<Document, GrammarError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GrammarError::Encoding { offset: e.valid_up_to() })?;
    Ok(parse_document(text))
}

pub fn parse_document_with(lexer: &Lexer<'_>, text: &str) -> Document {
    let mut preamble = Vec::new();
    let mut top: Vec<Section> = Vec::new();
    let mut open: Vec<Section> = Vec::new();
    let mut issues = Vec::new();
    let mut preamble_ctx = false;
    let mut next_id: LineId = 1;

    fn close_one(open: &mut Vec<Section>, top: &mut Vec<Section>) {
        let done = open.pop().expect("caller checked non-empty");
        match open.last_mut() {
            Some(parent) => parent.children.push(done),
            None => top.push(done),
        }
    }

    for raw in text.split('\n') {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let line = build_line(lexer, next_id, raw);
        next_id += 1;

        if line.kind == LineKind::Fact && line.terms().next().is_none() {
            issues.push(StructuralIssue {
                line_id: line.id,
                kind: IssueKind::FactWithoutTerm,
                message: "fact line has no term".into(),
            });
        }

        if line.kind == LineKind::Heading {
            while open.last().is_some_and(|s| s.level() >= line.depth) {
                close_one(&mut open, &mut top);
            }
            open.push(Section { heading: line, lines: Vec::new(), children: Vec::new() });
            continue;
        }
        match open.last_mut() {
            Some(section) => section.lines.push(line),
            None => {
                if line.kind == LineKind::Ctx {
                    preamble_ctx = true;
                } else if line.depth > 0 && !preamble_ctx {
                    issues.push(StructuralIssue {
                        line_id: line.id,
                        kind: IssueKind::DanglingIndent,
                        message: "indented line outside any section or ctx scope".into(),
                    });
                }
                preamble.push(line);
            }
        }
    }
    while !open.is_empty() {
        close_one(&mut open, &mut top);
    }

    Document {
        schema_version: AST_SCHEMA_VERSION,
        source_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        preamble,
        sections: top,
        issues,
    }
}

/// Parses text that must hold exactly one non-heading line.
pub fn parse_single_line(text: &str) -> Option<Line> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).filter(|l| !l.trim().is_empty());
    let raw = lines.next()?;
    if lines.next().is_some() {
        return None;
    }
    let line = build_line(&Lexer::builtin(), 0, raw);
    (line.kind != LineKind::Heading).then_some(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{render_document, AtomKind};

    #[test]
    fn empty_text() {
        let d = parse_document("");
        assert!(d.sections.is_empty());
        assert_eq!(d.line_count(), 0);
    }

    #[test]
    fn single_preamble_fact() {
        let d = parse_document("ML→MEDICAL-DIAGNOSTICS: EARLY-DETECTION+27.5% ∧ FALSE-POSITIVE-12% [JOHNSON:2023]");
        assert!(d.sections.is_empty());
        assert_eq!(d.preamble.len(), 1);
        assert_eq!(d.preamble[0].kind, LineKind::Fact);
        assert_eq!(d.preamble[0].quantities().count(), 2);
        assert_eq!(d.preamble[0].citations().count(), 1);
    }

    #[test]
    fn nested_headings() {
        let d = parse_document("H1: A\nX\nH2: B\nY\nH2: C\nH1: D\nZ\n");
        assert_eq!(d.sections.len(), 2);
        assert_eq!(d.sections[0].children.len(), 2);
        assert_eq!(d.sections[0].children[0].lines[0].text(), "Y");
        assert_eq!(d.sections[1].title(), "D");
        let ids: Vec<_> = d.lines().iter().map(|l| l.id).collect();
        assert_eq!(ids, [1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn h2_without_h1_is_top_level() {
        let d = parse_document("H2: A\nX\nH1: B\n");
        assert_eq!(d.sections.len(), 2);
    }

    #[test]
    fn dangling_indent_is_reported() {
        let d = parse_document("  ORPHAN-FACT\nH1: A\n  OK\n");
        assert_eq!(d.issues.len(), 1);
        assert_eq!(d.issues[0].kind, IssueKind::DanglingIndent);
        assert_eq!(d.preamble.len(), 1);
    }

    #[test]
    fn preamble_ctx_scopes_indented_lines() {
        let d = parse_document("CTX: SETTING\n  FACT-ONE\n");
        assert!(d.issues.is_empty());
        assert_eq!(d.preamble[0].kind, LineKind::Ctx);
    }

    #[test]
    fn indentation_depth() {
        let d = parse_document("H1: A\n X\n  Y\n   Z\n\tW\n");
        let depths: Vec<_> = d.sections[0].lines.iter().map(|l| l.depth).collect();
        assert_eq!(depths, [1, 1, 2, 1]);
    }

    #[test]
    fn line_kinds() {
        let d = parse_document("DEF: X=Y\nQ: WHAT?\nA: THAT\nCTX: C\nPAST: OLD");
        let kinds: Vec<_> = d.preamble.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, [LineKind::Def, LineKind::Qa, LineKind::Qa, LineKind::Ctx, LineKind::Fact]);
    }

    #[test]
    fn crlf_is_accepted() {
        let d = parse_document("H1: A\r\n  X\r\n");
        assert_eq!(render_document(&d), "H1: A\n  X\n");
    }

    #[test]
    fn quantity_only_fact_is_flagged() {
        let d = parse_document("N=2400");
        assert_eq!(d.issues[0].kind, IssueKind::FactWithoutTerm);
        assert_eq!(d.preamble[0].atoms[0].kind(), AtomKind::Quantity);
    }

    #[test]
    fn single_line() {
        assert!(parse_single_line("X→Y").is_some());
        assert!(parse_single_line("X\nY").is_none());
        assert!(parse_single_line("H1: X").is_none());
        assert!(parse_single_line("  ").is_none());
    }
}
