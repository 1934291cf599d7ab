//! Canonical formatter. Symbols come out as their glyphs, headings flush
//! left, every other line indented two spaces per depth level.

use super::{Atom, Document, Line, LineKind, Section};

/// Joins atoms, keeping a single space wherever the source had whitespace.
pub(crate) fn render_atoms(atoms: &[Atom]) -> String {
    let mut out = String::new();
    let mut prev_end = None;
    for a in atoms {
        if let Some(end) = prev_end {
            if a.span.start > end {
                out.push(' ');
            }
        }
        out.push_str(&a.canonical());
        prev_end = Some(a.span.end);
    }
    out
}

/// One line with indentation, no trailing newline.
pub fn render_line(line: &Line) -> String {
    let indent = match line.kind {
        LineKind::Heading => 0,
        _ => 2 * line.depth as usize,
    };
    let mut out = " ".repeat(indent);
    out.push_str(&render_atoms(&line.atoms));
    out
}

/// Renders lines one per row, each terminated by `\n`.
pub fn render_lines<'a>(lines: impl IntoIterator<Item = &'a Line>) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&render_line(l));
        out.push('\n');
    }
    out
}

fn render_section(s: &Section, out: &mut String) {
    out.push_str(&render_line(&s.heading));
    out.push('\n');
    for l in &s.lines {
        out.push_str(&render_line(l));
        out.push('\n');
    }
    for c in &s.children {
        render_section(c, out);
    }
}

pub fn render_document(doc: &Document) -> String {
    let mut out = render_lines(&doc.preamble);
    for s in &doc.sections {
        render_section(s, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_document;

    #[test]
    fn single_fact() {
        assert_eq!(render_document(&parse_document("A∧B")), "A∧B\n");
    }

    #[test]
    fn aliases_are_normalized() {
        let d = parse_document("HEAT->EXPANSION && RAIN=>WET");
        assert_eq!(render_document(&d), "HEAT→EXPANSION ∧ RAIN⇒WET\n");
    }

    #[test]
    fn indentation_is_normalized() {
        let d = parse_document("H1: A\n\t X\nCTX: Y\n");
        assert_eq!(render_document(&d), "H1: A\n    X\nCTX: Y\n");
    }

    #[test]
    fn whitespace_runs_collapse() {
        assert_eq!(render_document(&parse_document("A   ∧    B ")), "A ∧ B\n");
    }
}
