//! The TE line grammar: atoms, lines, sections and documents.
//!
//! A document is a tree of sections opened by `H1:`..`H3:` headings. Every
//! other physical line is one addressable unit with a positional id.

mod citation;
mod lexer;
mod parser;
mod quantity;
mod render;
pub mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use citation::{parse_citation, Citation};
pub use lexer::{tokenize_line, tokenize_line_bytes, tokenize_line_with, Lexer};
pub use parser::{parse_document, parse_document_bytes, parse_document_with, parse_single_line};
pub use quantity::{parse_quantity, Comparator, Frame, Quantity, Sign};
pub use render::{render_document, render_line, render_lines};
pub use vocab::{SymbolCategory, SymbolKind, SymbolRegistry, TagFamily, TagKind, TagRegistry};

/// Version of the JSON AST layout.
pub const AST_SCHEMA_VERSION: u32 = 1;

pub type LineId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },
    #[error("line text contains a newline at char offset {offset}")]
    Newline { offset: usize },
    #[error("vocabulary: {0}")]
    Vocabulary(String),
}

/// Half-open char range within a line's content (indentation excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolRef {
    pub id: String,
    pub glyph: String,
    pub category: SymbolCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagRef {
    pub id: String,
    pub surface: String,
    pub family: TagFamily,
}

impl TagRef {
    pub fn heading_level(&self) -> Option<u8> {
        match self.id.as_str() {
            "h1" => Some(1),
            "h2" => Some(2),
            "h3" => Some(3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Term,
    Symbol,
    Tag,
    Quantity,
    Citation,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AtomValue {
    Term(String),
    Symbol(SymbolRef),
    Tag(TagRef),
    Quantity(Quantity),
    Citation(Citation),
    Punctuation(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub span: Span,
    /// Source text of the atom, before alias normalization.
    pub raw: String,
    #[serde(flatten)]
    pub value: AtomValue,
}

impl Atom {
    pub fn kind(&self) -> AtomKind {
        match self.value {
            AtomValue::Term(_) => AtomKind::Term,
            AtomValue::Symbol(_) => AtomKind::Symbol,
            AtomValue::Tag(_) => AtomKind::Tag,
            AtomValue::Quantity(_) => AtomKind::Quantity,
            AtomValue::Citation(_) => AtomKind::Citation,
            AtomValue::Punctuation(_) => AtomKind::Punctuation,
        }
    }

    /// Canonical rendering of this atom.
    pub fn canonical(&self) -> String {
        match &self.value {
            AtomValue::Term(t) => t.clone(),
            AtomValue::Symbol(s) => s.glyph.clone(),
            AtomValue::Tag(t) => t.surface.clone(),
            AtomValue::Quantity(q) => q.canonical(),
            AtomValue::Citation(c) => c.to_string(),
            AtomValue::Punctuation(c) => c.to_string(),
        }
    }

    pub fn as_term(&self) -> Option<&str> {
        match &self.value {
            AtomValue::Term(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&SymbolRef> {
        match &self.value {
            AtomValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tag(&self) -> Option<&TagRef> {
        match &self.value {
            AtomValue::Tag(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_quantity(&self) -> Option<&Quantity> {
        match &self.value {
            AtomValue::Quantity(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_citation(&self) -> Option<&Citation> {
        match &self.value {
            AtomValue::Citation(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_punctuation(&self) -> Option<char> {
        match self.value {
            AtomValue::Punctuation(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Heading,
    Ctx,
    Fact,
    Def,
    Qa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub kind: LineKind,
    /// Heading level for headings, indentation depth otherwise.
    pub depth: u8,
    pub atoms: Vec<Atom>,
    /// The physical line as read, indentation included.
    pub raw: String,
}

impl Line {
    /// Canonical content without indentation.
    pub fn text(&self) -> String {
        render::render_atoms(&self.atoms)
    }

    /// For a heading, the rendered text after the heading tag.
    pub fn heading_title(&self) -> Option<String> {
        if self.kind != LineKind::Heading {
            return None;
        }
        Some(render::render_atoms(&self.atoms[1..]))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.atoms.iter().filter_map(Atom::as_term)
    }

    pub fn quantities(&self) -> impl Iterator<Item = &Quantity> {
        self.atoms.iter().filter_map(Atom::as_quantity)
    }

    pub fn citations(&self) -> impl Iterator<Item = &Citation> {
        self.atoms.iter().filter_map(Atom::as_citation)
    }

    /// fact, def and qa lines are the indexable units.
    pub fn is_fact_like(&self) -> bool {
        matches!(self.kind, LineKind::Fact | LineKind::Def | LineKind::Qa)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: Line,
    /// Body lines (ctx, fact, def, qa) in source order.
    pub lines: Vec<Line>,
    pub children: Vec<Section>,
}

impl Section {
    pub fn id(&self) -> LineId {
        self.heading.id
    }

    pub fn level(&self) -> u8 {
        self.heading.depth
    }

    pub fn title(&self) -> String {
        self.heading.heading_title().unwrap_or_default()
    }

    pub fn ctx_lines(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.kind == LineKind::Ctx)
    }

    pub fn fact_lines(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.is_fact_like())
    }

    fn visit_lines<'a>(&'a self, out: &mut Vec<&'a Line>) {
        out.push(&self.heading);
        out.extend(self.lines.iter());
        for c in &self.children {
            c.visit_lines(out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// Indented line with no enclosing section or preamble ctx scope.
    DanglingIndent,
    /// Fact line without a single term atom.
    FactWithoutTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralIssue {
    pub line_id: LineId,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    pub source_sha256: String,
    pub preamble: Vec<Line>,
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<StructuralIssue>,
}

impl Default for Document {
    fn default() -> Self {
        parse_document("")
    }
}

impl Document {
    /// All lines in document order.
    pub fn lines(&self) -> Vec<&Line> {
        let mut out: Vec<&Line> = self.preamble.iter().collect();
        for s in &self.sections {
            s.visit_lines(&mut out);
        }
        out
    }

    pub fn line_count(&self) -> usize {
        self.lines().len()
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.lines().into_iter().find(|l| l.id == id)
    }

    /// All sections, pre-order.
    pub fn sections_flat(&self) -> Vec<&Section> {
        fn walk<'a>(s: &'a Section, out: &mut Vec<&'a Section>) {
            out.push(s);
            for c in &s.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        for s in &self.sections {
            walk(s, &mut out);
        }
        out
    }

    pub fn section(&self, id: LineId) -> Option<&Section> {
        self.sections_flat().into_iter().find(|s| s.id() == id)
    }

    pub fn section_mut(&mut self, id: LineId) -> Option<&mut Section> {
        fn walk(s: &mut Section, id: LineId) -> Option<&mut Section> {
            if s.heading.id == id {
                return Some(s);
            }
            s.children.iter_mut().find_map(|c| walk(c, id))
        }
        self.sections.iter_mut().find_map(|s| walk(s, id))
    }

    pub fn max_line_id(&self) -> LineId {
        self.lines().iter().map(|l| l.id).max().unwrap_or(0)
    }

    /// Layout-insensitive view used for round-trip comparisons: ids, spans,
    /// raw spellings and the source hash are ignored.
    pub fn shape(&self) -> DocShape {
        fn line_shape(l: &Line) -> LineShape {
            LineShape {
                kind: l.kind,
                depth: l.depth,
                atoms: l.atoms.iter().map(|a| (a.kind(), a.canonical())).collect(),
            }
        }
        fn section_shape(s: &Section) -> SectionShape {
            SectionShape {
                heading: line_shape(&s.heading),
                lines: s.lines.iter().map(line_shape).collect(),
                children: s.children.iter().map(section_shape).collect(),
            }
        }
        DocShape {
            preamble: self.preamble.iter().map(line_shape).collect(),
            sections: self.sections.iter().map(section_shape).collect(),
        }
    }

    pub fn same_structure(&self, other: &Document) -> bool {
        self.shape() == other.shape()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineShape {
    pub kind: LineKind,
    pub depth: u8,
    pub atoms: Vec<(AtomKind, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionShape {
    pub heading: LineShape,
    pub lines: Vec<LineShape>,
    pub children: Vec<SectionShape>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocShape {
    pub preamble: Vec<LineShape>,
    pub sections: Vec<SectionShape>,
}
