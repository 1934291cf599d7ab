//! Line-level index over a TE document. Each fact, def or qa line is one
//! entry, carrying the headings and ctx lines that scope it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Citation, Document, Line, LineId, LineKind, Quantity, Section};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("empty query")]
    EmptyQuery,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("index line {line}: {source}")]
    Decode { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A heading or ctx line that a fact depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeLine {
    pub line_id: LineId,
    pub kind: LineKind,
    pub depth: u8,
    pub text: String,
}

impl ScopeLine {
    fn of(line: &Line) -> Self {
        Self { line_id: line.id, kind: line.kind, depth: line.depth, text: line.text() }
    }

    fn render(&self) -> String {
        render_row(self.kind, self.depth, &self.text)
    }
}

fn render_row(kind: LineKind, depth: u8, text: &str) -> String {
    let indent = if kind == LineKind::Heading { 0 } else { 2 * depth as usize };
    format!("{}{text}", " ".repeat(indent))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedFact {
    pub line_id: LineId,
    /// Rank of this fact in document order.
    pub position: usize,
    pub kind: LineKind,
    pub depth: u8,
    pub text: String,
    /// Heading titles from the outermost section inward; empty in the preamble.
    pub section_path: Vec<String>,
    pub section_ids: Vec<LineId>,
    /// Headings and ctx lines in force for this line, in document order.
    pub scope: Vec<ScopeLine>,
    pub term_bag: BTreeMap<String, u32>,
    pub quantities: Vec<Quantity>,
    pub citations: Vec<Citation>,
}

impl IndexedFact {
    pub fn ctx_line_ids(&self) -> impl Iterator<Item = LineId> + '_ {
        self.scope.iter().filter(|s| s.kind == LineKind::Ctx).map(|s| s.line_id)
    }

    /// The fact with its scope as standalone TE.
    pub fn render_with_scope(&self) -> String {
        let mut out = String::new();
        for s in &self.scope {
            out.push_str(&s.render());
            out.push('\n');
        }
        out.push_str(&render_row(self.kind, self.depth, &self.text));
        out.push('\n');
        out
    }
}

/// Uppercased term plus, for hyphen compounds, each non-empty part.
pub fn normalize_term(term: &str) -> Vec<String> {
    let up = term.to_uppercase();
    let mut out = vec![up.clone()];
    if up.contains('-') {
        out.extend(up.split('-').filter(|p| !p.is_empty() && *p != up).map(str::to_string));
    }
    out
}

fn term_bag(line: &Line) -> BTreeMap<String, u32> {
    let mut bag = BTreeMap::new();
    let vars = line.quantities().filter_map(|q| q.variable.as_deref());
    for t in line.terms().chain(vars) {
        for n in normalize_term(t) {
            *bag.entry(n).or_insert(0) += 1;
        }
    }
    bag
}

/// Overlap score `matched / total` kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub matched: u32,
    pub total: u32,
}

impl Score {
    pub fn value(&self) -> f64 {
        self.matched as f64 / self.total as f64
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.matched as u64 * other.total as u64).cmp(&(other.matched as u64 * self.total as u64))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.matched, self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub line_id: LineId,
    pub score: Score,
    pub fact: IndexedFact,
}

impl Hit {
    pub fn render(&self) -> String {
        self.fact.render_with_scope()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: Vec<String>,
    pub hits: Vec<Hit>,
}

impl RetrievalResult {
    pub fn line_ids(&self) -> Vec<LineId> {
        self.hits.iter().map(|h| h.line_id).collect()
    }
}

/// Extension point for embedding-based retrieval. No implementation ships.
pub trait VectorBackend {
    fn embed(&self, text: &str) -> Vec<f32>;
    fn nearest(&self, query: &[f32], k: usize) -> Vec<LineId>;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Index {
    facts: Vec<IndexedFact>,
}

struct Walk<'a> {
    facts: Vec<IndexedFact>,
    path: Vec<&'a Line>,
    inherited: Vec<&'a Line>,
}

impl<'a> Walk<'a> {
    fn body(&mut self, lines: &'a [Line]) {
        let mut local: Vec<&Line> = Vec::new();
        for line in lines {
            if line.kind == LineKind::Ctx {
                local.push(line);
                continue;
            }
            if !line.is_fact_like() {
                continue;
            }
            let mut scope: Vec<&Line> = self.path.iter().chain(&self.inherited).chain(&local).copied().collect();
            scope.sort_by_key(|l| l.id);
            self.facts.push(IndexedFact {
                line_id: line.id,
                position: self.facts.len(),
                kind: line.kind,
                depth: line.depth,
                text: line.text(),
                section_path: self.path.iter().map(|h| h.heading_title().unwrap_or_default()).collect(),
                section_ids: self.path.iter().map(|h| h.id).collect(),
                scope: scope.into_iter().map(ScopeLine::of).collect(),
                term_bag: term_bag(line),
                quantities: line.quantities().cloned().collect(),
                citations: line.citations().cloned().collect(),
            });
        }
    }

    fn section(&mut self, s: &'a Section) {
        self.path.push(&s.heading);
        self.body(&s.lines);
        let before = self.inherited.len();
        self.inherited.extend(s.ctx_lines());
        for c in &s.children {
            self.section(c);
        }
        self.inherited.truncate(before);
        self.path.pop();
    }
}

impl Index {
    pub fn build(doc: &Document) -> Self {
        let mut w = Walk { facts: Vec::new(), path: Vec::new(), inherited: Vec::new() };
        w.body(&doc.preamble);
        for s in &doc.sections {
            w.section(s);
        }
        Self { facts: w.facts }
    }

    /// Rebuilds an index from facts in any order.
    pub fn from_facts(mut facts: Vec<IndexedFact>) -> Self {
        facts.sort_by_key(|f| f.position);
        Self { facts }
    }

    pub fn facts(&self) -> &[IndexedFact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn get(&self, id: LineId) -> Option<&IndexedFact> {
        self.facts.iter().find(|f| f.line_id == id)
    }

    /// Ranks facts by the share of query terms found in their term bag.
    /// Facts matching nothing are left out; ties keep document order.
    pub fn retrieve<S: AsRef<str>>(&self, query: &[S], k: usize) -> Result<RetrievalResult, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let q: BTreeSet<String> =
            query.iter().map(|t| t.as_ref().trim().to_uppercase()).filter(|t| !t.is_empty()).collect();
        if q.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let total = q.len() as u32;
        let mut scored: Vec<(Score, &IndexedFact)> = self
            .facts
            .iter()
            .map(|f| (Score { matched: q.iter().filter(|t| f.term_bag.contains_key(*t)).count() as u32, total }, f))
            .filter(|(s, _)| s.matched > 0)
            .collect();
        scored.sort_by(|(sa, fa), (sb, fb)| sb.cmp(sa).then(fa.position.cmp(&fb.position)));
        scored.truncate(k);
        Ok(RetrievalResult {
            query: q.into_iter().collect(),
            hits: scored.into_iter().map(|(score, f)| Hit { line_id: f.line_id, score, fact: f.clone() }).collect(),
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        for f in &self.facts {
            serde_json::to_writer(&mut w, f).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, IndexError> {
        let mut facts = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            facts.push(serde_json::from_str(&line).map_err(|source| IndexError::Decode { line: i + 1, source })?);
        }
        Ok(Self::from_facts(facts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_document;

    const CLINICAL: &str = include_str!("../tests/fixtures/clinical_trial.te");

    #[test]
    fn clinical_has_eight_facts() {
        let idx = Index::build(&parse_document(CLINICAL));
        assert_eq!(idx.len(), 8);
        let per_section: Vec<_> = ["CLINICAL-TRIAL OUTCOMES", "SUBGROUP-ANALYSIS", "LIMITATIONS"]
            .iter()
            .map(|t| idx.facts().iter().filter(|f| f.section_path == [t.to_string()]).count())
            .collect();
        assert_eq!(per_section, [3, 3, 2]);
        for f in &idx.facts()[..3] {
            assert_eq!(f.ctx_line_ids().collect::<Vec<_>>(), [2]);
        }
        assert_eq!(idx.facts()[3].ctx_line_ids().count(), 0);
    }

    #[test]
    fn compounds_index_whole_and_parts() {
        assert_eq!(normalize_term("early-detection"), ["EARLY-DETECTION", "EARLY", "DETECTION"]);
        assert_eq!(normalize_term("X"), ["X"]);
    }

    #[test]
    fn preamble_fact() {
        let idx = Index::build(&parse_document("A→B"));
        assert_eq!(idx.len(), 1);
        assert!(idx.facts()[0].section_path.is_empty());
    }

    #[test]
    fn empty_doc_and_query() {
        assert!(Index::build(&parse_document("")).is_empty());
        let idx = Index::build(&parse_document("A"));
        assert!(matches!(idx.retrieve::<&str>(&[], 1), Err(IndexError::EmptyQuery)));
        assert!(matches!(idx.retrieve(&["A"], 0), Err(IndexError::ZeroK)));
        assert!(idx.retrieve(&["NONEXISTENT"], 5).unwrap().hits.is_empty());
    }

    #[test]
    fn adverse_events() {
        let idx = Index::build(&parse_document(CLINICAL));
        let r = idx.retrieve(&["ADVERSE", "EVENTS"], 3).unwrap();
        assert_eq!(r.hits[0].line_id, 5);
        assert_eq!(r.hits[0].score, Score { matched: 2, total: 2 });
        assert_eq!(
            r.hits[0].render(),
            "H1: CLINICAL-TRIAL OUTCOMES\nCTX: PHASE-III RANDOMISED CONTROLLED-TRIAL(RCT); N=2400\n  \
             ADVERSE-EVENTS: NAUSEA=12% ∧ HEADACHE=8% ∧ SERIOUS=2.1%\n"
        );
    }

    #[test]
    fn nested_ctx_is_inherited() {
        let idx = Index::build(&parse_document("H1: A\nCTX: OUTER\nH2: B\nCTX: INNER\nFACT\n"));
        let f = &idx.facts()[0];
        assert_eq!(f.section_path, ["A", "B"]);
        assert_eq!(f.ctx_line_ids().collect::<Vec<_>>(), [2, 4]);
        assert_eq!(f.render_with_scope(), "H1: A\nCTX: OUTER\nH2: B\nCTX: INNER\nFACT\n");
    }

    #[test]
    fn ctx_after_fact_is_not_scope() {
        let idx = Index::build(&parse_document("H1: A\nFIRST\nCTX: LATER\nSECOND\n"));
        assert_eq!(idx.facts()[0].ctx_line_ids().count(), 0);
        assert_eq!(idx.facts()[1].ctx_line_ids().collect::<Vec<_>>(), [3]);
    }

    #[test]
    fn jsonl_round_trip() {
        let idx = Index::build(&parse_document(CLINICAL));
        let back = Index::read_jsonl(idx.to_jsonl().as_bytes()).unwrap();
        assert_eq!(back, idx);
    }

    #[test]
    fn score_ordering_is_exact() {
        assert!(Score { matched: 1, total: 3 } < Score { matched: 1, total: 2 });
        assert_eq!(Score { matched: 2, total: 4 }.cmp(&Score { matched: 1, total: 2 }), Ordering::Equal);
    }
}
