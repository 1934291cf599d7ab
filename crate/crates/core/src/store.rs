//! Mutable TE fact store with an append-only, replayable operation log.
//!
//! Every operation is plain AST surgery: no model calls. Collapsed content
//! (demoted sections, closed ctx scopes) is kept in a stash keyed by the id
//! of the heading or ctx line that remains visible.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{parse_document, parse_single_line, render_document, render_line, Document, Line, LineId, LineKind, Section};
use crate::lint::{has_errors, lint_document, Diagnostic, LintConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    /// Replace a line in place, keeping its id and position.
    Update { target: LineId, text: String },
    /// Replace several fact lines by one new line at the earliest position.
    Merge { sources: Vec<LineId>, text: String },
    /// Remove a line. `removed` is filled in when the op is logged.
    Prune {
        target: LineId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        removed: Option<String>,
    },
    /// Collapse a section to its heading.
    Demote { section: LineId },
    /// Collapse the lines governed by a ctx line, up to the next ctx line.
    CloseScope { ctx: LineId },
    /// Restore content collapsed by demote or close_scope.
    Promote { id: LineId },
    /// Reorder the non-ctx lines of a section (0 = preamble).
    Rerank { section: LineId, order: Vec<LineId> },
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::Update { .. } => "update",
            Op::Merge { .. } => "merge",
            Op::Prune { .. } => "prune",
            Op::Demote { .. } => "demote",
            Op::CloseScope { .. } => "close_scope",
            Op::Promote { .. } => "promote",
            Op::Rerank { .. } => "rerank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateOp {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(flatten)]
    pub op: Op,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {0} not found")]
    NotFound(LineId),
    #[error("replacement text must be exactly one {expected} line")]
    BadReplacement { expected: &'static str },
    #[error("replacement text has {} lint error(s)", .0.iter().filter(|d| d.severity == crate::lint::Severity::Error).count())]
    LintRejected(Vec<Diagnostic>),
    #[error("{0}")]
    State(String),
    #[error("expected sequence number {expected}, got {got}")]
    Sequence { expected: u64, got: u64 },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("op {seq}: {source}")]
    Op { seq: u64, source: StoreError },
    #[error("log line {line}: {source}")]
    Decode { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stashed {
    Section { lines: Vec<Line>, children: Vec<Section> },
    Scope { lines: Vec<Line> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    initial: Document,
    document: Document,
    stash: BTreeMap<LineId, Stashed>,
    log: Vec<StateOp>,
    next_id: LineId,
    lint: LintConfig,
}

/// Where a body line lives: preamble or a section's line list.
fn container_of(doc: &Document, id: LineId) -> Option<(LineId, usize)> {
    if let Some(i) = doc.preamble.iter().position(|l| l.id == id) {
        return Some((0, i));
    }
    doc.sections_flat().into_iter().find_map(|s| s.lines.iter().position(|l| l.id == id).map(|i| (s.id(), i)))
}

fn container_mut(doc: &mut Document, section: LineId) -> Option<&mut Vec<Line>> {
    if section == 0 {
        Some(&mut doc.preamble)
    } else {
        doc.section_mut(section).map(|s| &mut s.lines)
    }
}

fn kind_family(kind: LineKind) -> &'static str {
    match kind {
        LineKind::Ctx => "ctx",
        LineKind::Heading => "heading",
        _ => "fact",
    }
}

impl Store {
    pub fn new(initial: Document) -> Self {
        Self::with_lint_config(initial, LintConfig::default())
    }

    pub fn with_lint_config(initial: Document, lint: LintConfig) -> Self {
        let next_id = initial.max_line_id() + 1;
        Self { document: initial.clone(), initial, stash: BTreeMap::new(), log: Vec::new(), next_id, lint }
    }

    pub fn from_text(text: &str) -> Self {
        Self::new(parse_document(text))
    }

    pub fn document(&self) -> &Document {
        &self.document
    }

    pub fn initial(&self) -> &Document {
        &self.initial
    }

    pub fn log(&self) -> &[StateOp] {
        &self.log
    }

    pub fn stash(&self) -> &BTreeMap<LineId, Stashed> {
        &self.stash
    }

    pub fn render(&self) -> String {
        render_document(&self.document)
    }

    /// Applies `op` with the next sequence number. On error nothing changes.
    pub fn apply(&mut self, op: Op) -> Result<&StateOp, StoreError> {
        self.apply_at(op, None)
    }

    pub fn apply_at(&mut self, op: Op, timestamp: Option<String>) -> Result<&StateOp, StoreError> {
        let seq = self.log.len() as u64 + 1;
        self.apply_logged(StateOp { seq, timestamp, op })
    }

    /// Applies an already numbered op; its sequence number must be next.
    pub fn apply_logged(&mut self, op: StateOp) -> Result<&StateOp, StoreError> {
        let expected = self.log.len() as u64 + 1;
        if op.seq != expected {
            return Err(StoreError::Sequence { expected, got: op.seq });
        }
        let mut doc = self.document.clone();
        let mut stash = self.stash.clone();
        let mut next_id = self.next_id;
        let op = StateOp { op: self.exec(&mut doc, &mut stash, &mut next_id, op.op)?, ..op };
        self.document = doc;
        self.stash = stash;
        self.next_id = next_id;
        self.log.push(op);
        Ok(self.log.last().expect("just pushed"))
    }

    fn replacement(&self, text: &str, like: &Line) -> Result<Line, StoreError> {
        let expected = kind_family(like.kind);
        let line = parse_single_line(text).ok_or(StoreError::BadReplacement { expected })?;
        if kind_family(line.kind) != expected {
            return Err(StoreError::BadReplacement { expected });
        }
        let probe = Document { preamble: vec![line.clone()], ..Document::default() };
        let diags = lint_document(&probe, &self.lint);
        if has_errors(&diags) {
            return Err(StoreError::LintRejected(diags));
        }
        Ok(line)
    }

    fn exec(
        &self,
        doc: &mut Document,
        stash: &mut BTreeMap<LineId, Stashed>,
        next_id: &mut LineId,
        op: Op,
    ) -> Result<Op, StoreError> {
        match op {
            Op::Update { target, text } => {
                let (sec, i) = container_of(doc, target).ok_or(StoreError::NotFound(target))?;
                let lines = container_mut(doc, sec).expect("container exists");
                let new = self.replacement(&text, &lines[i])?;
                lines[i] = relabel(new, target, lines[i].depth);
                Ok(Op::Update { target, text })
            }
            Op::Merge { sources, text } => {
                if sources.is_empty() {
                    return Err(StoreError::State("merge needs at least one source".into()));
                }
                let mut found = Vec::new();
                for &id in &sources {
                    let loc = container_of(doc, id).ok_or(StoreError::NotFound(id))?;
                    let line = doc.line(id).expect("located");
                    if !line.is_fact_like() {
                        return Err(StoreError::State(format!("merge source {id} is not a fact line")));
                    }
                    if stash.contains_key(&id) {
                        return Err(StoreError::State(format!("merge source {id} has a closed scope")));
                    }
                    found.push((doc_position(doc, id), loc, line.depth));
                }
                found.sort();
                found.dedup();
                if found.len() != sources.len() {
                    return Err(StoreError::State("merge sources repeat".into()));
                }
                let template = doc.line(sources[0]).expect("checked").clone();
                let new = self.replacement(&text, &template)?;
                let (_, (first_sec, first_idx), depth) = found[0];
                let first_id = container_mut(doc, first_sec).expect("container")[first_idx].id;
                let id = *next_id;
                *next_id += 1;
                {
                    let lines = container_mut(doc, first_sec).expect("container");
                    lines[first_idx] = relabel(new, id, depth);
                }
                for &sid in &sources {
                    if sid == first_id {
                        continue;
                    }
                    let (sec, i) = container_of(doc, sid).expect("still present");
                    container_mut(doc, sec).expect("container").remove(i);
                }
                Ok(Op::Merge { sources, text })
            }
            Op::Prune { target, removed } => {
                let (sec, i) = container_of(doc, target).ok_or(StoreError::NotFound(target))?;
                if stash.contains_key(&target) {
                    return Err(StoreError::State(format!("line {target} has a closed scope; promote it first")));
                }
                let lines = container_mut(doc, sec).expect("container");
                let text = render_line(&lines[i]);
                if removed.as_ref().is_some_and(|r| *r != text) {
                    return Err(StoreError::State(format!("logged text of line {target} does not match")));
                }
                lines.remove(i);
                Ok(Op::Prune { target, removed: Some(text) })
            }
            Op::Demote { section } => {
                if stash.contains_key(&section) {
                    return Err(StoreError::State(format!("section {section} is already collapsed")));
                }
                let s = doc.section_mut(section).ok_or(StoreError::NotFound(section))?;
                let lines = std::mem::take(&mut s.lines);
                let children = std::mem::take(&mut s.children);
                stash.insert(section, Stashed::Section { lines, children });
                Ok(Op::Demote { section })
            }
            Op::CloseScope { ctx } => {
                let (sec, i) = container_of(doc, ctx).ok_or(StoreError::NotFound(ctx))?;
                if stash.contains_key(&ctx) {
                    return Err(StoreError::State(format!("scope {ctx} is already closed")));
                }
                let lines = container_mut(doc, sec).expect("container");
                if lines[i].kind != LineKind::Ctx {
                    return Err(StoreError::State(format!("line {ctx} is not a ctx line")));
                }
                let end = lines[i + 1..].iter().position(|l| l.kind == LineKind::Ctx).map_or(lines.len(), |p| i + 1 + p);
                let block: Vec<Line> = lines.drain(i + 1..end).collect();
                stash.insert(ctx, Stashed::Scope { lines: block });
                Ok(Op::CloseScope { ctx })
            }
            Op::Promote { id } => {
                let Some(stashed) = stash.get(&id) else {
                    return Err(StoreError::State(format!("{id} is not collapsed")));
                };
                match stashed.clone() {
                    Stashed::Section { lines, children } => {
                        let s = doc.section_mut(id).ok_or_else(|| {
                            StoreError::State(format!("section {id} is inside collapsed content"))
                        })?;
                        s.lines = lines;
                        s.children = children;
                    }
                    Stashed::Scope { lines } => {
                        let (sec, i) = container_of(doc, id)
                            .ok_or_else(|| StoreError::State(format!("ctx {id} is inside collapsed content")))?;
                        let c = container_mut(doc, sec).expect("container");
                        c.splice(i + 1..i + 1, lines);
                    }
                }
                stash.remove(&id);
                Ok(Op::Promote { id })
            }
            Op::Rerank { section, order } => {
                let lines = container_mut(doc, section).ok_or(StoreError::NotFound(section))?;
                let slots: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].kind != LineKind::Ctx).collect();
                let mut current: Vec<LineId> = slots.iter().map(|&i| lines[i].id).collect();
                let mut wanted = order.clone();
                current.sort_unstable();
                wanted.sort_unstable();
                if current != wanted {
                    return Err(StoreError::State(format!(
                        "rerank order must be a permutation of the non-ctx lines of section {section}"
                    )));
                }
                let mut by_id: BTreeMap<LineId, Line> =
                    slots.iter().map(|&i| (lines[i].id, lines[i].clone())).collect();
                for (&slot, id) in slots.iter().zip(&order) {
                    lines[slot] = by_id.remove(id).expect("permutation");
                }
                Ok(Op::Rerank { section, order })
            }
        }
    }

    pub fn write_log_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for op in &self.log {
            serde_json::to_writer(&mut w, op)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn log_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_log_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}

fn doc_position(doc: &Document, id: LineId) -> usize {
    doc.lines().iter().position(|l| l.id == id).expect("line exists")
}

fn relabel(mut line: Line, id: LineId, depth: u8) -> Line {
    line.id = id;
    line.depth = depth;
    line.raw = render_line(&line);
    line
}

pub fn read_log_jsonl<R: BufRead>(r: R) -> Result<Vec<StateOp>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ReplayError::Decode { line: i + 1, source })?);
    }
    Ok(out)
}

/// Rebuilds a store by applying `log` to `initial` in order.
pub fn replay(initial: Document, log: &[StateOp]) -> Result<Store, ReplayError> {
    replay_with(initial, log, LintConfig::default())
}

pub fn replay_with(initial: Document, log: &[StateOp], lint: LintConfig) -> Result<Store, ReplayError> {
    let mut store = Store::with_lint_config(initial, lint);
    for op in log {
        store.apply_logged(op.clone()).map_err(|source| ReplayError::Op { seq: op.seq, source })?;
    }
    Ok(store)
}
