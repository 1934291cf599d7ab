//! Budgeted rendering of a document with per-section tiers.
//!
//! Sections with a positive relevance score compete for the budget in score
//! order (ties by document order). Admission runs over one fixed sequence of
//! steps: every section's heading first, then every section's full body. The
//! longest prefix of that sequence that fits is taken, which makes tiers
//! monotone in the budget. Left-over budget then buys ctx lines for
//! heading-only sections. Output keeps document order.

mod counter;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{render_line, Document, Line, LineId, LineKind};

pub use counter::{
    count_tokens, counter_by_name, text_sha256, CounterId, DefaultCounter, LookupCounter, TokenCounter,
    DEFAULT_COUNTER,
};

/// Id used for the preamble (lines before the first heading).
pub const PREAMBLE_ID: LineId = 0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("no section with id {0}")]
    UnknownSection(LineId),
    #[error("no line with id {0}")]
    UnknownLine(LineId),
    #[error("plan does not match document: {0}")]
    PlanMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Drop,
    HeadingOnly,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineOverride {
    /// Render even when the section is heading-only.
    Keep,
    /// Never render.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPlan {
    pub section_id: LineId,
    pub title: String,
    pub score: f64,
    pub tier: Tier,
    /// Heading-only sections: whether the ctx lines were affordable.
    #[serde(default)]
    pub ctx_included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyPlan {
    pub counter: CounterId,
    pub budget: usize,
    pub achieved: usize,
    pub infeasible: bool,
    /// Document order; the preamble, when present, comes first with id 0.
    pub sections: Vec<SectionPlan>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<LineId, LineOverride>,
}

impl AssemblyPlan {
    pub fn tier(&self, section_id: LineId) -> Option<Tier> {
        self.sections.iter().find(|s| s.section_id == section_id).map(|s| s.tier)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub plan: AssemblyPlan,
    pub text: String,
}

struct Unit<'a> {
    id: LineId,
    title: String,
    heading: Option<&'a Line>,
    lines: &'a [Line],
}

fn units(doc: &Document) -> Vec<Unit<'_>> {
    let mut out = Vec::new();
    if !doc.preamble.is_empty() {
        out.push(Unit { id: PREAMBLE_ID, title: String::new(), heading: None, lines: &doc.preamble });
    }
    for s in doc.sections_flat() {
        out.push(Unit { id: s.id(), title: s.title(), heading: Some(&s.heading), lines: &s.lines });
    }
    out
}

fn line_visible(l: &Line, tier: Tier, ctx: bool, overrides: &BTreeMap<LineId, LineOverride>) -> bool {
    match (overrides.get(&l.id), tier) {
        (Some(LineOverride::Drop), _) | (_, Tier::Drop) => false,
        (Some(LineOverride::Keep), _) | (_, Tier::Full) => true,
        (None, Tier::HeadingOnly) => ctx && l.kind == LineKind::Ctx,
    }
}

fn unit_rows<'a>(u: &Unit<'a>, tier: Tier, ctx: bool, ov: &BTreeMap<LineId, LineOverride>) -> Vec<&'a Line> {
    if tier == Tier::Drop {
        return Vec::new();
    }
    let mut rows: Vec<&Line> = u.heading.into_iter().collect();
    rows.extend(u.lines.iter().filter(|l| line_visible(l, tier, ctx, ov)));
    rows
}

fn cost(counter: &dyn TokenCounter, rows: &[&Line]) -> usize {
    rows.iter().map(|l| counter.count(&render_line(l))).sum()
}

/// Relevance scores keyed by section heading title.
pub fn scores_by_title(doc: &Document, by_title: &BTreeMap<String, f64>) -> BTreeMap<LineId, f64> {
    doc.sections_flat()
        .into_iter()
        .filter_map(|s| by_title.get(&s.title()).map(|v| (s.id(), *v)))
        .collect()
}

/// Renders `doc` under `budget` tokens. Sections missing from `scores`
/// score 0, and sections scoring 0 or less are dropped.
pub fn assemble(
    doc: &Document,
    scores: &BTreeMap<LineId, f64>,
    budget: usize,
    counter: &dyn TokenCounter,
    overrides: &BTreeMap<LineId, LineOverride>,
) -> Result<Assembly, AssembleError> {
    if budget == 0 {
        return Err(AssembleError::ZeroBudget);
    }
    let units = units(doc);
    for id in scores.keys() {
        if !units.iter().any(|u| u.id == *id) {
            return Err(AssembleError::UnknownSection(*id));
        }
    }
    for id in overrides.keys() {
        if doc.line(*id).is_none_or(|l| l.kind == LineKind::Heading) {
            return Err(AssembleError::UnknownLine(*id));
        }
    }

    let score = |u: &Unit<'_>| scores.get(&u.id).copied().unwrap_or(0.0);
    let mut order: Vec<usize> = (0..units.len()).filter(|&i| score(&units[i]) > 0.0).collect();
    order.sort_by(|&a, &b| score(&units[b]).total_cmp(&score(&units[a])).then(a.cmp(&b)));

    let head: Vec<usize> = units.iter().map(|u| cost(counter, &unit_rows(u, Tier::HeadingOnly, false, overrides))).collect();
    let full: Vec<usize> = units.iter().map(|u| cost(counter, &unit_rows(u, Tier::Full, false, overrides))).collect();

    let mut tiers = vec![Tier::Drop; units.len()];
    let mut ctx = vec![false; units.len()];
    let mut spent = 0usize;
    let mut infeasible = false;

    let steps = order.iter().map(|&i| (i, Tier::HeadingOnly)).chain(order.iter().map(|&i| (i, Tier::Full)));
    for (n, (i, tier)) in steps.enumerate() {
        let step = match tier {
            Tier::Full => full[i] - head[i],
            _ => head[i],
        };
        if spent + step > budget {
            infeasible = n == 0;
            break;
        }
        spent += step;
        tiers[i] = tier;
    }

    if infeasible {
        tiers.iter_mut().for_each(|t| *t = Tier::Drop);
        spent = 0;
    } else {
        for &i in &order {
            if tiers[i] != Tier::HeadingOnly {
                continue;
            }
            let with_ctx = cost(counter, &unit_rows(&units[i], Tier::HeadingOnly, true, overrides));
            let extra = with_ctx - head[i];
            if extra > 0 && spent + extra <= budget {
                spent += extra;
                ctx[i] = true;
            }
        }
    }

    let plan = AssemblyPlan {
        counter: counter.id(),
        budget,
        achieved: spent,
        infeasible,
        sections: units
            .iter()
            .enumerate()
            .map(|(i, u)| SectionPlan {
                section_id: u.id,
                title: u.title.clone(),
                score: score(u),
                tier: tiers[i],
                ctx_included: ctx[i],
            })
            .collect(),
        overrides: overrides.clone(),
    };
    let text = render_plan(doc, &plan)?;
    Ok(Assembly { plan, text })
}

/// Renders the lines a plan selects, in document order.
pub fn render_plan(doc: &Document, plan: &AssemblyPlan) -> Result<String, AssembleError> {
    let units = units(doc);
    if units.len() != plan.sections.len() {
        return Err(AssembleError::PlanMismatch(format!(
            "{} sections in plan, {} in document",
            plan.sections.len(),
            units.len()
        )));
    }
    let mut out = String::new();
    for (u, sp) in units.iter().zip(&plan.sections) {
        if u.id != sp.section_id {
            return Err(AssembleError::PlanMismatch(format!("expected section {}, found {}", u.id, sp.section_id)));
        }
        for l in unit_rows(u, sp.tier, sp.ctx_included, &plan.overrides) {
            out.push_str(&render_line(l));
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub original_tokens: usize,
    pub assembled_tokens: usize,
    pub ratio: f64,
}

/// Token counts of the full document versus the assembled view.
pub fn simulate_pipeline_savings(
    doc: &Document,
    plan: &AssemblyPlan,
    counter: &dyn TokenCounter,
) -> Result<SavingsReport, AssembleError> {
    let original_tokens: usize = doc.lines().iter().map(|l| counter.count(&render_line(l))).sum();
    let assembled = render_plan(doc, plan)?;
    let assembled_tokens: usize = assembled.lines().map(|l| counter.count(l)).sum();
    let ratio = if original_tokens == 0 { 1.0 } else { assembled_tokens as f64 / original_tokens as f64 };
    Ok(SavingsReport { original_tokens, assembled_tokens, ratio })
}
