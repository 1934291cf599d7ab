//! Synthetic workloads shared by the criterion benches.

use std::collections::BTreeMap;

use telegraph::assemble::scores_by_title;
use telegraph::grammar::{Document, LineId};

pub const CLINICAL: &str = include_str!("../../core/tests/fixtures/clinical_trial.te");

/// `n` H1 sections, each with a scope line and `facts` fact lines.
pub fn sectioned(n: usize, facts: usize) -> String {
    let mut text = String::new();
    for i in 0..n {
        text.push_str(&format!("H1: TOPIC-{i}\nCTX: SCOPE-{i} N={}\n", 100 + i));
        for j in 0..facts {
            text.push_str(&format!("  METRIC-{i}-{j}→OUTCOME-{j} RATE={}.{}% [AUTHOR:{}]\n", j + 1, i % 10, 2000 + j));
        }
    }
    text
}

/// One fully relevant section and a scattering of marginal ones.
pub fn sparse_scores(doc: &Document) -> BTreeMap<LineId, f64> {
    let n = doc.sections.len();
    let mut by_title = BTreeMap::new();
    for i in (0..n).step_by(10) {
        by_title.insert(format!("TOPIC-{i}"), 0.1);
    }
    by_title.insert(format!("TOPIC-{}", n / 2), 1.0);
    scores_by_title(doc, &by_title)
}
