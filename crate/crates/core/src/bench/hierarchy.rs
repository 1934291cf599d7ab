use serde::{Deserialize, Serialize};

use super::BenchError;

/// One row of a stored accuracy table. Changes are in percentage points as
/// printed, negative for a loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyRow {
    pub model: String,
    pub original: f64,
    pub te: f64,
    pub llml2: f64,
    pub te_change: f64,
    pub llml2_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyTable {
    pub name: String,
    pub n: usize,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyTable {
    pub fn load_all(json: &str) -> Result<Vec<AccuracyTable>, BenchError> {
        serde_json::from_str(json).map_err(|e| BenchError::Invalid(format!("accuracy tables: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub table: String,
    pub model: String,
    pub detail: String,
}

/// Rows where original ≥ TE ≥ LLML2 fails.
pub fn check_hierarchy(tables: &[AccuracyTable]) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in tables {
        for r in &t.rows {
            if !(r.original >= r.te && r.te >= r.llml2) {
                out.push(Violation {
                    table: t.name.clone(),
                    model: r.model.clone(),
                    detail: format!("original {} / te {} / llml2 {}", r.original, r.te, r.llml2),
                });
            }
        }
    }
    out
}

/// Rows whose printed change disagrees with the accuracies by more than
/// half the last printed digit.
pub fn check_drops(tables: &[AccuracyTable]) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in tables {
        for r in &t.rows {
            for (label, acc, printed) in [("te", r.te, r.te_change), ("llml2", r.llml2, r.llml2_change)] {
                let computed = (acc - r.original) * 100.0;
                if (computed - printed).abs() > 0.05 + 1e-9 {
                    out.push(Violation {
                        table: t.name.clone(),
                        model: r.model.clone(),
                        detail: format!("{label} change printed {printed}, computed {computed:.2}"),
                    });
                }
            }
        }
    }
    out
}
