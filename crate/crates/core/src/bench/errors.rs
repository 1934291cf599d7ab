use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eval::{Condition, EvalRecord};
use super::table::{thousands, Table};
use super::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorItem {
    pub item_id: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub total: usize,
    pub errors: usize,
    /// Fraction, not percent.
    pub rate: f64,
    pub error_mean_ratio: Option<f64>,
    pub all_mean_ratio: Option<f64>,
    pub items: Vec<ErrorItem>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Errors are items answered correctly on the original and wrongly on the
/// compressed text. Records must come from one model and cover both
/// conditions for every item; every item needs a ratio.
pub fn error_analysis(records: &[EvalRecord], ratios: &BTreeMap<String, f64>) -> Result<ErrorReport, BenchError> {
    if let Some(r) = records.iter().find(|r| r.model != records[0].model) {
        return Err(BenchError::Invalid(format!("records mix models {:?} and {:?}", records[0].model, r.model)));
    }
    let mut by_item: BTreeMap<&str, [Option<bool>; 2]> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        let slot = by_item.entry(&r.item_id).or_insert_with(|| {
            order.push(&r.item_id);
            [None, None]
        });
        let k = match r.condition {
            Condition::Original => 0,
            Condition::Compressed => 1,
        };
        if slot[k].replace(r.correct).is_some() {
            return Err(BenchError::Invalid(format!("item {}: duplicate {:?} record", r.item_id, r.condition)));
        }
    }
    let mut items = Vec::new();
    let mut all = Vec::with_capacity(order.len());
    for id in &order {
        let [Some(o), Some(c)] = by_item[id] else {
            return Err(BenchError::Invalid(format!("item {id}: missing a condition")));
        };
        let ratio = *ratios.get(*id).ok_or_else(|| BenchError::Invalid(format!("item {id}: no ratio")))?;
        all.push(ratio);
        if o && !c {
            items.push(ErrorItem { item_id: id.to_string(), ratio });
        }
    }
    let total = order.len();
    Ok(ErrorReport {
        total,
        errors: items.len(),
        rate: if total == 0 { 0.0 } else { items.len() as f64 / total as f64 },
        error_mean_ratio: mean(items.iter().map(|e| e.ratio)),
        all_mean_ratio: mean(all.into_iter()),
        items,
    })
}

fn ratio_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"))
}

impl ErrorReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Metric", "Value"]);
        let rows = [
            ("Items", thousands(self.total as u64)),
            ("Errors", thousands(self.errors as u64)),
            ("Error rate", format!("{:.2}%", self.rate * 100.0)),
            ("Mean ratio (errors)", ratio_cell(self.error_mean_ratio)),
            ("Mean ratio (all)", ratio_cell(self.all_mean_ratio)),
        ];
        for (k, v) in rows {
            t.row([k.to_string(), v]);
        }
        t
    }

    pub fn items_table(&self) -> Table {
        let mut t = Table::new(["Item", "Ratio"]);
        for e in &self.items {
            t.row([e.item_id.clone(), format!("{:.3}", e.ratio)]);
        }
        t
    }
}
