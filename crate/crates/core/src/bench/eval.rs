use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::mcq::{fill, QAItem, Templates};
use super::table::{thousands, Table};
use super::BenchError;
use crate::assemble::text_sha256;
use crate::compress::{GenParams, TextBackend};

pub const LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Original,
    Compressed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item_id: String,
    pub condition: Condition,
    pub model: String,
    /// Option index picked, `None` when no letter could be read.
    pub chosen: Option<usize>,
    pub correct: bool,
    pub unparseable: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub template_sha256: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub transcript_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub item: QAItem,
    pub original: String,
    pub compressed: String,
}

/// First `A`..`D` standing alone, i.e. not inside a longer word.
pub fn extract_choice(response: &str) -> Option<usize> {
    let chars: Vec<char> = response.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let Some(k) = LETTERS.iter().position(|&l| l == c) else { continue };
        let before = i.checked_sub(1).map(|j| chars[j]);
        let after = chars.get(i + 1).copied();
        if before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric) {
            continue;
        }
        return Some(k);
    }
    None
}

pub fn eval_prompt(templates: &Templates, item: &QAItem, context: &str) -> String {
    let options: Vec<String> = item.options.iter().zip(LETTERS).map(|(o, l)| format!("{l}. {o}")).collect();
    fill(&templates.eval, &[("context", context), ("question", &item.question), ("options", &options.join("\n"))])
}

fn run_one(
    case: &EvalCase,
    condition: Condition,
    backend: &dyn TextBackend,
    templates: &Templates,
) -> Result<EvalRecord, BenchError> {
    let context = match condition {
        Condition::Original => &case.original,
        Condition::Compressed => &case.compressed,
    };
    let prompt = eval_prompt(templates, &case.item, context);
    let response = backend.send(&prompt, &GenParams::default())?;
    let chosen = extract_choice(&response);
    Ok(EvalRecord {
        item_id: case.item.id.clone(),
        condition,
        model: backend.model().to_string(),
        chosen,
        correct: chosen == Some(case.item.correct_index),
        unparseable: chosen.is_none(),
        template_sha256: templates.eval_sha256(),
        transcript_id: text_sha256(&prompt),
    })
}

/// Asks every item under both conditions. Records come back in case order,
/// original before compressed, whatever the concurrency.
pub fn evaluate_suite(
    cases: &[EvalCase],
    backend: &dyn TextBackend,
    templates: &Templates,
    max_in_flight: usize,
) -> Result<Vec<EvalRecord>, BenchError> {
    let jobs: Vec<(usize, Condition)> =
        (0..cases.len()).flat_map(|i| [(i, Condition::Original), (i, Condition::Compressed)]).collect();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<EvalRecord, BenchError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let workers = max_in_flight.max(1).min(jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(i, cond)) = jobs.get(j) else { break };
                let r = run_one(&cases[i], cond, backend, templates);
                *slots[j].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub model: String,
    pub n: usize,
    pub original: f64,
    pub compressed: f64,
    /// (original − compressed) × 100.
    pub drop_pp: f64,
    pub unparseable_original: usize,
    pub unparseable_compressed: usize,
}

/// Per-model accuracy, models in order of first appearance.
pub fn accuracy(records: &[EvalRecord]) -> Vec<AccuracySummary> {
    let mut models: Vec<&str> = Vec::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    models
        .into_iter()
        .map(|m| {
            let of = |c: Condition| records.iter().filter(move |r| r.model == m && r.condition == c);
            let acc = |c: Condition| {
                let n = of(c).count();
                if n == 0 {
                    0.0
                } else {
                    of(c).filter(|r| r.correct).count() as f64 / n as f64
                }
            };
            let (o, c) = (acc(Condition::Original), acc(Condition::Compressed));
            AccuracySummary {
                model: m.to_string(),
                n: of(Condition::Original).count().max(of(Condition::Compressed).count()),
                original: o,
                compressed: c,
                drop_pp: (o - c) * 100.0,
                unparseable_original: of(Condition::Original).filter(|r| r.unparseable).count(),
                unparseable_compressed: of(Condition::Compressed).filter(|r| r.unparseable).count(),
            }
        })
        .collect()
}

/// Change column is compressed minus original, so losses print negative.
pub fn accuracy_table(rows: &[AccuracySummary], compressed_label: &str) -> Table {
    let change = format!("{compressed_label} change (pp)");
    let mut t = Table::new(["Model", "n", "Original", compressed_label, &change, "Unparseable"]);
    for r in rows {
        t.row([
            r.model.clone(),
            thousands(r.n as u64),
            format!("{:.3}", r.original),
            format!("{:.3}", r.compressed),
            super::table::signed1(-r.drop_pp),
            (r.unparseable_original + r.unparseable_compressed).to_string(),
        ]);
    }
    t
}

/// One item's outcome in compact form: `item_id,ratio,original_correct,compressed_correct`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub item_id: String,
    pub ratio: Option<f64>,
    pub original_correct: bool,
    pub compressed_correct: bool,
}

impl OutcomeRow {
    pub fn records(&self, model: &str) -> [EvalRecord; 2] {
        let rec = |condition, correct: bool| EvalRecord {
            item_id: self.item_id.clone(),
            condition,
            model: model.to_string(),
            chosen: None,
            correct,
            unparseable: false,
            template_sha256: String::new(),
            transcript_id: String::new(),
        };
        [rec(Condition::Original, self.original_correct), rec(Condition::Compressed, self.compressed_correct)]
    }
}

#[derive(Deserialize)]
struct RawOutcome {
    item_id: String,
    ratio: Option<f64>,
    original_correct: u8,
    compressed_correct: u8,
}

/// Reads `item_id,ratio,original_correct,compressed_correct` rows with a
/// header; an empty ratio cell means no ratio, flags are 0 or 1.
pub fn read_outcomes_csv(text: &str) -> Result<Vec<OutcomeRow>, BenchError> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rd.deserialize::<RawOutcome>() {
        let r = rec.map_err(|e| BenchError::Decode {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let flag = |v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(BenchError::Decode { line: out.len() + 2, message: format!("flag must be 0 or 1, got {v}") }),
        };
        out.push(OutcomeRow {
            original_correct: flag(r.original_correct)?,
            compressed_correct: flag(r.compressed_correct)?,
            item_id: r.item_id,
            ratio: r.ratio,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::FnBackend;

    fn item(i: usize) -> QAItem {
        QAItem {
            id: format!("q{i}"),
            chunk: super::super::mcq::ChunkRef { doc_id: "d".into(), index: i },
            question: format!("Question {i}?"),
            answer: "x".into(),
            modified_answer: "right".into(),
            distractors: ["w1".into(), "w2".into(), "w3".into()],
            options: ["w1".into(), "right".into(), "w2".into(), "w3".into()],
            correct_index: 1,
            seed: 0,
            model: "gen".into(),
            template_sha256: String::new(),
            transcript_ids: vec![],
        }
    }

    #[test]
    fn letter_extraction() {
        assert_eq!(extract_choice("B"), Some(1));
        assert_eq!(extract_choice("Answer: (C)."), Some(2));
        assert_eq!(extract_choice("After review, D is right"), Some(3));
        assert_eq!(extract_choice("Because BAD"), None);
        assert_eq!(extract_choice("none of them"), None);
        assert_eq!(extract_choice("a"), None);
    }

    #[test]
    fn ten_items_one_lost() {
        let cases: Vec<_> = (0..10)
            .map(|i| EvalCase { item: item(i), original: "ORIG".into(), compressed: if i == 3 { "BAD".into() } else { "TE".into() } })
            .collect();
        let b = FnBackend::new("m", |p: &str, _: &GenParams| Ok(if p.contains("BAD") { "A".into() } else { "B".into() }));
        let recs = evaluate_suite(&cases, &b, &Templates::builtin(), 4).unwrap();
        assert_eq!(recs.len(), 20);
        assert_eq!(recs[6].item_id, "q3");
        assert_eq!(recs[7].condition, Condition::Compressed);
        assert!(!recs[7].correct);
        let s = &accuracy(&recs)[0];
        assert_eq!((s.original, s.compressed), (1.0, 0.9));
        assert!((s.drop_pp - 10.0).abs() < 1e-9);
        assert_eq!(recs, evaluate_suite(&cases, &b, &Templates::builtin(), 1).unwrap());
    }

    #[test]
    fn all_unparseable() {
        let cases: Vec<_> = (0..3).map(|i| EvalCase { item: item(i), original: "o".into(), compressed: "c".into() }).collect();
        let b = FnBackend::new("m", |_: &str, _: &GenParams| Ok("I cannot tell.".into()));
        let recs = evaluate_suite(&cases, &b, &Templates::builtin(), 2).unwrap();
        assert!(recs.iter().all(|r| r.unparseable && !r.correct));
        let s = &accuracy(&recs)[0];
        assert_eq!((s.original, s.compressed, s.unparseable_original + s.unparseable_compressed), (0.0, 0.0, 6));
    }

    #[test]
    fn outcome_csv() {
        let rows = read_outcomes_csv("item_id,ratio,original_correct,compressed_correct\na,0.5,1,0\nb,,0,1\n").unwrap();
        assert_eq!(rows[0].ratio, Some(0.5));
        assert_eq!(rows[1].ratio, None);
        assert!(!rows[1].original_correct && rows[1].compressed_correct);
        assert!(matches!(read_outcomes_csv("item_id,ratio,original_correct,compressed_correct\na,1,1\n"), Err(BenchError::Decode { .. })));
        assert!(read_outcomes_csv("item_id,ratio,original_correct,compressed_correct\na,1,2,1\n").is_err());
    }
}
