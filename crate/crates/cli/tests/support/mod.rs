#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use telegraph::assemble::DefaultCounter;
use telegraph::bench::{build_mcq, chunk_source, evaluate_suite, Chunk, EvalCase, QAItem, Templates};
use telegraph::compress::{compress, BackendError, CompressionRequest, FnBackend, GenParams, RecordingBackend, TextBackend};

pub const FIELD_REPORT: &str = include_str!("../fixtures/field_report.txt");
pub const MAX_WORDS: usize = 60;

pub fn te(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_te"))
        .args(args)
        .current_dir(dir)
        .env_remove("TE_API_KEY")
        .output()
        .expect("spawn te")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn after<'a>(text: &'a str, marker: &str) -> &'a str {
    text.split_once(marker).map_or("", |(_, rest)| rest)
}

fn line_after<'a>(text: &'a str, marker: &str) -> &'a str {
    after(text, marker).lines().next().unwrap_or("").trim()
}

fn te_line(sentence: &str) -> String {
    let words: Vec<String> = sentence
        .split(|c: char| !c.is_alphanumeric() && c != '.' && c != '%')
        .map(|w| w.trim_matches('.'))
        .filter(|w| w.len() > 3 || w.chars().any(|c| c.is_ascii_digit()))
        .take(5)
        .map(str::to_uppercase)
        .collect();
    words.join("-")
}

/// A deterministic stand-in for a model: every answer is a pure function of
/// the prompt.
pub fn answer(prompt: &str) -> String {
    if prompt.contains("=== SOURCE ===") {
        let src = after(prompt, "=== SOURCE ===\n").split("=== END SOURCE ===").next().unwrap_or("");
        let lines: Vec<String> = src
            .split(". ")
            .map(te_line)
            .filter(|l| !l.is_empty())
            .collect();
        return lines.join("\n");
    }
    if prompt.contains("PASSAGE:\n") {
        let passage = after(prompt, "PASSAGE:\n").trim();
        let first = passage.split(". ").next().unwrap_or(passage).trim_end_matches('.');
        let lead = first.split_whitespace().nth(1).unwrap_or("it");
        return json!({"question": format!("What does the passage state about {lead}?"), "answer": first}).to_string();
    }
    if prompt.contains("reuses as few of its words") {
        let a = line_after(prompt, "\nAnswer: ");
        return json!({"modified_answer": format!("In other words: {}", a.to_lowercase())}).to_string();
    }
    if prompt.contains("Correct answer: ") {
        let a = line_after(prompt, "Correct answer: ");
        let d: Vec<String> = (1..=3).map(|i| format!("Wrong {i}: {a}")).collect();
        return json!({ "distractors": d }).to_string();
    }
    if prompt.contains("QUESTION: ") {
        let context = after(prompt, "CONTEXT:\n").split("\n\nQUESTION: ").next().unwrap_or("");
        if context.split_whitespace().count() < 12 {
            return "I think the answer is A.".into();
        }
        for l in ["A", "B", "C", "D"] {
            let opt = line_after(prompt, &format!("\n{l}. "));
            if !opt.starts_with("Wrong") {
                return l.to_string();
            }
        }
    }
    "unrecognised prompt".into()
}

pub fn scripted() -> FnBackend<impl Fn(&str, &GenParams) -> Result<String, BackendError> + Send + Sync> {
    FnBackend::new("scripted-1", |p: &str, _: &GenParams| Ok(answer(p)))
}

/// Files for an offline pipeline run: the source, its chunks, compressed
/// chunks, and transcripts for the three model-backed commands.
pub struct Recorded {
    pub dir: PathBuf,
    pub compress_te: String,
    pub chunks: Vec<Chunk>,
    pub items: Vec<QAItem>,
}

fn jsonl<T: serde::Serialize>(rows: &[T]) -> String {
    rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
}

pub fn record_pipeline(dir: &Path) -> Recorded {
    std::fs::write(dir.join("source.txt"), FIELD_REPORT).unwrap();

    let rec = RecordingBackend::new(scripted());
    let result = compress(&CompressionRequest::new(FIELD_REPORT), &rec, &DefaultCounter).unwrap();
    rec.write_to(&dir.join("compress.transcript.jsonl")).unwrap();

    let chunks = chunk_source("source", FIELD_REPORT, MAX_WORDS).unwrap();
    std::fs::write(dir.join("chunks.jsonl"), jsonl(&chunks)).unwrap();

    let templates = Templates::builtin();
    let rec = RecordingBackend::new(scripted());
    let items: Vec<QAItem> =
        chunks.iter().enumerate().map(|(i, c)| build_mcq(c, &rec, &templates, i as u64).unwrap()).collect();
    rec.write_to(&dir.join("mcq.transcript.jsonl")).unwrap();
    std::fs::write(dir.join("items.jsonl"), jsonl(&items)).unwrap();

    let plain = scripted();
    let mut compressed = Vec::new();
    let mut cases = Vec::new();
    for (c, item) in chunks.iter().zip(&items) {
        let r = compress(&CompressionRequest::new(&c.text), &plain, &DefaultCounter).unwrap();
        compressed.push(json!({"doc_id": c.doc_id, "index": c.index, "text": r.te_text}));
        cases.push(EvalCase { item: item.clone(), original: c.text.clone(), compressed: r.te_text });
    }
    std::fs::write(dir.join("compressed.jsonl"), jsonl(&compressed)).unwrap();
    let rec = RecordingBackend::new(scripted());
    evaluate_suite(&cases, &rec as &dyn TextBackend, &templates, 4).unwrap();
    rec.write_to(&dir.join("eval.transcript.jsonl")).unwrap();

    Recorded { dir: dir.to_path_buf(), compress_te: result.te_text, chunks, items }
}
