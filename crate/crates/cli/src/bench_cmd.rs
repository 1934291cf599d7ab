use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use telegraph::bench::{
    accuracy, accuracy_table, build_mcq, check_drops, check_hierarchy, chunk_source, cost_table, error_analysis,
    evaluate_suite, pipeline_cost, ratio_stats, read_jsonl, read_outcomes_csv, AccuracyTable, Chunk, CostScenario,
    EvalCase, EvalRecord, QAItem, Templates,
};

use crate::config::Config;
use crate::doc_cmd::read;
use crate::model::Session;
use crate::output::{json_pretty, jsonl, print, table, Format};
use crate::{usage, BenchCmd, Global};

fn load_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let f = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    read_jsonl(BufReader::new(f)).with_context(|| path.display().to_string())
}

fn load_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_csv<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    rd.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn templates(cfg: &Config) -> anyhow::Result<Templates> {
    match &cfg.bench.templates {
        Some(p) => Templates::from_json(&read(p)?).map_err(|e| usage(e.to_string())),
        None => Ok(Templates::builtin()),
    }
}

#[derive(Deserialize)]
struct CompressedChunk {
    doc_id: String,
    index: usize,
    text: String,
}

#[derive(Deserialize)]
struct RatioRow {
    item_id: String,
    ratio: f64,
}

#[derive(Deserialize)]
struct PairRow {
    source_tokens: usize,
    compressed_tokens: usize,
}

pub fn run(g: &Global, cfg: &Config, cmd: &BenchCmd) -> anyhow::Result<ExitCode> {
    match cmd {
        BenchCmd::Chunk { file, doc_id, max_words } => {
            let text = read(file)?;
            let id = doc_id.clone().unwrap_or_else(|| file.file_stem().map_or("doc".into(), |s| s.to_string_lossy().into_owned()));
            let chunks = chunk_source(&id, &text, max_words.unwrap_or(cfg.bench.max_words)).map_err(|e| usage(e.to_string()))?;
            for c in chunks.iter().filter(|c| c.oversized) {
                eprintln!("te: warning: chunk {} is one sentence of {} words", c.index, c.word_count);
            }
            print(&jsonl(&chunks))?;
        }
        BenchCmd::Mcq { chunks, record } => {
            let chunks: Vec<Chunk> = load_jsonl(chunks)?;
            let t = templates(cfg)?;
            let session = Session::open(g, cfg, record.as_deref())?;
            let mut items = Vec::new();
            let mut failure = None;
            for (i, c) in chunks.iter().enumerate() {
                match build_mcq(c, session.backend(), &t, g.seed.wrapping_add(i as u64)) {
                    Ok(item) => items.push(item),
                    Err(e) => {
                        failure = Some(anyhow::anyhow!("chunk {}#{}: {e}", c.doc_id, c.index));
                        break;
                    }
                }
            }
            session.finish()?;
            if let Some(e) = failure {
                return Err(e);
            }
            print(&jsonl(&items))?;
        }
        BenchCmd::Eval { items, chunks, compressed, out, label, record } => {
            let items: Vec<QAItem> = load_jsonl(items)?;
            let chunks: Vec<Chunk> = load_jsonl(chunks)?;
            let compressed: Vec<CompressedChunk> = load_jsonl(compressed)?;
            let orig: BTreeMap<(&str, usize), &str> = chunks.iter().map(|c| ((c.doc_id.as_str(), c.index), c.text.as_str())).collect();
            let comp: BTreeMap<(&str, usize), &str> = compressed.iter().map(|c| ((c.doc_id.as_str(), c.index), c.text.as_str())).collect();
            let mut cases = Vec::new();
            for it in items {
                let key = (it.chunk.doc_id.as_str(), it.chunk.index);
                let (Some(o), Some(c)) = (orig.get(&key), comp.get(&key)) else {
                    return Err(usage(format!("item {}: chunk text missing in --chunks or --compressed", it.id)));
                };
                let (o, c) = (o.to_string(), c.to_string());
                cases.push(EvalCase { item: it, original: o, compressed: c });
            }
            let session = Session::open(g, cfg, record.as_deref())?;
            let result = evaluate_suite(&cases, session.backend(), &templates(cfg)?, cfg.bench.max_in_flight);
            session.finish()?;
            let records = result?;
            if let Some(p) = out {
                std::fs::write(p, jsonl(&records)).with_context(|| p.display().to_string())?;
            }
            let summary = accuracy(&records);
            match g.format {
                Format::Json => print(&json_pretty(&summary))?,
                f => print(&table(&accuracy_table(&summary, label), f))?,
            }
        }
        BenchCmd::Accuracy { records, outcomes, model, label } => {
            let records: Vec<EvalRecord> = match (records, outcomes) {
                (Some(p), _) => load_jsonl(p)?,
                (None, Some(p)) => {
                    let rows = read_outcomes_csv(&read(p)?).with_context(|| p.display().to_string())?;
                    let m = model.as_deref().expect("clap enforces --model");
                    rows.iter().flat_map(|r| r.records(m)).collect()
                }
                (None, None) => return Err(usage("pass --records or --outcomes")),
            };
            let summary = accuracy(&records);
            match g.format {
                Format::Json => print(&json_pretty(&summary))?,
                f => print(&table(&accuracy_table(&summary, label), f))?,
            }
        }
        BenchCmd::Errors { records, ratios, outcomes, items } => {
            let (recs, ratio_map): (Vec<EvalRecord>, BTreeMap<String, f64>) = match (records, outcomes) {
                (Some(p), _) => {
                    let rp = ratios.as_deref().expect("clap enforces --ratios");
                    let rows: Vec<RatioRow> = load_csv(rp)?;
                    (load_jsonl(p)?, rows.into_iter().map(|r| (r.item_id, r.ratio)).collect())
                }
                (None, Some(p)) => {
                    let rows = read_outcomes_csv(&read(p)?).with_context(|| p.display().to_string())?;
                    let mut ratios = BTreeMap::new();
                    for r in &rows {
                        if let Some(x) = r.ratio {
                            ratios.insert(r.item_id.clone(), x);
                        }
                    }
                    (rows.iter().flat_map(|r| r.records("outcomes")).collect(), ratios)
                }
                (None, None) => return Err(usage("pass --records with --ratios, or --outcomes")),
            };
            let report = error_analysis(&recs, &ratio_map)?;
            match g.format {
                Format::Json => print(&json_pretty(&report))?,
                f => {
                    let mut s = table(&report.table(), f);
                    if *items {
                        s.push('\n');
                        s.push_str(&table(&report.items_table(), f));
                    }
                    print(&s)?;
                }
            }
        }
        BenchCmd::Stats { pairs } => {
            let rows: Vec<PairRow> = load_csv(pairs)?;
            let pairs: Vec<(usize, usize)> = rows.iter().map(|r| (r.source_tokens, r.compressed_tokens)).collect();
            let s = ratio_stats(&pairs)?;
            match g.format {
                Format::Json => print(&json_pretty(&s))?,
                f => print(&table(&s.table(), f))?,
            }
        }
        BenchCmd::Cost { scenario } => {
            let s: CostScenario = load_json(scenario)?;
            let rows = pipeline_cost(&s).map_err(|e| usage(e.to_string()))?;
            match g.format {
                Format::Json => print(&json_pretty(&rows))?,
                f => print(&table(&cost_table(&rows, s.calls), f))?,
            }
        }
        BenchCmd::Hierarchy { tables } => {
            let t = AccuracyTable::load_all(&read(tables)?).map_err(|e| usage(e.to_string()))?;
            let mut v = check_hierarchy(&t);
            v.extend(check_drops(&t));
            let rows: usize = t.iter().map(|x| x.rows.len()).sum();
            match g.format {
                Format::Json => print(&json_pretty(&v))?,
                _ => {
                    let mut s = String::new();
                    for x in &v {
                        s.push_str(&format!("FAIL {} {}: {}\n", x.table, x.model, x.detail));
                    }
                    if v.is_empty() {
                        s.push_str(&format!("ok: {rows} rows in {} tables keep original ≥ TE ≥ LLML2\n", t.len()));
                    }
                    print(&s)?;
                }
            }
            if !v.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
