use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use serde::Serialize;
use telegraph::assemble::{assemble as run_assembly, scores_by_title, LineOverride, PREAMBLE_ID};
use telegraph::bench::Table;
use telegraph::grammar::{render_document, Document, LineId};
use telegraph::index::Index;
use telegraph::lint::{check_preservation, lint_document, Diagnostic, Severity};
use telegraph::store::{read_log_jsonl, replay_with, Op};

use crate::config::Config;
use crate::model::counter;
use crate::output::{char_position, json_pretty, print, Format, LineMap};
use crate::{usage, Global};

pub fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_doc(path: &Path) -> anyhow::Result<(String, Document)> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let doc = telegraph::grammar::parse_document_bytes(&bytes).with_context(|| path.display().to_string())?;
    Ok((String::from_utf8(bytes).expect("validated by the parser"), doc))
}

pub fn parse(g: &Global, file: &Path) -> anyhow::Result<ExitCode> {
    let (_, doc) = read_doc(file)?;
    let rows: Vec<[String; 4]> = doc
        .lines()
        .iter()
        .map(|l| {
            let atoms: Vec<String> = l
                .atoms
                .iter()
                .map(|a| format!("{}:{}", serde_json::to_value(a.kind()).expect("kind").as_str().unwrap_or("?"), a.canonical()))
                .collect();
            [l.id.to_string(), format!("{:?}", l.kind).to_lowercase(), l.depth.to_string(), atoms.join(" ")]
        })
        .collect();
    match g.format {
        Format::Json => print(&doc.to_json())?,
        Format::Csv => {
            let mut t = Table::new(["id", "kind", "depth", "atoms"]);
            rows.into_iter().for_each(|r| t.row(r));
            print(&t.to_csv())?;
        }
        Format::Text => {
            let mut s = String::new();
            for [id, kind, depth, atoms] in rows {
                s.push_str(&format!("{id:>4}  {kind:<7} {depth}  {atoms}\n"));
            }
            for i in &doc.issues {
                s.push_str(&format!("issue line {}: {}\n", i.line_id, i.message));
            }
            print(&s)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn fmt(file: &Path, check: bool, write: bool) -> anyhow::Result<ExitCode> {
    let (text, doc) = read_doc(file)?;
    let out = render_document(&doc);
    if check {
        if out != text {
            eprintln!("{}: not canonical", file.display());
            return Ok(ExitCode::from(1));
        }
        return Ok(ExitCode::SUCCESS);
    }
    if write {
        fs::write(file, &out).with_context(|| file.display().to_string())?;
    } else {
        print(&out)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Located<'a> {
    file: &'a str,
    line: usize,
    col: usize,
    #[serde(flatten)]
    diag: &'a Diagnostic,
}

fn report(g: &Global, rows: &[(String, usize, usize, &Diagnostic)]) -> anyhow::Result<ExitCode> {
    match g.format {
        Format::Json => {
            let v: Vec<Located> = rows.iter().map(|(f, l, c, d)| Located { file: f, line: *l, col: *c, diag: d }).collect();
            print(&json_pretty(&v))?;
        }
        Format::Csv => {
            let mut t = Table::new(["file", "line", "col", "severity", "rule", "message"]);
            for (f, l, c, d) in rows {
                t.row([f.clone(), l.to_string(), c.to_string(), d.severity.to_string(), d.rule_id.clone(), d.message.clone()]);
            }
            print(&t.to_csv())?;
        }
        Format::Text => {
            let mut s = String::new();
            for (f, l, c, d) in rows {
                s.push_str(&d.to_text(f, *l, *c));
                s.push('\n');
            }
            print(&s)?;
        }
    }
    let fail = rows.iter().any(|(.., d)| d.severity == Severity::Error || (g.strict && d.severity == Severity::Warning));
    Ok(if fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn locate_all<'a>(
    file: &Path,
    text: &str,
    diags: &'a [Diagnostic],
    source: Option<(&Path, &str, &'a [Diagnostic])>,
) -> Vec<(String, usize, usize, &'a Diagnostic)> {
    let map = LineMap::new(text);
    let name = file.display().to_string();
    let mut rows: Vec<(String, usize, usize, &Diagnostic)> = diags
        .iter()
        .map(|d| {
            let (l, c) = map.locate(d.line_id, d.span.start);
            (name.clone(), l, c, d)
        })
        .collect();
    if let Some((sp, st, sd)) = source {
        let sname = sp.display().to_string();
        for d in sd {
            let (l, c) = char_position(st, d.span.start);
            rows.push((sname.clone(), l, c, d));
        }
    }
    rows
}

pub fn lint(g: &Global, cfg: &Config, file: &Path, source: Option<&Path>) -> anyhow::Result<ExitCode> {
    let lint_cfg = cfg.lint_config().map_err(usage)?;
    let (text, doc) = read_doc(file)?;
    let diags = lint_document(&doc, &lint_cfg);
    let (src_text, preserve) = match source {
        Some(p) => {
            let s = read(p)?;
            let d = check_preservation(&s, &doc);
            (s, d)
        }
        None => (String::new(), Vec::new()),
    };
    let rows = locate_all(file, &text, &diags, source.map(|p| (p, src_text.as_str(), preserve.as_slice())));
    report(g, &rows)
}

pub fn check_preserve(g: &Global, source: &Path, file: &Path) -> anyhow::Result<ExitCode> {
    let (text, doc) = read_doc(file)?;
    let src = read(source)?;
    let diags = check_preservation(&src, &doc);
    let rows = locate_all(file, &text, &[], Some((source, &src, &diags)));
    report(g, &rows)
}

pub fn index(file: &Path, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let (_, doc) = read_doc(file)?;
    let jsonl = Index::build(&doc).to_jsonl();
    match out {
        Some(p) => fs::write(p, jsonl).with_context(|| p.display().to_string())?,
        None => print(&jsonl)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_index(input: &Path) -> anyhow::Result<Index> {
    if input.extension().is_some_and(|e| e == "jsonl") {
        let f = fs::File::open(input).map_err(|e| usage(format!("{}: {e}", input.display())))?;
        Ok(Index::read_jsonl(BufReader::new(f)).with_context(|| input.display().to_string())?)
    } else {
        Ok(Index::build(&read_doc(input)?.1))
    }
}

pub fn retrieve(g: &Global, input: &Path, query: &[String], k: usize) -> anyhow::Result<ExitCode> {
    let index = load_index(input)?;
    let r = index.retrieve(query, k).map_err(|e| usage(e.to_string()))?;
    match g.format {
        Format::Json => print(&json_pretty(&r))?,
        Format::Csv => {
            let mut t = Table::new(["rank", "line_id", "score", "text"]);
            for (i, h) in r.hits.iter().enumerate() {
                t.row([(i + 1).to_string(), h.line_id.to_string(), h.score.to_string(), h.fact.text.clone()]);
            }
            print(&t.to_csv())?;
        }
        Format::Text => {
            let mut s = String::new();
            for (i, h) in r.hits.iter().enumerate() {
                s.push_str(&format!("# {} line {} score {}\n", i + 1, h.line_id, h.score));
                s.push_str(&h.render());
            }
            print(&s)?;
        }
    }
    Ok(if r.hits.is_empty() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn query_scores(doc: &Document, query: &[String]) -> anyhow::Result<BTreeMap<LineId, f64>> {
    let index = Index::build(doc);
    let r = index.retrieve(query, index.len().max(1)).map_err(|e| usage(e.to_string()))?;
    let mut scores: BTreeMap<LineId, f64> = BTreeMap::new();
    for h in &r.hits {
        let section = h.fact.section_ids.last().copied().unwrap_or(PREAMBLE_ID);
        let e = scores.entry(section).or_insert(0.0);
        *e = e.max(h.score.value());
    }
    Ok(scores)
}

pub fn assemble(
    g: &Global,
    file: &Path,
    scores: Option<&Path>,
    query: &[String],
    keep: &[u64],
    drop: &[u64],
    show_plan: bool,
) -> anyhow::Result<ExitCode> {
    let budget = g.budget.ok_or_else(|| usage("assemble needs --budget"))?;
    let (_, doc) = read_doc(file)?;
    let scores = if let Some(p) = scores {
        let by_title: BTreeMap<String, f64> =
            serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        scores_by_title(&doc, &by_title)
    } else if !query.is_empty() {
        query_scores(&doc, query)?
    } else {
        let mut all: BTreeMap<LineId, f64> = doc.sections_flat().iter().map(|s| (s.id(), 1.0)).collect();
        if !doc.preamble.is_empty() {
            all.insert(PREAMBLE_ID, 1.0);
        }
        all
    };
    let mut overrides = BTreeMap::new();
    overrides.extend(keep.iter().map(|&id| (id, LineOverride::Keep)));
    overrides.extend(drop.iter().map(|&id| (id, LineOverride::Drop)));
    let replay = crate::model::replay_backend(g)?;
    let counter = counter(g, replay.as_ref())?;
    let a = run_assembly(&doc, &scores, budget, counter.as_ref(), &overrides).map_err(|e| usage(e.to_string()))?;
    if show_plan || g.format == Format::Json {
        print(&json_pretty(&a.plan))?;
    } else {
        print(&a.text)?;
    }
    if a.plan.infeasible {
        eprintln!("te: budget {budget} cannot hold the highest-ranked heading");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_store(g: &Global, store: &telegraph::store::Store) -> anyhow::Result<()> {
    match g.format {
        Format::Json => print(&store.document().to_json()),
        _ => print(&store.render()),
    }
}

fn load_store(cfg: &Config, file: &Path, log: &Path) -> anyhow::Result<telegraph::store::Store> {
    let (_, doc) = read_doc(file)?;
    let ops = if log.exists() {
        let f = fs::File::open(log).with_context(|| log.display().to_string())?;
        read_log_jsonl(BufReader::new(f)).with_context(|| log.display().to_string())?
    } else {
        Vec::new()
    };
    replay_with(doc, &ops, cfg.lint_config().map_err(usage)?).with_context(|| log.display().to_string())
}

pub fn state_apply(
    g: &Global,
    cfg: &Config,
    file: &Path,
    log: &Path,
    op: &str,
    timestamp: Option<String>,
) -> anyhow::Result<ExitCode> {
    let op: Op = serde_json::from_str(op).map_err(|e| usage(format!("--op: {e}")))?;
    let mut store = load_store(cfg, file, log)?;
    let applied = store.apply_at(op, timestamp)?.clone();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(log).with_context(|| log.display().to_string())?;
    serde_json::to_writer(&mut f, &applied)?;
    f.write_all(b"\n")?;
    print_store(g, &store)?;
    Ok(ExitCode::SUCCESS)
}

pub fn state_replay(g: &Global, cfg: &Config, file: &Path, log: &Path) -> anyhow::Result<ExitCode> {
    if !log.exists() {
        return Err(usage(format!("{}: no such log", log.display())));
    }
    let store = load_store(cfg, file, log)?;
    print_store(g, &store)?;
    Ok(ExitCode::SUCCESS)
}
