#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use telegraph::assemble::{scores_by_title, DefaultCounter, TokenCounter};
use telegraph::grammar::{parse_document, AtomKind, Document, LineId, LineKind, Span};
use telegraph::store::{Op, Store};

pub const CLINICAL: &str = include_str!("../fixtures/clinical_trial.te");
pub const ML_TE: &str = include_str!("../fixtures/ml_diagnostics.te");
pub const ML_SOURCE: &str = include_str!("../fixtures/ml_diagnostics.txt");

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).expect("fixture")
}

pub fn term() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Z]{1,8}",
        "[A-Z]{2,6}-[A-Z]{2,6}",
        Just("EARLY-DETECTION".to_string()),
        Just("MORTALITY".to_string()),
    ]
}

pub fn symbol() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["→", "⇒", "∧", "∨", "¬", "≈", "≠", "↑", "↓", "=", "∴", "∵", "->", "=>", "~="])
        .prop_map(str::to_string)
}

pub fn quantity() -> impl Strategy<Value = String> {
    prop_oneof![
        (1u32..5000).prop_map(|n| format!("N={n}")),
        (1u32..100, 0u32..10).prop_map(|(a, b)| format!("RATE={a}.{b}%")),
        (1u32..99).prop_map(|n| format!("p<0.{n:02}")),
        (1u32..60).prop_map(|n| format!("GAIN+{n}%")),
        (1u32..60).prop_map(|n| format!("LOSS-{n}%")),
    ]
}

pub fn citation() -> impl Strategy<Value = String> {
    ("[A-Z]{3,8}", 1990u32..2030).prop_map(|(a, y)| format!("[{a}:{y}]"))
}

/// Valid fact content: alternating terms and operators with optional
/// quantity and citation.
pub fn fact_content() -> impl Strategy<Value = String> {
    (term(), prop::collection::vec((symbol(), term()), 0..3), prop::option::of(quantity()), prop::option::of(citation()))
        .prop_map(|(first, rest, q, c)| {
            let mut s = first;
            for (op, t) in rest {
                s.push_str(&op);
                s.push_str(&t);
            }
            if let Some(q) = q {
                s.push(' ');
                s.push_str(&q);
            }
            if let Some(c) = c {
                s.push(' ');
                s.push_str(&c);
            }
            s
        })
}

#[derive(Debug, Clone)]
pub struct GenSection {
    pub level: u8,
    pub title: String,
    pub ctx: Vec<String>,
    pub facts: Vec<String>,
}

pub fn section(level: u8) -> impl Strategy<Value = GenSection> {
    (term(), prop::collection::vec(fact_content(), 0..2), prop::collection::vec(fact_content(), 0..5)).prop_map(
        move |(title, ctx, facts)| GenSection { level, title, ctx, facts },
    )
}

pub fn render_sections(secs: &[GenSection]) -> String {
    let mut out = String::new();
    for s in secs {
        out.push_str(&format!("H{}: {}\n", s.level, s.title));
        for c in &s.ctx {
            out.push_str(&format!("CTX: {c}\n"));
        }
        for f in &s.facts {
            out.push_str(&format!("  {f}\n"));
        }
    }
    out
}

/// A well-formed document: top-level H1 sections, some with H2 children.
pub fn document() -> impl Strategy<Value = String> {
    prop::collection::vec((section(1), prop::collection::vec(section(2), 0..3)), 1..6).prop_map(|tops| {
        let flat: Vec<GenSection> = tops.into_iter().flat_map(|(t, kids)| std::iter::once(t).chain(kids)).collect();
        render_sections(&flat)
    })
}

/// Arbitrary line-ish text over the characters the lexer cares about.
pub fn noisy_text() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        "A", "b", "EARLY", "-", "+", "=", "%", "3", "27.5", " ", "  ", "\n", "\t", "→", "->", "∧", "&&", "!", "¬", "[",
        "]", ":", ";", ",", "(", ")", "?", "H1:", "H2:", "CTX:", "DEF:", "Q:", "A:", "VS", "p<0.001", "[SMITH:2024]",
        "DOI:10.1/x", "USD", "M", "Y/Y", ".", "é", "≈", "↑", "ms", "CONF=0.9",
    ]);
    prop::collection::vec(pieces, 0..40).prop_map(|v| v.concat())
}

/// Independent token count: pad every split character with spaces, then
/// count whitespace-separated pieces.
pub fn oracle_tokens(text: &str) -> usize {
    const SPLIT: &str = ";,:()[]?!\"=→⇒∴∵↑↓∧∨¬≈≠";
    let chars: Vec<char> = text.chars().collect();
    let mut padded = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let decimal_point = c == '.'
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if SPLIT.contains(c) || (c == '.' && !decimal_point) {
            padded.push(' ');
            padded.push(c);
            padded.push(' ');
        } else {
            padded.push(c);
        }
    }
    padded.split_whitespace().count()
}

/// A random op that is valid for the current state of `store`.
pub fn random_op<R: Rng>(store: &Store, rng: &mut R) -> Option<Op> {
    let doc = store.document();
    let stash = store.stash();
    let lines = doc.lines();
    let facts: Vec<LineId> = lines.iter().filter(|l| l.is_fact_like()).map(|l| l.id).collect();
    let ctxs: Vec<LineId> =
        lines.iter().filter(|l| l.kind == LineKind::Ctx && !stash.contains_key(&l.id)).map(|l| l.id).collect();
    let body: Vec<LineId> =
        lines.iter().filter(|l| l.kind != LineKind::Heading && !stash.contains_key(&l.id)).map(|l| l.id).collect();
    let sections: Vec<LineId> =
        doc.sections_flat().iter().map(|s| s.id()).filter(|id| !stash.contains_key(id)).collect();
    let promotable: Vec<LineId> = stash.keys().copied().filter(|id| doc.line(*id).is_some()).collect();
    let mut containers: Vec<LineId> = doc.sections_flat().iter().map(|s| s.id()).collect();
    containers.push(0);
    let n = rng.gen_range(0..1000);
    for attempt in 0..7 {
        let op = match (rng.gen_range(0..7) + attempt) % 7 {
            0 if !facts.is_empty() => {
                Some(Op::Update { target: *facts.choose(rng)?, text: format!("REVISED-{n}→RESULT-{}", n % 7) })
            }
            1 if facts.len() >= 2 => {
                let mut src: Vec<LineId> = facts.choose_multiple(rng, 2).copied().collect();
                src.shuffle(rng);
                Some(Op::Merge { sources: src, text: format!("MERGED-{n}∧COMBINED") })
            }
            2 if !body.is_empty() => Some(Op::Prune { target: *body.choose(rng)?, removed: None }),
            3 if !sections.is_empty() => Some(Op::Demote { section: *sections.choose(rng)? }),
            4 if !ctxs.is_empty() => Some(Op::CloseScope { ctx: *ctxs.choose(rng)? }),
            5 if !promotable.is_empty() => Some(Op::Promote { id: *promotable.choose(rng)? }),
            6 => {
                let section = *containers.choose(rng)?;
                let ids: Vec<LineId> = if section == 0 {
                    doc.preamble.iter().filter(|l| l.kind != LineKind::Ctx).map(|l| l.id).collect()
                } else {
                    doc.section(section)?.lines.iter().filter(|l| l.kind != LineKind::Ctx).map(|l| l.id).collect()
                };
                let mut order = ids;
                order.shuffle(rng);
                Some(Op::Rerank { section, order })
            }
            _ => None,
        };
        if op.is_some() {
            return op;
        }
    }
    None
}

/// Every window of symbol atoms that cannot be extended on either side.
pub fn brute_force_density(doc: &Document, max: usize) -> BTreeSet<(u64, Span)> {
    let mut out = BTreeSet::new();
    for line in doc.lines() {
        let sym: Vec<bool> = line.atoms.iter().map(|a| a.kind() == AtomKind::Symbol).collect();
        let n = sym.len();
        for i in 0..n {
            for j in i..n {
                let all = (i..=j).all(|k| sym[k]);
                let left_closed = i == 0 || !sym[i - 1];
                let right_closed = j + 1 == n || !sym[j + 1];
                if all && left_closed && right_closed && j - i + 1 > max {
                    out.insert((line.id, Span::new(line.atoms[i].span.start, line.atoms[j].span.end)));
                }
            }
        }
    }
    out
}

pub fn symbol_heavy_line() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        3 => symbol(),
        2 => term(),
        1 => Just(" ".to_string()),
        1 => quantity(),
    ];
    prop::collection::vec(piece, 1..14).prop_map(|v| v.concat())
}

/// Sort, then interpolate between neighbours at p·(n−1).
pub fn naive_percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() as f64 - 1.0);
    let below = pos.floor();
    let frac = pos - below;
    let lo = sorted[below as usize];
    let hi = if frac == 0.0 { lo } else { sorted[below as usize + 1] };
    lo * (1.0 - frac) + hi * frac
}

pub fn recount(text: &str) -> usize {
    text.lines().map(oracle_tokens).sum()
}

pub fn hundred_sections() -> (Document, BTreeMap<LineId, f64>) {
    let mut text = String::new();
    for i in 0..100 {
        text.push_str(&format!("H1: TOPIC-{i}\nCTX: SCOPE-{i} N={}\n", 100 + i));
        for j in 0..6 {
            text.push_str(&format!("  METRIC-{i}-{j}→OUTCOME-{j} RATE={}.{}%\n", j + 1, i % 10));
        }
    }
    let doc = parse_document(&text);
    let mut by_title = BTreeMap::new();
    by_title.insert("TOPIC-42".to_string(), 1.0);
    for i in (0..100).step_by(10) {
        by_title.insert(format!("TOPIC-{i}"), 0.1);
    }
    let scores = scores_by_title(&doc, &by_title);
    (doc, scores)
}

pub fn tokens(store: &Store) -> usize {
    DefaultCounter.count(&store.render())
}

pub fn run(text: &str, seed: u64, steps: usize) -> Store {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = Store::from_text(text);
    for _ in 0..steps {
        let Some(op) = random_op(&store, &mut rng) else { break };
        let before = tokens(&store);
        let shrinking = matches!(op, Op::Prune { .. } | Op::Demote { .. });
        store.apply(op.clone()).unwrap_or_else(|e| panic!("generated op {op:?} rejected: {e}"));
        if shrinking {
            assert!(tokens(&store) <= before, "{op:?} grew the document");
        }
    }
    store
}
