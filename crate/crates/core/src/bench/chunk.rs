use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::BenchError;

const ABBREVIATIONS: &str = include_str!("../../assets/abbreviations.txt");

fn abbreviations() -> &'static BTreeSet<String> {
    static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub word_count: usize,
    /// A single sentence longer than the word limit.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub oversized: bool,
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘')
}

/// Whether the word ending at a `.` is an abbreviation or an initial.
fn protected(word: &str) -> bool {
    let w = word.trim_start_matches(is_opener);
    if abbreviations().contains(&w.to_lowercase()) {
        return true;
    }
    let core = w.trim_end_matches('.');
    core.chars().count() == 1 && core.chars().all(|c| c.is_uppercase())
}

/// Splits at a terminator (`.`, `!`, `?`, optionally followed by closing
/// quotes or brackets) that is followed by whitespace and an upper-case
/// letter, unless the terminated word is a known abbreviation or initial.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (is_closer(chars[j].1) || matches!(chars[j].1, '.' | '!' | '?')) {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let mut first = k;
        while first < chars.len() && is_opener(chars[first].1) {
            first += 1;
        }
        let next_upper = first < chars.len() && chars[first].1.is_uppercase();
        if k > j && next_upper {
            let word_start = text[..chars[i].0].rfind(char::is_whitespace).map_or(0, |p| p + 1);
            let word = &text[word_start..chars[i].0 + c.len_utf8()];
            if c != '.' || !protected(word) {
                let end = chars.get(j).map_or(text.len(), |p| p.0);
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = chars[k].0;
            }
        }
        i = j.max(i + 1);
    }
    let s = text[start..].trim();
    if !s.is_empty() {
        out.push(s);
    }
    out
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Packs whole sentences greedily into chunks of at most `max_words`.
pub fn chunk_source(doc_id: &str, text: &str, max_words: usize) -> Result<Vec<Chunk>, BenchError> {
    if max_words == 0 {
        return Err(BenchError::Invalid("max_words must be at least 1".into()));
    }
    let mut chunks = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    let mut cur_words = 0;
    let mut flush = |cur: &mut Vec<&str>, words: &mut usize, oversized: bool| {
        if cur.is_empty() {
            return;
        }
        chunks.push(Chunk {
            doc_id: doc_id.to_string(),
            index: chunks.len(),
            text: cur.join(" "),
            word_count: *words,
            oversized,
        });
        cur.clear();
        *words = 0;
    };
    for s in split_sentences(text) {
        let w = word_count(s);
        if w > max_words {
            flush(&mut cur, &mut cur_words, false);
            let mut one = vec![s];
            let mut n = w;
            flush(&mut one, &mut n, true);
            continue;
        }
        if cur_words + w > max_words {
            flush(&mut cur, &mut cur_words, false);
        }
        cur.push(s);
        cur_words += w;
    }
    flush(&mut cur, &mut cur_words, false);
    Ok(chunks)
}
