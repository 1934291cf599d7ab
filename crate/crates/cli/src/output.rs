use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use telegraph::bench::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

pub fn print(s: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn json_pretty<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut buf = Vec::new();
    telegraph::bench::write_jsonl(&mut buf, items).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

pub fn table(t: &Table, format: Format) -> String {
    match format {
        Format::Csv => t.to_csv(),
        _ => t.to_text(),
    }
}

/// 1-based line and column of each parsed line id: ids count non-blank
/// physical lines, columns skip indentation.
pub struct LineMap {
    rows: Vec<(usize, usize)>,
}

impl LineMap {
    pub fn new(text: &str) -> Self {
        let rows = text
            .split('\n')
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.chars().take_while(|c| c.is_whitespace()).count()))
            .collect();
        Self { rows }
    }

    pub fn locate(&self, line_id: u64, char_in_content: usize) -> (usize, usize) {
        match line_id.checked_sub(1).and_then(|i| self.rows.get(i as usize)) {
            Some(&(line, indent)) => (line, indent + char_in_content + 1),
            None => (0, 0),
        }
    }
}

/// 1-based line and column of a char offset in `text`.
pub fn char_position(text: &str, offset: usize) -> (usize, usize) {
    let (mut line, mut col) = (1, 1);
    for c in text.chars().take(offset) {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}
