use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grammar::SymbolRegistry;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CounterId {
    pub name: String,
    pub version: String,
}

impl fmt::Display for CounterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

/// Counts tokens in text. Implementations must return 0 for "" and be
/// additive over lines joined by `\n` (newlines are free).
pub trait TokenCounter: Send + Sync {
    fn id(&self) -> CounterId;
    fn count(&self, text: &str) -> usize;
}

impl<T: TokenCounter + ?Sized> TokenCounter for &T {
    fn id(&self) -> CounterId {
        (**self).id()
    }
    fn count(&self, text: &str) -> usize {
        (**self).count(text)
    }
}

impl<T: TokenCounter + ?Sized> TokenCounter for Box<T> {
    fn id(&self) -> CounterId {
        (**self).id()
    }
    fn count(&self, text: &str) -> usize {
        (**self).count(text)
    }
}

pub fn count_tokens(counter: &dyn TokenCounter, text: &str) -> usize {
    counter.count(text)
}

/// `DEFAULT-V1`: whitespace-separated units, where every operator glyph and
/// every punctuation mark counts as a unit of its own. A `.` between two
/// digits belongs to the number.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultCounter;

pub const DEFAULT_COUNTER: &str = "DEFAULT-V1";

fn is_split_char(chars: &[char], i: usize) -> bool {
    let c = chars[i];
    match c {
        ';' | ',' | ':' | '(' | ')' | '[' | ']' | '?' | '!' | '"' => true,
        '.' => {
            let digit = |j: Option<usize>| j.and_then(|j| chars.get(j)).is_some_and(char::is_ascii_digit);
            !(digit(i.checked_sub(1)) && digit(Some(i + 1)))
        }
        _ => SymbolRegistry::builtin().is_glyph_char(c),
    }
}

impl TokenCounter for DefaultCounter {
    fn id(&self) -> CounterId {
        CounterId { name: DEFAULT_COUNTER.into(), version: "1".into() }
    }

    fn count(&self, text: &str) -> usize {
        let mut n = 0;
        for word in text.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut in_run = false;
            for i in 0..chars.len() {
                if is_split_char(&chars, i) {
                    n += 1;
                    in_run = false;
                } else if !in_run {
                    n += 1;
                    in_run = true;
                }
            }
        }
        n
    }
}

pub fn text_sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Replays counts recorded by an external tokenizer, keyed by the SHA-256
/// of the exact text. Unrecorded text falls back to `DEFAULT-V1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupCounter {
    pub id: CounterId,
    pub counts: BTreeMap<String, usize>,
}

impl LookupCounter {
    pub fn new(name: &str, version: &str) -> Self {
        Self { id: CounterId { name: name.into(), version: version.into() }, counts: BTreeMap::new() }
    }

    pub fn record(&mut self, text: &str, count: usize) {
        self.counts.insert(text_sha256(text), count);
    }

    pub fn recorded(&self, text: &str) -> Option<usize> {
        self.counts.get(&text_sha256(text)).copied()
    }
}

impl TokenCounter for LookupCounter {
    fn id(&self) -> CounterId {
        self.id.clone()
    }

    fn count(&self, text: &str) -> usize {
        self.recorded(text).unwrap_or_else(|| DefaultCounter.count(text))
    }
}

/// Built-in counters by name.
pub fn counter_by_name(name: &str) -> Option<Box<dyn TokenCounter>> {
    match name {
        DEFAULT_COUNTER => Some(Box::new(DefaultCounter)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> usize {
        DefaultCounter.count(s)
    }

    #[test]
    fn default_v1() {
        assert_eq!(c(""), 0);
        assert_eq!(c("HEAT→EXPANSION"), 3);
        assert_eq!(c("A ∧ B"), 3);
        assert_eq!(c("CTX: X"), 3);
        assert_eq!(c("[JOHNSON:2023]"), 5);
        assert_eq!(c("EARLY-DETECTION+27.5%"), 1);
        assert_eq!(c("N=2400"), 3);
        assert_eq!(c("END."), 2);
        assert_eq!(c("  \n "), 0);
    }

    #[test]
    fn additive_over_lines() {
        let a = "H1: CLINICAL-TRIAL OUTCOMES";
        let b = "  ADVERSE-EVENTS: NAUSEA=12% ∧ HEADACHE=8%";
        assert_eq!(c(&format!("{a}\n{b}")), c(a) + c(b));
    }

    #[test]
    fn lookup_falls_back() {
        let mut l = LookupCounter::new("cl100k_base", "recorded");
        l.record("hello world", 2);
        l.record("X", 7);
        assert_eq!(l.count("X"), 7);
        assert_eq!(l.count("A ∧ B"), 3);
        assert_eq!(l.id().to_string(), "cl100k_base@recorded");
    }
}
