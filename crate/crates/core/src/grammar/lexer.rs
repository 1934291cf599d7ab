//! Splits one physical line into atoms.
//!
//! The scanner walks chars left to right. At a segment start (line start,
//! after whitespace, a symbol or punctuation) it tries, in order: bracketed
//! citation, DOI/ARXIV/URL locator, tag, quantity, symbol, punctuation.
//! Inside a term only symbols, glued signed changes (`+27.5%`), brackets and
//! punctuation can end the term.

use super::citation::{parse_citation, scan_locator};
use super::quantity::{scan_quantity, scan_signed_change};
use super::vocab::{SymbolRegistry, TagRegistry};
use super::{Atom, AtomValue, GrammarError, Span, SymbolRef, TagRef};

#[derive(Debug, Clone, Copy)]
pub struct Lexer<'r> {
    symbols: &'r SymbolRegistry,
    tags: &'r TagRegistry,
}

impl Lexer<'static> {
    pub fn builtin() -> Self {
        Self { symbols: SymbolRegistry::builtin(), tags: TagRegistry::builtin() }
    }
}

impl<'r> Lexer<'r> {
    pub fn new(symbols: &'r SymbolRegistry, tags: &'r TagRegistry) -> Self {
        Self { symbols, tags }
    }

    pub fn symbols(&self) -> &'r SymbolRegistry {
        self.symbols
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<Atom>, GrammarError> {
        if let Some(offset) = text.chars().position(|c| c == '\n' || c == '\r') {
            return Err(GrammarError::Newline { offset });
        }
        let chars: Vec<char> = text.chars().collect();
        Ok(Scanner { lx: *self, chars: &chars, atoms: Vec::new() }.run())
    }
}

struct Scanner<'a, 'r> {
    lx: Lexer<'r>,
    chars: &'a [char],
    atoms: Vec<Atom>,
}

impl Scanner<'_, '_> {
    fn run(mut self) -> Vec<Atom> {
        let n = self.chars.len();
        let mut i = 0;
        let mut term_start: Option<usize> = None;
        let mut word_start = true;
        while i < n {
            if self.chars[i].is_whitespace() {
                self.flush_term(&mut term_start, i);
                word_start = true;
                i += 1;
                continue;
            }
            let at_word_start = word_start;
            word_start = false;
            let found = if term_start.is_none() {
                self.segment_atom(i, at_word_start)
            } else {
                self.inner_break(i)
            };
            match found {
                Some((value, end)) => {
                    self.flush_term(&mut term_start, i);
                    self.push(i, end, value);
                    i = end;
                }
                None => {
                    term_start.get_or_insert(i);
                    i += 1;
                }
            }
        }
        self.flush_term(&mut term_start, n);
        self.atoms
    }

    fn push(&mut self, start: usize, end: usize, value: AtomValue) {
        let raw: String = self.chars[start..end].iter().collect();
        self.atoms.push(Atom { span: Span::new(start, end), raw, value });
    }

    fn flush_term(&mut self, term_start: &mut Option<usize>, end: usize) {
        if let Some(start) = term_start.take() {
            let text: String = self.chars[start..end].iter().collect();
            self.push(start, end, AtomValue::Term(text));
        }
    }

    fn is_ws(&self, j: usize) -> bool {
        self.chars.get(j).is_some_and(|c| c.is_whitespace())
    }

    fn prefix_operand(&self, j: usize) -> bool {
        self.chars.get(j).is_some_and(|c| c.is_alphanumeric() || *c == '(')
    }

    /// Punctuation that always stands as its own atom.
    fn punct_at(&self, j: usize) -> Option<char> {
        let c = *self.chars.get(j)?;
        match c {
            ';' | ',' | ':' | '(' | ')' | '?' | '"' => Some(c),
            '.' if j + 1 == self.chars.len() || self.is_ws(j + 1) => Some(c),
            '!' if !self.prefix_operand(j + 1) && self.chars.get(j + 1) != Some(&'=') => Some(c),
            _ => None,
        }
    }

    /// Returns (symbol index, end) for a symbol spelled at `j`.
    fn symbol_at(&self, j: usize, word_start: bool) -> Option<(usize, usize)> {
        let reg = self.lx.symbols;
        for sp in reg.spellings() {
            let end = j + sp.text.len();
            if end > self.chars.len() || self.chars[j..end] != sp.text[..] {
                continue;
            }
            let sym = reg.symbol_at(sp.symbol);
            if sym.is_word() {
                if !word_start || !(end == self.chars.len() || self.is_ws(end)) {
                    continue;
                }
            } else if sp.is_alias && sym.alias_needs_operand && !self.prefix_operand(end) {
                continue;
            }
            return Some((sp.symbol, end));
        }
        None
    }

    fn symbol_value(&self, idx: usize) -> AtomValue {
        let s = self.lx.symbols.symbol_at(idx);
        AtomValue::Symbol(SymbolRef { id: s.id.clone(), glyph: s.glyph.clone(), category: s.category })
    }

    /// Whether an atom may end right before `j`.
    fn boundary(&self, j: usize) -> bool {
        j == self.chars.len()
            || self.is_ws(j)
            || self.punct_at(j).is_some()
            || self.chars[j] == '['
            || self.symbol_at(j, false).is_some()
    }

    fn bracket_at(&self, j: usize) -> Option<(AtomValue, usize)> {
        if self.chars[j] != '[' {
            return None;
        }
        let close = self.chars[j..].iter().position(|&c| c == ']')? + j;
        let text: String = self.chars[j..=close].iter().collect();
        let value = match parse_citation(&text) {
            Some(c) => AtomValue::Citation(c),
            // Malformed bracket fragments stay visible as terms; the linter
            // reports them.
            None => AtomValue::Term(text),
        };
        Some((value, close + 1))
    }

    fn tag_at(&self, j: usize) -> Option<(AtomValue, usize)> {
        let mut k = j;
        if !self.chars[k].is_ascii_uppercase() {
            return None;
        }
        while k < self.chars.len() && (self.chars[k].is_ascii_uppercase() || self.chars[k].is_ascii_digit() || self.chars[k] == '_') {
            k += 1;
        }
        if self.chars.get(k) != Some(&':') || matches!(self.chars.get(k + 1), Some(':') | Some('/')) {
            return None;
        }
        let surface: String = self.chars[j..=k].iter().collect();
        let tag = self.lx.tags.by_surface(&surface)?;
        Some((AtomValue::Tag(TagRef { id: tag.id.clone(), surface: tag.surface.clone(), family: tag.family }), k + 1))
    }

    fn segment_atom(&self, i: usize, word_start: bool) -> Option<(AtomValue, usize)> {
        if let Some(hit) = self.bracket_at(i) {
            return Some(hit);
        }
        if word_start {
            if let Some((c, end)) = scan_locator(self.chars, i) {
                return Some((AtomValue::Citation(c), end));
            }
            if let Some(hit) = self.tag_at(i) {
                return Some(hit);
            }
        }
        let boundary = |j: usize| self.boundary(j);
        if let Some((q, end)) = scan_quantity(self.chars, i, &boundary) {
            return Some((AtomValue::Quantity(q), end));
        }
        if let Some((idx, end)) = self.symbol_at(i, word_start) {
            return Some((self.symbol_value(idx), end));
        }
        self.punct_at(i).map(|c| (AtomValue::Punctuation(c), i + 1))
    }

    fn inner_break(&self, i: usize) -> Option<(AtomValue, usize)> {
        if let Some(hit) = self.bracket_at(i) {
            return Some(hit);
        }
        if let Some((idx, end)) = self.symbol_at(i, false) {
            return Some((self.symbol_value(idx), end));
        }
        let boundary = |j: usize| self.boundary(j);
        if let Some((q, end)) = scan_signed_change(self.chars, i, &boundary) {
            return Some((AtomValue::Quantity(q), end));
        }
        self.punct_at(i).map(|c| (AtomValue::Punctuation(c), i + 1))
    }
}

/// Tokenizes one line with the built-in vocabulary.
pub fn tokenize_line(text: &str) -> Result<Vec<Atom>, GrammarError> {
    Lexer::builtin().tokenize(text)
}

pub fn tokenize_line_with(lexer: &Lexer<'_>, text: &str) -> Result<Vec<Atom>, GrammarError> {
    lexer.tokenize(text)
}

/// Byte-level entry point: reports malformed UTF-8 with its byte offset.
pub fn tokenize_line_bytes(bytes: &[u8]) -> Result<Vec<Atom>, GrammarError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GrammarError::Encoding { offset: e.valid_up_to() })?;
    tokenize_line(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{AtomKind, Sign};

    fn kinds(text: &str) -> Vec<(AtomKind, String)> {
        tokenize_line(text).unwrap().iter().map(|a| (a.kind(), a.raw.clone())).collect()
    }

    fn k(kind: AtomKind, s: &str) -> (AtomKind, String) {
        (kind, s.to_string())
    }

    use AtomKind::*;

    #[test]
    fn causal_pair() {
        assert_eq!(kinds("HEAT→EXPANSION"), vec![k(Term, "HEAT"), k(Symbol, "→"), k(Term, "EXPANSION")]);
        let atoms = tokenize_line("HEAT→EXPANSION").unwrap();
        assert_eq!(atoms[1].as_symbol().unwrap().category, crate::grammar::SymbolCategory::Causal);
    }

    #[test]
    fn empty_line() {
        assert!(tokenize_line("").unwrap().is_empty());
        assert!(tokenize_line("   ").unwrap().is_empty());
    }

    #[test]
    fn endpoint_line() {
        assert_eq!(
            kinds("MORTALITY↓23% VS PLACEBO; p<0.001 [SMITH:2024]"),
            vec![
                k(Term, "MORTALITY"),
                k(Symbol, "↓"),
                k(Quantity, "23%"),
                k(Symbol, "VS"),
                k(Term, "PLACEBO"),
                k(Punctuation, ";"),
                k(Quantity, "p<0.001"),
                k(Citation, "[SMITH:2024]"),
            ]
        );
    }

    #[test]
    fn glued_signed_changes() {
        let atoms = tokenize_line("ML→MEDICAL-DIAGNOSTICS: EARLY-DETECTION+27.5% ∧ FALSE-POSITIVE-12% [JOHNSON:2023]").unwrap();
        let q: Vec<_> = atoms.iter().filter_map(|a| a.as_quantity()).collect();
        assert_eq!(q.len(), 2);
        assert_eq!((q[0].sign, q[0].magnitude.as_str()), (Some(Sign::Plus), "27.5"));
        assert_eq!((q[1].sign, q[1].magnitude.as_str()), (Some(Sign::Minus), "12"));
        let terms: Vec<_> = atoms.iter().filter_map(|a| a.as_term()).collect();
        assert_eq!(terms, ["ML", "MEDICAL-DIAGNOSTICS", "EARLY-DETECTION", "FALSE-POSITIVE"]);
    }

    #[test]
    fn aliases_lex_as_symbols() {
        let atoms = tokenize_line("RAIN=>WETNESS ∧ A->B && !EVIDENCE ^ X!=Y").unwrap();
        let glyphs: Vec<_> = atoms.iter().filter_map(|a| a.as_symbol()).map(|s| s.glyph.as_str()).collect();
        assert_eq!(glyphs, ["⇒", "∧", "→", "∧", "¬", "∧", "≠"]);
    }

    #[test]
    fn exclamation_without_operand_is_punctuation() {
        assert_eq!(kinds("DONE!"), vec![k(Term, "DONE"), k(Punctuation, "!")]);
    }

    #[test]
    fn vs_needs_whitespace() {
        assert_eq!(kinds("MODEL-A VS MODEL-B")[1], k(Symbol, "VS"));
        assert_eq!(kinds("CANVS"), vec![k(Term, "CANVS")]);
        assert_eq!(kinds("X VS-Y")[1], k(Term, "VS-Y"));
        assert_eq!(kinds("A vs B")[1], k(Term, "vs"));
    }

    #[test]
    fn tags_and_headings() {
        assert_eq!(kinds("H1: CLINICAL-TRIAL OUTCOMES")[0], k(Tag, "H1:"));
        assert_eq!(kinds("CTX: PHASE-III; N=2400")[0], k(Tag, "CTX:"));
        assert_eq!(kinds("ADVERSE-EVENTS: X")[..2], [k(Term, "ADVERSE-EVENTS"), k(Punctuation, ":")]);
        assert_eq!(kinds("X PAST: Y")[1], k(Tag, "PAST:"));
    }

    #[test]
    fn scoped_quantities() {
        assert_eq!(
            kinds("FOLLOW-UP=18 MONTHS; LONG-TERM-EFFECTS UNKNOWN"),
            vec![k(Quantity, "FOLLOW-UP=18 MONTHS"), k(Punctuation, ";"), k(Term, "LONG-TERM-EFFECTS"), k(Term, "UNKNOWN")]
        );
        assert_eq!(kinds("AGE>65: MORTALITY↓31% (STRONGER-EFFECT)")[..2], [k(Quantity, "AGE>65"), k(Punctuation, ":")]);
        assert_eq!(kinds("CONF=0.92 FOR INTERACTION-EFFECT")[0], k(Quantity, "CONF=0.92"));
        assert_eq!(
            kinds("VELOCITY=DISTANCE/TIME"),
            vec![k(Term, "VELOCITY"), k(Symbol, "="), k(Term, "DISTANCE/TIME")]
        );
        assert_eq!(
            kinds("DEADLINE=30D-AFTER-NOTICE"),
            vec![k(Term, "DEADLINE"), k(Symbol, "="), k(Term, "30D-AFTER-NOTICE")]
        );
    }

    #[test]
    fn malformed_bracket_stays_a_term() {
        assert_eq!(kinds("X [X:12]"), vec![k(Term, "X"), k(Term, "[X:12]")]);
    }

    #[test]
    fn locators() {
        assert_eq!(kinds("SEE DOI:10.1000/182."), vec![k(Term, "SEE"), k(Citation, "DOI:10.1000/182"), k(Punctuation, ".")]);
        assert_eq!(kinds("https://example.org/x")[0].0, Citation);
    }

    #[test]
    fn spans_are_ordered_char_offsets() {
        let atoms = tokenize_line("A ∧ B").unwrap();
        let spans: Vec<_> = atoms.iter().map(|a| (a.span.start, a.span.end)).collect();
        assert_eq!(spans, [(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn bad_input() {
        assert_eq!(tokenize_line_bytes(b"AB\xffC"), Err(GrammarError::Encoding { offset: 2 }));
        assert_eq!(tokenize_line("A\nB"), Err(GrammarError::Newline { offset: 1 }));
    }
}
