//! Operator and tag vocabularies.
//!
//! Both registries are loaded from JSON so that extra symbols or tags can be
//! shipped as data. The built-in tables are embedded from `assets/`.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::GrammarError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolCategory {
    Definitional,
    Causal,
    Logical,
    Comparative,
    Contrast,
    Trend,
}

/// One operator of the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolKind {
    pub id: String,
    /// Canonical spelling, emitted by the renderer.
    pub glyph: String,
    /// Accepted input spellings, normalized to `glyph` on render.
    #[serde(default)]
    pub aliases: Vec<String>,
    pub category: SymbolCategory,
    #[serde(default)]
    pub meaning: String,
    /// The aliases only count when immediately followed by an operand
    /// (so that `!` at the end of a word stays punctuation).
    #[serde(default)]
    pub alias_needs_operand: bool,
}

impl SymbolKind {
    /// Alphabetic glyphs such as `VS` only lex as symbols when they stand
    /// alone between whitespace.
    pub fn is_word(&self) -> bool {
        self.glyph.chars().all(|c| c.is_alphabetic())
    }
}

/// A spelling the lexer should try, with the symbol it resolves to.
#[derive(Debug, Clone)]
pub(crate) struct Spelling {
    pub text: Vec<char>,
    pub symbol: usize,
    pub is_alias: bool,
}

#[derive(Debug, Clone)]
pub struct SymbolRegistry {
    symbols: Vec<SymbolKind>,
    /// Longest first so that `!=` wins over `!` and `=>` over `=`.
    spellings: Vec<Spelling>,
    glyph_starts: Vec<char>,
}

impl SymbolRegistry {
    pub fn from_json(json: &str) -> Result<Self, GrammarError> {
        let symbols: Vec<SymbolKind> =
            serde_json::from_str(json).map_err(|e| GrammarError::Vocabulary(e.to_string()))?;
        Self::new(symbols)
    }

    pub fn new(symbols: Vec<SymbolKind>) -> Result<Self, GrammarError> {
        let mut seen = HashSet::new();
        let mut spellings = Vec::new();
        for (idx, sym) in symbols.iter().enumerate() {
            if sym.glyph.is_empty() {
                return Err(GrammarError::Vocabulary(format!("symbol {} has an empty glyph", sym.id)));
            }
            for (text, is_alias) in std::iter::once((&sym.glyph, false))
                .chain(sym.aliases.iter().map(|a| (a, true)))
            {
                if !seen.insert(text.clone()) {
                    return Err(GrammarError::Vocabulary(format!(
                        "spelling {text:?} is claimed by more than one symbol"
                    )));
                }
                spellings.push(Spelling { text: text.chars().collect(), symbol: idx, is_alias });
            }
        }
        spellings.sort_by_key(|s| std::cmp::Reverse(s.text.len()));
        let mut glyph_starts: Vec<char> =
            symbols.iter().filter(|s| !s.is_word()).filter_map(|s| s.glyph.chars().next()).collect();
        glyph_starts.sort_unstable();
        glyph_starts.dedup();
        Ok(Self { symbols, spellings, glyph_starts })
    }

    /// The shipped vocabulary.
    pub fn builtin() -> &'static SymbolRegistry {
        static REGISTRY: OnceLock<SymbolRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            SymbolRegistry::from_json(include_str!("../../assets/symbols.json"))
                .expect("embedded symbol table is valid")
        })
    }

    pub fn symbols(&self) -> &[SymbolKind] {
        &self.symbols
    }

    pub fn get(&self, id: &str) -> Option<&SymbolKind> {
        self.symbols.iter().find(|s| s.id == id)
    }

    pub fn by_glyph(&self, glyph: &str) -> Option<&SymbolKind> {
        self.symbols.iter().find(|s| s.glyph == glyph)
    }

    /// Resolves an input spelling (glyph or alias) to its symbol.
    pub fn resolve(&self, spelling: &str) -> Option<&SymbolKind> {
        self.spellings
            .iter()
            .find(|s| s.text.iter().copied().eq(spelling.chars()))
            .map(|s| &self.symbols[s.symbol])
    }

    pub(crate) fn spellings(&self) -> &[Spelling] {
        &self.spellings
    }

    pub(crate) fn symbol_at(&self, idx: usize) -> &SymbolKind {
        &self.symbols[idx]
    }

    /// True if `c` is the first char of some non-word glyph.
    pub fn is_glyph_char(&self, c: char) -> bool {
        self.glyph_starts.binary_search(&c).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagFamily {
    Temporal,
    Modality,
    Role,
    Scope,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagKind {
    pub id: String,
    pub surface: String,
    pub family: TagFamily,
}

impl TagKind {
    /// Valued tags (`CONF=`) carry their value inline and are lexed as
    /// quantities.
    pub fn is_valued(&self) -> bool {
        self.surface.ends_with('=')
    }

    pub fn name(&self) -> &str {
        self.surface.trim_end_matches([':', '='])
    }

    pub fn heading_level(&self) -> Option<u8> {
        match self.id.as_str() {
            "h1" => Some(1),
            "h2" => Some(2),
            "h3" => Some(3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TagRegistry {
    tags: Vec<TagKind>,
}

impl TagRegistry {
    pub fn from_json(json: &str) -> Result<Self, GrammarError> {
        let tags: Vec<TagKind> =
            serde_json::from_str(json).map_err(|e| GrammarError::Vocabulary(e.to_string()))?;
        let mut seen = HashSet::new();
        for t in &tags {
            if !(t.surface.ends_with(':') || t.is_valued()) {
                return Err(GrammarError::Vocabulary(format!(
                    "tag surface {:?} must end with ':' or '='",
                    t.surface
                )));
            }
            if !seen.insert(t.surface.clone()) {
                return Err(GrammarError::Vocabulary(format!("duplicate tag {:?}", t.surface)));
            }
        }
        Ok(Self { tags })
    }

    pub fn builtin() -> &'static TagRegistry {
        static REGISTRY: OnceLock<TagRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            TagRegistry::from_json(include_str!("../../assets/tags.json"))
                .expect("embedded tag table is valid")
        })
    }

    pub fn tags(&self) -> &[TagKind] {
        &self.tags
    }

    pub fn get(&self, id: &str) -> Option<&TagKind> {
        self.tags.iter().find(|t| t.id == id)
    }

    /// Looks up a `NAME:` surface. Valued tags never match here.
    pub fn by_surface(&self, surface: &str) -> Option<&TagKind> {
        self.tags.iter().find(|t| !t.is_valued() && t.surface == surface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_printed_inventory() {
        let reg = SymbolRegistry::builtin();
        let glyphs: Vec<_> = reg.symbols().iter().map(|s| s.glyph.as_str()).collect();
        assert_eq!(glyphs, ["=", "→", "⇒", "∴", "∵", "↑", "↓", "∧", "∨", "¬", "≈", "≠", "VS"]);
        assert_eq!(reg.by_glyph("→").unwrap().glyph, "\u{2192}");
        assert_eq!(reg.by_glyph("⇒").unwrap().glyph, "\u{21D2}");
        assert_eq!(reg.by_glyph("¬").unwrap().glyph, "\u{00AC}");
        assert_eq!(reg.by_glyph("≠").unwrap().glyph, "\u{2260}");
    }

    #[test]
    fn aliases_resolve_to_one_glyph() {
        let reg = SymbolRegistry::builtin();
        for (alias, glyph) in [("->", "→"), ("=>", "⇒"), ("&&", "∧"), ("^", "∧"), ("!=", "≠"), ("~=", "≈"), ("!", "¬")] {
            assert_eq!(reg.resolve(alias).unwrap().glyph, glyph, "{alias}");
        }
        assert!(reg.resolve("||").is_none());
    }

    #[test]
    fn duplicate_spelling_is_rejected() {
        let json = r#"[{"id":"a","glyph":"→","category":"causal"},{"id":"b","glyph":"⇒","aliases":["→"],"category":"logical"}]"#;
        assert!(SymbolRegistry::from_json(json).is_err());
    }

    #[test]
    fn extra_symbols_load_from_data() {
        let json = r#"[{"id":"iff","glyph":"⇔","aliases":["<=>"],"category":"logical"}]"#;
        let reg = SymbolRegistry::from_json(json).unwrap();
        assert_eq!(reg.resolve("<=>").unwrap().id, "iff");
    }

    #[test]
    fn tag_surfaces() {
        let tags = TagRegistry::builtin();
        assert_eq!(tags.by_surface("CTX:").unwrap().family, TagFamily::Scope);
        assert_eq!(tags.by_surface("H2:").unwrap().heading_level(), Some(2));
        assert!(tags.by_surface("CONF=").is_none());
        assert!(tags.get("conf").unwrap().is_valued());
    }
}
