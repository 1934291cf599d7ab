use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Citation {
    AuthorYear { author: String, year: u16 },
    Doi { locator: String },
    Arxiv { locator: String },
    Url { locator: String },
}

impl fmt::Display for Citation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Citation::AuthorYear { author, year } => write!(f, "[{author}:{year}]"),
            Citation::Doi { locator } => write!(f, "DOI:{locator}"),
            Citation::Arxiv { locator } => write!(f, "ARXIV:{locator}"),
            Citation::Url { locator } => f.write_str(locator),
        }
    }
}

impl Citation {
    pub fn author_year(&self) -> Option<(&str, u16)> {
        match self {
            Citation::AuthorYear { author, year } => Some((author, *year)),
            _ => None,
        }
    }
}

fn valid_author(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || matches!(c, '-' | '\'' | '_' | '&'))
        && !s.ends_with('-')
}

fn url_scheme_len(s: &str) -> Option<usize> {
    let idx = s.find("://")?;
    let scheme = &s[..idx];
    let mut chars = scheme.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '.' | '-'));
    (ok && s.len() > idx + 3).then_some(idx)
}

/// Parses one citation fragment. Anything that is not exactly one of the
/// four citation shapes is a no-match.
pub fn parse_citation(text: &str) -> Option<Citation> {
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let (author, year) = inner.split_once(':')?;
        if !valid_author(author) || year.len() != 4 || !year.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        return Some(Citation::AuthorYear { author: author.to_string(), year: year.parse().ok()? });
    }
    if text.chars().any(char::is_whitespace) {
        return None;
    }
    let upper_prefix = |p: &str| {
        text.get(..p.len())
            .filter(|head| head.eq_ignore_ascii_case(p))
            .map(|_| &text[p.len()..])
            .filter(|rest| !rest.is_empty())
    };
    if let Some(loc) = upper_prefix("DOI:") {
        return Some(Citation::Doi { locator: loc.to_string() });
    }
    if let Some(loc) = upper_prefix("ARXIV:") {
        return Some(Citation::Arxiv { locator: loc.to_string() });
    }
    url_scheme_len(text).map(|_| Citation::Url { locator: text.to_string() })
}

/// Length (in chars) of a DOI/ARXIV/URL fragment starting at `start`, with
/// trailing sentence punctuation left out.
pub(crate) fn scan_locator(chars: &[char], start: usize) -> Option<(Citation, usize)> {
    let mut end = start;
    while end < chars.len() && !chars[end].is_whitespace() {
        end += 1;
    }
    while end > start && matches!(chars[end - 1], '.' | ',' | ';' | ')' | ':') {
        end -= 1;
    }
    let text: String = chars[start..end].iter().collect();
    let upper = text.to_ascii_uppercase();
    let looks_like = upper.starts_with("DOI:") || upper.starts_with("ARXIV:") || url_scheme_len(&text).is_some();
    if !looks_like {
        return None;
    }
    parse_citation(&text).map(|c| (c, end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn author_year() {
        assert_eq!(
            parse_citation("[JOHNSON:2023]"),
            Some(Citation::AuthorYear { author: "JOHNSON".into(), year: 2023 })
        );
        assert_eq!(
            parse_citation("[SMITH:2024]"),
            Some(Citation::AuthorYear { author: "SMITH".into(), year: 2024 })
        );
        assert_eq!(parse_citation("[SMITH:2024]").unwrap().to_string(), "[SMITH:2024]");
    }

    #[test]
    fn year_must_have_four_digits() {
        assert_eq!(parse_citation("[X:12]"), None);
        assert_eq!(parse_citation("[X:20245]"), None);
        assert_eq!(parse_citation("[smith:2024]"), None);
        assert_eq!(parse_citation("[SMITH 2024]"), None);
    }

    #[test]
    fn locators() {
        assert_eq!(parse_citation("DOI:10.1000/182"), Some(Citation::Doi { locator: "10.1000/182".into() }));
        assert_eq!(parse_citation("ARXIV:2401.01234"), Some(Citation::Arxiv { locator: "2401.01234".into() }));
        assert_eq!(
            parse_citation("https://example.org/a"),
            Some(Citation::Url { locator: "https://example.org/a".into() })
        );
        assert_eq!(parse_citation("DOI:"), None);
        assert_eq!(parse_citation("example.org"), None);
    }
}
