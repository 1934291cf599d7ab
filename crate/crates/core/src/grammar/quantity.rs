//! Numeric atoms: `VAR=VALUEUNIT`, signed percentages, frames such as
//! `Y/Y+5%`, currency amounts and p-values.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Approx,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Comparator {
    pub fn glyph(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Approx => "≈",
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "≤",
            Comparator::Ge => "≥",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    #[serde(rename = "Y/Y")]
    YearOverYear,
    #[serde(rename = "Q/Q")]
    QuarterOverQuarter,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::YearOverYear => "Y/Y",
            Frame::QuarterOverQuarter => "Q/Q",
        }
    }
}

/// A parsed quantity. `magnitude` holds the source digits verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quantity {
    pub raw: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub variable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub comparator: Option<Comparator>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frame: Option<Frame>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sign: Option<Sign>,
    /// Currency code or symbol written before the number (`USD10M`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub currency: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub currency_spaced: bool,
    pub magnitude: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unit_spaced: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Quantity {
    /// Canonical spelling: comparator aliases and the Unicode minus are
    /// normalized, everything else (digits, spacing of units) is kept.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    pub fn magnitude_value(&self) -> f64 {
        let v: f64 = self.magnitude.parse().unwrap_or(f64::NAN);
        match self.sign {
            Some(Sign::Minus) => -v,
            _ => v,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = &self.variable {
            f.write_str(v)?;
        }
        if let Some(c) = self.comparator {
            f.write_str(c.glyph())?;
        }
        if let Some(fr) = self.frame {
            f.write_str(fr.as_str())?;
        }
        match self.sign {
            Some(Sign::Plus) => f.write_str("+")?,
            Some(Sign::Minus) => f.write_str("-")?,
            None => {}
        }
        if let Some(c) = &self.currency {
            f.write_str(c)?;
            if self.currency_spaced {
                f.write_str(" ")?;
            }
        }
        f.write_str(&self.magnitude)?;
        if let Some(u) = &self.unit {
            if self.unit_spaced {
                f.write_str(" ")?;
            }
            f.write_str(u)?;
        }
        Ok(())
    }
}

const CURRENCY_CODES: &[&str] = &[
    "USD", "EUR", "GBP", "JPY", "CNY", "CHF", "CAD", "AUD", "INR", "KRW", "BRL", "SEK", "NOK", "HKD", "SGD",
];
const CURRENCY_SIGNS: &[char] = &['$', '€', '£', '¥'];

/// Units that may follow the number after a single space.
const SPACED_UNITS: &[&str] = &[
    "%", "PT", "PP", "D", "K", "M", "B", "BN", "MN", "TN", "DAY", "DAYS", "WEEK", "WEEKS", "MONTH", "MONTHS",
    "YEAR", "YEARS", "YR", "YRS", "HOUR", "HOURS", "HR", "HRS", "MIN", "MINS", "MINUTES", "SEC", "SECONDS",
    "MS", "MG", "KG", "G", "KM", "CM", "MM", "ML", "L", "PERCENT",
];

/// Cursor over a char slice shared by the quantity and citation scanners.
pub(crate) struct Scan<'a> {
    pub chars: &'a [char],
    pub pos: usize,
}

impl<'a> Scan<'a> {
    pub fn new(chars: &'a [char], pos: usize) -> Self {
        Self { chars, pos }
    }

    pub fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    pub fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.chars.get(self.pos + k) == Some(&c))
    }

    pub fn take_while(&mut self, mut f: impl FnMut(char) -> bool) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

fn scan_number(s: &mut Scan<'_>) -> Option<String> {
    if !s.peek().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut out = s.take_while(|c| c.is_ascii_digit());
    if s.peek() == Some('.') && s.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        s.pos += 1;
        out.push('.');
        out.push_str(&s.take_while(|c| c.is_ascii_digit()));
    }
    Some(out)
}

fn scan_sign(s: &mut Scan<'_>) -> Option<Sign> {
    let sign = match s.peek()? {
        '+' => Sign::Plus,
        '-' | '\u{2212}' => Sign::Minus,
        _ => return None,
    };
    if !s.peek_at(1).is_some_and(|c| c.is_ascii_digit() || CURRENCY_SIGNS.contains(&c)) {
        return None;
    }
    s.pos += 1;
    Some(sign)
}

fn scan_comparator(s: &mut Scan<'_>) -> Option<Comparator> {
    for (text, cmp) in [
        ("~=", Comparator::Approx),
        ("<=", Comparator::Le),
        (">=", Comparator::Ge),
        ("=", Comparator::Eq),
        ("≈", Comparator::Approx),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
        ("≤", Comparator::Le),
        ("≥", Comparator::Ge),
    ] {
        if s.starts_with(text) {
            // `=>` is the implication alias, not `=` followed by `>`.
            if text == "=" && s.peek_at(1) == Some('>') {
                return None;
            }
            s.pos += text.chars().count();
            return Some(cmp);
        }
    }
    None
}

fn scan_variable(s: &mut Scan<'_>) -> Option<String> {
    if !s.peek().is_some_and(|c| c.is_alphabetic()) {
        return None;
    }
    let start = s.pos;
    let mut v = s.take_while(|c| c.is_alphanumeric() || c == '-' || c == '_');
    while v.ends_with('-') {
        v.pop();
        s.pos -= 1;
    }
    if v.is_empty() {
        s.pos = start;
        return None;
    }
    Some(v)
}

fn scan_currency(s: &mut Scan<'_>) -> Option<(String, bool)> {
    let start = s.pos;
    let code = if let Some(c) = s.peek().filter(|c| CURRENCY_SIGNS.contains(c)) {
        s.pos += 1;
        c.to_string()
    } else {
        let code: String = s.chars[s.pos..].iter().take(3).collect();
        if !CURRENCY_CODES.contains(&code.as_str()) {
            return None;
        }
        s.pos += 3;
        code
    };
    if s.peek().is_some_and(|c| c.is_ascii_digit()) {
        return Some((code, false));
    }
    if s.peek() == Some(' ') && s.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        s.pos += 1;
        return Some((code, true));
    }
    s.pos = start;
    None
}

fn is_unit_char(c: char) -> bool {
    c.is_alphabetic() || matches!(c, 'µ' | '°' | 'Ω')
}

/// Attached unit directly after the digits: `%`, `PT`, `M`, `MG/DL`.
fn scan_attached_unit(s: &mut Scan<'_>) -> Option<String> {
    if s.peek() == Some('%') {
        s.pos += 1;
        return Some("%".into());
    }
    if !s.peek().is_some_and(is_unit_char) {
        return None;
    }
    let mut unit = s.take_while(is_unit_char);
    if s.peek() == Some('/') && s.peek_at(1).is_some_and(is_unit_char) {
        s.pos += 1;
        unit.push('/');
        unit.push_str(&s.take_while(is_unit_char));
    }
    Some(unit)
}

fn scan_spaced_unit(s: &mut Scan<'_>, boundary: &dyn Fn(usize) -> bool) -> Option<String> {
    if s.peek() != Some(' ') {
        return None;
    }
    let start = s.pos;
    s.pos += 1;
    let word = if s.peek() == Some('%') {
        s.pos += 1;
        "%".to_string()
    } else {
        s.take_while(is_unit_char)
    };
    if !word.is_empty() && SPACED_UNITS.contains(&word.to_uppercase().as_str()) && boundary(s.pos) {
        return Some(word);
    }
    s.pos = start;
    None
}

/// Tries to read a quantity starting at `start`. `boundary(j)` reports
/// whether a quantity may end right before char `j`.
pub(crate) fn scan_quantity(
    chars: &[char],
    start: usize,
    boundary: &dyn Fn(usize) -> bool,
) -> Option<(Quantity, usize)> {
    scan_framed(chars, start, boundary).or_else(|| scan_plain(chars, start, boundary))
}

fn scan_framed(chars: &[char], start: usize, boundary: &dyn Fn(usize) -> bool) -> Option<(Quantity, usize)> {
    let mut s = Scan::new(chars, start);
    let frame = if s.starts_with("Y/Y") {
        Frame::YearOverYear
    } else if s.starts_with("Q/Q") {
        Frame::QuarterOverQuarter
    } else {
        return None;
    };
    s.pos += 3;
    let sign = scan_sign(&mut s)?;
    let magnitude = scan_number(&mut s)?;
    let (unit, unit_spaced) = match scan_attached_unit(&mut s) {
        Some(u) => (u, false),
        None => (scan_spaced_unit(&mut s, boundary)?, true),
    };
    if !(unit == "%" || unit.eq_ignore_ascii_case("PT") || unit.eq_ignore_ascii_case("PP")) || !boundary(s.pos) {
        return None;
    }
    let q = Quantity {
        raw: chars[start..s.pos].iter().collect(),
        variable: None,
        comparator: None,
        frame: Some(frame),
        sign: Some(sign),
        currency: None,
        currency_spaced: false,
        magnitude,
        unit: Some(unit),
        unit_spaced,
    };
    Some((q, s.pos))
}

fn scan_plain(chars: &[char], start: usize, boundary: &dyn Fn(usize) -> bool) -> Option<(Quantity, usize)> {
    let mut s = Scan::new(chars, start);
    let mut variable = None;
    let mut comparator = None;
    if let Some(v) = scan_variable(&mut s) {
        match scan_comparator(&mut s) {
            Some(c) => {
                variable = Some(v);
                comparator = Some(c);
            }
            None => s.pos = start,
        }
    }
    if variable.is_none() {
        comparator = match scan_comparator(&mut s) {
            Some(Comparator::Eq) => {
                s.pos = start;
                None
            }
            other => other,
        };
    }
    let sign = scan_sign(&mut s);
    let currency = scan_currency(&mut s);
    let magnitude = scan_number(&mut s)?;
    let num_end = s.pos;
    let mut unit = None;
    let mut unit_spaced = false;
    if let Some(u) = scan_attached_unit(&mut s) {
        if !boundary(s.pos) {
            return None;
        }
        unit = Some(u);
    } else if let Some(u) = scan_spaced_unit(&mut s, boundary) {
        unit = Some(u);
        unit_spaced = true;
    } else if !boundary(num_end) {
        return None;
    }
    // A bare number is not a quantity; it needs a variable, comparator,
    // sign, currency or unit to carry meaning.
    if variable.is_none() && comparator.is_none() && currency.is_none() && unit.is_none() {
        return None;
    }
    if variable.is_none() && comparator.is_none() && sign.is_some() && unit.is_none() && currency.is_none() {
        return None;
    }
    let (currency, currency_spaced) = match currency {
        Some((c, sp)) => (Some(c), sp),
        None => (None, false),
    };
    let q = Quantity {
        raw: chars[start..s.pos].iter().collect(),
        variable,
        comparator,
        frame: None,
        sign,
        currency,
        currency_spaced,
        magnitude,
        unit,
        unit_spaced,
    };
    Some((q, s.pos))
}

/// Parses `text` as a single quantity, or `None` when it is something else.
pub fn parse_quantity(text: &str) -> Option<Quantity> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let end_only = move |j: usize| j == n;
    match scan_quantity(&chars, 0, &end_only) {
        Some((q, end)) if end == n => Some(q),
        _ => None,
    }
}

/// Signed percentage or point change glued to the end of a term,
/// e.g. the `+27.5%` in `EARLY-DETECTION+27.5%`.
pub(crate) fn scan_signed_change(
    chars: &[char],
    start: usize,
    boundary: &dyn Fn(usize) -> bool,
) -> Option<(Quantity, usize)> {
    let mut s = Scan::new(chars, start);
    let sign = scan_sign(&mut s)?;
    let magnitude = scan_number(&mut s)?;
    let (unit, unit_spaced) = match scan_attached_unit(&mut s) {
        Some(u) => (u, false),
        None => (scan_spaced_unit(&mut s, boundary)?, true),
    };
    if !(unit == "%" || unit.eq_ignore_ascii_case("PT") || unit.eq_ignore_ascii_case("PP")) || !boundary(s.pos) {
        return None;
    }
    let q = Quantity {
        raw: chars[start..s.pos].iter().collect(),
        variable: None,
        comparator: None,
        frame: None,
        sign: Some(sign),
        currency: None,
        currency_spaced: false,
        magnitude,
        unit: Some(unit),
        unit_spaced,
    };
    Some((q, s.pos))
}
