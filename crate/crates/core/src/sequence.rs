//! Alphabets, symbol sequences and the plain-text input format.
//!
//! Input text holds one sequence per non-empty line. In character mode every
//! non-whitespace character is a symbol; in token mode symbols are separated
//! by whitespace. Lines are independent: no word window ever spans two lines.

use std::collections::HashMap;
use std::fmt;

use crate::error::{CssrError, Result};

/// Index of a symbol within its [`Alphabet`].
pub type Symbol = u16;

/// A word over an alphabet, oldest symbol first.
pub type Word = Vec<Symbol>;

/// Finite ordered alphabet. The order is fixed at construction and is the
/// order used for CDFs, file output and probability vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(CssrError::DegenerateAlphabet("no symbols".into()));
        }
        if symbols.len() > Symbol::MAX as usize {
            return Err(CssrError::DegenerateAlphabet(format!(
                "{} symbols exceeds the supported maximum",
                symbols.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        let mut owned = Vec::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            let s = s.as_ref();
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '#' | ':')) {
                return Err(CssrError::DegenerateAlphabet(format!("invalid symbol {s:?}")));
            }
            if index.insert(s.to_string(), i as Symbol).is_some() {
                return Err(CssrError::DegenerateAlphabet(format!("duplicate symbol {s:?}")));
            }
            owned.push(s.to_string());
        }
        Ok(Alphabet { symbols: owned, index })
    }

    /// Alphabet of single characters, in the given order.
    pub fn from_chars(chars: &str) -> Result<Self> {
        let symbols: Vec<String> = chars.chars().map(|c| c.to_string()).collect();
        Self::new(&symbols)
    }

    /// Rejects the one-symbol alphabet, which cannot be used for inference.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(CssrError::DegenerateAlphabet(format!(
                "inference needs at least 2 symbols, got {}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, s: Symbol) -> &str {
        &self.symbols[s as usize]
    }

    pub fn index_of(&self, token: &str) -> Option<Symbol> {
        self.index.get(token).copied()
    }

    /// True when every symbol is a single character, so words can be
    /// rendered without separators.
    pub fn is_single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Parses a word written in this alphabet: concatenated characters for
    /// single-character alphabets, otherwise tokens separated by whitespace
    /// or commas. `-` is the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "-" || text == "ε" {
            return Ok(Vec::new());
        }
        if text.contains(',') {
            return text
                .split(',')
                .map(|t| self.index_of(t.trim()).ok_or_else(|| CssrError::UnknownSymbol(t.to_string())))
                .collect();
        }
        if self.is_single_char() && !text.contains(char::is_whitespace) {
            text.chars()
                .map(|c| {
                    let t = c.to_string();
                    self.index_of(&t).ok_or(CssrError::UnknownSymbol(t))
                })
                .collect()
        } else {
            text.split_whitespace()
                .map(|t| self.index_of(t).ok_or_else(|| CssrError::UnknownSymbol(t.to_string())))
                .collect()
        }
    }

    /// Renders a word; the empty word is written as `-`.
    pub fn render(&self, word: &[Symbol]) -> String {
        if word.is_empty() {
            return "-".to_string();
        }
        let sep = if self.is_single_char() { "" } else { " " };
        word.iter().map(|&s| self.symbol(s)).collect::<Vec<_>>().join(sep)
    }

    /// Renders a word as a single whitespace-free token (symbols joined by
    /// commas for multi-character alphabets).
    pub fn render_compact(&self, word: &[Symbol]) -> String {
        if word.is_empty() {
            return "-".to_string();
        }
        let sep = if self.is_single_char() { "" } else { "," };
        word.iter().map(|&s| self.symbol(s)).collect::<Vec<_>>().join(sep)
    }

    /// All words of length `len` in lexicographic order (first symbol most
    /// significant).
    pub fn words_of_length(&self, len: usize) -> Vec<Word> {
        let k = self.len();
        let total = k.checked_pow(len as u32).expect("word space overflow");
        let mut out = Vec::with_capacity(total);
        let mut current = vec![0 as Symbol; len];
        for _ in 0..total {
            out.push(current.clone());
            for pos in (0..len).rev() {
                current[pos] += 1;
                if (current[pos] as usize) < k {
                    break;
                }
                current[pos] = 0;
            }
        }
        out
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbols.join(" "))
    }
}

/// A sequence of alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolSequence {
    data: Vec<Symbol>,
}

impl SymbolSequence {
    pub fn new(data: Vec<Symbol>) -> Self {
        SymbolSequence { data }
    }

    /// Checks every element against the alphabet size.
    pub fn validated(data: Vec<Symbol>, alphabet: &Alphabet) -> Result<Self> {
        if let Some(&bad) = data.iter().find(|&&s| s as usize >= alphabet.len()) {
            return Err(CssrError::UnknownSymbol(format!("index {bad}")));
        }
        Ok(SymbolSequence { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.data
    }

    pub fn prefix(&self, n: usize) -> SymbolSequence {
        SymbolSequence { data: self.data[..n.min(self.data.len())].to_vec() }
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        let sep = if alphabet.is_single_char() { "" } else { " " };
        self.data.iter().map(|&s| alphabet.symbol(s)).collect::<Vec<_>>().join(sep)
    }
}

impl From<Vec<Symbol>> for SymbolSequence {
    fn from(data: Vec<Symbol>) -> Self {
        SymbolSequence { data }
    }
}

/// How symbols are delimited in input text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolMode {
    /// Every non-whitespace character is one symbol.
    #[default]
    Chars,
    /// Whitespace-separated tokens.
    Tokens,
}

fn tokenize(line: &str, mode: SymbolMode) -> Vec<String> {
    match mode {
        SymbolMode::Chars => line
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_string())
            .collect(),
        SymbolMode::Tokens => line.split_whitespace().map(str::to_string).collect(),
    }
}

/// Parses input text into independent sequences.
///
/// Without an explicit alphabet, the alphabet is the set of distinct symbols
/// in the data, sorted lexically.
pub fn parse_input(
    text: &str,
    mode: SymbolMode,
    alphabet: Option<&Alphabet>,
) -> Result<(Alphabet, Vec<SymbolSequence>)> {
    let lines: Vec<Vec<String>> = text
        .lines()
        .map(|l| tokenize(l, mode))
        .filter(|t| !t.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(CssrError::EmptySequence);
    }
    let alphabet = match alphabet {
        Some(a) => a.clone(),
        None => {
            let mut seen: Vec<&String> = Vec::new();
            for tok in lines.iter().flatten() {
                if !seen.contains(&tok) {
                    seen.push(tok);
                }
            }
            seen.sort();
            Alphabet::new(&seen)?
        }
    };
    let mut seqs = Vec::with_capacity(lines.len());
    for (lineno, toks) in lines.iter().enumerate() {
        let mut data = Vec::with_capacity(toks.len());
        for t in toks {
            match alphabet.index_of(t) {
                Some(s) => data.push(s),
                None => {
                    return Err(CssrError::Parse {
                        line: lineno + 1,
                        message: format!("symbol {t:?} not in alphabet {{{alphabet}}}"),
                    })
                }
            }
        }
        seqs.push(SymbolSequence::new(data));
    }
    Ok((alphabet, seqs))
}
