//! Text normalization, tokenization and stop-word handling.
//!
//! Two splitting regimes coexist. Corpus text is tokenized aggressively on
//! every non-alphanumeric character, while candidate expansion phrases are
//! split only on space, underscore and dash.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Function words that every stop-word list must contain.
pub const REQUIRED_STOPWORDS: [&str; 13] = [
    "a", "an", "the", "of", "and", "or", "for", "in", "on", "to", "at", "by", "with",
];

const EXTENDED_STOPWORDS: [&str; 50] = [
    "about", "above", "after", "against", "among", "as", "be", "because", "before", "below",
    "between", "both", "but", "de", "del", "der", "des", "die", "du", "during", "each", "et",
    "from", "further", "her", "his", "into", "is", "it", "its", "la", "le", "les", "nor", "not",
    "off", "out", "over", "per", "so", "than", "that", "their", "these", "this", "through",
    "under", "until", "upon", "via",
];

/// Set of lowercase stop words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::from_words(EXTENDED_STOPWORDS.iter().copied())
    }
}

impl StopwordList {
    /// Builds a list from arbitrary words. The required core set is always
    /// merged in so the result is never missing basic function words.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set: BTreeSet<String> = REQUIRED_STOPWORDS.iter().map(|w| w.to_string()).collect();
        for w in words {
            let w = normalize(w.as_ref());
            if !w.is_empty() {
                set.insert(w);
            }
        }
        StopwordList { words: set }
    }

    /// Reads an override file with one word per line. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    /// The built-in list, or the file named by `ACRODIS_STOPWORDS` if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os("ACRODIS_STOPWORDS") {
            Some(p) if !p.is_empty() => Self::from_file(p),
            _ => Ok(Self::default()),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        if self.words.contains(word) {
            return true;
        }
        let n = normalize(word);
        self.words.contains(&n)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub is_stopword: bool,
}

fn fold(raw: &str) -> String {
    raw.nfkc().flat_map(char::to_lowercase).collect()
}

/// Lowercases, applies NFKC folding and collapses whitespace runs.
pub fn normalize(raw: &str) -> String {
    // Lowercasing can leave a string that NFKC would change again (and the
    // reverse), so iterate to a fixpoint. Two rounds suffice in practice.
    let mut cur = fold(raw);
    for _ in 0..4 {
        let next = fold(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized alphanumeric words of `text`, in order.
pub fn word_tokens(text: &str) -> Vec<String> {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn tokenize(text: &str, stopwords: &StopwordList) -> Vec<Token> {
    word_tokens(text)
        .into_iter()
        .map(|surface| Token {
            is_stopword: stopwords.contains(&surface),
            surface,
        })
        .collect()
}

/// Returns true for the three characters that separate words in an
/// expansion phrase.
pub fn is_phrase_separator(c: char) -> bool {
    matches!(c, ' ' | '_' | '-')
}

/// Splits an expansion phrase on space, underscore and dash only.
pub fn split_phrase_words(phrase: &str) -> Vec<&str> {
    phrase
        .split(is_phrase_separator)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}
