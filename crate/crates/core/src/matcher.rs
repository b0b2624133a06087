//! Rule-based acronym expansion matching.
//!
//! A phrase expands an acronym when the acronym letters, in order, are the
//! initials of distinct phrase words (case-insensitive), every other word is
//! a stop word, and the phrase is not just the acronym repeated. Words are
//! separated by space, underscore or dash.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AcronymRecord, ContextWindow, Document, ExpansionEntry};
use crate::error::{Error, Result};
use crate::textproc::{is_phrase_separator, normalize, split_phrase_words, StopwordList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRuleConfig {
    pub allow_stopword_skips: bool,
    pub max_candidate_words: usize,
}

impl MatchRuleConfig {
    /// Default rules for `acronym`: stop-word skipping on, at most two words
    /// per acronym letter.
    pub fn for_acronym(acronym: &str) -> Self {
        MatchRuleConfig {
            allow_stopword_skips: true,
            max_candidate_words: 2 * acronym_letters(acronym).len(),
        }
    }
}

/// One matched expansion span inside a document. Offsets are in chars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionOccurrence {
    pub expansion: String,
    pub doc_id: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// Canonical acronym form: uppercase letters and digits only.
pub fn normalize_acronym(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_uppercase)
        .collect()
}

/// Lowercased acronym characters used for initial-letter comparisons.
fn acronym_letters(acronym: &str) -> Vec<char> {
    acronym
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn initial(word: &str) -> Option<char> {
    word.chars().next().and_then(|c| c.to_lowercase().next())
}

/// Word-level view used by the assignment search.
struct WordInfo {
    initial: Option<char>,
    stop: bool,
}

fn word_infos(words: &[&str], stopwords: &StopwordList) -> Vec<WordInfo> {
    words
        .iter()
        .map(|w| WordInfo {
            initial: initial(w),
            stop: stopwords.contains(w),
        })
        .collect()
}

/// Does an assignment of `letters` onto `words` exist? With `anchored`, the
/// first and last words must both be consumed by letters.
fn assignment_exists(letters: &[char], words: &[WordInfo], skips: bool, anchored: bool) -> bool {
    let (n, m) = (letters.len(), words.len());
    if n == 0 || m < n {
        return false;
    }
    if anchored {
        let first_ok = words[0].initial == Some(letters[0]);
        let last_ok = words[m - 1].initial == Some(letters[n - 1]);
        if !first_ok || !last_ok {
            return false;
        }
        return match (n, m) {
            (1, 1) => true,
            (1, _) | (_, 1) => false,
            _ => assignment_exists_free(&letters[1..n - 1], &words[1..m - 1], skips),
        };
    }
    assignment_exists_free(letters, words, skips)
}

fn assignment_exists_free(letters: &[char], words: &[WordInfo], skips: bool) -> bool {
    let n = letters.len();
    // reach[i] after processing j words: first i letters consumed by words[..j]
    let mut reach = vec![false; n + 1];
    reach[0] = true;
    for w in words {
        for i in (0..=n).rev() {
            let consume = i > 0 && reach[i - 1] && w.initial == Some(letters[i - 1]);
            let skip = skips && w.stop && reach[i];
            reach[i] = consume || skip;
        }
    }
    reach[n]
}

pub fn matches_expansion(
    acronym: &str,
    phrase: &str,
    stopwords: &StopwordList,
    cfg: &MatchRuleConfig,
) -> bool {
    let letters = acronym_letters(acronym);
    let words = split_phrase_words(phrase);
    if letters.is_empty() || words.is_empty() || words.len() > cfg.max_candidate_words {
        return false;
    }
    if words.len() == 1 && normalize(words[0]) == letters.iter().collect::<String>() {
        return false;
    }
    let infos = word_infos(&words, stopwords);
    assignment_exists(&letters, &infos, cfg.allow_stopword_skips, false)
}

/// A maximal alphanumeric run in a document, with char offsets.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    end: usize,
}

fn alnum_spans(chars: &[char]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            spans.push(Span { start, end: i });
        } else {
            i += 1;
        }
    }
    spans
}

fn find_in_document(
    letters: &[char],
    acronym_norm: &str,
    doc: &Document,
    stopwords: &StopwordList,
    cfg: &MatchRuleConfig,
) -> Vec<ExpansionOccurrence> {
    let chars: Vec<char> = doc.body.chars().collect();
    let spans = alnum_spans(&chars);
    let text = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
    let infos: Vec<WordInfo> = spans
        .iter()
        .map(|s| {
            let w = text(s.start, s.end);
            WordInfo {
                initial: initial(&w),
                stop: stopwords.contains(&w),
            }
        })
        .collect();
    // joinable[i]: spans i and i+1 are separated only by phrase separators
    let joinable: Vec<bool> = spans
        .windows(2)
        .map(|p| chars[p[0].end..p[1].start].iter().all(|&c| is_phrase_separator(c)))
        .collect();

    let mut out = Vec::new();
    for start in 0..spans.len() {
        if infos[start].initial != letters.first().copied() {
            continue;
        }
        let mut best = None;
        let mut end = start;
        loop {
            let len = end - start + 1;
            if len > cfg.max_candidate_words {
                break;
            }
            let window = &infos[start..=end];
            if assignment_exists(letters, window, cfg.allow_stopword_skips, true) {
                let single_self = len == 1
                    && normalize(&text(spans[start].start, spans[end].end)) == acronym_norm;
                if !single_self {
                    best = Some(end);
                }
            }
            if end + 1 >= spans.len() || !joinable[end] {
                break;
            }
            end += 1;
        }
        if let Some(end) = best {
            let (a, b) = (spans[start].start, spans[end].end);
            out.push(ExpansionOccurrence {
                expansion: text(a, b),
                doc_id: doc.doc_id.clone(),
                char_start: a,
                char_end: b,
            });
        }
    }
    out
}

/// Scans `corpus` for expansion spans of `acronym`.
///
/// At each word position the longest matching span whose first and last
/// words both carry acronym letters is reported, so leading or trailing
/// stop words ("the World Health Organization") are never included.
/// Results are ordered by `(doc_id, char_start)`.
pub fn find_expansions(
    acronym: &str,
    corpus: &[Document],
    stopwords: &StopwordList,
    cfg: &MatchRuleConfig,
) -> Vec<ExpansionOccurrence> {
    let letters = acronym_letters(acronym);
    if letters.is_empty() {
        return Vec::new();
    }
    let acronym_norm: String = letters.iter().collect();
    let mut out: Vec<ExpansionOccurrence> = corpus
        .par_iter()
        .flat_map_iter(|doc| find_in_document(&letters, &acronym_norm, doc, stopwords, cfg))
        .collect();
    out.sort_by(|a, b| {
        a.doc_id
            .cmp(&b.doc_id)
            .then(a.char_start.cmp(&b.char_start))
    });
    out
}

/// Context harvesting bounds, in chars on each side of an occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestConfig {
    pub before_chars: usize,
    pub after_chars: usize,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            before_chars: 1000,
            after_chars: 1000,
        }
    }
}

impl HarvestConfig {
    /// Splits a total context budget evenly around the occurrence.
    pub fn symmetric(total_chars: usize) -> Self {
        HarvestConfig {
            before_chars: total_chars / 2,
            after_chars: total_chars - total_chars / 2,
        }
    }
}

/// Char range of the context window around `[start, end)`, pulled inward so
/// no whitespace-delimited word is cut.
pub fn window_bounds(
    chars: &[char],
    start: usize,
    end: usize,
    cfg: &HarvestConfig,
) -> (usize, usize) {
    let len = chars.len();
    let mut lo = start.saturating_sub(cfg.before_chars);
    let mut hi = (end + cfg.after_chars).min(len);
    let ws = |i: usize| chars[i].is_whitespace();

    if lo > 0 && lo < start && !ws(lo - 1) && !ws(lo) {
        while lo < start && !ws(lo) {
            lo += 1;
        }
        while lo < start && ws(lo) {
            lo += 1;
        }
    }
    if hi < len && hi > end && !ws(hi - 1) && !ws(hi) {
        while hi > end && !ws(hi - 1) {
            hi -= 1;
        }
        while hi > end && ws(hi - 1) {
            hi -= 1;
        }
    }
    (lo, hi)
}

/// Builds an [`AcronymRecord`] from occurrences by cutting a context window
/// around each one. Expansions are grouped by their normalized form; the
/// first surface form seen names the entry. Repeated windows are kept.
pub fn harvest_contexts(
    acronym: &str,
    occurrences: &[ExpansionOccurrence],
    corpus: &[Document],
    cfg: &HarvestConfig,
) -> Result<AcronymRecord> {
    let docs: HashMap<&str, &Document> = corpus.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut char_cache: BTreeMap<&str, Vec<char>> = BTreeMap::new();
    let mut entries: Vec<ExpansionEntry> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();

    for occ in occurrences {
        let doc = docs
            .get(occ.doc_id.as_str())
            .ok_or_else(|| Error::UnknownDoc(occ.doc_id.clone()))?;
        let chars = char_cache
            .entry(doc.doc_id.as_str())
            .or_insert_with(|| doc.body.chars().collect());
        if occ.char_start >= occ.char_end || occ.char_end > chars.len() {
            return Err(Error::Invariant(format!(
                "occurrence [{}, {}) outside document {:?} of length {}",
                occ.char_start,
                occ.char_end,
                occ.doc_id,
                chars.len()
            )));
        }
        let (lo, hi) = window_bounds(chars, occ.char_start, occ.char_end, cfg);
        let window = ContextWindow {
            text: chars[lo..hi].iter().collect(),
            source_doc_id: occ.doc_id.clone(),
            char_start: lo,
            char_end: hi,
        };
        let key = normalize(&occ.expansion);
        let idx = *by_key.entry(key).or_insert_with(|| {
            entries.push(ExpansionEntry {
                expansion: occ.expansion.clone(),
                contexts: Vec::new(),
            });
            entries.len() - 1
        });
        entries[idx].contexts.push(window);
    }

    Ok(AcronymRecord {
        acronym: normalize_acronym(acronym),
        entries,
    })
}
