//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use acrodis::embed::{Mode, Params};
use acrodis::matcher::{matches_expansion, ExpansionOccurrence, MatchRuleConfig};
use acrodis::{Document, StopwordList};

/// Brute-force expansion scan: every window of adjacent words joined only by
/// space, underscore or dash is tested with `matches_expansion`; windows
/// whose outer words do not both carry an acronym letter are dropped; the
/// longest surviving window at each start is reported.
pub fn brute_force_expansions(
    acronym: &str,
    corpus: &[Document],
    stopwords: &StopwordList,
    cfg: &MatchRuleConfig,
) -> Vec<ExpansionOccurrence> {
    let letters: Vec<char> = acronym
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    let mut out = Vec::new();
    for doc in corpus {
        let chars: Vec<char> = doc.body.chars().collect();
        let mut words: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_alphanumeric() {
                let s = i;
                while i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                }
                words.push((s, i));
            } else {
                i += 1;
            }
        }
        for start in 0..words.len() {
            let mut best = None;
            for end in start..words.len() {
                if end > start {
                    let gap = &chars[words[end - 1].1..words[end].0];
                    if !gap.iter().all(|&c| c == ' ' || c == '_' || c == '-') {
                        break;
                    }
                }
                let phrase: String = chars[words[start].0..words[end].1].iter().collect();
                let ws: Vec<String> = words[start..=end]
                    .iter()
                    .map(|&(a, b)| chars[a..b].iter().collect())
                    .collect();
                if matches_expansion(acronym, &phrase, stopwords, cfg)
                    && anchored(&letters, &ws, stopwords, cfg.allow_stopword_skips)
                {
                    best = Some((words[start].0, words[end].1, phrase));
                }
            }
            if let Some((a, b, phrase)) = best {
                out.push(ExpansionOccurrence {
                    expansion: phrase,
                    doc_id: doc.doc_id.clone(),
                    char_start: a,
                    char_end: b,
                });
            }
        }
    }
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.char_start.cmp(&b.char_start)));
    out
}

/// Enumerates every increasing choice of word positions for the letters and
/// accepts one that uses the first and last word and leaves only stop words
/// unused.
fn anchored(letters: &[char], words: &[String], stopwords: &StopwordList, skips: bool) -> bool {
    fn go(
        letters: &[char],
        words: &[String],
        li: usize,
        from: usize,
        chosen: &mut Vec<usize>,
        ok: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if li == letters.len() {
            return ok(chosen);
        }
        for w in from..words.len() {
            let init = words[w].chars().next().and_then(|c| c.to_lowercase().next());
            if init == Some(letters[li]) {
                chosen.push(w);
                if go(letters, words, li + 1, w + 1, chosen, ok) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let m = words.len();
    let ok = |chosen: &[usize]| {
        chosen.first() == Some(&0)
            && chosen.last() == Some(&(m - 1))
            && (0..m)
                .filter(|w| !chosen.contains(w))
                .all(|w| skips && stopwords.contains(&words[w]))
    };
    go(letters, words, 0, 0, &mut Vec::new(), &ok)
}

/// Matched character count by recursive longest common substring, found
/// with the classic suffix-length table. Ties go to the earliest start in
/// `a`, then in `b`.
pub fn ratcliff_matches(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (n, m) = (a.len(), b.len());
    let mut table = vec![vec![0usize; m + 1]; n + 1];
    let (mut best, mut bi, mut bj) = (0usize, 0usize, 0usize);
    for i in 1..=n {
        for j in 1..=m {
            if a[i - 1] == b[j - 1] {
                table[i][j] = table[i - 1][j - 1] + 1;
            }
        }
    }
    for i in 1..=n {
        for j in 1..=m {
            let l = table[i][j];
            if l == 0 {
                continue;
            }
            let (si, sj) = (i - l, j - l);
            if l > best || (l == best && (si < bi || (si == bi && sj < bj))) {
                best = l;
                bi = si;
                bj = sj;
            }
        }
    }
    if best == 0 {
        return 0;
    }
    best + ratcliff_matches(&a[..bi], &b[..bj])
        + ratcliff_matches(&a[bi + best..], &b[bj + best..])
}

pub fn ratcliff_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * ratcliff_matches(&a, &b) as f64 / (a.len() + b.len()) as f64
}

/// Hidden layer written out directly: PV-DM averages the document vector
/// with the context word vectors, PV-DBOW uses the document vector alone.
pub fn hidden(p: &Params<f64>, mode: Mode, doc: usize, context: &[u32]) -> Vec<f64> {
    let dim = p.doc_vectors.cols();
    let mut h: Vec<f64> = p.doc_vectors.row(doc).to_vec();
    if mode == Mode::Dm {
        for &w in context {
            for k in 0..dim {
                h[k] += p.word_vectors.row(w as usize)[k];
            }
        }
        let n = (context.len() + 1) as f64;
        for x in h.iter_mut() {
            *x /= n;
        }
    }
    h
}

/// `-ln p(target | context, doc)` under the full softmax.
pub fn position_loss(p: &Params<f64>, mode: Mode, doc: usize, target: u32, context: &[u32]) -> f64 {
    let h = hidden(p, mode, doc, context);
    let logits: Vec<f64> = (0..p.output_weights.rows())
        .map(|i| p.output_weights.row(i).iter().zip(&h).map(|(u, x)| u * x).sum())
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|y| (y - max).exp()).sum::<f64>().ln();
    lse - logits[target as usize]
}

/// Mean negative log-likelihood over all positions: every token for PV-DBOW,
/// tokens with `window` neighbours on both sides for PV-DM.
pub fn corpus_loss(p: &Params<f64>, mode: Mode, window: usize, docs: &[Vec<u32>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (d, toks) in docs.iter().enumerate() {
        for t in 0..toks.len() {
            let context: Vec<u32> = match mode {
                Mode::Dbow => vec![],
                Mode::Dm => {
                    if t < window || t + window >= toks.len() {
                        continue;
                    }
                    toks[t - window..t]
                        .iter()
                        .chain(&toks[t + 1..=t + window])
                        .copied()
                        .collect()
                }
            };
            sum += position_loss(p, mode, d, toks[t], &context);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
