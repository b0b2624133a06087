//! Generated corpora with known answers for benchmarks and tests.
//!
//! Acronyms use the letters A to P. Every expansion word starts with its
//! acronym letter, while every context word starts with one of q to z, so
//! context words can never take part in an expansion match. Each expansion
//! owns a private context vocabulary disjoint from all others.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AcronymRecord, ContextWindow, Document, ExpansionEntry};
use crate::error::{Error, Result};
use crate::matcher::{find_expansions, harvest_contexts, HarvestConfig, MatchRuleConfig};
use crate::textproc::StopwordList;

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const ACRONYM_LETTERS: &[u8] = b"abcdefghijklmnop";
const CONTEXT_INITIALS: &[u8] = b"qrstuvwxyz";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_acronyms: usize,
    pub min_expansions: usize,
    pub max_expansions: usize,
    pub contexts_per_expansion: usize,
    pub vocab_per_expansion: usize,
    /// Context words placed on each side of the expansion.
    pub words_per_side: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_acronyms: 20,
            min_expansions: 2,
            max_expansions: 4,
            contexts_per_expansion: 5,
            vocab_per_expansion: 30,
            words_per_side: 120,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub corpus: Vec<Document>,
    /// Records harvested from `corpus`, one per acronym.
    pub records: Vec<AcronymRecord>,
    /// Context vocabulary of each expansion, parallel to `records`.
    pub vocabularies: Vec<Vec<Vec<String>>>,
}

struct WordMaker {
    rng: ChaCha8Rng,
    used: HashSet<String>,
    stopwords: StopwordList,
}

impl WordMaker {
    fn word(&mut self, first: u8) -> String {
        loop {
            let mut w = String::from(first as char);
            for _ in 0..self.rng.random_range(2..=3) {
                w.push_str(ONSETS.choose(&mut self.rng).unwrap());
                w.push_str(VOWELS.choose(&mut self.rng).unwrap());
            }
            if !self.stopwords.contains(&w) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn context_word(&mut self) -> String {
        let first = *CONTEXT_INITIALS.choose(&mut self.rng).unwrap();
        self.word(first)
    }
}

fn title_case(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn random_acronym(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let len = rng.random_range(2..=4);
        let a: String = (0..len)
            .map(|_| (*ACRONYM_LETTERS.choose(rng).unwrap() as char).to_ascii_uppercase())
            .collect();
        if used.insert(a.clone()) {
            return a;
        }
    }
}

fn check(cfg: &SynthConfig) -> Result<()> {
    if cfg.n_acronyms == 0
        || cfg.min_expansions == 0
        || cfg.min_expansions > cfg.max_expansions
        || cfg.contexts_per_expansion == 0
        || cfg.vocab_per_expansion == 0
        || cfg.words_per_side == 0
    {
        return Err(Error::Config(format!("invalid synthetic config {cfg:?}")));
    }
    Ok(())
}

/// Generates a corpus with one document per (expansion, context) and
/// harvests it through the regular matching pipeline.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticBenchmark> {
    check(cfg)?;
    let stopwords = StopwordList::default();
    let mut maker = WordMaker {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        used: HashSet::new(),
        stopwords: stopwords.clone(),
    };
    let mut acronyms = HashSet::new();
    let mut corpus = Vec::new();
    let mut plan = Vec::new();

    for a in 0..cfg.n_acronyms {
        let acronym = random_acronym(&mut maker.rng, &mut acronyms);
        let k = maker.rng.random_range(cfg.min_expansions..=cfg.max_expansions);
        let mut vocabs = Vec::with_capacity(k);
        for e in 0..k {
            let expansion = acronym
                .bytes()
                .map(|b| title_case(&maker.word(b.to_ascii_lowercase())))
                .collect::<Vec<_>>()
                .join(" ");
            let vocab: Vec<String> = (0..cfg.vocab_per_expansion).map(|_| maker.context_word()).collect();
            for c in 0..cfg.contexts_per_expansion {
                let side = |maker: &mut WordMaker| {
                    (0..cfg.words_per_side)
                        .map(|_| vocab.choose(&mut maker.rng).unwrap().as_str())
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                let before = side(&mut maker);
                let after = side(&mut maker);
                corpus.push(Document {
                    doc_id: format!("syn-{a:03}-{e}-{c}"),
                    title: expansion.clone(),
                    body: format!("{before} {expansion} {after}"),
                });
            }
            vocabs.push(vocab);
        }
        plan.push((acronym, vocabs));
    }

    let mut records = Vec::with_capacity(plan.len());
    let mut vocabularies = Vec::with_capacity(plan.len());
    for (acronym, vocabs) in plan {
        let rules = MatchRuleConfig::for_acronym(&acronym);
        let planted: HashSet<String> = plan_expansions(&corpus, &acronym);
        let occ: Vec<_> = find_expansions(&acronym, &corpus, &stopwords, &rules)
            .into_iter()
            .filter(|o| planted.contains(&o.expansion))
            .collect();
        let record = harvest_contexts(&acronym, &occ, &corpus, &HarvestConfig::default())?;
        if record.entries.len() != vocabs.len() {
            return Err(Error::Invariant(format!(
                "synthetic acronym {acronym}: harvested {} expansions, planted {}",
                record.entries.len(),
                vocabs.len()
            )));
        }
        records.push(record);
        vocabularies.push(vocabs);
    }
    Ok(SyntheticBenchmark {
        corpus,
        records,
        vocabularies,
    })
}

/// Expansions planted for `acronym`; document titles carry them.
fn plan_expansions(corpus: &[Document], acronym: &str) -> HashSet<String> {
    corpus
        .iter()
        .filter(|d| d.title.split(' ').map(|w| w.as_bytes()[0]).eq(acronym.bytes()))
        .map(|d| d.title.clone())
        .collect()
}

/// Records whose every context window is the same string, so no method can
/// beat chance. Each record has exactly `k` expansions.
pub fn identical_contexts(
    n_acronyms: usize,
    k: usize,
    contexts_per_expansion: usize,
    seed: u64,
) -> Result<Vec<AcronymRecord>> {
    check(&SynthConfig {
        n_acronyms,
        min_expansions: k,
        max_expansions: k,
        contexts_per_expansion,
        ..SynthConfig::default()
    })?;
    let mut maker = WordMaker {
        rng: ChaCha8Rng::seed_from_u64(seed),
        used: HashSet::new(),
        stopwords: StopwordList::default(),
    };
    let mut acronyms = HashSet::new();
    let shared: Vec<String> = (0..30).map(|_| maker.context_word()).collect();
    let text = (0..40)
        .map(|_| shared.choose(&mut maker.rng).unwrap().as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let len = text.chars().count();
    Ok((0..n_acronyms)
        .map(|a| {
            let acronym = random_acronym(&mut maker.rng, &mut acronyms);
            let entries = (0..k)
                .map(|e| ExpansionEntry {
                    expansion: acronym
                        .bytes()
                        .map(|b| title_case(&maker.word(b.to_ascii_lowercase())))
                        .collect::<Vec<_>>()
                        .join(" "),
                    contexts: (0..contexts_per_expansion)
                        .map(|c| ContextWindow {
                            text: text.clone(),
                            source_doc_id: format!("same-{a:03}-{e}-{c}"),
                            char_start: 0,
                            char_end: len,
                        })
                        .collect(),
                })
                .collect();
            AcronymRecord { acronym, entries }
        })
        .collect())
}
