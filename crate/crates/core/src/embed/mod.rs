//! Paragraph-vector document embeddings (PV-DM and PV-DBOW) trained by
//! stochastic gradient descent on the average log-likelihood of each word
//! given its document and, for PV-DM, its surrounding words.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::word_tokens;

mod params;
mod pca;
mod train;

pub use params::{dense_exact_gradient, Matrix, Params};
pub use pca::{pca_project, Pca};
pub use train::{infer_vector, loss, loss_on, train, train_with_progress, EpochStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Distributed Memory.
    Dm,
    /// Distributed Bag of Words.
    Dbow,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Dm => "dm",
            Mode::Dbow => "dbow",
        })
    }
}

/// Vocabularies above this size switch `Objective::Auto` to sampling.
pub const EXACT_SOFTMAX_MAX_VOCAB: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Exact softmax up to [`EXACT_SOFTMAX_MAX_VOCAB`] words, negative
    /// sampling with 5 negatives above.
    Auto,
    ExactSoftmax,
    NegativeSampling { negatives: u32 },
}

impl Objective {
    pub(crate) fn resolve(self, vocab_len: usize) -> Objective {
        match self {
            Objective::Auto if vocab_len <= EXACT_SOFTMAX_MAX_VOCAB => Objective::ExactSoftmax,
            Objective::Auto => Objective::NegativeSampling { negatives: 5 },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dim: usize,
    /// Context half-width `k`.
    pub window: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly to `min_learning_rate` over all steps.
    pub learning_rate: f32,
    pub min_learning_rate: f32,
    pub min_count: u32,
    pub objective: Objective,
    pub seed: u64,
    /// `1` trains deterministically; more threads update shared parameters
    /// without locking and give up reproducibility.
    pub threads: usize,
}

impl TrainConfig {
    pub fn dm() -> Self {
        TrainConfig {
            mode: Mode::Dm,
            dim: 500,
            window: 5,
            epochs: 12,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            min_count: 1,
            objective: Objective::Auto,
            seed: 0,
            threads: 1,
        }
    }

    pub fn dbow() -> Self {
        TrainConfig {
            mode: Mode::Dbow,
            dim: 200,
            ..Self::dm()
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Dm => Self::dm(),
            Mode::Dbow => Self::dbow(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.min_learning_rate >= 0.0 && self.min_learning_rate <= self.learning_rate) {
            return Err(Error::Config("min learning rate must lie in [0, learning_rate]".into()));
        }
        if let Objective::NegativeSampling { negatives: 0 } = self.objective {
            return Err(Error::Config("negative sampling needs at least one negative".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(10..=15).contains(&self.epochs) {
            log::warn!(
                "epochs={} is outside the validated 10..=15 range",
                self.epochs
            );
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::dm()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs given in id order.
    pub fn from_counts(pairs: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pairs.len());
        let mut tokens = Vec::with_capacity(pairs.len());
        let mut counts = Vec::with_capacity(pairs.len());
        for (i, (t, c)) in pairs.into_iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Invariant(format!("duplicate vocabulary token {t:?}")));
            }
            tokens.push(t);
            counts.push(c);
        }
        Ok(Vocabulary {
            tokens,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    /// Token ids of `text`; out-of-vocabulary tokens are dropped.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        word_tokens(text).iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Token counts over `texts`, keeping tokens seen at least `min_count` times.
/// Ids are assigned by descending count, ties broken lexicographically.
pub fn build_vocab<S: AsRef<str>>(texts: &[S], min_count: u32) -> Result<Vocabulary> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in texts {
        for tok in word_tokens(t.as_ref()) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let mut pairs: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= u64::from(min_count))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyVocab { min_count });
    }
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_counts(pairs)
}

/// Label of one document vector: the expansion it was harvested for and
/// the index of the context within that expansion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocTag {
    pub label: String,
    pub index: u32,
}

impl DocTag {
    pub fn new(label: impl Into<String>, index: u32) -> Self {
        DocTag {
            label: label.into(),
            index,
        }
    }
}

/// A document to embed.
#[derive(Debug, Clone, Copy)]
pub struct TrainingDoc<'a> {
    pub tag: &'a DocTag,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    pub params: Params<f32>,
    pub doc_tags: Vec<DocTag>,
    pub config: TrainConfig,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_tags.len()
    }

    pub fn doc_vector(&self, i: usize) -> &[f32] {
        self.params.doc_vectors.row(i)
    }

    pub fn doc_index(&self, tag: &DocTag) -> Option<usize> {
        self.doc_tags.iter().position(|t| t == tag)
    }

    /// Checks shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let (v, d) = (self.vocab.len(), self.config.dim);
        let shapes_ok = p.word_vectors.rows() == v
            && p.output_weights.rows() == v
            && p.doc_vectors.rows() == self.doc_tags.len()
            && [&p.word_vectors, &p.output_weights, &p.doc_vectors]
                .iter()
                .all(|m| m.cols() == d);
        if !shapes_ok {
            return Err(Error::Invariant("model matrix shapes disagree with vocabulary, tags or dim".into()));
        }
        if !p.all_finite() {
            return Err(Error::Invariant("model contains non-finite values".into()));
        }
        Ok(())
    }

    /// Softmax prediction over the vocabulary, computed in f64.
    pub fn softmax_predict(&self, context_word_ids: &[u32], doc: usize) -> Result<Vec<f64>> {
        let v = self.vocab.len();
        if doc >= self.n_docs() {
            return Err(Error::Index {
                index: doc,
                len: self.n_docs(),
            });
        }
        if let Some(&bad) = context_word_ids.iter().find(|&&w| w as usize >= v) {
            return Err(Error::Index {
                index: bad as usize,
                len: v,
            });
        }
        Ok(params::predict_from(
            &params::Widened(&self.params),
            self.config.mode,
            context_word_ids,
            doc,
        ))
    }
}

impl Params<f32> {
    pub fn map_f64(&self) -> Params<f64> {
        Params {
            word_vectors: self.word_vectors.map(f64::from),
            output_weights: self.output_weights.map(f64::from),
            doc_vectors: self.doc_vectors.map(f64::from),
        }
    }
}

/// Cosine of the angle between `a` and `b`, accumulated in f64.
pub fn cosine_similarity<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Index {
            index: b.len(),
            len: a.len(),
        });
    }
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y): (f64, f64) = (x.into(), y.into());
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}
