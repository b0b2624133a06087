//! Leave-one-out evaluation, hyperparameter sweeps and plot data.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AcronymRecord, ContextWindow, Document, ExpansionEntry};
use crate::disambig::{disambiguate, disambiguate_with_model, train_record_model, Query, QueryEmbedding};
use crate::embed::{EmbeddingModel, Mode, Pca, TrainConfig};
use crate::error::{Error, Result};
use crate::matcher::{find_expansions, harvest_contexts, window_bounds, HarvestConfig, MatchRuleConfig};
use crate::seqmatch::{is_correct, DEFAULT_THRESHOLD};
use crate::textproc::StopwordList;

/// Which text a grid point trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextSource {
    /// Windows around each expansion occurrence.
    #[default]
    Context,
    /// The source document the occurrence came from, from its start.
    Source,
}

/// One sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub train: TrainConfig,
    #[serde(default)]
    pub source: ContextSource,
    /// Total window length in chars; `None` keeps the dataset's windows.
    #[serde(default)]
    pub context_chars: Option<usize>,
}

impl GridPoint {
    pub fn new(train: TrainConfig) -> Self {
        GridPoint {
            train,
            source: ContextSource::Context,
            context_chars: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train_cfg: TrainConfig,
    pub threshold: f64,
    pub max_queries_per_acronym: Option<usize>,
    /// Count single-expansion records, which cannot be answered wrongly.
    pub include_trivial: bool,
    pub query_embedding: QueryEmbedding,
    /// Replace expansion occurrences inside the query with the acronym.
    pub mask_expansions: bool,
    /// Records evaluated concurrently. Results do not depend on it.
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridPoint>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_cfg: TrainConfig::dm(),
            threshold: DEFAULT_THRESHOLD,
            max_queries_per_acronym: None,
            include_trivial: false,
            query_embedding: QueryEmbedding::Retrain,
            mask_expansions: true,
            workers: 1,
            grid: Vec::new(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.max_queries_per_acronym == Some(0) {
            return Err(Error::Config("max queries per acronym must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.train_cfg.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcronymScore {
    pub acronym: String,
    pub n_queries: usize,
    pub n_correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_acronym: Vec<AcronymScore>,
    pub overall_accuracy: f64,
    pub config_echo: EvalConfig,
}

impl EvalReport {
    pub fn from_scores(per_acronym: Vec<AcronymScore>, config_echo: EvalConfig) -> Self {
        let (q, c) = per_acronym
            .iter()
            .fold((0, 0), |(q, c), s| (q + s.n_queries, c + s.n_correct));
        EvalReport {
            per_acronym,
            overall_accuracy: if q == 0 { 0.0 } else { c as f64 / q as f64 },
            config_echo,
        }
    }

    pub fn n_queries(&self) -> usize {
        self.per_acronym.iter().map(|s| s.n_queries).sum()
    }

    pub fn n_correct(&self) -> usize {
        self.per_acronym.iter().map(|s| s.n_correct).sum()
    }

    /// One JSON line per acronym followed by a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.per_acronym {
            let acc = if s.n_queries == 0 { 0.0 } else { s.n_correct as f64 / s.n_queries as f64 };
            let line = serde_json::json!({
                "acronym": s.acronym,
                "n_queries": s.n_queries,
                "n_correct": s.n_correct,
                "accuracy": acc,
            });
            writeln!(out, "{line}").unwrap();
        }
        let summary = serde_json::json!({
            "summary": true,
            "n_queries": self.n_queries(),
            "n_correct": self.n_correct(),
            "overall_accuracy": self.overall_accuracy,
            "config": self.config_echo,
        });
        writeln!(out, "{summary}").unwrap();
        out
    }
}

/// What one leave-one-out step saw; passed to the evaluation observer.
pub struct LooStep<'a> {
    pub acronym: &'a str,
    pub gold: &'a str,
    pub query_window: &'a ContextWindow,
    pub query_text: &'a str,
    /// The record the model is trained on for this query.
    pub training: &'a AcronymRecord,
}

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one record: independent of where the record sits in the dataset.
pub fn record_seed(base: u64, acronym: &str) -> u64 {
    base ^ fnv1a(acronym)
}

fn query_seed(record_seed: u64, query_index: usize) -> u64 {
    record_seed ^ splitmix64(query_index as u64)
}

/// Replaces every expansion occurrence of `acronym` in `text` with the
/// acronym itself.
pub fn mask_expansions(acronym: &str, text: &str, stopwords: &StopwordList) -> String {
    let doc = Document {
        doc_id: String::new(),
        title: String::new(),
        body: text.to_string(),
    };
    let occ = find_expansions(acronym, &[doc], stopwords, &MatchRuleConfig::for_acronym(acronym));
    if occ.is_empty() {
        return text.to_string();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for o in occ {
        if o.char_start < pos {
            continue;
        }
        out.extend(&chars[pos..o.char_start]);
        out.push_str(acronym);
        pos = o.char_end;
    }
    out.extend(&chars[pos..]);
    out
}

fn held_out(record: &AcronymRecord, entry: usize, context: usize) -> AcronymRecord {
    AcronymRecord {
        acronym: record.acronym.clone(),
        entries: record
            .entries
            .iter()
            .enumerate()
            .map(|(e, ent)| ExpansionEntry {
                expansion: ent.expansion.clone(),
                contexts: ent
                    .contexts
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| !(e == entry && c == context))
                    .map(|(_, w)| w.clone())
                    .collect(),
            })
            .collect(),
    }
}

fn evaluate_record(
    record: &AcronymRecord,
    cfg: &EvalConfig,
    stopwords: &StopwordList,
    observer: &(dyn Fn(&LooStep<'_>) + Sync),
) -> Result<Option<AcronymScore>> {
    let n_expansions = record.entries.iter().filter(|e| !e.contexts.is_empty()).count();
    if n_expansions < 2 && !cfg.include_trivial {
        log::info!("skipping {}: fewer than two expansions with contexts", record.acronym);
        return Ok(None);
    }
    let seed = record_seed(cfg.train_cfg.seed, &record.acronym);
    let mut queries: Vec<(usize, usize)> = record.contexts().map(|(e, c, _)| (e, c)).collect();
    if let Some(max) = cfg.max_queries_per_acronym {
        if queries.len() > max {
            queries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            queries.truncate(max);
            queries.sort_unstable();
        }
    }

    let mut score = AcronymScore {
        acronym: record.acronym.clone(),
        n_queries: 0,
        n_correct: 0,
    };
    for (qi, &(e, c)) in queries.iter().enumerate() {
        let gold = &record.entries[e].expansion;
        let window = &record.entries[e].contexts[c];
        let training = held_out(record, e, c);
        if training.n_contexts() == 0 {
            log::info!("skipping {} query {qi}: no training contexts remain", record.acronym);
            continue;
        }
        let text = if cfg.mask_expansions {
            mask_expansions(&record.acronym, &window.text, stopwords)
        } else {
            window.text.clone()
        };
        observer(&LooStep {
            acronym: &record.acronym,
            gold,
            query_window: window,
            query_text: &text,
            training: &training,
        });
        let query = Query {
            acronym: record.acronym.clone(),
            context_text: text,
            gold_expansion: Some(gold.clone()),
        };
        let train_cfg = TrainConfig {
            seed: query_seed(seed, qi),
            threads: 1,
            ..cfg.train_cfg.clone()
        };
        let result = match cfg.query_embedding {
            QueryEmbedding::Retrain => disambiguate(&training, &query, &train_cfg)?,
            QueryEmbedding::Infer => {
                let model = train_record_model(&training, &train_cfg, |_| {})?;
                match disambiguate_with_model(&training, &model, &query) {
                    Err(Error::NoKnownTokens) => {
                        log::info!("{} query {qi}: no known tokens, counted wrong", record.acronym);
                        score.n_queries += 1;
                        continue;
                    }
                    r => r?,
                }
            }
        };
        score.n_queries += 1;
        if is_correct(&result.selected, gold, cfg.threshold) {
            score.n_correct += 1;
        }
    }
    Ok(Some(score))
}

/// Leave-one-out accuracy over `dataset`.
pub fn evaluate(dataset: &[AcronymRecord], cfg: &EvalConfig) -> Result<EvalReport> {
    evaluate_with(dataset, cfg, &StopwordList::default(), &|_| {})
}

/// [`evaluate`] with explicit stop words and an observer called before every
/// query is answered.
pub fn evaluate_with(
    dataset: &[AcronymRecord],
    cfg: &EvalConfig,
    stopwords: &StopwordList,
    observer: &(dyn Fn(&LooStep<'_>) + Sync),
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let run = || -> Result<Vec<Option<AcronymScore>>> {
        dataset
            .par_iter()
            .map(|r| evaluate_record(r, cfg, stopwords, observer))
            .collect()
    };
    let scores = if cfg.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?
    } else {
        dataset
            .iter()
            .map(|r| evaluate_record(r, cfg, stopwords, observer))
            .collect::<Result<Vec<_>>>()?
    };
    let mut echo = cfg.clone();
    echo.grid.clear();
    Ok(EvalReport::from_scores(scores.into_iter().flatten().collect(), echo))
}

/// Nine configurations mirroring the rows of the published results table.
pub fn table1_grid(seed: u64) -> Vec<GridPoint> {
    use ContextSource::{Context, Source};
    let rows: [(Mode, usize, ContextSource, Option<usize>, usize); 9] = [
        (Mode::Dbow, 500, Context, None, 12),
        (Mode::Dbow, 500, Context, None, 12),
        (Mode::Dbow, 500, Context, Some(2000), 12),
        (Mode::Dbow, 500, Context, Some(2000), 12),
        (Mode::Dbow, 200, Source, Some(2000), 12),
        (Mode::Dm, 200, Context, Some(5000), 12),
        (Mode::Dm, 750, Context, Some(2000), 15),
        (Mode::Dm, 200, Source, Some(5000), 15),
        (Mode::Dm, 500, Context, Some(5000), 15),
    ];
    rows.iter()
        .map(|&(mode, dim, source, context_chars, epochs)| GridPoint {
            train: TrainConfig {
                dim,
                epochs,
                seed,
                ..TrainConfig::for_mode(mode)
            },
            source,
            context_chars,
        })
        .collect()
}

/// Corpus used to re-cut windows for grid points that set a context length
/// or train on source documents.
pub struct SweepCorpus<'a> {
    pub documents: &'a [Document],
    pub stopwords: &'a StopwordList,
}

/// Re-harvests `record` from the corpus for one grid point, keeping only the
/// record's own expansions.
pub fn reharvest(record: &AcronymRecord, point: &GridPoint, corpus: &SweepCorpus<'_>) -> Result<AcronymRecord> {
    let rules = MatchRuleConfig::for_acronym(&record.acronym);
    let wanted: HashSet<String> = record
        .entries
        .iter()
        .map(|e| crate::textproc::normalize(&e.expansion))
        .collect();
    let occ: Vec<_> = find_expansions(&record.acronym, corpus.documents, corpus.stopwords, &rules)
        .into_iter()
        .filter(|o| wanted.contains(&crate::textproc::normalize(&o.expansion)))
        .collect();
    let harvest = point
        .context_chars
        .map(HarvestConfig::symmetric)
        .unwrap_or_default();
    let mut out = harvest_contexts(&record.acronym, &occ, corpus.documents, &harvest)?;
    if point.source == ContextSource::Source {
        for entry in &mut out.entries {
            for w in &mut entry.contexts {
                let doc = corpus
                    .documents
                    .iter()
                    .find(|d| d.doc_id == w.source_doc_id)
                    .ok_or_else(|| Error::UnknownDoc(w.source_doc_id.clone()))?;
                *w = source_prefix(doc, point.context_chars);
            }
        }
    }
    Ok(out)
}

/// The start of `doc` up to `limit` chars, not cutting the last word.
fn source_prefix(doc: &Document, limit: Option<usize>) -> ContextWindow {
    let chars: Vec<char> = doc.body.chars().collect();
    let limit = limit.unwrap_or(chars.len()).min(chars.len());
    let cfg = HarvestConfig {
        before_chars: 0,
        after_chars: limit,
    };
    let (_, mut hi) = window_bounds(&chars, 0, 0, &cfg);
    if hi == 0 {
        hi = limit;
    }
    ContextWindow {
        text: chars[..hi].iter().collect(),
        source_doc_id: doc.doc_id.clone(),
        char_start: 0,
        char_end: hi,
    }
}

/// Runs [`evaluate`] once per grid point, in grid order.
pub fn grid_sweep(
    dataset: &[AcronymRecord],
    cfg: &EvalConfig,
    corpus: Option<&SweepCorpus<'_>>,
) -> Result<Vec<(GridPoint, EvalReport)>> {
    if cfg.grid.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    let stopwords = corpus.map(|c| c.stopwords.clone()).unwrap_or_default();
    cfg.grid
        .iter()
        .map(|point| {
            let needs_corpus = point.context_chars.is_some() || point.source == ContextSource::Source;
            let data = match (needs_corpus, corpus) {
                (false, _) => dataset.to_vec(),
                (true, Some(c)) => dataset
                    .iter()
                    .map(|r| reharvest(r, point, c))
                    .collect::<Result<Vec<_>>>()?,
                (true, None) => {
                    return Err(Error::Config(
                        "grid point sets a context length or source text but no corpus was given".into(),
                    ))
                }
            };
            let point_cfg = EvalConfig {
                train_cfg: point.train.clone(),
                grid: Vec::new(),
                ..cfg.clone()
            };
            log::info!(
                "sweep: mode={} dim={} epochs={} context={:?}",
                point.train.mode,
                point.train.dim,
                point.train.epochs,
                point.context_chars
            );
            let report = evaluate_with(&data, &point_cfg, &stopwords, &|_| {})?;
            Ok((point.clone(), report))
        })
        .collect()
}

/// Comma-delimited sweep table with one row per grid point.
pub fn sweep_table(rows: &[(GridPoint, EvalReport)]) -> String {
    let mut out = String::from("model,embedding_size,context_source,context_length,epochs,accuracy\n");
    for (p, r) in rows {
        let model = match p.train.mode {
            Mode::Dm => "distributed_memory",
            Mode::Dbow => "distributed_bag_of_words",
        };
        let source = match p.source {
            ContextSource::Context => "context",
            ContextSource::Source => "source",
        };
        let length = p.context_chars.map_or("-".to_string(), |n| n.to_string());
        writeln!(
            out,
            "{model},{},{source},{length},{},{:.6}",
            p.train.dim, p.train.epochs, r.overall_accuracy
        )
        .unwrap();
    }
    out
}

/// One projected document vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub expansion: String,
    pub context_index: u32,
}

/// 2-D PCA projection of every document vector in `model`.
pub fn plot_points(model: &EmbeddingModel) -> Result<Vec<PlotPoint>> {
    let vectors: Vec<Vec<f32>> = (0..model.n_docs()).map(|i| model.doc_vector(i).to_vec()).collect();
    let out_dim = 2.min(model.dim());
    let pca = Pca::fit(&vectors, out_dim)?;
    Ok(pca
        .scores
        .iter()
        .zip(&model.doc_tags)
        .map(|(s, tag)| PlotPoint {
            x: s[0],
            y: s.get(1).copied().unwrap_or(0.0),
            expansion: tag.label.clone(),
            context_index: tag.index,
        })
        .collect())
}

/// Writes [`plot_points`] as CSV with header `x,y,expansion,context_index`.
pub fn emit_plot_data(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let points = plot_points(model)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| Error::Invariant(format!("writing {}: {e}", path.display()));
    for p in &points {
        w.serialize(p).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the report as JSON lines.
pub fn save_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))?;
    f.write_all(report.to_jsonl().as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}
