//! Per-acronym disambiguation: embed every harvested context together with
//! the query, then pick the expansion owning the context most similar to the
//! query.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::AcronymRecord;
use crate::embed::{
    cosine_similarity, infer_vector, train_with_progress, DocTag, EmbeddingModel, EpochStats,
    TrainConfig, TrainingDoc,
};
use crate::error::{Error, Result};
use crate::matcher::normalize_acronym;

/// Tag label of the query document inside a per-query model.
pub const QUERY_TAG: &str = "<query>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub acronym: String,
    pub context_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_expansion: Option<String>,
}

impl Query {
    pub fn new(acronym: impl Into<String>, context_text: impl Into<String>) -> Self {
        Query {
            acronym: acronym.into(),
            context_text: context_text.into(),
            gold_expansion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedExpansion {
    pub expansion: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextScore {
    pub expansion: String,
    pub context_index: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationResult {
    pub acronym: String,
    pub selected: String,
    /// Expansions by best context similarity, descending.
    pub ranked: Vec<RankedExpansion>,
    #[serde(skip)]
    pub per_context_scores: Vec<ContextScore>,
}

impl DisambiguationResult {
    /// One-line JSON: `{"acronym", "selected", "ranked": [...]}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// How the query context gets its vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryEmbedding {
    /// Train a fresh model over the record's contexts plus the query.
    #[default]
    Retrain,
    /// Train over the record's contexts only and infer the query vector.
    Infer,
}

fn check_query(record: &AcronymRecord, query: &Query) -> Result<()> {
    if normalize_acronym(&query.acronym) != record.acronym {
        return Err(Error::AcronymMismatch {
            query: query.acronym.clone(),
            record: record.acronym.clone(),
        });
    }
    if query.context_text.trim().is_empty() {
        return Err(Error::Config("empty context".into()));
    }
    if record.n_contexts() == 0 {
        return Err(Error::EmptyRecord(record.acronym.clone()));
    }
    Ok(())
}

fn record_tags(record: &AcronymRecord) -> Vec<DocTag> {
    record
        .contexts()
        .map(|(e, c, _)| DocTag::new(record.entries[e].expansion.clone(), c as u32))
        .collect()
}

/// Trains a model over every context window of `record`.
pub fn train_record_model(
    record: &AcronymRecord,
    cfg: &TrainConfig,
    progress: impl FnMut(&EpochStats),
) -> Result<EmbeddingModel> {
    if record.n_contexts() == 0 {
        return Err(Error::EmptyRecord(record.acronym.clone()));
    }
    let tags = record_tags(record);
    let docs: Vec<TrainingDoc<'_>> = tags
        .iter()
        .zip(record.contexts())
        .map(|(tag, (_, _, w))| TrainingDoc { tag, text: &w.text })
        .collect();
    train_with_progress(&docs, cfg, progress)
}

/// Ranks the record's expansions against `query_vec` using the document
/// vectors of `model`, which must carry one tag per record context.
pub fn rank(
    record: &AcronymRecord,
    model: &EmbeddingModel,
    query_vec: &[f32],
) -> Result<DisambiguationResult> {
    let mut per_context = Vec::with_capacity(record.n_contexts());
    let mut ranked: Vec<RankedExpansion> = Vec::new();
    for entry in &record.entries {
        let mut best: Option<f64> = None;
        for c in 0..entry.contexts.len() {
            let tag = DocTag::new(entry.expansion.clone(), c as u32);
            let row = model.doc_index(&tag).ok_or_else(|| {
                Error::Invariant(format!("model has no vector for {}#{}", tag.label, tag.index))
            })?;
            let sim = cosine_similarity(query_vec, model.doc_vector(row))?;
            per_context.push(ContextScore {
                expansion: entry.expansion.clone(),
                context_index: c,
                similarity: sim,
            });
            best = Some(best.map_or(sim, |b: f64| b.max(sim)));
        }
        if let Some(similarity) = best {
            ranked.push(RankedExpansion {
                expansion: entry.expansion.clone(),
                similarity,
            });
        }
    }
    if ranked.is_empty() {
        return Err(Error::EmptyRecord(record.acronym.clone()));
    }
    ranked.sort_by(|a, b| match b.similarity.total_cmp(&a.similarity) {
        Ordering::Equal => a.expansion.cmp(&b.expansion),
        o => o,
    });
    Ok(DisambiguationResult {
        acronym: record.acronym.clone(),
        selected: ranked[0].expansion.clone(),
        ranked,
        per_context_scores: per_context,
    })
}

/// Trains one model over the record's contexts plus the query context and
/// selects the expansion whose context is most cosine-similar to the query.
pub fn disambiguate(record: &AcronymRecord, query: &Query, cfg: &TrainConfig) -> Result<DisambiguationResult> {
    disambiguate_with_progress(record, query, cfg, |_| {})
}

pub fn disambiguate_with_progress(
    record: &AcronymRecord,
    query: &Query,
    cfg: &TrainConfig,
    progress: impl FnMut(&EpochStats),
) -> Result<DisambiguationResult> {
    check_query(record, query)?;
    let mut tags = record_tags(record);
    tags.push(DocTag::new(QUERY_TAG, 0));
    let texts = record
        .contexts()
        .map(|(_, _, w)| w.text.as_str())
        .chain(std::iter::once(query.context_text.as_str()));
    let docs: Vec<TrainingDoc<'_>> = tags
        .iter()
        .zip(texts)
        .map(|(tag, text)| TrainingDoc { tag, text })
        .collect();
    let model = train_with_progress(&docs, cfg, progress)?;
    let query_row = model.n_docs() - 1;
    rank(record, &model, model.doc_vector(query_row))
}

/// Held-out variant: embeds the query by inference against `model`, which
/// was trained on `record` without the query.
pub fn disambiguate_with_model(
    record: &AcronymRecord,
    model: &EmbeddingModel,
    query: &Query,
) -> Result<DisambiguationResult> {
    check_query(record, query)?;
    let v = infer_vector(model, &query.context_text, None)?;
    rank(record, model, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ContextWindow, ExpansionEntry};
    use crate::embed::Mode;

    fn window(text: &str) -> ContextWindow {
        ContextWindow {
            text: text.into(),
            source_doc_id: "d".into(),
            char_start: 0,
            char_end: text.chars().count(),
        }
    }

    fn small_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            mode: Mode::Dm,
            dim: 16,
            window: 2,
            seed,
            ..TrainConfig::dm()
        }
    }

    #[test]
    fn single_expansion_always_selected() {
        let rec = AcronymRecord {
            acronym: "WHO".into(),
            entries: vec![ExpansionEntry {
                expansion: "World Health Organization".into(),
                contexts: vec![window("the world health organization tracks disease outbreaks")],
            }],
        };
        let q = Query::new("who", "stock markets rallied after the earnings report today");
        let r = disambiguate(&rec, &q, &small_cfg(1)).unwrap();
        assert_eq!(r.selected, "World Health Organization");
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.per_context_scores.len(), 1);
        let json: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        assert_eq!(json["acronym"], "WHO");
        assert_eq!(json["selected"], "World Health Organization");
        assert!(json["ranked"].is_array());
    }

    #[test]
    fn errors() {
        let empty = AcronymRecord {
            acronym: "CNN".into(),
            entries: vec![ExpansionEntry {
                expansion: "Cable News Network".into(),
                contexts: vec![],
            }],
        };
        let q = Query::new("CNN", "some context");
        assert!(matches!(
            disambiguate(&empty, &q, &small_cfg(0)),
            Err(Error::EmptyRecord(_))
        ));
        let mut rec = empty.clone();
        rec.entries[0].contexts.push(window("news anchors report"));
        assert!(matches!(
            disambiguate(&rec, &Query::new("WHO", "x"), &small_cfg(0)),
            Err(Error::AcronymMismatch { .. })
        ));
        assert!(matches!(
            disambiguate(&rec, &Query::new("CNN", "  "), &small_cfg(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ties_break_lexicographically() {
        let rec = AcronymRecord {
            acronym: "AB".into(),
            entries: vec![
                ExpansionEntry {
                    expansion: "Beta Alpha".into(),
                    contexts: vec![window("x")],
                },
                ExpansionEntry {
                    expansion: "Alpha Beta".into(),
                    contexts: vec![window("x")],
                },
            ],
        };
        let cfg = TrainConfig {
            epochs: 0,
            dim: 2,
            window: 1,
            ..TrainConfig::dbow()
        };
        let mut model = train_record_model(&rec, &cfg, |_| {}).unwrap();
        // make both stored vectors identical
        let v = model.doc_vector(0).to_vec();
        model.params.doc_vectors.row_mut(1).copy_from_slice(&v);
        let r = rank(&rec, &model, &[1.0, 0.5]).unwrap();
        assert_eq!(r.ranked[0].similarity, r.ranked[1].similarity);
        assert_eq!(r.selected, "Alpha Beta");
    }
}
