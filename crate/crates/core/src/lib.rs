//! Acronym disambiguation with per-acronym paragraph-vector models.
//!
//! Pipeline: load a corpus, find candidate expansions of an acronym by
//! initial-letter matching, harvest the text around each occurrence, embed
//! those windows together with a query passage, and pick the expansion whose
//! window lies closest to the query by cosine similarity.

pub mod corpus;
pub mod disambig;
pub mod embed;
pub mod error;
pub mod eval;
pub mod matcher;
pub mod model_io;
pub mod seqmatch;
pub mod synth;
pub mod textproc;

pub use corpus::{
    load_corpus, load_dataset, load_records, save_corpus, save_dataset, save_records, AcronymRecord,
    ContextWindow, DatasetOptions, Document, ExpansionEntry,
};
pub use disambig::{disambiguate, disambiguate_with_model, DisambiguationResult, Query};
pub use embed::{cosine_similarity, train, EmbeddingModel, Mode, Objective, TrainConfig};
pub use error::{Error, Result};
pub use eval::{emit_plot_data, evaluate, grid_sweep, EvalConfig, EvalReport, GridPoint};
pub use matcher::{find_expansions, harvest_contexts, matches_expansion, HarvestConfig, MatchRuleConfig};
pub use model_io::{load_model, save_model};
pub use seqmatch::{is_correct, sequence_ratio};
pub use textproc::{normalize, tokenize, StopwordList};
