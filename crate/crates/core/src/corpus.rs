//! Corpus and dataset records, and their line-delimited JSON files.
//!
//! Offsets in [`ContextWindow`] are counted in Unicode scalar values (chars),
//! not bytes.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{matches_expansion, normalize_acronym, MatchRuleConfig};
use crate::textproc::{normalize, StopwordList};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub text: String,
    pub source_doc_id: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionEntry {
    pub expansion: String,
    pub contexts: Vec<ContextWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcronymRecord {
    pub acronym: String,
    pub entries: Vec<ExpansionEntry>,
}

impl AcronymRecord {
    pub fn n_contexts(&self) -> usize {
        self.entries.iter().map(|e| e.contexts.len()).sum()
    }

    /// `(entry index, context index, window)` for every stored context.
    pub fn contexts(&self) -> impl Iterator<Item = (usize, usize, &ContextWindow)> {
        self.entries.iter().enumerate().flat_map(|(e, entry)| {
            entry
                .contexts
                .iter()
                .enumerate()
                .map(move |(c, w)| (e, c, w))
        })
    }

    /// Merges entries whose expansions normalize to the same string,
    /// keeping the first spelling and concatenating contexts in order.
    pub fn merge_duplicate_expansions(&mut self) {
        let mut merged: Vec<ExpansionEntry> = Vec::with_capacity(self.entries.len());
        let mut index: HashMap<String, usize> = HashMap::new();
        for entry in self.entries.drain(..) {
            let key = normalize(&entry.expansion);
            match index.get(&key) {
                Some(&i) => merged[i].contexts.extend(entry.contexts),
                None => {
                    index.insert(key, merged.len());
                    merged.push(entry);
                }
            }
        }
        self.entries = merged;
    }

    /// Checks the record invariants. Expansions that fail the matching rules
    /// are rejected unless `opts.allow_external_expansions` is set.
    pub fn validate(&self, opts: &DatasetOptions) -> Result<()> {
        let acr = &self.acronym;
        if acr.is_empty() || normalize_acronym(acr) != *acr {
            return Err(Error::Invariant(format!(
                "acronym {acr:?} must be non-empty uppercase alphanumeric"
            )));
        }
        let rules = MatchRuleConfig::for_acronym(acr);
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert(normalize(&entry.expansion)) {
                return Err(Error::Invariant(format!(
                    "duplicate expansion {:?} under {acr}",
                    entry.expansion
                )));
            }
            if !opts.allow_external_expansions
                && !matches_expansion(acr, &entry.expansion, &opts.stopwords, &rules)
            {
                return Err(Error::Invariant(format!(
                    "{:?} is not an expansion of {acr}",
                    entry.expansion
                )));
            }
            for w in &entry.contexts {
                w.validate()?;
            }
        }
        Ok(())
    }
}

impl ContextWindow {
    pub fn validate(&self) -> Result<()> {
        if self.text.is_empty() {
            return Err(Error::Invariant("empty context text".into()));
        }
        let len = self.text.chars().count();
        if self.char_start >= self.char_end || self.char_end - self.char_start != len {
            return Err(Error::Invariant(format!(
                "context offsets [{}, {}) disagree with text length {len}",
                self.char_start, self.char_end
            )));
        }
        Ok(())
    }
}

/// Options applied when reading datasets.
#[derive(Debug, Clone, Default)]
pub struct DatasetOptions {
    pub stopwords: StopwordList,
    /// Accept expansions supplied from outside the matcher (e.g. irregular
    /// forms like "Et Cetera") that the letter rules cannot produce.
    pub allow_external_expansions: bool,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Streams one JSON value per non-blank line.
fn for_each_record<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    for (i, line) in open(path)?.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::format(line_no, e.to_string()))?;
        f(line_no, rec)?;
    }
    Ok(())
}

/// Reads a corpus file with one `{"doc_id", "title", "body"}` object per line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for_each_record(path, |line, doc: Document| {
        if doc.doc_id.is_empty() {
            return Err(Error::format(line, "empty doc_id"));
        }
        if !ids.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateId {
                doc_id: doc.doc_id,
                line,
            });
        }
        docs.push(doc);
        Ok(())
    })?;
    Ok(docs)
}

pub fn save_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<()> {
    write_lines(path.as_ref(), docs)
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes records, one per line. Every record must pass validation with
/// external expansions allowed.
pub fn save_records(records: &[AcronymRecord], path: impl AsRef<Path>) -> Result<()> {
    let lenient = DatasetOptions {
        allow_external_expansions: true,
        ..Default::default()
    };
    for r in records {
        r.validate(&lenient)?;
    }
    write_lines(path.as_ref(), records)
}

pub fn save_dataset(record: &AcronymRecord, path: impl AsRef<Path>) -> Result<()> {
    save_records(std::slice::from_ref(record), path)
}

/// Reads every record in a dataset file, merging case-insensitively
/// duplicated expansions and validating each record.
pub fn load_records_with(path: impl AsRef<Path>, opts: &DatasetOptions) -> Result<Vec<AcronymRecord>> {
    let mut out = Vec::new();
    for_each_record(path.as_ref(), |_, mut rec: AcronymRecord| {
        rec.merge_duplicate_expansions();
        rec.validate(opts)?;
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<AcronymRecord>> {
    load_records_with(path, &DatasetOptions::default())
}

/// Reads a dataset file that holds exactly one record.
pub fn load_dataset_with(path: impl AsRef<Path>, opts: &DatasetOptions) -> Result<AcronymRecord> {
    let mut recs = load_records_with(path, opts)?;
    match recs.len() {
        1 => Ok(recs.remove(0)),
        n => Err(Error::format(0, format!("expected one record, found {n}"))),
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<AcronymRecord> {
    load_dataset_with(path, &DatasetOptions::default())
}

/// Confirms every window's offsets slice its source document back to the
/// stored text. Windows whose document is absent from `corpus` are skipped.
pub fn verify_offsets(record: &AcronymRecord, corpus: &[Document]) -> Result<()> {
    let docs: HashMap<&str, Vec<char>> = corpus
        .iter()
        .map(|d| (d.doc_id.as_str(), d.body.chars().collect()))
        .collect();
    for (_, _, w) in record.contexts() {
        let Some(chars) = docs.get(w.source_doc_id.as_str()) else {
            continue;
        };
        let ok = w.char_end <= chars.len()
            && w.char_start < w.char_end
            && chars[w.char_start..w.char_end].iter().copied().eq(w.text.chars());
        if !ok {
            return Err(Error::Invariant(format!(
                "window [{}, {}) does not reproduce its text in {:?}",
                w.char_start, w.char_end, w.source_doc_id
            )));
        }
    }
    Ok(())
}
