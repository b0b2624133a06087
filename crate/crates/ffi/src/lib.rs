//! C interface to the acrodis engine.
//!
//! Every fallible function returns an [`AcrodisStatus`]. On failure a
//! description is available from [`acrodis_last_error_message`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function; strings returned through `char **` out-parameters must be
//! released with [`acrodis_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acrodis::corpus::{load_records, AcronymRecord};
use acrodis::disambig::{disambiguate, disambiguate_with_model, train_record_model, DisambiguationResult, Query};
use acrodis::embed::{EmbeddingModel, Mode, TrainConfig};
use acrodis::matcher::{matches_expansion, normalize_acronym, MatchRuleConfig};
use acrodis::model_io::{load_model, save_model};
use acrodis::seqmatch::sequence_ratio;
use acrodis::textproc::StopwordList;
use acrodis::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcrodisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Invariant = 5,
    InvalidArgument = 6,
    Training = 7,
    NotFound = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcrodisMode {
    Dm = 0,
    Dbow = 1,
}

/// Training settings. Fill with [`acrodis_train_config_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcrodisTrainConfig {
    pub mode: AcrodisMode,
    pub dim: u32,
    pub window: u32,
    pub epochs: u32,
    pub learning_rate: f32,
    pub seed: u64,
}

impl AcrodisTrainConfig {
    fn to_config(self) -> TrainConfig {
        let mode = match self.mode {
            AcrodisMode::Dm => Mode::Dm,
            AcrodisMode::Dbow => Mode::Dbow,
        };
        TrainConfig {
            dim: self.dim as usize,
            window: self.window as usize,
            epochs: self.epochs as usize,
            learning_rate: self.learning_rate,
            seed: self.seed,
            threads: 1,
            ..TrainConfig::for_mode(mode)
        }
    }
}

/// Records loaded from a dataset file.
pub struct AcrodisDataset {
    records: Vec<AcronymRecord>,
}

pub struct AcrodisModel {
    model: EmbeddingModel,
}

pub struct AcrodisResult {
    result: DisambiguationResult,
    selected: CString,
    expansions: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> AcrodisStatus {
    match e {
        Error::Io { .. } => AcrodisStatus::Io,
        Error::Format { .. } | Error::DuplicateId { .. } | Error::Version(_) => AcrodisStatus::Format,
        Error::Invariant(_) | Error::UnknownDoc(_) => AcrodisStatus::Invariant,
        Error::EmptyVocab { .. } | Error::NonFinite { .. } => AcrodisStatus::Training,
        Error::EmptyRecord(_) | Error::EmptyDataset => AcrodisStatus::NotFound,
        _ => AcrodisStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic for the calling thread.
fn guard(f: impl FnOnce() -> Result<(), (AcrodisStatus, String)>) -> AcrodisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcrodisStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AcrodisStatus::Panic
        }
    }
}

fn fail(e: Error) -> (AcrodisStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (AcrodisStatus, String)> {
    if p.is_null() {
        return Err((AcrodisStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AcrodisStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, (AcrodisStatus, String)> {
    p.as_ref()
        .ok_or_else(|| (AcrodisStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), (AcrodisStatus, String)> {
    if p.is_null() {
        Err((AcrodisStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn find_record<'a>(ds: &'a AcrodisDataset, acronym: &str) -> Result<&'a AcronymRecord, (AcrodisStatus, String)> {
    let key = normalize_acronym(acronym);
    ds.records
        .iter()
        .find(|r| r.acronym == key)
        .ok_or_else(|| (AcrodisStatus::NotFound, format!("acronym {key} not in dataset")))
}

fn into_c_string(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).unwrap_or_default()
}

fn wrap_result(result: DisambiguationResult) -> *mut AcrodisResult {
    Box::into_raw(Box::new(AcrodisResult {
        selected: into_c_string(&result.selected),
        expansions: result.ranked.iter().map(|r| into_c_string(&r.expansion)).collect(),
        result,
    }))
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acrodis_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn acrodis_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Defaults for `mode`: 500 dimensions for DM, 200 for DBOW, window 5,
/// 12 epochs, learning rate 0.025, seed 0.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_train_config_default(mode: AcrodisMode, out: *mut AcrodisTrainConfig) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let base = TrainConfig::for_mode(match mode {
            AcrodisMode::Dm => Mode::Dm,
            AcrodisMode::Dbow => Mode::Dbow,
        });
        *out = AcrodisTrainConfig {
            mode,
            dim: base.dim as u32,
            window: base.window as u32,
            epochs: base.epochs as u32,
            learning_rate: base.learning_rate,
            seed: base.seed,
        };
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_dataset_load(path: *const c_char, out: *mut *mut AcrodisDataset) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let records = load_records(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(AcrodisDataset { records }));
        Ok(())
    })
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_dataset_len(ds: *const AcrodisDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.records.len())
}

/// Copies the acronym of record `index` into a new string.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_dataset_acronym(
    ds: *const AcrodisDataset,
    index: usize,
    out: *mut *mut c_char,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ds = ref_arg(ds, "dataset")?;
        let rec = ds.records.get(index).ok_or_else(|| {
            (
                AcrodisStatus::InvalidArgument,
                format!("index {index} out of range (len {})", ds.records.len()),
            )
        })?;
        *out = into_c_string(&rec.acronym).into_raw();
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from [`acrodis_dataset_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn acrodis_dataset_free(ds: *mut AcrodisDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a model over every context of one acronym in the dataset.
///
/// # Safety
/// Pointers must be valid; `cfg` may be null for DM defaults.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_train(
    ds: *const AcrodisDataset,
    acronym: *const c_char,
    cfg: *const AcrodisTrainConfig,
    out: *mut *mut AcrodisModel,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ds = ref_arg(ds, "dataset")?;
        let record = find_record(ds, str_arg(acronym, "acronym")?)?;
        let cfg = cfg.as_ref().map_or_else(TrainConfig::dm, |c| c.to_config());
        let model = train_record_model(record, &cfg, |_| {}).map_err(fail)?;
        *out = Box::into_raw(Box::new(AcrodisModel { model }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_load(path: *const c_char, out: *mut *mut AcrodisModel) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let model = load_model(str_arg(path, "path")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(AcrodisModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_save(model: *const AcrodisModel, path: *const c_char) -> AcrodisStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        save_model(&model.model, str_arg(path, "path")?).map_err(fail)
    })
}

/// Embedding size; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_dim(model: *const AcrodisModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// Number of document vectors; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_n_docs(model: *const AcrodisModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_docs())
}

/// # Safety
/// `model` must be null or a model handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn acrodis_model_free(model: *mut AcrodisModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Disambiguates `acronym` in `context` by training over the record's
/// contexts plus the query.
///
/// # Safety
/// Pointers must be valid; `cfg` may be null for DM defaults.
#[no_mangle]
pub unsafe extern "C" fn acrodis_disambiguate(
    ds: *const AcrodisDataset,
    acronym: *const c_char,
    context: *const c_char,
    cfg: *const AcrodisTrainConfig,
    out: *mut *mut AcrodisResult,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ds = ref_arg(ds, "dataset")?;
        let acronym = str_arg(acronym, "acronym")?;
        let record = find_record(ds, acronym)?;
        let query = Query::new(acronym, str_arg(context, "context")?);
        let cfg = cfg.as_ref().map_or_else(TrainConfig::dm, |c| c.to_config());
        let result = disambiguate(record, &query, &cfg).map_err(fail)?;
        *out = wrap_result(result);
        Ok(())
    })
}

/// Disambiguates with a model trained without the query, inferring the
/// query vector.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn acrodis_disambiguate_with_model(
    ds: *const AcrodisDataset,
    model: *const AcrodisModel,
    acronym: *const c_char,
    context: *const c_char,
    out: *mut *mut AcrodisResult,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ds = ref_arg(ds, "dataset")?;
        let model = ref_arg(model, "model")?;
        let acronym = str_arg(acronym, "acronym")?;
        let record = find_record(ds, acronym)?;
        let query = Query::new(acronym, str_arg(context, "context")?);
        let result = disambiguate_with_model(record, &model.model, &query).map_err(fail)?;
        *out = wrap_result(result);
        Ok(())
    })
}

/// Selected expansion, borrowed from the result.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_selected(res: *const AcrodisResult) -> *const c_char {
    res.as_ref().map_or(ptr::null(), |r| r.selected.as_ptr())
}

/// Number of ranked expansions; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_len(res: *const AcrodisResult) -> usize {
    res.as_ref().map_or(0, |r| r.expansions.len())
}

/// Expansion at `rank` (0 = best), borrowed from the result; null when out
/// of range.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_expansion(res: *const AcrodisResult, rank: usize) -> *const c_char {
    res.as_ref()
        .and_then(|r| r.expansions.get(rank))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `res` must be a live result handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_similarity(
    res: *const AcrodisResult,
    rank: usize,
    out: *mut f64,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let r = ref_arg(res, "result")?;
        let item = r.result.ranked.get(rank).ok_or_else(|| {
            (
                AcrodisStatus::InvalidArgument,
                format!("rank {rank} out of range (len {})", r.result.ranked.len()),
            )
        })?;
        *out = item.similarity;
        Ok(())
    })
}

/// The result as one JSON line, in a new string.
///
/// # Safety
/// `res` must be a live result handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_to_json(res: *const AcrodisResult, out: *mut *mut c_char) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let r = ref_arg(res, "result")?;
        *out = into_c_string(&r.result.to_json_line()).into_raw();
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a result handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn acrodis_result_free(res: *mut AcrodisResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Whether `phrase` can expand `acronym` under the default rules and stop
/// words.
///
/// # Safety
/// Strings must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_matches_expansion(
    acronym: *const c_char,
    phrase: *const c_char,
    out: *mut bool,
) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        let acronym = str_arg(acronym, "acronym")?;
        let phrase = str_arg(phrase, "phrase")?;
        let rules = MatchRuleConfig::for_acronym(acronym);
        *out = matches_expansion(acronym, phrase, &StopwordList::default(), &rules);
        Ok(())
    })
}

/// Ratcliff/Obershelp similarity of two strings after normalization.
///
/// # Safety
/// Strings must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acrodis_sequence_ratio(a: *const c_char, b: *const c_char, out: *mut f64) -> AcrodisStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = sequence_ratio(str_arg(a, "a")?, str_arg(b, "b")?);
        Ok(())
    })
}
