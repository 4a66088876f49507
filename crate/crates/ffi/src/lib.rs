//! C ABI for the weak-supervision engine: opaque handles over corpora and
//! label matrices, JSON strings for structured data, integer status codes,
//! and a thread-local last-error message. The header is generated into
//! `include/ontolabel.h` at build time.
//!
//! Ownership rules: every `char*` returned through an out-parameter is
//! allocated by this library and must be released with
//! [`ol_string_free`]; handles are released with their `_free` function.
//! All input strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::path::Path;

use ontolabel::corpus::{Corpus, TaskSchema, ingest_corpus, tokenize};
use ontolabel::error::Error;
use ontolabel::labelers::LabelMatrix;
use ontolabel::labelmodel::{
    LabelModelConfig, LabelModelParams, fit_label_model, lm_hard_labels, majority_vote,
    predict_proba,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Runtime = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn status_of(err: &Error) -> OlStatus {
    match err {
        Error::Io { .. } => OlStatus::Io,
        Error::Parse { .. } | Error::Format { .. } => OlStatus::Parse,
        Error::Config(_) => OlStatus::InvalidInput,
        _ => OlStatus::Runtime,
    }
}

fn fail(err: &Error) -> OlStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// # Safety
/// `ptr` must be NUL-terminated and valid for reads.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, OlStatus> {
    if ptr.is_null() {
        set_error("null argument");
        return Err(OlStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        OlStatus::InvalidUtf8
    })
}

fn give_string(out: *mut *mut c_char, value: String) -> OlStatus {
    if out.is_null() {
        set_error("null output pointer");
        return OlStatus::NullArgument;
    }
    let owned = CString::new(value.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = owned.into_raw() };
    OlStatus::Ok
}

fn parse_schema(class_names_csv: &str, default_class: u32) -> Result<TaskSchema, OlStatus> {
    let names: Vec<String> = class_names_csv.split(',').map(|s| s.trim().to_string()).collect();
    TaskSchema::new(names, default_class as usize).map_err(|e| fail(&e))
}

/// Library version as `name major.minor.patch`. Free with
/// [`ol_string_free`].
#[unsafe(no_mangle)]
pub extern "C" fn ol_version() -> *mut c_char {
    CString::new(concat!("ontolabel ", env!("CARGO_PKG_VERSION")))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Message for the most recent error on this thread, or NULL. Free with
/// [`ol_string_free`].
#[unsafe(no_mangle)]
pub extern "C" fn ol_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Release a string allocated by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed; NULL is ignored.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Tokenize text into sentences of tokens, returned as a JSON array of
/// `{"index", "tokens": [{"text", "char_start", "char_end"}]}`.
///
/// # Safety
/// `text` must be NUL-terminated UTF-8; `out_json` must be a valid
/// pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_tokenize_json(text: *const c_char, out_json: *mut *mut c_char) -> OlStatus {
    let text = match unsafe { read_str(text) } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let sentences = tokenize(text);
    match serde_json::to_string(&sentences) {
        Ok(json) => give_string(out_json, json),
        Err(e) => {
            set_error(&e.to_string());
            OlStatus::Runtime
        }
    }
}

/// Opaque corpus handle.
pub struct OlCorpus {
    corpus: Corpus,
}

/// Load a JSONL corpus file against a schema given as comma-separated
/// class names plus the default class index.
///
/// # Safety
/// String arguments must be NUL-terminated UTF-8; `out` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_corpus_load(
    path: *const c_char,
    class_names_csv: *const c_char,
    default_class: u32,
    out: *mut *mut OlCorpus,
) -> OlStatus {
    let (path, names) = match (unsafe { read_str(path) }, unsafe { read_str(class_names_csv) }) {
        (Ok(p), Ok(n)) => (p, n),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    if out.is_null() {
        set_error("null output pointer");
        return OlStatus::NullArgument;
    }
    let schema = match parse_schema(names, default_class) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match ingest_corpus(Path::new(path), &schema) {
        Ok(corpus) => {
            unsafe { *out = Box::into_raw(Box::new(OlCorpus { corpus })) };
            OlStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `c` must be a handle from [`ol_corpus_load`], not yet freed; NULL is
/// ignored.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_corpus_free(c: *mut OlCorpus) {
    if !c.is_null() {
        drop(unsafe { Box::from_raw(c) });
    }
}

/// # Safety
/// `c` must be a live corpus handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_corpus_num_documents(c: *const OlCorpus) -> i64 {
    if c.is_null() {
        return -1;
    }
    unsafe { &*c }.corpus.documents.len() as i64
}

/// # Safety
/// `c` must be a live corpus handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_corpus_num_tokens(c: *const OlCorpus) -> i64 {
    if c.is_null() {
        return -1;
    }
    unsafe { &*c }.corpus.num_tokens() as i64
}

/// # Safety
/// `c` must be a live corpus handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_corpus_num_gold_spans(c: *const OlCorpus) -> i64 {
    if c.is_null() {
        return -1;
    }
    unsafe { &*c }.corpus.gold_spans.len() as i64
}

/// Opaque label-matrix handle.
pub struct OlLabelMatrix {
    matrix: LabelMatrix,
}

/// Read a label matrix from its binary file (with the text sidecar next
/// to it).
///
/// # Safety
/// `path` must be NUL-terminated UTF-8; `out` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_label_matrix_read(
    path: *const c_char,
    out: *mut *mut OlLabelMatrix,
) -> OlStatus {
    let path = match unsafe { read_str(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    if out.is_null() {
        set_error("null output pointer");
        return OlStatus::NullArgument;
    }
    match LabelMatrix::read_binary(Path::new(path)) {
        Ok(matrix) => {
            unsafe { *out = Box::into_raw(Box::new(OlLabelMatrix { matrix })) };
            OlStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `m` must be a handle from [`ol_label_matrix_read`], not yet freed;
/// NULL is ignored.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_label_matrix_free(m: *mut OlLabelMatrix) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// # Safety
/// `m` must be a live matrix handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_label_matrix_rows(m: *const OlLabelMatrix) -> i64 {
    if m.is_null() {
        return -1;
    }
    unsafe { &*m }.matrix.n as i64
}

/// # Safety
/// `m` must be a live matrix handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_label_matrix_cols(m: *const OlLabelMatrix) -> i64 {
    if m.is_null() {
        return -1;
    }
    unsafe { &*m }.matrix.m as i64
}

/// A single vote (`-1` abstain, `0..k-1` a class); `-128` on bad indices.
///
/// # Safety
/// `m` must be a live matrix handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_label_matrix_vote(m: *const OlLabelMatrix, row: u64, col: u64) -> i8 {
    if m.is_null() {
        return -128;
    }
    let matrix = &unsafe { &*m }.matrix;
    if row as usize >= matrix.n || col as usize >= matrix.m {
        return -128;
    }
    matrix.get(row as usize, col as usize)
}

/// Fit the label model on a matrix. `config_json` may be NULL for
/// defaults. The fitted parameters are returned as JSON.
///
/// # Safety
/// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
/// `out_params_json` valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_fit_label_model(
    m: *const OlLabelMatrix,
    class_names_csv: *const c_char,
    default_class: u32,
    config_json: *const c_char,
    out_params_json: *mut *mut c_char,
) -> OlStatus {
    if m.is_null() {
        set_error("null matrix handle");
        return OlStatus::NullArgument;
    }
    let names = match unsafe { read_str(class_names_csv) } {
        Ok(n) => n,
        Err(status) => return status,
    };
    let schema = match parse_schema(names, default_class) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let config = if config_json.is_null() {
        LabelModelConfig::default()
    } else {
        let raw = match unsafe { read_str(config_json) } {
            Ok(r) => r,
            Err(status) => return status,
        };
        match serde_json::from_str(raw) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("bad label model config: {e}"));
                return OlStatus::Parse;
            }
        }
    };
    match fit_label_model(&unsafe { &*m }.matrix, &config, &schema) {
        Ok(params) => give_string(out_params_json, params.to_json()),
        Err(e) => fail(&e),
    }
}

/// Majority-vote hard labels as a JSON array of integers.
///
/// # Safety
/// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
/// `out_labels_json` valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_majority_vote_json(
    m: *const OlLabelMatrix,
    class_names_csv: *const c_char,
    default_class: u32,
    out_labels_json: *mut *mut c_char,
) -> OlStatus {
    if m.is_null() {
        set_error("null matrix handle");
        return OlStatus::NullArgument;
    }
    let names = match unsafe { read_str(class_names_csv) } {
        Ok(n) => n,
        Err(status) => return status,
    };
    let schema = match parse_schema(names, default_class) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let labels = majority_vote(&unsafe { &*m }.matrix, &schema);
    match serde_json::to_string(&labels) {
        Ok(json) => give_string(out_labels_json, json),
        Err(e) => {
            set_error(&e.to_string());
            OlStatus::Runtime
        }
    }
}

/// Posterior soft labels for a matrix under fitted parameters, written to
/// `out_path` as JSONL; hard labels are returned as a JSON array.
///
/// # Safety
/// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
/// `out_hard_json` valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_predict_proba_jsonl(
    m: *const OlLabelMatrix,
    params_json: *const c_char,
    class_names_csv: *const c_char,
    default_class: u32,
    out_path: *const c_char,
    out_hard_json: *mut *mut c_char,
) -> OlStatus {
    if m.is_null() {
        set_error("null matrix handle");
        return OlStatus::NullArgument;
    }
    let (raw_params, names, path) = match (
        unsafe { read_str(params_json) },
        unsafe { read_str(class_names_csv) },
        unsafe { read_str(out_path) },
    ) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
    };
    let schema = match parse_schema(names, default_class) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let params = match LabelModelParams::from_json(raw_params) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let dataset = predict_proba(&unsafe { &*m }.matrix, &params, &schema);
    if let Err(e) = std::fs::write(path, dataset.to_jsonl()) {
        set_error(&format!("write {path}: {e}"));
        return OlStatus::Io;
    }
    let hard = lm_hard_labels(&dataset, &schema);
    match serde_json::to_string(&hard) {
        Ok(json) => give_string(out_hard_json, json),
        Err(e) => {
            set_error(&e.to_string());
            OlStatus::Runtime
        }
    }
}

/// Run the whole pipeline for a configuration file into a run directory.
/// `seeds_csv` may be NULL to use the configured seeds.
///
/// # Safety
/// Strings must be NUL-terminated UTF-8.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ol_run_pipeline(
    config_path: *const c_char,
    out_dir: *const c_char,
    seeds_csv: *const c_char,
) -> OlStatus {
    let (config, out) = match (unsafe { read_str(config_path) }, unsafe { read_str(out_dir) }) {
        (Ok(c), Ok(o)) => (c, o),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let seeds = if seeds_csv.is_null() {
        None
    } else {
        let raw = match unsafe { read_str(seeds_csv) } {
            Ok(r) => r,
            Err(status) => return status,
        };
        let parsed: Result<Vec<u64>, _> = raw.split(',').map(|s| s.trim().parse::<u64>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() => Some(v),
            _ => {
                set_error(&format!("bad seeds list `{raw}`"));
                return OlStatus::InvalidInput;
            }
        }
    };
    match ontolabel::pipeline::run_pipeline(Path::new(config), Path::new(out), seeds) {
        Ok(_) => OlStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e.source)
        }
    }
}
