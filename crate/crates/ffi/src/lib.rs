//! C ABI over `chronolm`.
//!
//! Objects cross the boundary as opaque handles created by a `*_load`
//! function and released by the matching `*_free`. Every fallible call
//! returns a [`ChronolmStatus`]; on failure the message is kept per thread
//! and read with [`chronolm_last_error`]. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use chronolm::citegraph::{auc_roc, score_pairs, CitationGraph, PprParams, Predictor};
use chronolm::mlm::{encode_cls, token_probability, Checkpoint, Model};
use chronolm::series::interpolate;
use chronolm::vocab::Vocabulary;
use chronolm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChronolmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    MissingInput = 3,
    Malformed = 4,
    Config = 5,
    Runtime = 6,
    OutOfVocabulary = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A vocabulary read from its TSV file.
pub struct ChronolmVocab(Vocabulary);

/// A checkpoint loaded as an inference model.
pub struct ChronolmModel {
    model: Model<f32>,
    year: i32,
}

/// A citation graph read from `nodes.tsv` and `edges.tsv`.
pub struct ChronolmGraph(CitationGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ChronolmStatus {
    match e {
        Error::MissingInput(_) => ChronolmStatus::MissingInput,
        Error::Malformed(_) | Error::Json(_) | Error::Checkpoint(_) => ChronolmStatus::Malformed,
        Error::Config(_) => ChronolmStatus::Config,
        Error::OutOfVocabulary(_) => ChronolmStatus::OutOfVocabulary,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            ChronolmStatus::MissingInput
        }
        _ => ChronolmStatus::Runtime,
    }
}

struct Fail(ChronolmStatus, String);

impl From<chronolm::mlm::CheckpointError> for Fail {
    fn from(e: chronolm::mlm::CheckpointError) -> Self {
        Error::from(e).into()
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> ChronolmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ChronolmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ChronolmStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ChronolmStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            ChronolmStatus::InvalidUtf8,
            format!("`{what}` is not UTF-8"),
        )
    })
}

unsafe fn c_path(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    c_str(p, what).map(PathBuf::from)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn chronolm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn chronolm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chronolm_vocab_load(
    path: *const c_char,
    out: *mut *mut ChronolmVocab,
) -> ChronolmStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let v = Vocabulary::read_tsv(&c_path(path, "path")?)?;
        *slot = Box::into_raw(Box::new(ChronolmVocab(v)));
        Ok(())
    })
}

/// Number of entries including special tokens; 0 for NULL.
///
/// # Safety
/// `vocab` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chronolm_vocab_size(vocab: *const ChronolmVocab) -> usize {
    vocab.as_ref().map_or(0, |v| v.0.size())
}

/// # Safety
/// `vocab` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chronolm_vocab_free(vocab: *mut ChronolmVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chronolm_model_load(
    path: *const c_char,
    out: *mut *mut ChronolmModel,
) -> ChronolmStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let ckpt = Checkpoint::load(&c_path(path, "path")?)?;
        let model = ckpt.to_model::<f32>()?;
        *slot = Box::into_raw(Box::new(ChronolmModel {
            model,
            year: ckpt.meta.trained_through_year,
        }));
        Ok(())
    })
}

/// Last corpus year the checkpoint was trained through; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chronolm_model_year(model: *const ChronolmModel) -> i32 {
    model.as_ref().map_or(0, |m| m.year)
}

/// Width of the [CLS] feature vector; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chronolm_model_hidden_size(model: *const ChronolmModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.config.d_model)
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chronolm_model_free(model: *mut ChronolmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Probability of `token` at the single `[MASK]` of `sentence`.
///
/// # Safety
/// Handles must be live, strings valid, `probability` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chronolm_token_probability(
    model: *const ChronolmModel,
    vocab: *const ChronolmVocab,
    sentence: *const c_char,
    token: *const c_char,
    probability: *mut f64,
) -> ChronolmStatus {
    guard(|| {
        let (m, v) = (handle(model, "model")?, handle(vocab, "vocab")?);
        let p = token_probability(
            &m.model,
            &v.0,
            c_str(sentence, "sentence")?,
            c_str(token, "token")?,
        )?;
        *out_ref(probability, "probability")? = p;
        Ok(())
    })
}

/// Writes the [CLS] vector of `text` into `buffer`. `written` receives the
/// vector length even when `capacity` is too small.
///
/// # Safety
/// Handles must be live, `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn chronolm_encode_cls(
    model: *const ChronolmModel,
    vocab: *const ChronolmVocab,
    text: *const c_char,
    buffer: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ChronolmStatus {
    guard(|| {
        let (m, v) = (handle(model, "model")?, handle(vocab, "vocab")?);
        let written = out_ref(written, "written")?;
        let cls = encode_cls(&m.model, &v.0, c_str(text, "text")?);
        *written = cls.len();
        if capacity < cls.len() {
            return Err(Fail(
                ChronolmStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {} needed", cls.len()),
            ));
        }
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        std::slice::from_raw_parts_mut(buffer, cls.len()).copy_from_slice(&cls);
        Ok(())
    })
}

/// Writes `(1 - lambda) * a + lambda * b` to `out_path`.
///
/// # Safety
/// All paths must be valid C strings.
#[no_mangle]
pub unsafe extern "C" fn chronolm_interpolate(
    a_path: *const c_char,
    b_path: *const c_char,
    lambda: f64,
    out_path: *const c_char,
) -> ChronolmStatus {
    guard(|| {
        let a = Checkpoint::load(&c_path(a_path, "a_path")?)?;
        let b = Checkpoint::load(&c_path(b_path, "b_path")?)?;
        interpolate(&a, &b, lambda)?.save(&c_path(out_path, "out_path")?)?;
        Ok(())
    })
}

/// # Safety
/// Paths must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chronolm_graph_load(
    nodes_path: *const c_char,
    edges_path: *const c_char,
    out: *mut *mut ChronolmGraph,
) -> ChronolmStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let g = CitationGraph::load(
            &c_path(nodes_path, "nodes_path")?,
            &c_path(edges_path, "edges_path")?,
        )?;
        *slot = Box::into_raw(Box::new(ChronolmGraph(g)));
        Ok(())
    })
}

/// Node count; 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chronolm_graph_num_nodes(graph: *const ChronolmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Index of the node with identifier `id`.
///
/// # Safety
/// `graph` must be live, `id` valid and `index` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chronolm_graph_node_index(
    graph: *const ChronolmGraph,
    id: *const c_char,
    index: *mut usize,
) -> ChronolmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let id = c_str(id, "id")?;
        let i =
            g.0.node(id)
                .ok_or_else(|| Fail(ChronolmStatus::Config, format!("no node `{id}`")))?;
        *out_ref(index, "index")? = i;
        Ok(())
    })
}

/// Scores `n` node pairs `(sources[i], targets[i])` with a topological
/// predictor: `cn`, `jc`, `pa`, `aa`, `ra` or `ppr` (restart 0.15).
///
/// # Safety
/// `graph` must be live; the three arrays must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn chronolm_graph_score(
    graph: *const ChronolmGraph,
    predictor: *const c_char,
    sources: *const usize,
    targets: *const usize,
    n: usize,
    scores: *mut f64,
) -> ChronolmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let pred: Predictor = c_str(predictor, "predictor")?.parse()?;
        if n == 0 {
            return Ok(());
        }
        if sources.is_null() || targets.is_null() || scores.is_null() {
            return Err(null("sources, targets or scores"));
        }
        let us = std::slice::from_raw_parts(sources, n);
        let vs = std::slice::from_raw_parts(targets, n);
        let nodes = g.0.num_nodes();
        let pairs: Vec<(usize, usize)> = us.iter().copied().zip(vs.iter().copied()).collect();
        if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u >= nodes || v >= nodes) {
            return Err(Fail(
                ChronolmStatus::Config,
                format!("pair ({u}, {v}) outside {nodes} nodes"),
            ));
        }
        let s = score_pairs(&g.0, &pairs, pred, &PprParams::default())?;
        std::slice::from_raw_parts_mut(scores, n).copy_from_slice(&s);
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chronolm_graph_free(graph: *mut ChronolmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Rank-based ROC AUC with ties counted half. `labels` holds 0 or 1.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `auc` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chronolm_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    auc: *mut f64,
) -> ChronolmStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() {
            return Err(null("scores or labels"));
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l: Vec<bool> = std::slice::from_raw_parts(labels, n)
            .iter()
            .map(|&b| b != 0)
            .collect();
        *out_ref(auc, "auc")? = auc_roc(s, &l)?;
        Ok(())
    })
}
