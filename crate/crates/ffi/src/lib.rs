//! C ABI over `proofsmith`.
//!
//! Conventions:
//!
//! * Every fallible call returns a [`PsStatus`]; results go through out
//!   pointers. On failure the message is available from
//!   [`ps_last_error_message`] on the same thread.
//! * Strings in are NUL-terminated UTF-8. Strings out are owned by the
//!   caller and must be released with [`ps_string_free`].
//! * Handles ([`PsOracle`], [`PsKb`]) are opaque and released with their
//!   `_free` function. A handle may be shared across threads for reading.
//! * Structured values (configs, proofs, metrics) cross as JSON, using the
//!   same shapes as the CLI's record files.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use proofsmith::kb::{self, KbIndex};
use proofsmith::metrics::{self, ScoreMode};
use proofsmith::oracle::{MockOracle, NliLabel, Oracle, RemoteOracle};
use proofsmith::search::{self, Proof, SearchConfig, SearchMethod};
use proofsmith::text::{bleu4, jaccard, Sentence};
use proofsmith::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    OracleUnavailable = 4,
    Protocol = 5,
    Io = 6,
    Format = 7,
    Internal = 99,
}

/// A generation / embedding / judging backend.
pub struct PsOracle {
    inner: Box<dyn Oracle>,
}

/// An embedded fact index, tied to the oracle that built it.
pub struct PsKb {
    index: KbIndex,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::OracleUnavailable(_) => PsStatus::OracleUnavailable,
            Error::Protocol(_) => PsStatus::Protocol,
            Error::Io { .. } | Error::Cache(_) => PsStatus::Io,
            Error::Format { .. } | Error::Json(_) | Error::DuplicateKbId(_) => PsStatus::Format,
            _ => PsStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PsStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(PsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(PsStatus::NullPointer, "output pointer is null".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(PsStatus::Internal, "interior NUL in output".into()))?;
    put(out, c.into_raw())
}

fn sentence(text: &str) -> Result<Sentence, Fail> {
    Ok(Sentence::new(text)?)
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PsStatus::InvalidArgument, msg.into())
}

fn config(json: Option<&str>) -> Result<SearchConfig, Fail> {
    let cfg: SearchConfig = match json {
        Some(j) => serde_json::from_str(j).map_err(Error::from)?,
        None => SearchConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn to_json_array(proofs: &[Proof]) -> Result<String, Fail> {
    Ok(serde_json::to_string(proofs).map_err(Error::from)?)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call on this thread; do not free it.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Deterministic offline oracle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_oracle_mock_new(out: *mut *mut PsOracle) -> PsStatus {
    guard(|| {
        let o = Box::new(PsOracle { inner: Box::new(MockOracle::default()) });
        put(out, Box::into_raw(o))
    })
}

/// HTTP client for a model sidecar at `base_url`. No request is made here.
///
/// # Safety
/// `base_url` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_oracle_remote_new(base_url: *const c_char, out: *mut *mut PsOracle) -> PsStatus {
    guard(|| {
        let url = str_arg(base_url, "base_url")?;
        let o = Box::new(PsOracle { inner: Box::new(RemoteOracle::new(url)?) });
        put(out, Box::into_raw(o))
    })
}

/// # Safety
/// `oracle` must come from a `ps_oracle_*_new` call, or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_oracle_free(oracle: *mut PsOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Sentence BLEU-4 of `candidate` against `reference` after normalization.
///
/// # Safety
/// Both strings must be valid C strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_bleu4(candidate: *const c_char, reference: *const c_char, out: *mut f64) -> PsStatus {
    guard(|| {
        let c = sentence(str_arg(candidate, "candidate")?)?;
        let r = sentence(str_arg(reference, "reference")?)?;
        put(out, bleu4(c.tokens(), r.tokens())?)
    })
}

/// Token-set Jaccard similarity after normalization.
///
/// # Safety
/// Both strings must be valid C strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_jaccard(a: *const c_char, b: *const c_char, out: *mut f64) -> PsStatus {
    guard(|| {
        let a = sentence(str_arg(a, "a")?)?;
        let b = sentence(str_arg(b, "b")?)?;
        put(out, jaccard(a.tokens(), b.tokens())?)
    })
}

/// Embeds the facts in `paths` (plain text or TSV files) with `oracle`.
///
/// # Safety
/// `paths` must point to `n_paths` valid C strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_kb_new(
    oracle: *const PsOracle,
    paths: *const *const c_char,
    n_paths: usize,
    out: *mut *mut PsKb,
) -> PsStatus {
    guard(|| {
        let oracle = handle(oracle, "oracle")?;
        if paths.is_null() || n_paths == 0 {
            return Err(invalid("at least one KB path is required"));
        }
        let files = std::slice::from_raw_parts(paths, n_paths)
            .iter()
            .map(|&p| str_arg(p, "path").map(PathBuf::from))
            .collect::<Result<Vec<_>, _>>()?;
        let index = kb::build_index(&files, oracle.inner.as_ref())?;
        put(out, Box::into_raw(Box::new(PsKb { index })))
    })
}

/// Number of facts in the index.
///
/// # Safety
/// `kb` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ps_kb_len(kb: *const PsKb) -> usize {
    kb.as_ref().map_or(0, |k| k.index.len())
}

/// # Safety
/// `kb` must come from `ps_kb_new`, or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_kb_free(kb: *mut PsKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Runs one proof search and writes a JSON array of proof records to `out`.
///
/// `method` is `level`, `beam`, `none` or `facts`; `facts` needs `kb`, the
/// others ignore it. `config_json` is a search-config object (unknown keys
/// are rejected) or null for defaults.
///
/// # Safety
/// String arguments must be valid C strings (`config_json` may be null),
/// handles live, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_prove(
    oracle: *const PsOracle,
    kb: *const PsKb,
    method: *const c_char,
    premise: *const c_char,
    hypothesis: *const c_char,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let oracle = handle(oracle, "oracle")?.inner.as_ref();
        let method: SearchMethod = str_arg(method, "method")?.parse()?;
        let p = sentence(str_arg(premise, "premise")?)?;
        let h = sentence(str_arg(hypothesis, "hypothesis")?)?;
        let cfg = config(opt_str_arg(config_json, "config_json")?)?;
        let proofs = match method {
            SearchMethod::Facts => {
                let kb = handle(kb, "kb")?;
                vec![search::fact_proof_search(&p, &h, NliLabel::Entailment, &kb.index, &cfg, oracle)?.0]
            }
            m => search::unconstrained_search(m, &p, &h, NliLabel::Entailment, &cfg, oracle, oracle)?,
        };
        put_string(out, to_json_array(&proofs)?)
    })
}

/// Scores one proof record (JSON object) and writes its metrics as JSON.
/// `mode` is `plain`, `fact_concat`, or null for `plain`.
///
/// # Safety
/// `proof_json` must be a valid C string, `mode` a valid C string or null,
/// `oracle` live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_score_proof(
    oracle: *const PsOracle,
    proof_json: *const c_char,
    mode: *const c_char,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let oracle = handle(oracle, "oracle")?.inner.as_ref();
        let proof = Proof::from_record(str_arg(proof_json, "proof_json")?)?;
        let mode: ScoreMode = match opt_str_arg(mode, "mode")? {
            Some(m) => m.parse()?,
            None => ScoreMode::Plain,
        };
        let m = metrics::score_proof(&proof, oracle, oracle, mode)?;
        put_string(out, serde_json::to_string(&m).map_err(Error::from)?)
    })
}
