//! C ABI for teachplay.
//!
//! Every function returns a `TpStatus`; results go through out-pointers.
//! On failure, `tp_last_error` returns a message describing the most recent
//! error on the calling thread. Strings handed out by the library must be
//! released with `tp_string_free`, handles with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use teachplay::coherence::LexicalBaseline;
use teachplay::eval::pearson_agreement;
use teachplay::policy::{DecodeMode, PolicyParams};
use teachplay::rewards::{attribute_rewards, coverage_reward, mixed_reward, RewardConfig};
use teachplay::selfplay::{run_conversation, ConversationRecord, Passage, PassageSource};
use teachplay::student::RuleStudent;
use teachplay::textproc::{tokenize, RougeVariant};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    RuntimeError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpRougeVariant {
    R1 = 0,
    R2 = 1,
    RL = 2,
}

/// Opaque teacher policy.
pub struct TpPolicy {
    params: PolicyParams,
}

/// Opaque passage.
pub struct TpPassage {
    passage: Passage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(TpStatus, String);

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TpStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside teachplay");
            TpStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(TpStatus::RuntimeError, "output contains a NUL byte".into()))
}

/// Message for the last failed call on this thread, or NULL. Free with
/// `tp_string_free`.
#[no_mangle]
pub extern "C" fn tp_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(m) => m.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Untrained policy (all weights zero).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_policy_new(out: *mut *mut TpPolicy) -> TpStatus {
    guard(|| {
        let h = Box::into_raw(Box::new(TpPolicy {
            params: PolicyParams::zeros(),
        }));
        write_out(out, h, "out")
    })
}

/// Load a policy checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_policy_load(path: *const c_char, out: *mut *mut TpPolicy) -> TpStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let params =
            PolicyParams::load(Path::new(path)).map_err(|e| Fail(TpStatus::DataError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(TpPolicy { params })), "out")
    })
}

/// Parse a policy from checkpoint JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_policy_from_json(json: *const c_char, out: *mut *mut TpPolicy) -> TpStatus {
    guard(|| {
        let json = read_str(json, "json")?;
        let params = PolicyParams::from_checkpoint_json(json, "<memory>")
            .map_err(|e| Fail(TpStatus::DataError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(TpPolicy { params })), "out")
    })
}

/// Checkpoint JSON of a policy. Free the string with `tp_string_free`.
///
/// # Safety
/// `policy` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_policy_to_json(policy: *const TpPolicy, out: *mut *mut c_char) -> TpStatus {
    guard(|| {
        let policy = policy.as_ref().ok_or_else(|| null("policy"))?;
        let s = to_c_string(policy.params.to_checkpoint_json())?;
        write_out(out, s, "out")
    })
}

/// # Safety
/// `policy` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tp_policy_free(policy: *mut TpPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Build a passage from raw text.
///
/// # Safety
/// `id` and `text` must be NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_passage_new(
    id: *const c_char,
    text: *const c_char,
    out: *mut *mut TpPassage,
) -> TpStatus {
    guard(|| {
        let id = read_str(id, "id")?;
        let text = read_str(text, "text")?;
        let passage = Passage::new(id, text, PassageSource::Other);
        if passage.tokens.is_empty() {
            return Err(Fail(TpStatus::InvalidArgument, "passage text has no tokens".into()));
        }
        write_out(out, Box::into_raw(Box::new(TpPassage { passage })), "out")
    })
}

/// Number of sentences the passage was split into.
///
/// # Safety
/// `passage` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_passage_sentence_count(passage: *const TpPassage, out: *mut usize) -> TpStatus {
    guard(|| {
        let p = passage.as_ref().ok_or_else(|| null("passage"))?;
        write_out(out, p.passage.sentences.len(), "out")
    })
}

/// # Safety
/// `passage` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tp_passage_free(passage: *mut TpPassage) {
    if !passage.is_null() {
        drop(Box::from_raw(passage));
    }
}

/// ROUGE F1 of `candidate` against `reference`.
///
/// # Safety
/// Strings must be NUL-terminated, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_rouge(
    reference: *const c_char,
    candidate: *const c_char,
    variant: TpRougeVariant,
    out: *mut f64,
) -> TpStatus {
    guard(|| {
        let r = tokenize(read_str(reference, "reference")?);
        let c = tokenize(read_str(candidate, "candidate")?);
        let v = match variant {
            TpRougeVariant::R1 => RougeVariant::R1,
            TpRougeVariant::R2 => RougeVariant::R2,
            TpRougeVariant::RL => RougeVariant::RL,
        };
        write_out(out, v.score(&r, &c), "out")
    })
}

/// Coverage reward of `utterance` given `history`, clipped at `cov_clip`.
/// `out_raw` may be NULL.
///
/// # Safety
/// `passage` must be a live handle, strings NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tp_coverage_reward(
    passage: *const TpPassage,
    history: *const c_char,
    utterance: *const c_char,
    cov_clip: f64,
    out: *mut f64,
    out_raw: *mut f64,
) -> TpStatus {
    guard(|| {
        let p = passage.as_ref().ok_or_else(|| null("passage"))?;
        let cfg = RewardConfig {
            cov_clip,
            ..RewardConfig::default()
        };
        cfg.validate()
            .map_err(|e| Fail(TpStatus::InvalidArgument, e.to_string()))?;
        let cov = coverage_reward(
            &p.passage.tokens,
            &tokenize(read_str(history, "history")?),
            &tokenize(read_str(utterance, "utterance")?),
            &cfg,
        )
        .map_err(|e| Fail(TpStatus::RuntimeError, e.to_string()))?;
        if !out_raw.is_null() {
            out_raw.write(cov.r_cov_raw);
        }
        write_out(out, cov.r_cov, "out")
    })
}

/// `beta * r_cov + (1 - beta) * r_coh`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_mixed_reward(r_cov: f64, r_coh: f64, beta: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Fail(TpStatus::InvalidArgument, format!("beta must lie in [0, 1], got {beta}")));
        }
        write_out(out, mixed_reward(r_cov, r_coh, beta), "out")
    })
}

/// One self-play conversation with the rule-based student, scored with the
/// lexical coherence proxy, as JSON `{"passage_id", "turns", "rewards"}`.
///
/// # Safety
/// Handles must be live, `out` a valid pointer. Free the string with
/// `tp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tp_selfplay_json(
    passage: *const TpPassage,
    policy: *const TpPolicy,
    n_turns: usize,
    seed: u64,
    greedy: bool,
    beta: f64,
    out: *mut *mut c_char,
) -> TpStatus {
    guard(|| {
        let p = passage.as_ref().ok_or_else(|| null("passage"))?;
        let pol = policy.as_ref().ok_or_else(|| null("policy"))?;
        let cfg = RewardConfig {
            beta,
            ..RewardConfig::default()
        };
        cfg.validate()
            .map_err(|e| Fail(TpStatus::InvalidArgument, e.to_string()))?;
        if n_turns == 0 {
            return Err(Fail(TpStatus::InvalidArgument, "n_turns must be at least 1".into()));
        }
        let mode = if greedy { DecodeMode::Greedy } else { DecodeMode::Sampled };
        let conv = run_conversation(&p.passage, &pol.params, &RuleStudent::default(), n_turns, mode, seed)
            .map_err(|e| Fail(TpStatus::RuntimeError, e.to_string()))?;
        let rewards = attribute_rewards(&p.passage, &conv, &cfg, &LexicalBaseline)
            .map_err(|e| Fail(TpStatus::RuntimeError, e.to_string()))?;
        let json = serde_json::to_string(&ConversationRecord::new(&conv, rewards))
            .map_err(|e| Fail(TpStatus::RuntimeError, e.to_string()))?;
        write_out(out, to_c_string(json)?, "out")
    })
}

/// Pearson correlation of two rating arrays of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` doubles each, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_pearson(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> TpStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("ratings"));
        }
        let a = std::slice::from_raw_parts(a, n);
        let b = std::slice::from_raw_parts(b, n);
        let r = pearson_agreement(a, b).map_err(|e| Fail(TpStatus::InvalidArgument, e.to_string()))?;
        write_out(out, r, "out")
    })
}
