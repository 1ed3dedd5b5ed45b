//! C ABI over the refinement toolkit.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free`. Every fallible call returns an [`MrStatus`]; on failure
//! [`mr_last_error`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use misinfo_refine::cli::{execute, Command, Common};
use misinfo_refine::config::RunConfig;
use misinfo_refine::detector::{entropy, DetectorModel};
use misinfo_refine::finegrained::FineLabel;
use misinfo_refine::metrics::{average_precision, cohens_kappa, roc_auc};
use misinfo_refine::refinement::{assign_action, ActionKind, MState, SState};
use misinfo_refine::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Config = 5,
    Schema = 6,
    NoWeakLabels = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrModelState {
    LowConfidence = 0,
    Consistent = 1,
    Inconsistent = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrSocialState {
    Unknown = 0,
    Consistent = 1,
    Inconsistent = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrAction {
    Retain = 0,
    Flip = 1,
    Query = 2,
    Remove = 3,
}

/// Pipeline stages runnable through [`mr_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrCommand {
    Ingest = 0,
    Weaklabel = 1,
    Communities = 2,
    Train = 3,
    Refine = 4,
    Evaluate = 5,
    Finegrained = 6,
    Synth = 7,
}

/// Run configuration handle.
pub struct MrConfig {
    inner: RunConfig,
}

/// Trained detector handle.
pub struct MrModel {
    inner: DetectorModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(Failure::status_of(&e), e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let message = format!("{e:#}");
        let status = match e.downcast_ref::<Error>() {
            Some(inner) => Failure::status_of(inner),
            None if e.downcast_ref::<std::io::Error>().is_some() => MrStatus::Io,
            None if e.downcast_ref::<serde_json::Error>().is_some() => MrStatus::Schema,
            None => MrStatus::Internal,
        };
        Failure(status, message)
    }
}

impl Failure {
    fn status_of(e: &Error) -> MrStatus {
        match e {
            Error::Io { .. } | Error::Write { .. } => MrStatus::Io,
            Error::ConfigKey(_) | Error::ConfigValue { .. } => MrStatus::Config,
            Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => MrStatus::Schema,
            Error::NoWeakLabels => MrStatus::NoWeakLabels,
            Error::Internal(_) => MrStatus::Internal,
            _ => MrStatus::InvalidArgument,
        }
    }

    fn null(what: &str) -> Self {
        Failure(MrStatus::NullPointer, format!("{what} is null"))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            MrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(MrStatus::Internal, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_config_new(out: *mut *mut MrConfig) -> MrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(MrConfig {
            inner: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Configuration from a JSON document; missing keys take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_config_from_json(json: *const c_char, out: *mut *mut MrConfig) -> MrStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let inner = RunConfig::from_json(text)?;
        *out = Box::into_raw(Box::new(MrConfig { inner }));
        Ok(())
    })
}

/// Sets one value by dotted key. `value` is read as JSON when it parses,
/// otherwise as a string. The handle is unchanged on failure.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mr_config_set(config: *mut MrConfig, key: *const c_char, value: *const c_char) -> MrStatus {
    guard(|| {
        let config = out_arg(config, "config")?;
        let pair = (str_arg(key, "key")?.to_string(), str_arg(value, "value")?.to_string());
        config.inner = config.inner.with_overrides(&[pair])?;
        Ok(())
    })
}

/// Sets every seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mr_config_set_seed(config: *mut MrConfig, seed: u64) -> MrStatus {
    guard(|| {
        out_arg(config, "config")?.inner.set_seed(seed);
        Ok(())
    })
}

/// Pretty JSON of the configuration; release with [`mr_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_config_to_json(config: *const MrConfig, out: *mut *mut c_char) -> MrStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| Failure::null("config"))?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(config.inner.to_pretty_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_config_free(config: *mut MrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one pipeline stage, reading the default input files from
/// `data_dir` and writing artifacts into `out_dir`. Interactive refinement
/// is not available here; the configured mode must be autonomous.
///
/// # Safety
/// `config` must be a live handle; the directories NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mr_run(
    config: *const MrConfig,
    command: MrCommand,
    data_dir: *const c_char,
    out_dir: *const c_char,
) -> MrStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| Failure::null("config"))?;
        let common = Common::in_dirs(str_arg(data_dir, "data_dir")?, str_arg(out_dir, "out_dir")?);
        if config.inner.refinement.mode != misinfo_refine::refinement::Mode::Autonomous {
            return Err(Failure(MrStatus::InvalidArgument, "mr_run needs refinement.mode = autonomous".into()));
        }
        let command = match command {
            MrCommand::Ingest => Command::Ingest,
            MrCommand::Weaklabel => Command::Weaklabel,
            MrCommand::Communities => Command::Communities,
            MrCommand::Train => Command::Train,
            MrCommand::Refine => Command::Refine,
            MrCommand::Evaluate => Command::Evaluate,
            MrCommand::Finegrained => Command::Finegrained,
            MrCommand::Synth => Command::Synth,
        };
        execute(command, common, config.inner.clone())?;
        Ok(())
    })
}

/// Loads a detector written by `train` or `refine`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_model_load(path: *const c_char, out: *mut *mut MrModel) -> MrStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = DetectorModel::load(path)?;
        *out = Box::into_raw(Box::new(MrModel { inner }));
        Ok(())
    })
}

/// Misinformation-probability threshold selected on validation data.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_model_threshold(model: *const MrModel, out: *mut f64) -> MrStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        *out_arg(out, "out")? = model.inner.decision_threshold();
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_model_free(model: *mut MrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Natural-log entropy of a probability vector.
///
/// # Safety
/// `probs` must point to `len` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_entropy(probs: *const f64, len: usize, out: *mut f64) -> MrStatus {
    guard(|| {
        let probs = slice_arg(probs, len, "probs")?;
        if probs.is_empty() {
            return Err(Failure(MrStatus::InvalidArgument, "probs is empty".into()));
        }
        *out_arg(out, "out")? = entropy(probs);
        Ok(())
    })
}

/// The action the refinement policy takes for a pair of states.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_assign_action(m: MrModelState, s: MrSocialState, out: *mut MrAction) -> MrStatus {
    guard(|| {
        let m = match m {
            MrModelState::LowConfidence => MState::LowConfidence,
            MrModelState::Consistent => MState::Consistent,
            MrModelState::Inconsistent => MState::Inconsistent,
        };
        let s = match s {
            MrSocialState::Unknown => SState::Unknown,
            MrSocialState::Consistent => SState::Consistent,
            MrSocialState::Inconsistent => SState::Inconsistent,
        };
        *out_arg(out, "out")? = match assign_action(m, s).value {
            ActionKind::Retain => MrAction::Retain,
            ActionKind::Flip => MrAction::Flip,
            ActionKind::Query => MrAction::Query,
            ActionKind::Remove => MrAction::Remove,
        };
        Ok(())
    })
}

/// Binary label of a fine-grained label name: 1 misinformation, 0 not.
///
/// # Safety
/// `label` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mr_binarize_fine_label(label: *const c_char, out: *mut u8) -> MrStatus {
    guard(|| {
        let raw = str_arg(label, "label")?;
        let label = FineLabel::parse(raw).ok_or_else(|| {
            let allowed: Vec<&str> = FineLabel::ALL.iter().map(|l| l.as_str()).collect();
            Failure(MrStatus::InvalidArgument, format!("unknown label {raw:?}; allowed: {}", allowed.join(", ")))
        })?;
        *out_arg(out, "out")? = label.binarize();
        Ok(())
    })
}

unsafe fn scored(scores: *const f64, labels: *const u8, len: usize, f: fn(&[f64], &[u8]) -> misinfo_refine::Result<f64>, out: *mut f64) -> MrStatus {
    guard(|| {
        let s = slice_arg(scores, len, "scores")?;
        let l = slice_arg(labels, len, "labels")?;
        *out_arg(out, "out")? = f(s, l)?;
        Ok(())
    })
}

/// Average precision of `scores` against binary `labels`.
///
/// # Safety
/// `scores` and `labels` must point to `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mr_average_precision(scores: *const f64, labels: *const u8, len: usize, out: *mut f64) -> MrStatus {
    scored(scores, labels, len, average_precision, out)
}

/// Area under the ROC curve, ties counted half.
///
/// # Safety
/// `scores` and `labels` must point to `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mr_roc_auc(scores: *const f64, labels: *const u8, len: usize, out: *mut f64) -> MrStatus {
    scored(scores, labels, len, roc_auc, out)
}

/// Cohen's kappa between two labelings of the same items.
///
/// # Safety
/// `a` and `b` must point to `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mr_cohens_kappa(a: *const u32, b: *const u32, len: usize, out: *mut f64) -> MrStatus {
    guard(|| {
        let a = slice_arg(a, len, "a")?;
        let b = slice_arg(b, len, "b")?;
        *out_arg(out, "out")? = cohens_kappa(a, b)?;
        Ok(())
    })
}
