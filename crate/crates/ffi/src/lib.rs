//! C ABI for `seltag`.
//!
//! Fallible functions return a [`SeltagStatus`]. On failure the message can be
//! read with [`seltag_last_error`] on the same thread. Handles are opaque and
//! released with their `_free` function; strings returned through `char **`
//! are released with [`seltag_string_free`]. Measures and modes are passed as
//! the integer values of [`SeltagMeasure`] and [`SeltagMode`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use seltag::calibration::{build_cdfs, calibrate_threshold, collect_observations, AccuracyMode};
use seltag::confidence::{apply_policy, measure_value, ConfidenceMeasure, ThresholdPolicy};
use seltag::corpus::{parse_closed_tags, parse_tagged, train_model};
use seltag::evaluation::{evaluate, report};
use seltag::hmm::{forward_backward, HmmModel};
use seltag::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeltagStatus {
    Ok = 0,
    NullPointer,
    InvalidUtf8,
    Parse,
    InvalidModel,
    EmptyInput,
    DeadEnd,
    InvalidArgument,
    Io,
    TargetUnachievable,
    /// Not enough ambiguous, correct or incorrect tokens for the request.
    InsufficientData,
    Panic,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeltagMeasure {
    Probability = 0,
    Surprisal = 1,
    EntropyContribution = 2,
    Margin = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeltagMode {
    Oracle = 0,
    Ignore = 1,
}

/// A trained or loaded model.
pub struct SeltagModel {
    model: HmmModel,
    tag_names: Vec<CString>,
}

struct TokenOut {
    word: CString,
    tag: CString,
    probability: f64,
    value: f64,
    accepted: bool,
    hypotheses: usize,
}

/// The tagged tokens of one sentence.
pub struct SeltagTagging {
    tokens: Vec<TokenOut>,
}

/// One token of a [`SeltagTagging`]. The strings are owned by the tagging.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SeltagToken {
    pub word: *const c_char,
    /// Chosen tag, reported even when the token was rejected.
    pub tag: *const c_char,
    pub probability: f64,
    /// Value of the requested measure for the chosen tag.
    pub value: f64,
    pub accepted: bool,
    pub hypotheses: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SeltagCalibration {
    pub threshold: f64,
    pub s: f64,
    pub predicted_c: f64,
    pub predicted_i: f64,
    pub predicted_accuracy: f64,
    pub predicted_efficiency: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SeltagEvaluation {
    pub tokens: u64,
    pub ambiguous_tokens: u64,
    pub correct_accepted: u64,
    pub correct_rejected: u64,
    pub incorrect_accepted: u64,
    pub incorrect_rejected: u64,
    pub s: f64,
    pub c: f64,
    pub i: f64,
    pub a: f64,
    pub accuracy_oracle: f64,
    /// NaN when every ambiguous token was rejected.
    pub accuracy_ignore: f64,
    pub efficiency: f64,
    pub overall_accuracy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SeltagStatus, String);

fn status_of(e: &Error) -> SeltagStatus {
    match e {
        Error::Sentence { source, .. } => status_of(source),
        Error::DeadEnd { .. } | Error::ZeroLikelihood { .. } | Error::DegenerateHypothesis => SeltagStatus::DeadEnd,
        Error::Parse { .. } => SeltagStatus::Parse,
        Error::InvalidModel(_) | Error::Json(_) => SeltagStatus::InvalidModel,
        Error::EmptyInput | Error::EmptyCorpus => SeltagStatus::EmptyInput,
        Error::InvalidThreshold { .. } | Error::InvalidArgument(_) | Error::LengthMismatch { .. } => {
            SeltagStatus::InvalidArgument
        }
        Error::NoAmbiguousTokens | Error::EmptySubpopulation(_) | Error::UndefinedRate(_) => {
            SeltagStatus::InsufficientData
        }
        Error::TargetUnachievable { .. } => SeltagStatus::TargetUnachievable,
        Error::Io { .. } => SeltagStatus::Io,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SeltagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeltagStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SeltagStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(SeltagStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SeltagStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn model_arg<'a>(p: *const SeltagModel) -> Result<&'a SeltagModel, Failure> {
    p.as_ref().ok_or_else(|| null("model"))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

fn measure_arg(measure: u32) -> Result<ConfidenceMeasure, Failure> {
    match measure {
        0 => Ok(ConfidenceMeasure::Probability),
        1 => Ok(ConfidenceMeasure::Surprisal),
        2 => Ok(ConfidenceMeasure::EntropyContribution),
        3 => Ok(ConfidenceMeasure::Margin),
        m => Err(Failure(SeltagStatus::InvalidArgument, format!("unknown measure {m}"))),
    }
}

fn mode_arg(mode: u32) -> Result<AccuracyMode, Failure> {
    match mode {
        0 => Ok(AccuracyMode::Oracle),
        1 => Ok(AccuracyMode::Ignore),
        m => Err(Failure(SeltagStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

fn c_string(s: &str) -> CString {
    CString::new(s).unwrap_or_default()
}

fn wrap(model: HmmModel) -> *mut SeltagModel {
    let tag_names = model.tagset().tags().iter().map(|t| c_string(&t.name)).collect();
    Box::into_raw(Box::new(SeltagModel { model, tag_names }))
}

/// Message of the last failure on this thread, or an empty string. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn seltag_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a model from its JSON form.
///
/// # Safety
///
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_from_json(json: *const c_char, out: *mut *mut SeltagModel) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = HmmModel::from_json(str_arg(json, "json")?)?;
        *out = wrap(model);
        Ok(())
    })
}

/// Loads a model file.
///
/// # Safety
///
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_load(path: *const c_char, out: *mut *mut SeltagModel) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = HmmModel::load(str_arg(path, "path")?)?;
        *out = wrap(model);
        Ok(())
    })
}

/// Trains a model from tagged text (one sentence per line, `word/TAG`
/// tokens). `closed_tags` lists closed-class tags one per line and may be
/// null.
///
/// # Safety
///
/// String arguments must be NUL-terminated or null where allowed; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_train(
    tagged: *const c_char,
    closed_tags: *const c_char,
    out: *mut *mut SeltagModel,
) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let corpus = parse_tagged(str_arg(tagged, "tagged")?)?;
        let closed: BTreeSet<String> = if closed_tags.is_null() {
            BTreeSet::new()
        } else {
            parse_closed_tags(str_arg(closed_tags, "closed_tags")?)
        };
        *out = wrap(train_model(&corpus, &closed)?);
        Ok(())
    })
}

/// Serializes a model to JSON. Free the result with [`seltag_string_free`].
///
/// # Safety
///
/// `model` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_to_json(model: *const SeltagModel, out: *mut *mut c_char) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = c_string(&model_arg(model)?.model.to_json()).into_raw();
        Ok(())
    })
}

/// Writes a model to a file.
///
/// # Safety
///
/// `model` must come from this library and `path` be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_save(model: *const SeltagModel, path: *const c_char) -> SeltagStatus {
    guard(|| {
        model_arg(model)?.model.save(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Number of tags, or 0 for a null model.
///
/// # Safety
///
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_tag_count(model: *const SeltagModel) -> usize {
    model.as_ref().map_or(0, |m| m.tag_names.len())
}

/// Name of tag `index`, owned by the model; null if out of range.
///
/// # Safety
///
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_tag_name(model: *const SeltagModel, index: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.tag_names.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
///
/// `model` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn seltag_model_free(model: *mut SeltagModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
///
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn seltag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Threshold under which `measure` accepts every token.
#[no_mangle]
pub extern "C" fn seltag_accept_all_threshold(measure: u32) -> f64 {
    measure_arg(measure).map_or(f64::NAN, |m| m.accept_all_threshold())
}

/// Tags one whitespace-separated sentence and applies a threshold on
/// `measure`.
///
/// # Safety
///
/// `model` must come from this library, `sentence` be NUL-terminated and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_tag_sentence(
    model: *const SeltagModel,
    sentence: *const c_char,
    measure: u32,
    threshold: f64,
    out: *mut *mut SeltagTagging,
) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = model_arg(model)?;
        let measure = measure_arg(measure)?;
        let policy = ThresholdPolicy::new(measure, threshold)?;
        let words: Vec<&str> = str_arg(sentence, "sentence")?.split_whitespace().collect();
        let posteriors = forward_backward(&m.model, &words)?;
        let decisions = apply_policy(&posteriors, &policy)?;
        let tokens = posteriors
            .iter()
            .zip(&decisions)
            .map(|(p, d)| {
                Ok(TokenOut {
                    word: c_string(&p.word),
                    tag: c_string(m.model.tagset().name(d.tag)),
                    probability: p.chosen_probability(),
                    value: measure_value(p, measure)?,
                    accepted: d.accepted,
                    hypotheses: p.hypotheses.len(),
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        *out = Box::into_raw(Box::new(SeltagTagging { tokens }));
        Ok(())
    })
}

/// Number of tokens, or 0 for a null tagging.
///
/// # Safety
///
/// `tagging` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn seltag_tagging_len(tagging: *const SeltagTagging) -> usize {
    tagging.as_ref().map_or(0, |t| t.tokens.len())
}

/// Copies token `index` into `out`.
///
/// # Safety
///
/// `tagging` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_tagging_token(
    tagging: *const SeltagTagging,
    index: usize,
    out: *mut SeltagToken,
) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = tagging.as_ref().ok_or_else(|| null("tagging"))?;
        let tok = t.tokens.get(index).ok_or_else(|| {
            Failure(
                SeltagStatus::InvalidArgument,
                format!("token index {index} out of range for {} tokens", t.tokens.len()),
            )
        })?;
        *out = SeltagToken {
            word: tok.word.as_ptr(),
            tag: tok.tag.as_ptr(),
            probability: tok.probability,
            value: tok.value,
            accepted: tok.accepted,
            hypotheses: tok.hypotheses,
        };
        Ok(())
    })
}

/// # Safety
///
/// `tagging` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn seltag_tagging_free(tagging: *mut SeltagTagging) {
    if !tagging.is_null() {
        drop(Box::from_raw(tagging));
    }
}

/// Chooses a threshold on `measure` reaching `target` accuracy on the tagged
/// text.
///
/// # Safety
///
/// `model` must come from this library, `tagged` be NUL-terminated and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_calibrate(
    model: *const SeltagModel,
    tagged: *const c_char,
    measure: u32,
    target: f64,
    mode: u32,
    out: *mut SeltagCalibration,
) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = model_arg(model)?;
        let measure = measure_arg(measure)?;
        let mode = mode_arg(mode)?;
        let corpus = parse_tagged(str_arg(tagged, "tagged")?)?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus.into());
        }
        let obs = collect_observations(&m.model, &corpus, measure)?;
        let r = calibrate_threshold(&build_cdfs(&obs)?, obs.s(), target, mode, measure)?;
        *out = SeltagCalibration {
            threshold: r.threshold,
            s: r.s,
            predicted_c: r.predicted_c,
            predicted_i: r.predicted_i,
            predicted_accuracy: r.predicted_accuracy,
            predicted_efficiency: r.predicted_efficiency,
        };
        Ok(())
    })
}

/// Evaluates a threshold on `measure` against the tagged text.
///
/// # Safety
///
/// `model` must come from this library, `tagged` be NUL-terminated and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_evaluate(
    model: *const SeltagModel,
    tagged: *const c_char,
    measure: u32,
    threshold: f64,
    out: *mut SeltagEvaluation,
) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = model_arg(model)?;
        let policy = ThresholdPolicy::new(measure_arg(measure)?, threshold)?;
        let corpus = parse_tagged(str_arg(tagged, "tagged")?)?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus.into());
        }
        let counts = evaluate(&m.model, &corpus, &policy)?;
        let r = report(&counts, &policy)?;
        *out = SeltagEvaluation {
            tokens: r.tokens,
            ambiguous_tokens: r.ambiguous_tokens,
            correct_accepted: counts.correct_accepted,
            correct_rejected: counts.correct_rejected,
            incorrect_accepted: counts.incorrect_accepted,
            incorrect_rejected: counts.incorrect_rejected,
            s: r.s,
            c: r.c,
            i: r.i,
            a: r.a,
            accuracy_oracle: r.accuracy_oracle,
            accuracy_ignore: r.accuracy_ignore.unwrap_or(f64::NAN),
            efficiency: r.efficiency,
            overall_accuracy: r.overall_accuracy,
        };
        Ok(())
    })
}

/// Accuracy on ambiguous tokens when rejected tokens are tagged correctly by
/// someone else.
#[no_mangle]
pub extern "C" fn seltag_accuracy_oracle(s: f64, i: f64) -> f64 {
    seltag::accuracy_oracle(s, i)
}

/// Accuracy over retained ambiguous tokens only.
///
/// # Safety
///
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn seltag_accuracy_ignore(s: f64, c: f64, i: f64, out: *mut f64) -> SeltagStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = seltag::accuracy_ignore(s, c, i)?;
        Ok(())
    })
}

/// Share of ambiguous tokens that are not rejected.
#[no_mangle]
pub extern "C" fn seltag_efficiency(s: f64, c: f64, i: f64) -> f64 {
    seltag::efficiency(s, c, i)
}

/// Accuracy over all tokens given the ambiguous share `a` and the accuracy on
/// ambiguous tokens.
#[no_mangle]
pub extern "C" fn seltag_overall_accuracy(a: f64, ambiguous_accuracy: f64) -> f64 {
    seltag::overall_accuracy(a, ambiguous_accuracy)
}

/// Probability threshold making the same decisions as a margin threshold on
/// two-hypothesis tokens.
#[no_mangle]
pub extern "C" fn seltag_margin_to_prob_threshold(margin: f64) -> f64 {
    seltag::margin_to_prob_threshold(margin)
}
