//! C ABI over `gazekit`.
//!
//! Objects are opaque handles created by the `gk_recording_*`, `gk_classify`
//! and `gk_labels_from_codes` constructors and released with the matching
//! `gk_*_free`. Every call returns a [`GkStatus`]; on failure
//! `gk_last_error_message` describes the cause for the calling thread. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gazekit::classify::{classify, Algorithm, ClassifierParams};
use gazekit::gaze::{
    parse_recording, resample, ColumnMap, Dataset, GazeRecording, GazeSample, Label, LabelSequence, ThresholdSet,
};
use gazekit::scores::{evaluate, ScoreConfig, ScoreReport};
use gazekit::synth::{synthesize, SynthSpec};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    /// The input was readable but classification or scoring is undefined
    /// for it (too short, no stimulus steps, degenerate data).
    Domain = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkAlgorithm {
    Ivt = 0,
    Ivdt = 1,
    IvdtHmm = 2,
    Ibdt = 3,
}

/// Per-sample label codes written by `gk_labels_copy`.
#[repr(u8)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkLabel {
    Fixation = 0,
    Saccade = 1,
    SmoothPursuit = 2,
    Unclassified = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkThresholds {
    /// deg/s
    pub velocity: f64,
    /// deg
    pub dispersion: f64,
    /// ms
    pub duration_ms: f64,
}

/// Behavioral scores; NaN marks a score that is undefined for the input.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkScores {
    pub fqns: f64,
    pub sqns: f64,
    pub pqns: f64,
    pub misfix: f64,
    pub fqls: f64,
    pub pqls_p: f64,
    pub pqls_v: f64,
}

/// A gaze recording, optionally with its stimulus and true labels.
pub struct GkRecording(Dataset);

/// One label per sample.
pub struct GkLabels(LabelSequence);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Core(gazekit::Error),
}

impl From<gazekit::Error> for Failure {
    fn from(e: gazekit::Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &gazekit::Error) -> GkStatus {
    use gazekit::Error as E;
    match e {
        E::Io(_) => GkStatus::Io,
        E::Csv(_) | E::Json(_) | E::Format(_) | E::Ordering { .. } | E::Spec(_) => GkStatus::Format,
        E::InvalidParameter(_) | E::UpsamplingUnsupported { .. } => GkStatus::InvalidArgument,
        _ => GkStatus::Domain,
    }
}

fn call<F: FnOnce() -> Result<(), Failure>>(f: F) -> GkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GkStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is null"));
            GkStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg);
            GkStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GkStatus::Panic
        }
    }
}

unsafe fn nonnull<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// The default tuned thresholds (75 deg/s, 0.67 deg, 150 ms).
#[no_mangle]
pub extern "C" fn gk_thresholds_default() -> GkThresholds {
    let t = ThresholdSet::default();
    GkThresholds { velocity: t.velocity, dispersion: t.dispersion, duration_ms: t.duration_ms }
}

// ── Recordings ──────────────────────────────────────────────

/// Reads a CSV file with the standard column names.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_from_csv_path(path: *const c_char, out: *mut *mut GkRecording) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let path =
            CStr::from_ptr(nonnull(path, "path")?).to_str().map_err(|_| Failure::Arg("path is not UTF-8".into()))?;
        let file = std::fs::File::open(path).map_err(gazekit::Error::from)?;
        let data = parse_recording(std::io::BufReader::new(file), &ColumnMap::default())?;
        *out = boxed(GkRecording(data));
        Ok(())
    })
}

/// Parses CSV text held in memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_from_csv_buffer(
    data: *const u8,
    len: usize,
    out: *mut *mut GkRecording,
) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let bytes = slice(data, len, "data")?;
        let data = parse_recording(bytes, &ColumnMap::default())?;
        *out = boxed(GkRecording(data));
        Ok(())
    })
}

/// Builds a recording from parallel arrays. A non-positive `rate_hz` infers
/// the rate from the timestamps. Non-finite coordinates mark invalid samples.
///
/// # Safety
/// `t_ms`, `x_deg` and `y_deg` must each point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_from_samples(
    t_ms: *const f64,
    x_deg: *const f64,
    y_deg: *const f64,
    n: usize,
    rate_hz: f64,
    out: *mut *mut GkRecording,
) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let (t, x, y) = (slice(t_ms, n, "t_ms")?, slice(x_deg, n, "x_deg")?, slice(y_deg, n, "y_deg")?);
        let samples: Vec<GazeSample> = (0..n).map(|i| GazeSample::new(t[i], x[i], y[i])).collect();
        let rec =
            if rate_hz > 0.0 { GazeRecording::new(samples, rate_hz)? } else { GazeRecording::from_samples(samples)? };
        *out = boxed(GkRecording(Dataset::new(rec)));
        Ok(())
    })
}

/// Synthesizes the built-in step-ramp recording, with stimulus and truth.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_synth_default(seed: u64, noise_std: f64, out: *mut *mut GkRecording) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let mut spec = SynthSpec::default();
        spec.oculomotor.seed = seed;
        spec.oculomotor.noise_std = noise_std;
        *out = boxed(GkRecording(synthesize(&spec)?));
        Ok(())
    })
}

/// Decimates to `target_hz`, keeping stimulus and truth aligned.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_resample(
    rec: *const GkRecording,
    target_hz: f64,
    out: *mut *mut GkRecording,
) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let rec = nonnull(rec, "rec")?;
        *out = boxed(GkRecording(resample(&rec.0, target_hz)?));
        Ok(())
    })
}

/// # Safety
/// `rec` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_len(rec: *const GkRecording, out_len: *mut usize) -> GkStatus {
    call(|| {
        *out_ptr(out_len, "out_len")? = nonnull(rec, "rec")?.0.recording.len();
        Ok(())
    })
}

/// # Safety
/// `rec` must be a live handle; `out_hz` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_rate_hz(rec: *const GkRecording, out_hz: *mut f64) -> GkStatus {
    call(|| {
        *out_ptr(out_hz, "out_hz")? = nonnull(rec, "rec")?.0.recording.rate_hz();
        Ok(())
    })
}

/// Whether the recording carries a stimulus track, which scoring needs.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_has_stimulus(rec: *const GkRecording, out: *mut bool) -> GkStatus {
    call(|| {
        *out_ptr(out, "out")? = nonnull(rec, "rec")?.0.stimulus.is_some();
        Ok(())
    })
}

/// True labels of a synthetic recording, as a new handle.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_truth(rec: *const GkRecording, out: *mut *mut GkLabels) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let truth =
            nonnull(rec, "rec")?.0.truth.clone().ok_or_else(|| Failure::Arg("recording has no truth labels".into()))?;
        *out = boxed(GkLabels(truth));
        Ok(())
    })
}

/// # Safety
/// `rec` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gk_recording_free(rec: *mut GkRecording) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

// ── Classification and scoring ──────────────────────────────

/// Labels every sample. `thresholds` may be NULL for the defaults.
///
/// # Safety
/// `rec` must be a live handle; `thresholds` NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gk_classify(
    rec: *const GkRecording,
    algorithm: GkAlgorithm,
    thresholds: *const GkThresholds,
    out: *mut *mut GkLabels,
) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let rec = nonnull(rec, "rec")?;
        let t = thresholds.as_ref().copied().unwrap_or_else(|| gk_thresholds_default());
        let params = ClassifierParams::with_thresholds(ThresholdSet::new(t.velocity, t.dispersion, t.duration_ms)?);
        let alg = match algorithm {
            GkAlgorithm::Ivt => Algorithm::Ivt,
            GkAlgorithm::Ivdt => Algorithm::Ivdt,
            GkAlgorithm::IvdtHmm => Algorithm::IvdtHmm,
            GkAlgorithm::Ibdt => Algorithm::Ibdt,
        };
        *out = boxed(GkLabels(classify(&rec.0.recording, alg, &params)?));
        Ok(())
    })
}

/// Wraps label codes produced elsewhere so they can be scored.
///
/// # Safety
/// `codes` must point to `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_labels_from_codes(codes: *const u8, n: usize, out: *mut *mut GkLabels) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let labels = slice(codes, n, "codes")?
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                0 => Ok(Label::Fixation),
                1 => Ok(Label::Saccade),
                2 => Ok(Label::SmoothPursuit),
                3 => Ok(Label::Unclassified),
                _ => Err(Failure::Arg(format!("unknown label code {c} at index {i}"))),
            })
            .collect::<Result<LabelSequence, _>>()?;
        *out = boxed(GkLabels(labels));
        Ok(())
    })
}

/// # Safety
/// `labels` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_labels_len(labels: *const GkLabels, out_len: *mut usize) -> GkStatus {
    call(|| {
        *out_ptr(out_len, "out_len")? = nonnull(labels, "labels")?.0.len();
        Ok(())
    })
}

/// Writes up to `cap` label codes (see [`GkLabel`]) into `buf` and the
/// number written into `out_written`. Fails if `cap` is too small.
///
/// # Safety
/// `labels` must be a live handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn gk_labels_copy(
    labels: *const GkLabels,
    buf: *mut u8,
    cap: usize,
    out_written: *mut usize,
) -> GkStatus {
    call(|| {
        let labels = &nonnull(labels, "labels")?.0;
        let written = out_ptr(out_written, "out_written")?;
        if cap < labels.len() {
            return Err(Failure::Arg(format!("buffer holds {cap} labels, need {}", labels.len())));
        }
        if labels.is_empty() {
            *written = 0;
            return Ok(());
        }
        let dst = std::slice::from_raw_parts_mut(out_ptr(buf, "buf")?, labels.len());
        for (d, l) in dst.iter_mut().zip(labels.iter()) {
            *d = match l {
                Label::Fixation => GkLabel::Fixation,
                Label::Saccade => GkLabel::Saccade,
                Label::SmoothPursuit => GkLabel::SmoothPursuit,
                Label::Unclassified => GkLabel::Unclassified,
            } as u8;
        }
        *written = labels.len();
        Ok(())
    })
}

/// # Safety
/// `labels` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gk_labels_free(labels: *mut GkLabels) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

/// Scores `labels` against the recording's stimulus with default settings.
///
/// # Safety
/// `rec` and `labels` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_score(rec: *const GkRecording, labels: *const GkLabels, out: *mut GkScores) -> GkStatus {
    call(|| {
        let out = out_ptr(out, "out")?;
        let data = &nonnull(rec, "rec")?.0;
        let labels = &nonnull(labels, "labels")?.0;
        let stim = data.stimulus.as_ref().ok_or_else(|| Failure::Arg("recording has no stimulus track".into()))?;
        let r: ScoreReport = evaluate(labels, stim, &data.recording, &ScoreConfig::default())?;
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = GkScores {
            fqns: v(r.fqns),
            sqns: v(r.sqns),
            pqns: v(r.pqns),
            misfix: v(r.misfix),
            fqls: v(r.fqls),
            pqls_p: v(r.pqls_p),
            pqls_v: v(r.pqls_v),
        };
        Ok(())
    })
}
