//! Gaze recordings, stimulus tracks and per-sample labels.
//!
//! Positions are degrees of visual angle, timestamps are milliseconds.
//! Everything here is immutable once built; the free functions are pure.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backward span used by [`compute_velocities`]: velocity at sample `i` is
/// taken against the latest sample at least this many milliseconds earlier.
/// At 200 Hz and below this is the plain two-point difference.
pub const DEFAULT_VELOCITY_SPAN_MS: f64 = 5.0;

/// Frequencies used by the subsampling protocol.
pub const PROTOCOL_FREQUENCIES_HZ: [f64; 7] = [30.0, 50.0, 60.0, 100.0, 200.0, 300.0, 500.0];

// ── Labels ──────────────────────────────────────────────────

/// Eye-movement class of a single sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Fixation,
    Saccade,
    SmoothPursuit,
    Unclassified,
}

impl Label {
    /// Short code used in CSV files.
    pub fn code(self) -> &'static str {
        match self {
            Label::Fixation => "FIX",
            Label::Saccade => "SAC",
            Label::SmoothPursuit => "SP",
            Label::Unclassified => "UNC",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FIX" | "FIXATION" => Ok(Label::Fixation),
            "SAC" | "SACCADE" => Ok(Label::Saccade),
            "SP" | "PURSUIT" | "SMOOTHPURSUIT" => Ok(Label::SmoothPursuit),
            "UNC" | "UNCLASSIFIED" => Ok(Label::Unclassified),
            other => Err(Error::Format(format!("unknown label code {other:?}"))),
        }
    }
}

/// One label per sample of a recording.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSequence(Vec<Label>);

impl LabelSequence {
    pub fn new(labels: Vec<Label>) -> Self {
        LabelSequence(labels)
    }

    pub fn filled(label: Label, len: usize) -> Self {
        LabelSequence(vec![label; len])
    }

    pub fn into_inner(self) -> Vec<Label> {
        self.0
    }

    pub fn count(&self, label: Label) -> usize {
        self.0.iter().filter(|&&l| l == label).count()
    }

    /// Fraction of positions where `self` and `other` agree.
    pub fn agreement(&self, other: &LabelSequence) -> f64 {
        if self.0.is_empty() || self.0.len() != other.0.len() {
            return 0.0;
        }
        let same = self.0.iter().zip(&other.0).filter(|(a, b)| a == b).count();
        same as f64 / self.0.len() as f64
    }

    /// Maximal runs of identical labels as `(label, start, end_exclusive)`.
    pub fn runs(&self) -> Vec<(Label, usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.0.len() {
            if i == self.0.len() || self.0[i] != self.0[start] {
                out.push((self.0[start], start, i));
                start = i;
            }
        }
        out
    }
}

impl Deref for LabelSequence {
    type Target = [Label];

    fn deref(&self) -> &[Label] {
        &self.0
    }
}

impl From<Vec<Label>> for LabelSequence {
    fn from(v: Vec<Label>) -> Self {
        LabelSequence(v)
    }
}

impl FromIterator<Label> for LabelSequence {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        LabelSequence(iter.into_iter().collect())
    }
}

// ── Samples and recordings ──────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub timestamp_ms: f64,
    pub x: f64,
    pub y: f64,
    /// False when the tracker lost the eye; `x`/`y` are then meaningless.
    pub valid: bool,
}

impl GazeSample {
    pub fn new(timestamp_ms: f64, x: f64, y: f64) -> Self {
        let valid = x.is_finite() && y.is_finite();
        GazeSample { timestamp_ms, x, y, valid }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// A uniformly sampled, strictly time-ordered gaze signal.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeRecording {
    samples: Vec<GazeSample>,
    rate_hz: f64,
}

impl GazeRecording {
    /// Builds a recording, checking ordering and that the median sample
    /// interval is within 10% of the nominal period.
    pub fn new(samples: Vec<GazeSample>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate_hz must be positive, got {rate_hz}")));
        }
        check_order(samples.iter().map(|s| s.timestamp_ms))?;
        if samples.len() >= 2 {
            // decimation at non-integer ratios jitters single intervals, so
            // either the median or the mean interval may carry the check
            let median = median_interval(&samples);
            let span = samples[samples.len() - 1].timestamp_ms - samples[0].timestamp_ms;
            let mean = span / (samples.len() - 1) as f64;
            let period = 1000.0 / rate_hz;
            let tol = 0.1 * period + 1e-9;
            if (median - period).abs() > tol && (mean - period).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "sample interval (median {median} ms, mean {mean} ms) is not within 10% of {period} ms ({rate_hz} Hz)"
                )));
            }
        }
        Ok(GazeRecording { samples, rate_hz })
    }

    /// Builds a recording with the rate inferred from the timestamps.
    pub fn from_samples(samples: Vec<GazeSample>) -> Result<Self> {
        check_order(samples.iter().map(|s| s.timestamp_ms))?;
        let rate = infer_rate(&samples)?;
        GazeRecording::new(samples, rate)
    }

    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    /// Nominal sample period in milliseconds.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Covered time: first to last timestamp plus one nominal period.
    pub fn duration_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.timestamp_ms - a.timestamp_ms + self.period_ms(),
            _ => 0.0,
        }
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.timestamp_ms)
    }
}

fn check_order(ts: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (row, t) in ts.enumerate() {
        if !t.is_finite() {
            return Err(Error::Format(format!("row {row}: timestamp is not finite")));
        }
        if t <= prev {
            return Err(Error::Ordering { row });
        }
        prev = t;
    }
    Ok(())
}

fn median_interval(samples: &[GazeSample]) -> f64 {
    let mut d: Vec<f64> = samples.windows(2).map(|w| w[1].timestamp_ms - w[0].timestamp_ms).collect();
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    if d.len() % 2 == 1 {
        d[m]
    } else {
        0.5 * (d[m - 1] + d[m])
    }
}

/// Rate from the mean interval, snapped to the nearest integer when within 1%.
fn infer_rate(samples: &[GazeSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples to infer a sampling rate".into()));
    }
    let span = samples[samples.len() - 1].timestamp_ms - samples[0].timestamp_ms;
    let rate = 1000.0 * (samples.len() - 1) as f64 / span;
    let rounded = rate.round();
    if rounded > 0.0 && (rate - rounded).abs() <= 0.01 * rate {
        Ok(rounded)
    } else {
        Ok(rate)
    }
}

// ── Stimulus ────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusPoint {
    pub timestamp_ms: f64,
    pub sx: f64,
    pub sy: f64,
    /// Behavior the stimulus is designed to elicit at this instant.
    pub intended: Label,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulusTrack {
    pub points: Vec<StimulusPoint>,
}

impl StimulusTrack {
    pub fn new(points: Vec<StimulusPoint>) -> Self {
        StimulusTrack { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn intended(&self) -> LabelSequence {
        self.points.iter().map(|p| p.intended).collect()
    }

    /// Checks the track is index- and time-aligned with `recording`.
    pub fn check_aligned(&self, recording: &GazeRecording) -> Result<()> {
        if self.points.len() != recording.len() {
            return Err(Error::Format(format!(
                "stimulus has {} samples, recording has {}",
                self.points.len(),
                recording.len()
            )));
        }
        for (i, (p, s)) in self.points.iter().zip(recording.samples()).enumerate() {
            if p.timestamp_ms != s.timestamp_ms {
                return Err(Error::Format(format!("stimulus timestamp mismatch at sample {i}")));
            }
        }
        Ok(())
    }
}

// ── Thresholds ──────────────────────────────────────────────

/// Velocity (deg/s), dispersion (deg) and minimum window duration (ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub velocity: f64,
    pub dispersion: f64,
    pub duration_ms: f64,
}

impl ThresholdSet {
    pub fn new(velocity: f64, dispersion: f64, duration_ms: f64) -> Result<Self> {
        for (name, v) in [("velocity", velocity), ("dispersion", dispersion), ("duration", duration_ms)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} threshold must be positive, got {v}")));
            }
        }
        Ok(ThresholdSet { velocity, dispersion, duration_ms })
    }
}

impl Default for ThresholdSet {
    /// Tuned values: 75 deg/s, 0.67 deg, 150 ms.
    fn default() -> Self {
        ThresholdSet { velocity: 75.0, dispersion: 0.67, duration_ms: 150.0 }
    }
}

// ── Dataset: recording + optional paired tracks ─────────────

/// A recording with its optional stimulus and ground-truth tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub recording: GazeRecording,
    pub stimulus: Option<StimulusTrack>,
    pub truth: Option<LabelSequence>,
}

impl Dataset {
    pub fn new(recording: GazeRecording) -> Self {
        Dataset { recording, stimulus: None, truth: None }
    }
}

// ── CSV ─────────────────────────────────────────────────────

/// Column names for CSV ingestion. Defaults match the files written by
/// [`write_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub timestamp: String,
    pub x: String,
    pub y: String,
    pub sx: String,
    pub sy: String,
    pub intended: String,
    pub truth: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            timestamp: "timestamp_ms".into(),
            x: "x_deg".into(),
            y: "y_deg".into(),
            sx: "sx_deg".into(),
            sy: "sy_deg".into(),
            intended: "intended".into(),
            truth: "truth".into(),
        }
    }
}

impl ColumnMap {
    /// Parses overrides of the form `timestamp_ms=t,x_deg=gx`. Keys are the
    /// default column names.
    pub fn with_overrides(spec: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("column override {pair:?} is not key=value")))?;
            let slot = match key.trim() {
                "timestamp_ms" => &mut map.timestamp,
                "x_deg" => &mut map.x,
                "y_deg" => &mut map.y,
                "sx_deg" => &mut map.sx,
                "sy_deg" => &mut map.sy,
                "intended" => &mut map.intended,
                "truth" => &mut map.truth,
                other => return Err(Error::Format(format!("unknown column role {other:?}"))),
            };
            *slot = value.trim().to_string();
        }
        Ok(map)
    }
}

/// Parses a gaze CSV. Gaze cells that are not finite numbers mark the sample
/// invalid; stimulus columns are read only when `sx`, `sy` and `intended`
/// are all present.
pub fn parse_recording<R: Read>(reader: R, columns: &ColumnMap) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| find(name).ok_or_else(|| Error::Format(format!("missing required column {name}")));

    let ti = required(&columns.timestamp)?;
    let xi = required(&columns.x)?;
    let yi = required(&columns.y)?;
    let stim_cols = [find(&columns.sx), find(&columns.sy), find(&columns.intended)];
    let stim = match stim_cols {
        [Some(a), Some(b), Some(c)] => Some((a, b, c)),
        [None, None, None] => None,
        _ => {
            let names = [&columns.sx, &columns.sy, &columns.intended];
            let missing = stim_cols.iter().zip(names).find(|(c, _)| c.is_none()).map(|(_, n)| n.clone());
            return Err(Error::Format(format!(
                "missing required column {} (stimulus columns must appear together)",
                missing.unwrap_or_default()
            )));
        }
    };
    let truth_col = find(&columns.truth);

    let mut samples = Vec::new();
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let t: f64 =
            cell(ti).parse().map_err(|_| Error::Format(format!("row {row}: {} is not a number", columns.timestamp)))?;
        let x = cell(xi).parse::<f64>().unwrap_or(f64::NAN);
        let y = cell(yi).parse::<f64>().unwrap_or(f64::NAN);
        let sample = GazeSample::new(t, x, y);
        samples.push(if sample.valid { sample } else { GazeSample { x: f64::NAN, y: f64::NAN, ..sample } });

        if let Some((a, b, c)) = stim {
            let num = |i: usize, name: &str| -> Result<f64> {
                cell(i)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("row {row}: {name} is not a finite number")))
            };
            points.push(StimulusPoint {
                timestamp_ms: t,
                sx: num(a, &columns.sx)?,
                sy: num(b, &columns.sy)?,
                intended: cell(c).parse().map_err(|e| Error::Format(format!("row {row}: {e}")))?,
            });
        }
        if let Some(c) = truth_col {
            truth.push(cell(c).parse::<Label>().map_err(|e| Error::Format(format!("row {row}: {e}")))?);
        }
    }

    let recording = GazeRecording::from_samples(samples)?;
    Ok(Dataset {
        recording,
        stimulus: stim.map(|_| StimulusTrack::new(points)),
        truth: truth_col.map(|_| LabelSequence::new(truth)),
    })
}

/// Writes the dataset in the format [`parse_recording`] reads with the
/// default column map. Floats use the shortest round-trip representation.
pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp_ms", "x_deg", "y_deg"];
    if data.stimulus.is_some() {
        header.extend(["sx_deg", "sy_deg", "intended"]);
    }
    if data.truth.is_some() {
        header.push("truth");
    }
    w.write_record(&header)?;
    for (i, s) in data.recording.samples().iter().enumerate() {
        let mut row = vec![s.timestamp_ms.to_string(), s.x.to_string(), s.y.to_string()];
        if let Some(stim) = &data.stimulus {
            let p = &stim.points[i];
            row.extend([p.sx.to_string(), p.sy.to_string(), p.intended.code().to_string()]);
        }
        if let Some(truth) = &data.truth {
            row.push(truth[i].code().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `timestamp_ms,label` rows.
pub fn write_labels_csv<W: Write>(writer: W, recording: &GazeRecording, labels: &LabelSequence) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp_ms", "label"])?;
    for (s, l) in recording.samples().iter().zip(labels.iter()) {
        w.write_record([s.timestamp_ms.to_string(), l.code().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ── Velocity and dispersion ─────────────────────────────────

/// Per-sample speed in deg/s using a backward difference over
/// [`DEFAULT_VELOCITY_SPAN_MS`].
pub fn compute_velocities(recording: &GazeRecording) -> Result<Vec<f64>> {
    compute_velocities_with_span(recording, DEFAULT_VELOCITY_SPAN_MS)
}

/// Speed at sample `i` against the latest earlier sample at least `span_ms`
/// older (or sample 0 when none is that old). `span_ms = 0` gives the plain
/// two-point difference. Pairs involving an invalid sample carry the previous
/// velocity forward; `v[0]` copies `v[1]`.
pub fn compute_velocities_with_span(recording: &GazeRecording, span_ms: f64) -> Result<Vec<f64>> {
    let s = recording.samples();
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!("velocity needs at least 2 samples, got {}", s.len())));
    }
    let mut v = vec![0.0; s.len()];
    let mut back = 0usize;
    let mut last = 0.0;
    for i in 1..s.len() {
        // advance `back` to the latest index still at least span_ms behind i
        while back + 1 < i && s[i].timestamp_ms - s[back + 1].timestamp_ms >= span_ms {
            back += 1;
        }
        let j = back;
        if s[i].valid && s[j].valid {
            let dt = (s[i].timestamp_ms - s[j].timestamp_ms) / 1000.0;
            last = (s[i].x - s[j].x).hypot(s[i].y - s[j].y) / dt;
        }
        v[i] = last;
    }
    v[0] = v[1];
    Ok(v)
}

/// `(max x - min x) + (max y - min y)` over the valid samples of `window`.
pub fn compute_dispersion(window: &[GazeSample]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::InsufficientData("dispersion of an empty window".into()));
    }
    let mut ext = Extent::default();
    window.iter().for_each(|s| ext.push(s));
    ext.dispersion().ok_or(Error::UndefinedDispersion)
}

/// Running bounding box used by the windowed classifiers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extent {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Default for Extent {
    fn default() -> Self {
        Extent { min_x: f64::INFINITY, max_x: f64::NEG_INFINITY, min_y: f64::INFINITY, max_y: f64::NEG_INFINITY }
    }
}

impl Extent {
    pub(crate) fn push(&mut self, s: &GazeSample) {
        if s.valid {
            self.min_x = self.min_x.min(s.x);
            self.max_x = self.max_x.max(s.x);
            self.min_y = self.min_y.min(s.y);
            self.max_y = self.max_y.max(s.y);
        }
    }

    pub(crate) fn with(mut self, s: &GazeSample) -> Self {
        self.push(s);
        self
    }

    pub(crate) fn dispersion(&self) -> Option<f64> {
        (self.min_x <= self.max_x).then_some((self.max_x - self.min_x) + (self.max_y - self.min_y))
    }
}

// ── Resampling ──────────────────────────────────────────────

/// Indices of the input samples kept when decimating to `target_hz`: for
/// each grid time `t0 + k * 1000 / target_hz` not past the last timestamp,
/// the nearest sample (ties to the earlier one). When the grid stops more
/// than one input period short of the end, the final sample is kept too so
/// the output spans the same time as the input.
pub fn resample_indices(recording: &GazeRecording, target_hz: f64) -> Result<Vec<usize>> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("target rate must be positive, got {target_hz}")));
    }
    if target_hz > recording.rate_hz() {
        return Err(Error::UpsamplingUnsupported { target_hz, native_hz: recording.rate_hz() });
    }
    let s = recording.samples();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let t0 = s[0].timestamp_ms;
    let last = s[s.len() - 1].timestamp_ms;
    let step = 1000.0 / target_hz;
    let mut out: Vec<usize> = Vec::new();
    let mut j = 0usize;
    for k in 0.. {
        let g = t0 + k as f64 * step;
        if g > last + 1e-6 {
            break;
        }
        while j + 1 < s.len() && (s[j + 1].timestamp_ms - g).abs() < (s[j].timestamp_ms - g).abs() {
            j += 1;
        }
        if out.last() != Some(&j) {
            out.push(j);
        }
    }
    let tail = out[out.len() - 1];
    if last - s[tail].timestamp_ms > recording.period_ms() + 1e-6 {
        out.push(s.len() - 1);
    }
    Ok(out)
}

/// Decimates a dataset to `target_hz`, applying the same index selection to
/// the stimulus and truth tracks.
pub fn resample(data: &Dataset, target_hz: f64) -> Result<Dataset> {
    let idx = resample_indices(&data.recording, target_hz)?;
    let samples = idx.iter().map(|&i| data.recording.samples()[i]).collect();
    Ok(Dataset {
        recording: GazeRecording::new(samples, target_hz)?,
        stimulus: data.stimulus.as_ref().map(|st| StimulusTrack::new(idx.iter().map(|&i| st.points[i]).collect())),
        truth: data.truth.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(points: &[(f64, f64, f64)]) -> GazeRecording {
        GazeRecording::from_samples(points.iter().map(|&(t, x, y)| GazeSample::new(t, x, y)).collect()).unwrap()
    }

    fn uniform(n: usize, rate: f64) -> GazeRecording {
        let p = 1000.0 / rate;
        GazeRecording::new((0..n).map(|i| GazeSample::new(i as f64 * p, i as f64, 0.0)).collect(), rate).unwrap()
    }

    #[test]
    fn parses_three_rows_and_infers_rate() {
        let csv = "timestamp_ms,x_deg,y_deg\n0,1,1\n1,1,1\n2,1,1\n";
        let d = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(d.recording.len(), 3);
        assert_eq!(d.recording.rate_hz(), 1000.0);
        assert!(d.stimulus.is_none() && d.truth.is_none());
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "timestamp_ms,x_deg\n0,1\n";
        let err = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m.contains("y_deg")), "{err}");
    }

    #[test]
    fn nan_row_is_invalid_not_dropped() {
        let csv = "timestamp_ms,x_deg,y_deg\n0,0,0\n1,0,0\n2,0,0\n3,0,0\n4,0,0\n5,NaN,NaN\n6,0,0\n";
        let d = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(d.recording.len(), 7);
        assert!(!d.recording.samples()[5].valid);
        assert!(d.recording.samples()[4].valid);
    }

    #[test]
    fn non_monotone_timestamps_report_row() {
        let csv = "timestamp_ms,x_deg,y_deg\n0,0,0\n1,0,0\n1,0,0\n";
        let err = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::Ordering { row: 2 }));
    }

    #[test]
    fn stimulus_and_truth_columns_round_trip() {
        let csv = "timestamp_ms,x_deg,y_deg,sx_deg,sy_deg,intended,truth\n0,0,0,0,0,FIX,FIX\n1,0.5,0,1,0,SAC,SAC\n2,1,0,1,0,SP,FIX\n";
        let d = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &d).unwrap();
        let again = parse_recording(out.as_slice(), &ColumnMap::default()).unwrap();
        assert_eq!(d, again);
        assert_eq!(again.truth.unwrap()[2], Label::Fixation);
    }

    #[test]
    fn partial_stimulus_columns_rejected() {
        let csv = "timestamp_ms,x_deg,y_deg,sx_deg\n0,0,0,0\n1,0,0,0\n";
        let err = parse_recording(csv.as_bytes(), &ColumnMap::default()).unwrap_err();
        assert!(matches!(&err, Error::Format(m) if m.contains("sy_deg")), "{err}");
    }

    #[test]
    fn column_overrides() {
        let map = ColumnMap::with_overrides("timestamp_ms=time, x_deg=gx,y_deg=gy").unwrap();
        let csv = "time,gx,gy\n0,0,0\n2,0.1,0\n4,0.2,0\n";
        let d = parse_recording(csv.as_bytes(), &map).unwrap();
        assert_eq!(d.recording.rate_hz(), 500.0);
        assert!(ColumnMap::with_overrides("bogus=1").is_err());
    }

    #[test]
    fn velocity_examples() {
        let r = rec(&[(0.0, 0.0, 0.0), (1.0, 0.3, 0.0)]);
        let v = compute_velocities(&r).unwrap();
        assert!((v[1] - 300.0).abs() < 1e-9 && v[0] == v[1]);

        let r = rec(&[(0.0, 2.0, 2.0), (1.0, 2.0, 2.0), (2.0, 2.0, 2.0)]);
        assert_eq!(compute_velocities(&r).unwrap(), vec![0.0; 3]);

        let r = rec(&[(0.0, 0.0, 0.0), (2.0, 0.1, 0.0), (4.0, 0.2, 0.0)]);
        for v in compute_velocities(&r).unwrap() {
            assert!((v - 50.0).abs() < 1e-9, "{v}");
        }
        for v in compute_velocities_with_span(&r, 0.0).unwrap() {
            assert!((v - 50.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn velocity_span_reaches_back() {
        // 1 kHz ramp at 10 deg/s with a 5 ms span: once 5 samples exist the
        // estimate uses them, and it is exact for a linear ramp anyway.
        let r = GazeRecording::new((0..20).map(|i| GazeSample::new(i as f64, 0.01 * i as f64, 0.0)).collect(), 1000.0)
            .unwrap();
        for v in compute_velocities(&r).unwrap() {
            assert!((v - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_sample_carries_previous_velocity() {
        let r = GazeRecording::new(
            vec![
                GazeSample::new(0.0, 0.0, 0.0),
                GazeSample::new(1.0, 0.1, 0.0),
                GazeSample::new(2.0, f64::NAN, f64::NAN),
                GazeSample::new(3.0, 5.0, 0.0),
            ],
            1000.0,
        )
        .unwrap();
        let v = compute_velocities_with_span(&r, 0.0).unwrap();
        assert!((v[1] - 100.0).abs() < 1e-9);
        assert_eq!(v[2], v[1]);
        assert_eq!(v[3], v[1]);
    }

    #[test]
    fn velocity_needs_two_samples() {
        let r = GazeRecording::new(vec![GazeSample::new(0.0, 0.0, 0.0)], 1000.0).unwrap();
        assert!(matches!(compute_velocities(&r), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn dispersion_examples() {
        let w = [GazeSample::new(0.0, 1.0, 2.0), GazeSample::new(1.0, 1.3, 2.1), GazeSample::new(2.0, 1.1, 2.05)];
        assert!((compute_dispersion(&w).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(compute_dispersion(&w[..1]).unwrap(), 0.0);
        let same = [GazeSample::new(0.0, 3.0, 3.0); 4];
        assert_eq!(compute_dispersion(&same).unwrap(), 0.0);
        let bad = [GazeSample::new(0.0, f64::NAN, 0.0)];
        assert!(matches!(compute_dispersion(&bad), Err(Error::UndefinedDispersion)));
    }

    #[test]
    fn resample_to_500_keeps_every_other() {
        let r = uniform(1000, 1000.0);
        let idx = resample_indices(&r, 500.0).unwrap();
        assert_eq!(idx.len(), 500);
        assert!(idx.iter().enumerate().all(|(k, &i)| i == 2 * k));
    }

    #[test]
    fn resample_to_30_matches_nearest_grid_oracle() {
        let r = uniform(1000, 1000.0);
        let idx = resample_indices(&r, 30.0).unwrap();
        // independent oracle: brute-force nearest sample for every grid point
        let ts: Vec<f64> = r.timestamps().collect();
        let mut expect = Vec::new();
        let mut k = 0;
        loop {
            let g = k as f64 * 1000.0 / 30.0;
            if g > 999.0 {
                break;
            }
            let best =
                (0..ts.len()).min_by(|&a, &b| (ts[a] - g).abs().total_cmp(&(ts[b] - g).abs()).then(a.cmp(&b))).unwrap();
            expect.push(best);
            k += 1;
        }
        assert_eq!(expect.len(), 30);
        assert_eq!(&expect[..4], &[0, 33, 67, 100]);
        // grid ends at 967, 32 ms short of the last sample
        expect.push(999);
        assert_eq!(idx, expect);
    }

    #[test]
    fn upsampling_rejected() {
        let r = uniform(100, 1000.0);
        assert!(matches!(resample_indices(&r, 2000.0), Err(Error::UpsamplingUnsupported { .. })));
    }

    #[test]
    fn labels_parse_and_runs() {
        assert_eq!("sp".parse::<Label>().unwrap(), Label::SmoothPursuit);
        assert!("XX".parse::<Label>().is_err());
        let l: LabelSequence = [Label::Fixation, Label::Fixation, Label::Saccade].into_iter().collect();
        assert_eq!(l.runs(), vec![(Label::Fixation, 0, 2), (Label::Saccade, 2, 3)]);
    }

    #[test]
    fn recording_rejects_rate_mismatch() {
        let s = (0..10).map(|i| GazeSample::new(i as f64, 0.0, 0.0)).collect();
        assert!(GazeRecording::new(s, 500.0).is_err());
    }

    proptest! {
        #[test]
        fn dispersion_translation_invariant(
            pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..40),
            dx in -50.0f64..50.0, dy in -50.0f64..50.0,
        ) {
            let a: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y))| GazeSample::new(i as f64, x, y)).collect();
            let b: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y))| GazeSample::new(i as f64, x + dx, y + dy)).collect();
            let (da, db) = (compute_dispersion(&a).unwrap(), compute_dispersion(&b).unwrap());
            prop_assert!((da - db).abs() < 1e-9);
        }

        #[test]
        fn dispersion_monotone_under_extension(
            pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 2..40),
        ) {
            let w: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y))| GazeSample::new(i as f64, x, y)).collect();
            for k in 1..w.len() {
                prop_assert!(compute_dispersion(&w[..k]).unwrap() <= compute_dispersion(&w[..k + 1]).unwrap());
            }
        }

        #[test]
        fn velocities_nonnegative_and_aligned(
            xs in prop::collection::vec(-10.0f64..10.0, 2..60),
        ) {
            let r = GazeRecording::new(xs.iter().enumerate().map(|(i, &x)| GazeSample::new(i as f64, x, -x)).collect(), 1000.0).unwrap();
            let v = compute_velocities(&r).unwrap();
            prop_assert_eq!(v.len(), r.len());
            prop_assert!(v.iter().all(|&x| x >= 0.0 && x.is_finite()));
        }

        #[test]
        fn resample_selects_input_samples(
            n in 50usize..3000,
            hz_idx in 0usize..7,
        ) {
            let r = GazeRecording::new((0..n).map(|i| GazeSample::new(i as f64, (i as f64).sin(), (i as f64 * 0.3).cos())).collect(), 1000.0).unwrap();
            let hz = PROTOCOL_FREQUENCIES_HZ[hz_idx];
            let out = resample(&Dataset::new(r.clone()), hz).unwrap();
            for s in out.recording.samples() {
                prop_assert!(r.samples().iter().any(|o| o.timestamp_ms.to_bits() == s.timestamp_ms.to_bits()
                    && o.x.to_bits() == s.x.to_bits() && o.y.to_bits() == s.y.to_bits()));
            }
            let last_in = r.samples().last().unwrap().timestamp_ms;
            let last_out = out.recording.samples().last().unwrap().timestamp_ms;
            prop_assert!(last_in - last_out <= r.period_ms());
            prop_assert!(last_out <= last_in);
        }
    }
}
