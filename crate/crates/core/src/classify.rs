//! Threshold, hybrid and Bayesian classifiers.
//!
//! I-VDT-HMM runs in three stages:
//!
//! 1. velocities are thresholded at `Vt` and the resulting
//!    fixation/saccade labels seed a two-state velocity HMM;
//! 2. samples the HMM calls saccades are removed, a dispersion window of
//!    duration `Wt` splits the rest into fixations and pursuits, and those
//!    labels seed a second two-state HMM over per-sample window dispersion;
//! 3. saccades are merged back in.
//!
//! With refinement disabled (`max_iterations = 0`) the result equals I-VDT.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{compute_velocities, Extent, GazeRecording, GazeSample, Label, LabelSequence, ThresholdSet};
use crate::hmm::{viterbi_refine, HmmConfig, RefineOutcome};

// ── I-VT ────────────────────────────────────────────────────

/// Saccade where velocity is strictly above `vt`, fixation otherwise.
pub fn classify_ivt(recording: &GazeRecording, vt: f64) -> Result<LabelSequence> {
    check_positive("velocity threshold", vt)?;
    let v = compute_velocities(recording)?;
    Ok(threshold_velocities(&v, vt))
}

pub fn threshold_velocities(velocities: &[f64], vt: f64) -> LabelSequence {
    velocities.iter().map(|&v| if v > vt { Label::Saccade } else { Label::Fixation }).collect()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

// ── Saccade filtering and merging ───────────────────────────

/// Non-saccade samples in original order, each with its original index.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingSubset {
    pub samples: Vec<GazeSample>,
    pub indices: Vec<usize>,
    /// Nominal period of the source recording.
    pub period_ms: f64,
}

impl WorkingSubset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True when `[start, end)` covers at least `wt` milliseconds.
    fn covers(&self, start: usize, end: usize, wt: f64) -> bool {
        end > start
            && self.samples[end - 1].timestamp_ms - self.samples[start].timestamp_ms + self.period_ms >= wt - 1e-9
    }
}

pub fn filter_saccades(recording: &GazeRecording, labels: &LabelSequence) -> WorkingSubset {
    let (samples, indices) = recording
        .samples()
        .iter()
        .zip(labels.iter())
        .enumerate()
        .filter(|(_, (_, &l))| l != Label::Saccade)
        .map(|(i, (s, _))| (*s, i))
        .unzip();
    WorkingSubset { samples, indices, period_ms: recording.period_ms() }
}

/// Writes subset labels back into a copy of `saccade_labels` at the subset's
/// original indices.
pub fn merge_labels(
    saccade_labels: &LabelSequence,
    subset_labels: &LabelSequence,
    indices: &[usize],
) -> Result<LabelSequence> {
    if subset_labels.len() != indices.len() {
        return Err(Error::Internal(format!("{} subset labels for {} indices", subset_labels.len(), indices.len())));
    }
    let mut out: Vec<Label> =
        saccade_labels.iter().map(|&l| if l == Label::Saccade { l } else { Label::Unclassified }).collect();
    for (&i, &l) in indices.iter().zip(subset_labels.iter()) {
        match out.get_mut(i) {
            Some(slot @ Label::Unclassified) => *slot = l,
            Some(_) => return Err(Error::Internal(format!("index {i} assigned twice or collides with a saccade"))),
            None => return Err(Error::Internal(format!("index {i} out of range"))),
        }
    }
    if let Some(i) = out.iter().position(|&l| l == Label::Unclassified) {
        return Err(Error::Internal(format!("index {i} not covered by the subset")));
    }
    Ok(out.into())
}

// ── I-DT window pass ────────────────────────────────────────

/// Sliding dispersion window over the subset. A window covering `wt` ms with
/// dispersion below `dt` becomes a fixation and grows point by point while
/// dispersion stays below `dt`; otherwise its first point is a pursuit and
/// the window advances by one. Trailing points without a full window take
/// the last decision.
pub fn classify_idt_window(subset: &WorkingSubset, dt: f64, wt: f64) -> Result<LabelSequence> {
    check_positive("dispersion threshold", dt)?;
    check_positive("duration threshold", wt)?;
    let s = &subset.samples;
    let n = s.len();
    let mut labels = vec![Label::Unclassified; n];
    let mut last = None;
    let mut i = 0;
    let mut j = 0;
    while i < n {
        j = j.max(i + 1);
        while j < n && !subset.covers(i, j, wt) {
            j += 1;
        }
        if !subset.covers(i, j, wt) {
            break;
        }
        let mut ext = s[i..j].iter().fold(Extent::default(), |e, p| e.with(p));
        if ext.dispersion().unwrap_or(0.0) < dt {
            while j < n {
                let grown = ext.with(&s[j]);
                if grown.dispersion().unwrap_or(0.0) >= dt {
                    break;
                }
                ext = grown;
                j += 1;
            }
            labels[i..j].fill(Label::Fixation);
            last = Some(Label::Fixation);
            i = j;
        } else {
            labels[i] = Label::SmoothPursuit;
            last = Some(Label::SmoothPursuit);
            i += 1;
        }
    }
    let tail = last.unwrap_or_else(|| {
        if n > 0 {
            log::warn!("subset of {n} samples spans less than {wt} ms; labeling all as smooth pursuit");
        }
        Label::SmoothPursuit
    });
    labels[i..].fill(tail);
    Ok(labels.into())
}

/// Dispersion of the window of duration `wt` starting at each subset sample.
/// Windows stop early at a removed saccade so they never bridge two events.
pub fn dispersion_features(subset: &WorkingSubset, wt: f64) -> Vec<f64> {
    let s = &subset.samples;
    let n = s.len();
    (0..n)
        .map(|i| {
            let mut ext = Extent::default().with(&s[i]);
            let mut j = i + 1;
            while j < n && !subset.covers(i, j, wt) && subset.indices[j] == subset.indices[j - 1] + 1 {
                ext.push(&s[j]);
                j += 1;
            }
            ext.dispersion().unwrap_or(0.0)
        })
        .collect()
}

// ── I-VDT and I-VDT-HMM ─────────────────────────────────────

fn check_span(recording: &GazeRecording, wt: f64) -> Result<()> {
    if recording.len() < 2 || recording.duration_ms() < wt {
        return Err(Error::InsufficientData(format!(
            "recording covers {} ms, shorter than the {wt} ms window",
            recording.duration_ms()
        )));
    }
    Ok(())
}

pub fn classify_ivdt(recording: &GazeRecording, thresholds: &ThresholdSet) -> Result<LabelSequence> {
    let t = ThresholdSet::new(thresholds.velocity, thresholds.dispersion, thresholds.duration_ms)?;
    check_span(recording, t.duration_ms)?;
    let stage1 = classify_ivt(recording, t.velocity)?;
    let subset = filter_saccades(recording, &stage1);
    let stage2 = classify_idt_window(&subset, t.dispersion, t.duration_ms)?;
    merge_labels(&stage1, &stage2, &subset.indices)
}

/// Labels plus what each HMM stage did.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutcome {
    pub labels: LabelSequence,
    /// `None` when the stage fell back to its threshold labels.
    pub velocity_stage: Option<RefineOutcome>,
    pub dispersion_stage: Option<RefineOutcome>,
}

pub fn classify_ivdt_hmm(
    recording: &GazeRecording,
    thresholds: &ThresholdSet,
    hmm: &HmmConfig,
) -> Result<LabelSequence> {
    classify_ivdt_hmm_detailed(recording, thresholds, hmm).map(|o| o.labels)
}

pub fn classify_ivdt_hmm_detailed(
    recording: &GazeRecording,
    thresholds: &ThresholdSet,
    hmm: &HmmConfig,
) -> Result<HybridOutcome> {
    let t = ThresholdSet::new(thresholds.velocity, thresholds.dispersion, thresholds.duration_ms)?;
    check_span(recording, t.duration_ms)?;

    let velocities = compute_velocities(recording)?;
    let seed = threshold_velocities(&velocities, t.velocity);
    let (stage1, velocity_stage) =
        refine_stage(&velocities, &seed, [Label::Fixation, Label::Saccade], hmm, "velocity")?;

    let subset = filter_saccades(recording, &stage1);
    let idt = classify_idt_window(&subset, t.dispersion, t.duration_ms)?;
    let features = dispersion_features(&subset, t.duration_ms);
    let (stage2, dispersion_stage) =
        refine_stage(&features, &idt, [Label::Fixation, Label::SmoothPursuit], hmm, "dispersion")?;

    let labels = merge_labels(&stage1, &stage2, &subset.indices)?;
    Ok(HybridOutcome { labels, velocity_stage, dispersion_stage })
}

/// Runs one two-state refinement, mapping `classes[0]` to state 0 and
/// `classes[1]` to state 1. Falls back to `seed` when a class is empty.
fn refine_stage(
    features: &[f64],
    seed: &LabelSequence,
    classes: [Label; 2],
    hmm: &HmmConfig,
    stage: &str,
) -> Result<(LabelSequence, Option<RefineOutcome>)> {
    if hmm.convergence.max_iterations == 0 {
        return Ok((seed.clone(), None));
    }
    let states: Vec<usize> = seed.iter().map(|&l| usize::from(l == classes[1])).collect();
    let populated = [states.contains(&0), states.contains(&1)];
    if states.len() < 2 || !populated[0] || !populated[1] {
        log::debug!("{stage} stage: seed labels leave a class empty; keeping threshold labels");
        return Ok((seed.clone(), None));
    }
    let out = viterbi_refine(features, &states, hmm)?;
    let labels = out.states.iter().map(|&s| classes[s]).collect();
    Ok((labels, Some(out)))
}

// ── I-BDT (simplified) ──────────────────────────────────────

/// How the velocity that counts as "moving" is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FixationThresholdMode {
    /// Any non-zero velocity is movement.
    Zero,
    /// Running mean velocity of samples labeled fixation so far.
    Mean,
    /// Running mean plus `k` standard deviations.
    MeanPlusKSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbdtConfig {
    pub temporal_window_ms: f64,
    pub fixation_threshold_mode: FixationThresholdMode,
    pub saccade_threshold: f64,
}

impl Default for IbdtConfig {
    fn default() -> Self {
        IbdtConfig {
            temporal_window_ms: 100.0,
            fixation_threshold_mode: FixationThresholdMode::Mean,
            saccade_threshold: 75.0,
        }
    }
}

/// Class order used by the Bayesian classifier.
pub const IBDT_CLASSES: [Label; 3] = [Label::Fixation, Label::Saccade, Label::SmoothPursuit];

const LIKELIHOOD_FLOOR: f64 = 1e-9;

/// `likelihood * prior`, normalized to sum to one. An all-zero product gives
/// the uniform distribution.
pub fn bayes_posterior(likelihood: [f64; 3], prior: [f64; 3]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for k in 0..3 {
        p[k] = likelihood[k] * prior[k];
    }
    let z: f64 = p.iter().sum();
    if z > 0.0 && z.is_finite() {
        p.iter_mut().for_each(|v| *v /= z);
        p
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Likelihoods of (fixation, saccade, pursuit) for one sample's speed and
/// the window's movement ratio.
pub fn ibdt_likelihood(speed: f64, movement_ratio: f64, saccade_threshold: f64) -> [f64; 3] {
    let width = 0.1 * saccade_threshold;
    let sac = 1.0 / (1.0 + (-(speed - saccade_threshold) / width).exp());
    let slow = 1.0 - sac;
    [slow * (1.0 - movement_ratio) + LIKELIHOOD_FLOOR, sac + LIKELIHOOD_FLOOR, slow * movement_ratio + LIKELIHOOD_FLOOR]
}

#[derive(Debug, Default, Clone, Copy)]
struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Labels and per-sample posteriors in [`IBDT_CLASSES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct IbdtOutcome {
    pub labels: LabelSequence,
    pub posteriors: Vec<[f64; 3]>,
}

pub fn classify_ibdt(recording: &GazeRecording, config: &IbdtConfig) -> Result<LabelSequence> {
    classify_ibdt_detailed(recording, config).map(|o| o.labels)
}

pub fn classify_ibdt_detailed(recording: &GazeRecording, config: &IbdtConfig) -> Result<IbdtOutcome> {
    check_positive("temporal window", config.temporal_window_ms)?;
    check_positive("saccade threshold", config.saccade_threshold)?;
    if let FixationThresholdMode::MeanPlusKSigma(k) = config.fixation_threshold_mode {
        if !(k >= 0.0) {
            return Err(Error::InvalidParameter(format!("k must be non-negative, got {k}")));
        }
    }
    if recording.duration_ms() <= config.temporal_window_ms {
        return Err(Error::InvalidParameter(format!(
            "temporal window {} ms is not shorter than the recording ({} ms)",
            config.temporal_window_ms,
            recording.duration_ms()
        )));
    }
    let v = compute_velocities(recording)?;
    let s = recording.samples();
    let t0 = s[0].timestamp_ms;
    let period = recording.period_ms();

    let mut all = RunningStats::default();
    let mut fix = RunningStats::default();
    let mut posteriors: Vec<[f64; 3]> = Vec::with_capacity(s.len());
    let mut labels = Vec::with_capacity(s.len());
    let mut start = 0usize;
    for i in 0..s.len() {
        all.push(v[i]);
        while s[i].timestamp_ms - s[start].timestamp_ms >= config.temporal_window_ms {
            start += 1;
        }
        let base = if fix.n > 0 { fix } else { all };
        let theta = match config.fixation_threshold_mode {
            FixationThresholdMode::Zero => 0.0,
            FixationThresholdMode::Mean => base.mean,
            FixationThresholdMode::MeanPlusKSigma(k) => base.mean + k * base.std(),
        };
        let window = &v[start..=i];
        let ratio = window.iter().filter(|&&x| x > theta).count() as f64 / window.len() as f64;

        let full = s[i].timestamp_ms - t0 + period >= config.temporal_window_ms;
        let prior = if full && start < i {
            let mut p = [0.0; 3];
            for q in &posteriors[start..i] {
                for k in 0..3 {
                    p[k] += q[k];
                }
            }
            let m = (i - start) as f64;
            p.map(|x| x / m)
        } else {
            [1.0 / 3.0; 3]
        };
        let post = bayes_posterior(ibdt_likelihood(v[i], ratio, config.saccade_threshold), prior);
        let mut best = 0;
        for k in 1..3 {
            if post[k] > post[best] {
                best = k;
            }
        }
        let label = IBDT_CLASSES[best];
        if label == Label::Fixation {
            fix.push(v[i]);
        }
        labels.push(label);
        posteriors.push(post);
    }
    Ok(IbdtOutcome { labels: labels.into(), posteriors })
}

// ── Algorithm selection ─────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    Ivt,
    Ivdt,
    IvdtHmm,
    Ibdt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Ivt, Algorithm::Ivdt, Algorithm::IvdtHmm, Algorithm::Ibdt];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ivt => "ivt",
            Algorithm::Ivdt => "ivdt",
            Algorithm::IvdtHmm => "ivdt-hmm",
            Algorithm::Ibdt => "ibdt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s.trim())).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown algorithm {s:?} (expected ivt, ivdt, ivdt-hmm or ibdt)"))
        })
    }
}

/// Parameters for every algorithm; each reads only what it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub thresholds: ThresholdSet,
    pub hmm: HmmConfig,
    pub ibdt: IbdtConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams::with_thresholds(ThresholdSet::default())
    }
}

impl ClassifierParams {
    pub fn with_thresholds(thresholds: ThresholdSet) -> Self {
        ClassifierParams { thresholds, hmm: HmmConfig::guarded(), ibdt: IbdtConfig::default() }
    }
}

pub fn classify(recording: &GazeRecording, algorithm: Algorithm, params: &ClassifierParams) -> Result<LabelSequence> {
    match algorithm {
        Algorithm::Ivt => classify_ivt(recording, params.thresholds.velocity),
        Algorithm::Ivdt => classify_ivdt(recording, &params.thresholds),
        Algorithm::IvdtHmm => classify_ivdt_hmm(recording, &params.thresholds, &params.hmm),
        Algorithm::Ibdt => classify_ibdt(recording, &params.ibdt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use Label::{Fixation as F, Saccade as S, SmoothPursuit as P};

    fn recording(xs: &[f64], rate: f64) -> GazeRecording {
        let p = 1000.0 / rate;
        GazeRecording::new(xs.iter().enumerate().map(|(i, &x)| GazeSample::new(i as f64 * p, x, 0.0)).collect(), rate)
            .unwrap()
    }

    fn subset_of(xs: &[f64], rate: f64) -> WorkingSubset {
        let r = recording(xs, rate);
        filter_saccades(&r, &LabelSequence::filled(F, r.len()))
    }

    #[test]
    fn ivt_threshold_is_strict() {
        assert_eq!(&*threshold_velocities(&[500.0, 10.0, 400.0], 75.0), &[S, F, S]);
        assert_eq!(&*threshold_velocities(&[75.0, 75.0], 75.0), &[F, F]);
        assert_eq!(ThresholdSet::default().velocity, 75.0);
    }

    #[test]
    fn filter_and_merge() {
        let r = recording(&[0.0, 1.0, 2.0, 3.0], 1000.0);
        let l: LabelSequence = vec![S, F, F, S].into();
        let sub = filter_saccades(&r, &l);
        assert_eq!(sub.indices, vec![1, 2]);
        let merged = merge_labels(&l, &vec![F, P].into(), &sub.indices).unwrap();
        assert_eq!(&*merged, &[S, F, P, S]);

        let all_s = LabelSequence::filled(S, 4);
        let sub = filter_saccades(&r, &all_s);
        assert!(sub.is_empty());
        assert_eq!(merge_labels(&all_s, &LabelSequence::default(), &sub.indices).unwrap(), all_s);

        let none = LabelSequence::filled(F, 4);
        let sub = filter_saccades(&r, &none);
        assert_eq!(sub.indices, vec![0, 1, 2, 3]);
        let lab: LabelSequence = vec![P, F, F, P].into();
        assert_eq!(merge_labels(&none, &lab, &sub.indices).unwrap(), lab);
    }

    #[test]
    fn merge_detects_collisions() {
        let l: LabelSequence = vec![S, F, F].into();
        assert!(matches!(merge_labels(&l, &vec![F, F].into(), &[0, 1]), Err(Error::Internal(_))));
        assert!(matches!(merge_labels(&l, &vec![F, F].into(), &[1, 1]), Err(Error::Internal(_))));
        assert!(matches!(merge_labels(&l, &vec![F].into(), &[1]), Err(Error::Internal(_))));
    }

    #[test]
    fn idt_stationary_is_all_fixation() {
        let sub = subset_of(&vec![2.0; 600], 1000.0);
        let l = classify_idt_window(&sub, 0.67, 150.0).unwrap();
        assert!(l.iter().all(|&x| x == F));
    }

    #[test]
    fn idt_ramp_with_tight_threshold_is_all_pursuit() {
        // 2 deg/s ramp: any 150 ms window spans 0.3 deg (oracle from geometry)
        let xs: Vec<f64> = (0..600).map(|i| 0.002 * i as f64).collect();
        let oracle = 0.002 * 149.0;
        let sub = subset_of(&xs, 1000.0);
        let d = crate::gaze::compute_dispersion(&sub.samples[0..150]).unwrap();
        assert!((d - oracle).abs() < 1e-12);
        let l = classify_idt_window(&sub, 0.1, 150.0).unwrap();
        assert!(l.iter().all(|&x| x == P));
        // and with a loose threshold the same ramp is a fixation
        let l = classify_idt_window(&sub, 2.0, 150.0).unwrap();
        assert!(l.iter().all(|&x| x == F));
    }

    #[test]
    fn idt_short_subset_is_pursuit() {
        let sub = subset_of(&vec![0.0; 100], 1000.0);
        let l = classify_idt_window(&sub, 0.67, 150.0).unwrap();
        assert!(l.iter().all(|&x| x == P));
    }

    #[test]
    fn idt_tail_inherits_last_decision() {
        // fixation then a ramp that ends 50 samples before the end
        let mut xs = vec![0.0; 300];
        xs.extend((1..=300).map(|i| 0.02 * i as f64));
        let sub = subset_of(&xs, 1000.0);
        let l = classify_idt_window(&sub, 0.67, 150.0).unwrap();
        assert_eq!(l[0], F);
        assert_eq!(*l.last().unwrap(), P);
        assert!(l.iter().all(|&x| x != Label::Unclassified));
    }

    #[test]
    fn dispersion_features_stop_at_gaps() {
        let xs: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 5.0 }).collect();
        let r = recording(&xs, 100.0);
        let mut l = LabelSequence::filled(F, 10).into_inner();
        l[5] = S;
        let sub = filter_saccades(&r, &l.into());
        let f = dispersion_features(&sub, 1000.0);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[5], 0.0);
    }

    #[test]
    fn ivdt_requires_window_span() {
        let r = recording(&vec![0.0; 100], 1000.0);
        assert!(matches!(classify_ivdt(&r, &ThresholdSet::default()), Err(Error::InsufficientData(_))));
        assert!(matches!(
            classify_ivdt_hmm(&r, &ThresholdSet::default(), &HmmConfig::guarded()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn pure_fixation_has_no_pursuit() {
        let xs: Vec<f64> = (0..2000).map(|i| 0.01 * ((i as f64) * 0.7).sin()).collect();
        let r = recording(&xs, 1000.0);
        let l = classify_ivdt(&r, &ThresholdSet::default()).unwrap();
        assert_eq!(l.count(P), 0);
        let h = classify_ivdt_hmm(&r, &ThresholdSet::default(), &HmmConfig::guarded()).unwrap();
        assert_eq!(h.len(), r.len());
    }

    #[test]
    fn hmm_with_zero_iterations_equals_ivdt() {
        let mut xs = vec![0.0; 400];
        xs.extend((1..=20).map(|i| 0.25 * i as f64));
        xs.extend(vec![5.0; 300]);
        xs.extend((1..=400).map(|i| 5.0 + 0.015 * i as f64));
        xs.extend(vec![11.0; 300]);
        let r = recording(&xs, 1000.0);
        let t = ThresholdSet::default();
        let a = classify_ivdt(&r, &t).unwrap();
        let b = classify_ivdt_hmm(&r, &t, &HmmConfig::guarded().with_max_iterations(0)).unwrap();
        assert_eq!(a, b);
        assert!(a.count(S) > 0 && a.count(P) > 0 && a.count(F) > 0);
    }

    #[test]
    fn velocity_stage_recovers_well_separated_split() {
        // alternating slow/fast stretches so per-sample speed forms two clusters
        let mut xs = vec![0.0];
        let mut truth = vec![F];
        for block in 0..20 {
            let fast = block % 2 == 1;
            for k in 0..100 {
                let step = if fast { 0.4 + 0.01 * ((k % 5) as f64) } else { 0.005 + 0.001 * ((k % 3) as f64) };
                xs.push(xs.last().unwrap() + step);
                truth.push(if fast { S } else { F });
            }
        }
        let r = recording(&xs, 1000.0);
        let v = crate::gaze::compute_velocities_with_span(&r, 0.0).unwrap();
        // nearest-mean oracle over the two speed populations
        let oracle: LabelSequence =
            v.iter().map(|&x| if (x - 420.0).abs() < (x - 6.0).abs() { S } else { F }).collect();
        let seed = threshold_velocities(&v, 75.0);
        let (labels, out) = refine_stage(&v, &seed, [F, S], &HmmConfig::guarded(), "velocity").unwrap();
        assert!(out.is_some());
        assert_eq!(labels, oracle);
    }

    #[test]
    fn bayes_by_hand() {
        // window of 3 previous posteriors averaged into the prior
        let prev = [[0.6, 0.1, 0.3], [0.5, 0.2, 0.3], [0.4, 0.3, 0.3]];
        let prior = [0.5, 0.2, 0.3];
        let mean: Vec<f64> = (0..3).map(|k| prev.iter().map(|p| p[k]).sum::<f64>() / 3.0).collect();
        for k in 0..3 {
            assert!((mean[k] - prior[k]).abs() < 1e-12);
        }
        let like = [0.2, 0.1, 0.7];
        // hand Bayes: 0.10, 0.02, 0.21 over 0.33
        let post = bayes_posterior(like, prior);
        let expect = [0.10 / 0.33, 0.02 / 0.33, 0.21 / 0.33];
        for k in 0..3 {
            assert!((post[k] - expect[k]).abs() < 1e-12);
        }
        assert_eq!(bayes_posterior([0.0; 3], prior), [1.0 / 3.0; 3]);
    }

    #[test]
    fn ibdt_posteriors_normalized() {
        let xs: Vec<f64> = (0..500).map(|i| if i < 250 { 0.01 * (i as f64).sin() } else { 0.01 * i as f64 }).collect();
        let r = recording(&xs, 1000.0);
        let out = classify_ibdt_detailed(&r, &IbdtConfig::default()).unwrap();
        assert_eq!(out.labels.len(), r.len());
        for p in &out.posteriors {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ibdt_window_must_be_shorter_than_recording() {
        let r = recording(&vec![0.0; 50], 1000.0);
        assert!(classify_ibdt(&r, &IbdtConfig::default()).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("hmm".parse::<Algorithm>().is_err());
    }

    proptest! {
        #[test]
        fn ivt_monotone_in_threshold(v in prop::collection::vec(0.0f64..600.0, 1..200), lo in 1.0f64..300.0, d in 0.0f64..300.0) {
            let a = threshold_velocities(&v, lo);
            let b = threshold_velocities(&v, lo + d);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!(!(*x == F && *y == S));
            }
        }

        #[test]
        fn classifiers_label_every_sample(
            steps in prop::collection::vec(-0.5f64..0.5, 200..600),
            alg in 0usize..4,
        ) {
            let mut xs = vec![0.0];
            for s in &steps { xs.push(xs.last().unwrap() + s * s * s); }
            let r = recording(&xs, 1000.0);
            let l = classify(&r, Algorithm::ALL[alg], &ClassifierParams::with_thresholds(ThresholdSet::default())).unwrap();
            prop_assert_eq!(l.len(), r.len());
            prop_assert!(l.iter().all(|&x| x != Label::Unclassified));
        }

        #[test]
        fn merge_inverts_filter(bits in prop::collection::vec(0u8..3, 1..100)) {
            let labels: LabelSequence = bits.iter().map(|&b| [F, S, P][b as usize]).collect();
            let r = recording(&vec![0.0; labels.len()], 1000.0);
            let sub = filter_saccades(&r, &labels);
            let subset_labels: LabelSequence = sub.indices.iter().map(|&i| labels[i]).collect();
            prop_assert_eq!(merge_labels(&labels, &subset_labels, &sub.indices).unwrap(), labels);
        }
    }
}
