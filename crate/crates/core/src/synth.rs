//! Synthetic step-ramp stimuli and a simple observer model that follows them.
//!
//! The observer plans continuous-time eye phases over the stimulus runs:
//!
//! - steps and target jumps are answered at onset by a minimum-jerk saccade;
//! - a ramp is held for the pursuit latency, then caught up with one saccade
//!   superimposed on pursuit, then tracked exactly;
//! - when a ramp stops, pursuit carries on for the latency, the eye pauses on
//!   the overshoot, and a corrective saccade returns it to the target.
//!
//! Each phase is clipped at the end of its run, so a new run preempts
//! whatever was still planned. Truth labels come from the phases, not from
//! the stimulus intent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{Dataset, GazeRecording, GazeSample, Label, LabelSequence, StimulusPoint, StimulusTrack};

const JUMP_EPS: f64 = 1e-9;
const RAMP_TOLERANCE: f64 = 1e-6;

/// Main-sequence duration of a saccade of `amplitude` degrees.
pub fn main_sequence_duration_ms(amplitude: f64) -> f64 {
    2.2 * amplitude.abs() + 21.0
}

/// Duration of a simulated saccade: the main-sequence duration, shortened
/// when needed so the minimum-jerk peak reaches `peak_velocity`.
pub fn saccade_duration_ms(amplitude: f64, peak_velocity: f64) -> f64 {
    let a = amplitude.abs();
    if a == 0.0 {
        return 0.0;
    }
    main_sequence_duration_ms(a).min(1875.0 * a / peak_velocity)
}

/// Normalized minimum-jerk displacement at `s` in [0, 1].
fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn unit(direction_deg: f64) -> [f64; 2] {
    let r = direction_deg.to_radians();
    [r.cos(), r.sin()]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(a: [f64; 2], k: f64) -> [f64; 2] {
    [a[0] * k, a[1] * k]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

// ── Specs ───────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    /// Stationary target; `position` jumps it, otherwise it stays put.
    Fixation {
        duration_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<[f64; 2]>,
    },
    /// Target jump lasting the main-sequence duration of its amplitude.
    Step {
        amplitude_deg: f64,
        #[serde(default)]
        direction_deg: f64,
    },
    /// Constant-velocity target motion.
    Ramp {
        duration_ms: f64,
        velocity_deg_s: f64,
        #[serde(default)]
        direction_deg: f64,
    },
}

impl Segment {
    pub fn duration_ms(&self) -> f64 {
        match *self {
            Segment::Fixation { duration_ms, .. } | Segment::Ramp { duration_ms, .. } => duration_ms,
            Segment::Step { amplitude_deg, .. } => main_sequence_duration_ms(amplitude_deg),
        }
    }

    pub fn intended(&self) -> Label {
        match self {
            Segment::Fixation { .. } => Label::Fixation,
            Segment::Step { .. } => Label::Saccade,
            Segment::Ramp { .. } => Label::SmoothPursuit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub rate_hz: f64,
    pub segments: Vec<Segment>,
}

impl StimulusSpec {
    /// Eight 2.3 s cycles of fixation, 5° step, fixation, 320 ms ramp at
    /// 10 to 25 °/s, fixation. Steps go against the ramp direction so the
    /// target stays near the centre.
    pub fn reference(rate_hz: f64) -> Self {
        const SPEEDS: [f64; 4] = [10.0, 15.0, 20.0, 25.0];
        const DIRECTIONS: [f64; 4] = [0.0, 180.0, 90.0, 270.0];
        let mut segments = Vec::new();
        for c in 0..8 {
            let dir = DIRECTIONS[c % 4];
            segments.push(Segment::Fixation { duration_ms: 700.0, position: (c == 0).then_some([0.0, 0.0]) });
            segments.push(Segment::Step { amplitude_deg: 5.0, direction_deg: (dir + 180.0) % 360.0 });
            segments.push(Segment::Fixation { duration_ms: 600.0, position: None });
            segments.push(Segment::Ramp { duration_ms: 320.0, velocity_deg_s: SPEEDS[c % 4], direction_deg: dir });
            segments.push(Segment::Fixation { duration_ms: 648.0, position: None });
        }
        StimulusSpec { rate_hz, segments }
    }

    pub fn duration_ms(&self) -> f64 {
        self.segments.iter().map(Segment::duration_ms).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::Spec(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        if self.segments.is_empty() {
            return Err(Error::Spec("segment list is empty".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let bad = match *s {
                Segment::Fixation { duration_ms, position } => {
                    !(duration_ms.is_finite() && duration_ms > 0.0)
                        || position.is_some_and(|p| !(p[0].is_finite() && p[1].is_finite()))
                }
                Segment::Step { amplitude_deg, direction_deg } => {
                    !(amplitude_deg.is_finite() && amplitude_deg != 0.0) || !direction_deg.is_finite()
                }
                Segment::Ramp { duration_ms, velocity_deg_s, direction_deg } => {
                    !(duration_ms.is_finite() && duration_ms > 0.0)
                        || !(velocity_deg_s.is_finite() && velocity_deg_s > 0.0)
                        || !direction_deg.is_finite()
                }
            };
            if bad {
                return Err(Error::Spec(format!("segment {i} is invalid: {s:?}")));
            }
        }
        if self.sample_count() < 2 {
            return Err(Error::Spec("stimulus shorter than two samples".into()));
        }
        Ok(())
    }

    fn sample_count(&self) -> usize {
        (self.duration_ms() * self.rate_hz / 1000.0 - 1e-6).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OculomotorSpec {
    pub pursuit_latency_ms: f64,
    pub saccade_peak_velocity: f64,
    pub catch_up_saccade: bool,
    /// Pause on the overshoot before the corrective saccade after a ramp.
    pub corrective_pause_ms: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for OculomotorSpec {
    fn default() -> Self {
        OculomotorSpec {
            pursuit_latency_ms: 140.0,
            saccade_peak_velocity: 350.0,
            catch_up_saccade: true,
            corrective_pause_ms: 200.0,
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl OculomotorSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Spec(format!("{name} must be positive, got {v}")))
            }
        };
        positive("pursuit_latency_ms", self.pursuit_latency_ms)?;
        positive("saccade_peak_velocity", self.saccade_peak_velocity)?;
        positive("corrective_pause_ms", self.corrective_pause_ms)?;
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Spec(format!("noise_std must be non-negative, got {}", self.noise_std)));
        }
        Ok(())
    }

    pub fn eye_params(&self) -> EyeParams {
        EyeParams {
            pursuit_latency_ms: self.pursuit_latency_ms,
            saccade_peak_velocity: self.saccade_peak_velocity,
            catch_up_saccade: self.catch_up_saccade,
            corrective_pause_ms: self.corrective_pause_ms,
        }
    }
}

/// A stimulus together with the observer that watches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub stimulus: StimulusSpec,
    #[serde(default)]
    pub oculomotor: OculomotorSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { stimulus: StimulusSpec::reference(1000.0), oculomotor: OculomotorSpec::default() }
    }
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }
}

// ── Stimulus generation ─────────────────────────────────────

pub fn generate_stimulus(spec: &StimulusSpec) -> Result<StimulusTrack> {
    spec.validate()?;
    let period = 1000.0 / spec.rate_hz;
    let n = spec.sample_count();
    let mut points = Vec::with_capacity(n);
    let begin = |s: &Segment, origin: [f64; 2]| -> [f64; 2] {
        match *s {
            Segment::Fixation { position, .. } => position.unwrap_or(origin),
            Segment::Step { amplitude_deg, direction_deg } => add(origin, scale(unit(direction_deg), amplitude_deg)),
            Segment::Ramp { .. } => origin,
        }
    };
    let mut seg = 0;
    let mut seg_start = 0.0;
    let mut seg_origin = begin(&spec.segments[0], [0.0, 0.0]);
    for k in 0..n {
        let t = k as f64 * period;
        while seg + 1 < spec.segments.len() && t >= seg_start + spec.segments[seg].duration_ms() - 1e-9 {
            let end = segment_end(&spec.segments[seg], seg_origin);
            seg_start += spec.segments[seg].duration_ms();
            seg += 1;
            seg_origin = begin(&spec.segments[seg], end);
        }
        let s = &spec.segments[seg];
        let p = match *s {
            Segment::Ramp { velocity_deg_s, direction_deg, .. } => {
                add(seg_origin, scale(unit(direction_deg), velocity_deg_s * (t - seg_start) / 1000.0))
            }
            _ => seg_origin,
        };
        points.push(StimulusPoint { timestamp_ms: t, sx: p[0], sy: p[1], intended: s.intended() });
    }
    Ok(StimulusTrack::new(points))
}

fn segment_end(s: &Segment, origin: [f64; 2]) -> [f64; 2] {
    match *s {
        Segment::Ramp { duration_ms, velocity_deg_s, direction_deg } => {
            add(origin, scale(unit(direction_deg), velocity_deg_s * duration_ms / 1000.0))
        }
        _ => origin,
    }
}

// ── Stimulus runs ───────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunKind {
    Fixation {
        position: [f64; 2],
    },
    Step {
        from: [f64; 2],
        to: [f64; 2],
    },
    /// `velocity` in degrees per millisecond.
    Ramp {
        origin: [f64; 2],
        velocity: [f64; 2],
    },
}

/// Maximal stretch of the stimulus with one intended label and one motion,
/// covering `[start_ms, end_ms)` and samples `[first, last]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusRun {
    pub kind: RunKind,
    pub start_ms: f64,
    pub end_ms: f64,
    pub first: usize,
    pub last: usize,
}

impl StimulusRun {
    pub fn duration_ms(&self) -> f64 {
        self.end_ms - self.start_ms
    }

    pub fn label(&self) -> Label {
        match self.kind {
            RunKind::Fixation { .. } => Label::Fixation,
            RunKind::Step { .. } => Label::Saccade,
            RunKind::Ramp { .. } => Label::SmoothPursuit,
        }
    }

    /// Target position at time `t` inside the run.
    pub fn target_at(&self, t: f64) -> [f64; 2] {
        match self.kind {
            RunKind::Fixation { position } => position,
            RunKind::Step { to, .. } => to,
            RunKind::Ramp { origin, velocity } => add(origin, scale(velocity, t - self.start_ms)),
        }
    }
}

/// Splits a step-ramp track into runs. Fixations split where the target
/// jumps and ramps where the velocity changes; a target that keeps moving
/// without settling is rejected.
pub fn stimulus_runs(track: &StimulusTrack) -> Result<Vec<StimulusRun>> {
    let p = &track.points;
    if p.len() < 2 {
        return Err(Error::InsufficientData("stimulus needs at least two samples".into()));
    }
    let period = (p[p.len() - 1].timestamp_ms - p[0].timestamp_ms) / (p.len() - 1) as f64;
    let pos = |i: usize| [p[i].sx, p[i].sy];
    let mut runs: Vec<StimulusRun> = Vec::new();
    let mut i = 0;
    while i < p.len() {
        let label = p[i].intended;
        let mut j = i + 1;
        match label {
            Label::Fixation | Label::Saccade => {
                while j < p.len() && p[j].intended == label && norm(sub(pos(j), pos(i))) <= JUMP_EPS {
                    j += 1;
                }
            }
            Label::SmoothPursuit => {
                if j < p.len() && p[j].intended == label {
                    let v = scale(sub(pos(j), pos(i)), 1.0 / (p[j].timestamp_ms - p[i].timestamp_ms));
                    while j < p.len() && p[j].intended == label {
                        let expect = add(pos(i), scale(v, p[j].timestamp_ms - p[i].timestamp_ms));
                        if norm(sub(expect, pos(j))) > RAMP_TOLERANCE * (1.0 + norm(expect)) {
                            break;
                        }
                        j += 1;
                    }
                }
            }
            Label::Unclassified => {
                return Err(Error::UnsupportedStimulus(format!("sample {i} has no intended label")));
            }
        }
        let start_ms = p[i].timestamp_ms;
        let end_ms = p[j - 1].timestamp_ms + period;
        let kind = match label {
            Label::Fixation => {
                if j - i < 2 && j < p.len() && p[j].intended == Label::Fixation {
                    return Err(Error::UnsupportedStimulus(format!("fixation target moves at sample {i}")));
                }
                RunKind::Fixation { position: pos(i) }
            }
            Label::Saccade => RunKind::Step { from: if i > 0 { pos(i - 1) } else { pos(i) }, to: pos(i) },
            _ => {
                if j - i < 3 && j < p.len() && p[j].intended == Label::SmoothPursuit {
                    return Err(Error::UnsupportedStimulus(format!("ramp at sample {i} is not constant-velocity")));
                }
                let origin = pos(i);
                let velocity = if j - i > 1 {
                    scale(sub(pos(j - 1), origin), 1.0 / (p[j - 1].timestamp_ms - start_ms))
                } else if i > 0 {
                    scale(sub(origin, pos(i - 1)), 1.0 / period)
                } else {
                    [0.0, 0.0]
                };
                RunKind::Ramp { origin, velocity }
            }
        };
        runs.push(StimulusRun { kind, start_ms, end_ms, first: i, last: j - 1 });
        i = j;
    }
    Ok(runs)
}

// ── Eye plan ────────────────────────────────────────────────

/// Observer parameters shared by the simulator and ideal-score analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeParams {
    pub pursuit_latency_ms: f64,
    pub saccade_peak_velocity: f64,
    pub catch_up_saccade: bool,
    pub corrective_pause_ms: f64,
}

/// One continuous-time piece of the eye trajectory on `[start_ms, end_ms)`.
/// A saccade phase carries its full amplitude and duration even when clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePhase {
    pub start_ms: f64,
    pub end_ms: f64,
    pub label: Label,
    pub origin: [f64; 2],
    /// Degrees per millisecond.
    pub velocity: [f64; 2],
    pub saccade: Option<([f64; 2], f64)>,
}

impl EyePhase {
    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let dt = t - self.start_ms;
        let mut p = add(self.origin, scale(self.velocity, dt));
        if let Some((amp, dur)) = self.saccade {
            p = add(p, scale(amp, min_jerk(dt / dur)));
        }
        p
    }
}

struct Planner {
    phases: Vec<EyePhase>,
    eye: [f64; 2],
    end: f64,
}

impl Planner {
    /// Appends a phase clipped at the current run end; `None` once clipped.
    fn emit(
        &mut self,
        t: f64,
        dur: f64,
        label: Label,
        velocity: [f64; 2],
        saccade: Option<([f64; 2], f64)>,
    ) -> Option<f64> {
        if t >= self.end {
            return None;
        }
        let stop = (t + dur).min(self.end);
        let phase = EyePhase { start_ms: t, end_ms: stop, label, origin: self.eye, velocity, saccade };
        if stop > t {
            self.eye = phase.position_at(stop);
            self.phases.push(phase);
        }
        (t + dur <= self.end).then_some(t + dur)
    }

    fn saccade_to(&mut self, t: f64, target: [f64; 2], peak: f64) -> Option<f64> {
        let amp = sub(target, self.eye);
        if norm(amp) <= JUMP_EPS {
            return Some(t);
        }
        let d = saccade_duration_ms(norm(amp), peak);
        self.emit(t, d, Label::Saccade, [0.0, 0.0], Some((amp, d)))
    }

    fn hold(&mut self, t: f64) {
        self.emit(t, self.end - t, Label::Fixation, [0.0, 0.0], None);
    }
}

/// Plans eye phases over `runs`; the phases tile the runs without gaps.
pub fn plan_eye(runs: &[StimulusRun], params: &EyeParams) -> Vec<EyePhase> {
    let l = params.pursuit_latency_ms;
    let peak = params.saccade_peak_velocity;
    let start = runs.first().map(|r| r.target_at(r.start_ms)).unwrap_or_default();
    let mut pl = Planner { phases: Vec::new(), eye: start, end: 0.0 };
    let mut pursuing: Option<[f64; 2]> = None;
    for run in runs {
        pl.end = run.end_ms;
        let t = run.start_ms;
        let carried = pursuing.take();
        match run.kind {
            RunKind::Fixation { position } => {
                let mut next = Some(t);
                if let Some(v) = carried {
                    next = next
                        .and_then(|t| pl.emit(t, l, Label::SmoothPursuit, v, None))
                        .and_then(|t| pl.emit(t, params.corrective_pause_ms, Label::Fixation, [0.0, 0.0], None));
                }
                if let Some(t) = next.and_then(|t| pl.saccade_to(t, position, peak)) {
                    pl.hold(t);
                }
            }
            RunKind::Step { to, .. } => {
                if let Some(t) = pl.saccade_to(t, to, peak) {
                    pl.hold(t);
                }
            }
            RunKind::Ramp { velocity, .. } => {
                let Some(c) = pl.emit(t, l, Label::Fixation, [0.0, 0.0], None) else { continue };
                let mut next = Some(c);
                if params.catch_up_saccade {
                    let amp = sub(run.target_at(c), pl.eye);
                    if norm(amp) > JUMP_EPS {
                        let d = saccade_duration_ms(norm(amp), peak);
                        next = pl.emit(c, d, Label::Saccade, velocity, Some((amp, d)));
                    }
                }
                if let Some(t) = next {
                    pl.emit(t, run.end_ms - t, Label::SmoothPursuit, velocity, None);
                    pursuing = Some(velocity);
                }
            }
        }
    }
    pl.phases
}

// ── Gaze simulation ─────────────────────────────────────────

/// Samples the planned eye trajectory at the stimulus timestamps and adds
/// seeded white Gaussian noise. Returns the recording and truth labels.
pub fn simulate_gaze(track: &StimulusTrack, ocu: &OculomotorSpec) -> Result<(GazeRecording, LabelSequence)> {
    ocu.validate()?;
    let runs = stimulus_runs(track)?;
    let phases = plan_eye(&runs, &ocu.eye_params());
    let mut rng = ChaCha8Rng::seed_from_u64(ocu.seed);
    let noise = if ocu.noise_std > 0.0 {
        Some(Normal::new(0.0, ocu.noise_std).map_err(|e| Error::Spec(e.to_string()))?)
    } else {
        None
    };
    let mut samples = Vec::with_capacity(track.len());
    let mut truth = Vec::with_capacity(track.len());
    let mut k = 0;
    for p in &track.points {
        let t = p.timestamp_ms;
        while k + 1 < phases.len() && t >= phases[k].end_ms {
            k += 1;
        }
        let phase = &phases[k];
        let [mut x, mut y] = phase.position_at(t);
        if let Some(n) = &noise {
            x += n.sample(&mut rng);
            y += n.sample(&mut rng);
        }
        samples.push(GazeSample::new(t, x, y));
        truth.push(phase.label);
    }
    Ok((GazeRecording::from_samples(samples)?, truth.into()))
}

/// Stimulus, gaze and truth in one dataset.
pub fn synthesize(spec: &SynthSpec) -> Result<Dataset> {
    let stimulus = generate_stimulus(&spec.stimulus)?;
    let (recording, truth) = simulate_gaze(&stimulus, &spec.oculomotor)?;
    Ok(Dataset { recording, stimulus: Some(stimulus), truth: Some(truth) })
}
