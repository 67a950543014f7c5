//! Two-state Viterbi decoding with Gaussian observation densities.
//!
//! Decoding runs in linear probability space. Three guards keep the emission
//! matrix away from zero:
//!
//! - (a) an observation density that underflows to 0 while the other state's
//!   does not is reset to `zero_reset_ratio` times the other;
//! - (b) when both densities are 0 they are reset to `initial_reset_value`;
//! - (c) when the best emission of a column drops below
//!   `emission_lower_bound`, both entries are scaled by one shared power of
//!   two, restoring magnitude while keeping their ratio bit-exact.
//!
//! Observation densities are normalized per column before use. The shared
//! per-column factor does not change which path is most probable.
//!
//! [`viterbi_refine`] wraps the decoder in the re-estimation loop: estimate
//! means, standard deviations and transition frequencies from the current
//! labels, decode, relabel, repeat until the parameters stop moving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of hidden states. The decoder is specialised to two.
pub const STATES: usize = 2;

/// Lower bound applied to estimated standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub std: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, std: f64) -> Self {
        GaussianParams { mean, std }
    }
}

/// Normal density at `x`. May underflow to exactly 0 far in the tails.
pub fn gaussian_pdf(x: f64, params: GaussianParams) -> Result<f64> {
    let GaussianParams { mean, std } = params;
    if !(std > 0.0) {
        return Err(Error::InvalidParameter(format!("standard deviation must be positive, got {std}")));
    }
    let var = std * std;
    Ok((-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
}

/// Per-class sample mean and standard deviation (n - 1 denominator, floored
/// at [`SIGMA_FLOOR`]).
pub fn estimate_gaussian_params(features: &[f64], states: &[usize]) -> Result<[GaussianParams; STATES]> {
    if features.len() != states.len() {
        return Err(Error::InvalidParameter(format!("{} features but {} labels", features.len(), states.len())));
    }
    let mut n = [0usize; STATES];
    let mut sum = [0.0f64; STATES];
    for (&x, &s) in features.iter().zip(states) {
        check_state(s)?;
        n[s] += 1;
        sum[s] += x;
    }
    let mut out = [GaussianParams::new(0.0, SIGMA_FLOOR); STATES];
    for s in 0..STATES {
        if n[s] == 0 {
            return Err(Error::EmptyClass { class: s });
        }
        out[s].mean = sum[s] / n[s] as f64;
    }
    let mut ss = [0.0f64; STATES];
    for (&x, &s) in features.iter().zip(states) {
        let d = x - out[s].mean;
        ss[s] += d * d;
    }
    for s in 0..STATES {
        let std = if n[s] > 1 { (ss[s] / (n[s] - 1) as f64).sqrt() } else { 0.0 };
        out[s].std = std.max(SIGMA_FLOOR);
    }
    Ok(out)
}

fn check_state(s: usize) -> Result<()> {
    if s >= STATES {
        return Err(Error::InvalidParameter(format!("state {s} out of range for a two-state model")));
    }
    Ok(())
}

// ── Transitions ─────────────────────────────────────────────

/// How transition counts are turned into probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransitionNorm {
    /// Count divided by the total number of records `n` (not row-stochastic).
    #[default]
    PerRecord,
    /// Count divided by the number of transitions leaving the source state.
    RowNormalized,
}

/// `p[from][to]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix(pub [[f64; STATES]; STATES]);

impl TransitionMatrix {
    pub fn uniform() -> Self {
        TransitionMatrix([[0.5; STATES]; STATES])
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[from][to]
    }

    fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        let mut m = 0.0f64;
        for p in 0..STATES {
            for s in 0..STATES {
                m = m.max((self.0[p][s] - other.0[p][s]).abs());
            }
        }
        m
    }
}

pub fn count_transitions(states: &[usize], norm: TransitionNorm) -> Result<TransitionMatrix> {
    let n = states.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("transition counting needs 2 labels, got {n}")));
    }
    let mut counts = [[0usize; STATES]; STATES];
    for w in states.windows(2) {
        check_state(w[0])?;
        check_state(w[1])?;
        counts[w[0]][w[1]] += 1;
    }
    let mut m = [[0.0; STATES]; STATES];
    for p in 0..STATES {
        let denom = match norm {
            TransitionNorm::PerRecord => n,
            TransitionNorm::RowNormalized => counts[p].iter().sum(),
        };
        if denom == 0 {
            continue;
        }
        for s in 0..STATES {
            m[p][s] = counts[p][s] as f64 / denom as f64;
        }
    }
    Ok(TransitionMatrix(m))
}

// ── Guards ──────────────────────────────────────────────────

/// How guard (c) restores the magnitude of a vanishing emission column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RescaleMode {
    /// Multiply both entries by the power of two that brings the column
    /// maximum into `[0.5, 1)`. Ratio preserved exactly.
    #[default]
    PowerOfTwo,
    /// Multiply both entries by `log10(max)`. Kept for comparison with the
    /// original formulation; the factor is negative for probabilities below
    /// one, so the column changes sign.
    Log10Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericGuardConfig {
    pub zero_reset_ratio: f64,
    pub emission_lower_bound: f64,
    pub initial_reset_value: f64,
    #[serde(default)]
    pub rescale: RescaleMode,
}

impl Default for NumericGuardConfig {
    fn default() -> Self {
        NumericGuardConfig {
            zero_reset_ratio: 1e-4,
            emission_lower_bound: 1e-100,
            initial_reset_value: 0.5,
            rescale: RescaleMode::PowerOfTwo,
        }
    }
}

impl NumericGuardConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.zero_reset_ratio) {
            return Err(Error::InvalidParameter(format!(
                "zero_reset_ratio must lie in (0, 1), got {}",
                self.zero_reset_ratio
            )));
        }
        if !open_unit(self.emission_lower_bound) {
            return Err(Error::InvalidParameter(format!(
                "emission_lower_bound must lie in (0, 1), got {}",
                self.emission_lower_bound
            )));
        }
        if !(self.initial_reset_value > 0.0 && self.initial_reset_value.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial_reset_value must be positive, got {}",
                self.initial_reset_value
            )));
        }
        Ok(())
    }

    /// Guards (a) and (b) on a raw observation pair.
    pub fn guard_observations(&self, obs: &mut [f64; STATES], stats: &mut GuardStats) {
        match (obs[0] == 0.0, obs[1] == 0.0) {
            (true, true) => {
                *obs = [self.initial_reset_value; STATES];
                stats.both_zero_resets += 1;
            }
            (true, false) => {
                obs[0] = self.zero_reset_ratio * obs[1];
                stats.zero_resets += 1;
            }
            (false, true) => {
                obs[1] = self.zero_reset_ratio * obs[0];
                stats.zero_resets += 1;
            }
            (false, false) => {}
        }
    }

    /// Guard (c) on an emission column. Returns true if the column changed.
    pub fn guard_column(&self, col: &mut [f64; STATES], stats: &mut GuardStats) -> bool {
        let max = col[0].max(col[1]);
        if max == 0.0 || !max.is_finite() {
            *col = [self.initial_reset_value; STATES];
            stats.column_resets += 1;
            return true;
        }
        if max >= self.emission_lower_bound {
            return false;
        }
        match self.rescale {
            RescaleMode::PowerOfTwo => {
                let k = -(max.log2().floor() as i32) - 1;
                for v in col.iter_mut() {
                    *v = scale_pow2(*v, k);
                }
            }
            RescaleMode::Log10Literal => {
                let f = max.log10();
                for v in col.iter_mut() {
                    *v *= f;
                }
            }
        }
        stats.rescales += 1;
        true
    }
}

/// `x * 2^k` in exact steps (each factor is a representable power of two).
fn scale_pow2(mut x: f64, mut k: i32) -> f64 {
    const CHUNK: i32 = 1000;
    while k > CHUNK {
        x *= 2f64.powi(CHUNK);
        k -= CHUNK;
    }
    while k < -CHUNK {
        x *= 2f64.powi(-CHUNK);
        k += CHUNK;
    }
    x * 2f64.powi(k)
}

/// How often each guard fired during a decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GuardStats {
    pub zero_resets: usize,
    pub both_zero_resets: usize,
    pub rescales: usize,
    pub column_resets: usize,
}

impl GuardStats {
    pub fn any(&self) -> bool {
        self.zero_resets + self.both_zero_resets + self.rescales + self.column_resets > 0
    }
}

// ── Decoding ────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub class_params: [GaussianParams; STATES],
    pub transitions: TransitionMatrix,
    /// `None` disables all guards.
    pub guard: Option<NumericGuardConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub states: Vec<usize>,
    /// Best entry of the final emission column.
    pub probability: f64,
    pub guards: GuardStats,
}

/// Observation probabilities for one feature value: raw densities, guards
/// (a) and (b), then normalization to sum 1 (skipped if the sum is 0).
pub fn observation_column(
    x: f64,
    params: &[GaussianParams; STATES],
    guard: Option<&NumericGuardConfig>,
    stats: &mut GuardStats,
) -> Result<[f64; STATES]> {
    let mut obs = [gaussian_pdf(x, params[0])?, gaussian_pdf(x, params[1])?];
    if let Some(g) = guard {
        g.guard_observations(&mut obs, stats);
    }
    let sum = obs[0] + obs[1];
    if sum > 0.0 {
        obs[0] /= sum;
        obs[1] /= sum;
    }
    Ok(obs)
}

pub fn viterbi_decode(features: &[f64], model: &HmmModel) -> Result<Decoded> {
    if features.is_empty() {
        return Err(Error::InsufficientData("cannot decode an empty feature sequence".into()));
    }
    if let Some(g) = &model.guard {
        g.validate()?;
    }
    let mut stats = GuardStats::default();
    let obs = features
        .iter()
        .map(|&x| observation_column(x, &model.class_params, model.guard.as_ref(), &mut stats))
        .collect::<Result<Vec<_>>>()?;
    let mut decoded = decode_observations(&obs, &model.transitions, model.guard.as_ref(), None);
    decoded.guards.zero_resets += stats.zero_resets;
    decoded.guards.both_zero_resets += stats.both_zero_resets;
    Ok(decoded)
}

/// Viterbi over a prepared observation matrix. When `trace` is given, every
/// emission column (after guard (c)) is appended to it.
pub fn decode_observations(
    obs: &[[f64; STATES]],
    transitions: &TransitionMatrix,
    guard: Option<&NumericGuardConfig>,
    mut trace: Option<&mut Vec<[f64; STATES]>>,
) -> Decoded {
    let n = obs.len();
    let mut stats = GuardStats::default();
    if n == 0 {
        return Decoded { states: Vec::new(), probability: 0.0, guards: stats };
    }
    let mut back = vec![[0u8; STATES]; n];
    let mut col = obs[0];
    if let Some(t) = trace.as_deref_mut() {
        t.push(col);
    }
    for i in 1..n {
        let mut next = [0.0; STATES];
        for s in 0..STATES {
            let via0 = col[0] * transitions.0[0][s];
            let via1 = col[1] * transitions.0[1][s];
            // ties go to the lower state index
            let (best, p) = if via1 > via0 { (via1, 1u8) } else { (via0, 0u8) };
            next[s] = best * obs[i][s];
            back[i][s] = p;
        }
        if let Some(g) = guard {
            g.guard_column(&mut next, &mut stats);
        }
        col = next;
        if let Some(t) = trace.as_deref_mut() {
            t.push(col);
        }
    }
    let last = if col[1] > col[0] { 1usize } else { 0 };
    let probability = col[last];
    let mut states = vec![0usize; n];
    states[n - 1] = last;
    for i in (1..n).rev() {
        states[i - 1] = back[i][states[i]] as usize;
    }
    Decoded { states, probability, guards: stats }
}

// ── Iterative refinement ────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub epsilon_mean: f64,
    pub epsilon_std: f64,
    pub epsilon_transition: f64,
    /// Decode passes allowed. Zero returns the seed labels untouched.
    pub max_iterations: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { epsilon_mean: 0.01, epsilon_std: 0.01, epsilon_transition: 0.001, max_iterations: 100 }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("epsilon_mean", self.epsilon_mean),
            ("epsilon_std", self.epsilon_std),
            ("epsilon_transition", self.epsilon_transition),
        ] {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

/// Everything the refinement loop needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HmmConfig {
    pub convergence: ConvergenceConfig,
    pub guard: Option<NumericGuardConfig>,
    pub transition_norm: TransitionNorm,
}

impl HmmConfig {
    /// Defaults with guards enabled.
    pub fn guarded() -> Self {
        HmmConfig { guard: Some(NumericGuardConfig::default()), ..Default::default() }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.convergence.max_iterations = n;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub states: Vec<usize>,
    /// Decode passes performed.
    pub iterations: usize,
    pub converged: bool,
    /// A class emptied out; `states` holds the labeling from before that pass.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Snapshot {
    params: [GaussianParams; STATES],
    transitions: TransitionMatrix,
}

impl Snapshot {
    fn estimate(features: &[f64], states: &[usize], norm: TransitionNorm) -> Result<Self> {
        Ok(Snapshot {
            params: estimate_gaussian_params(features, states)?,
            transitions: count_transitions(states, norm)?,
        })
    }

    fn within(&self, other: &Snapshot, c: &ConvergenceConfig) -> bool {
        self.params
            .iter()
            .zip(&other.params)
            .all(|(a, b)| (a.mean - b.mean).abs() < c.epsilon_mean && (a.std - b.std).abs() < c.epsilon_std)
            && self.transitions.max_abs_diff(&other.transitions) < c.epsilon_transition
    }
}

/// Re-estimate / decode / relabel until the class parameters and transition
/// frequencies move less than the configured epsilons.
pub fn viterbi_refine(features: &[f64], initial: &[usize], config: &HmmConfig) -> Result<RefineOutcome> {
    config.convergence.validate()?;
    if features.len() != initial.len() {
        return Err(Error::InvalidParameter(format!("{} features but {} labels", features.len(), initial.len())));
    }
    let norm = config.transition_norm;
    let mut current = Snapshot::estimate(features, initial, norm)?;
    let mut states = initial.to_vec();
    let mut outcome = RefineOutcome { states: Vec::new(), iterations: 0, converged: false, degenerate: false };

    while outcome.iterations < config.convergence.max_iterations {
        let model = HmmModel { class_params: current.params, transitions: current.transitions, guard: config.guard };
        let decoded = viterbi_decode(features, &model)?;
        outcome.iterations += 1;
        let next = match Snapshot::estimate(features, &decoded.states, norm) {
            Ok(s) => s,
            Err(Error::EmptyClass { class }) => {
                log::debug!(
                    "refinement emptied class {class} after {} passes; keeping previous labels",
                    outcome.iterations
                );
                outcome.degenerate = true;
                break;
            }
            Err(e) => return Err(e),
        };
        states = decoded.states;
        let done = next.within(&current, &config.convergence);
        current = next;
        if done {
            outcome.converged = true;
            break;
        }
    }
    outcome.states = states;
    Ok(outcome)
}
