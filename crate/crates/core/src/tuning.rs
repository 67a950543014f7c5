//! Weighted grid search over velocity and dispersion thresholds.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, Algorithm, ClassifierParams};
use crate::error::{Error, Result};
use crate::gaze::{GazeRecording, StimulusTrack, ThresholdSet};
use crate::scores::{evaluate, ScoreConfig, ScoreKind, ScoreReport};

/// Rounds away the drift of repeated float addition on decimal grids.
fn tidy(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Parses `"75"`, `"70:150:5"` (inclusive) or `"0.5,0.67,1"`.
pub fn parse_axis(expr: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse grid {expr:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = expr.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(bad());
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| tidy(lo + k as f64 * step)).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub velocity: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub duration_ms: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            velocity: (0..=16).map(|k| (70 + 5 * k) as f64).collect(),
            dispersion: (1..=20).map(|k| k as f64 / 10.0).collect(),
            duration_ms: 150.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("velocity", &self.velocity), ("dispersion", &self.dispersion)] {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} grid is empty")));
            }
            if axis.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParameter(format!("{name} grid has non-positive values")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(format!("{name} grid is not strictly increasing")));
            }
        }
        if !(self.duration_ms.is_finite() && self.duration_ms > 0.0) {
            return Err(Error::InvalidParameter(format!("duration must be positive, got {}", self.duration_ms)));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.velocity.iter().flat_map(|&v| self.dispersion.iter().map(move |&d| (v, d))).collect()
    }
}

/// Weights in [`ScoreKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub [f64; 7]);

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector([10.0, 10.0, 10.0, 10.0, 10.0, 1.0, 1.0])
    }
}

impl WeightVector {
    pub fn only(kind: ScoreKind) -> Self {
        let mut w = [0.0; 7];
        w[ScoreKind::ALL.iter().position(|&k| k == kind).unwrap_or(0)] = 1.0;
        WeightVector(w)
    }

    pub fn scaled(self, k: f64) -> Self {
        WeightVector(self.0.map(|w| w * k))
    }

    pub fn get(&self, kind: ScoreKind) -> f64 {
        self.0[ScoreKind::ALL.iter().position(|&k| k == kind).unwrap_or(0)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("weights must be non-negative, got {:?}", self.0)));
        }
        Ok(())
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse weights {s:?}")))?;
        let w: [f64; 7] = v
            .try_into()
            .map_err(|v: Vec<f64>| Error::InvalidParameter(format!("expected 7 weights, got {}", v.len())))?;
        let w = WeightVector(w);
        w.validate()?;
        Ok(w)
    }
}

/// `Σ w·|report − ideal|`; infinite when a positively weighted score is
/// undefined on either side.
pub fn objective(report: &ScoreReport, ideals: &ScoreReport, weights: &WeightVector) -> f64 {
    let mut cost = 0.0;
    for kind in ScoreKind::ALL {
        let w = weights.get(kind);
        if w == 0.0 {
            continue;
        }
        match (report.get(kind), ideals.get(kind)) {
            (Some(r), Some(i)) => cost += w * (r - i).abs(),
            _ => return f64::INFINITY,
        }
    }
    cost
}

/// One recording to tune on, with the scores an ideal observer would get.
#[derive(Debug, Clone)]
pub struct TuningCase {
    pub recording: GazeRecording,
    pub stimulus: StimulusTrack,
    pub ideals: ScoreReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub vt: f64,
    pub dt: f64,
    pub cost: f64,
    /// Scores averaged over recordings; `None` if undefined on any of them.
    pub report: ScoreReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: ThresholdSet,
    pub best_cost: f64,
    pub table: Vec<CostRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub params: ClassifierParams,
    pub scoring: ScoreConfig,
    pub weights: WeightVector,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::IvdtHmm,
            params: ClassifierParams::default(),
            scoring: ScoreConfig::default(),
            weights: WeightVector::default(),
        }
    }
}

fn mean_report(reports: &[ScoreReport]) -> ScoreReport {
    let mut out = ScoreReport::default();
    for kind in ScoreKind::ALL {
        let vals: Option<Vec<f64>> = reports.iter().map(|r| r.get(kind)).collect();
        out.set(kind, vals.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64));
    }
    out
}

fn evaluate_cell(cases: &[TuningCase], thresholds: ThresholdSet, cfg: &SearchConfig) -> Result<CostRow> {
    let params = ClassifierParams { thresholds, ..cfg.params };
    let mut reports = Vec::with_capacity(cases.len());
    let mut cost = 0.0;
    for case in cases {
        let labels = classify(&case.recording, cfg.algorithm, &params)?;
        let report = evaluate(&labels, &case.stimulus, &case.recording, &cfg.scoring)?;
        cost += objective(&report, &case.ideals, &cfg.weights);
        reports.push(report);
    }
    Ok(CostRow {
        vt: thresholds.velocity,
        dt: thresholds.dispersion,
        cost: cost / cases.len() as f64,
        report: mean_report(&reports),
    })
}

/// Evaluates every cell, averaging cost over `cases`, and returns the
/// cheapest cell (ties go to the smaller velocity, then dispersion) with the
/// full table in grid order.
pub fn grid_search(cases: &[TuningCase], grid: &GridSpec, cfg: &SearchConfig) -> Result<GridResult> {
    if cases.is_empty() {
        return Err(Error::InvalidParameter("no recordings to tune on".into()));
    }
    grid.validate()?;
    cfg.weights.validate()?;
    let table: Vec<CostRow> = grid
        .cells()
        .into_par_iter()
        .map(|(vt, dt)| evaluate_cell(cases, ThresholdSet::new(vt, dt, grid.duration_ms)?, cfg))
        .collect::<Result<_>>()?;
    let mut best: Option<&CostRow> = None;
    for row in &table {
        if row.cost.is_finite() && best.is_none_or(|b| row.cost < b.cost) {
            best = Some(row);
        }
    }
    let best = best.ok_or(Error::NoFeasibleThreshold)?;
    Ok(GridResult { best: ThresholdSet::new(best.vt, best.dt, grid.duration_ms)?, best_cost: best.cost, table })
}

/// Separate search per recording rather than on the averaged cost.
pub fn grid_search_per_recording(cases: &[TuningCase], grid: &GridSpec, cfg: &SearchConfig) -> Result<Vec<GridResult>> {
    cases.iter().map(|c| grid_search(std::slice::from_ref(c), grid, cfg)).collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `vt,dt,cost` followed by one column per score.
pub fn write_cost_table<W: Write>(writer: W, table: &[CostRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["vt", "dt", "cost"];
    header.extend(ScoreKind::ALL.iter().map(|k| k.name()));
    w.write_record(&header)?;
    for row in table {
        let mut rec = vec![row.vt.to_string(), row.dt.to_string(), row.cost.to_string()];
        rec.extend(ScoreKind::ALL.iter().map(|&k| cell(row.report.get(k))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
