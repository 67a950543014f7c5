//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 2 for unreadable input
//! or bad usage, 3 when classification, scoring or tuning fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{classify, Algorithm, ClassifierParams, FixationThresholdMode, IbdtConfig};
use crate::error::{Error, Result};
use crate::gaze::{
    parse_recording, resample, write_csv, write_labels_csv, ColumnMap, Dataset, ThresholdSet, PROTOCOL_FREQUENCIES_HZ,
};
use crate::hmm::{ConvergenceConfig, HmmConfig};
use crate::scores::{evaluate, ideal_scores, ScoreConfig, ScoreKind, ScoreReport};
use crate::synth::{synthesize, SynthSpec};
use crate::tuning::{
    grid_search, grid_search_per_recording, parse_axis, write_cost_table, GridResult, GridSpec, SearchConfig,
    TuningCase, WeightVector,
};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 2;
const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gazekit", version, about = "Classify, score and tune eye-movement recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label every sample of one or more recordings.
    Classify(ClassifyArgs),
    /// Decimate a recording to lower sampling rates.
    Resample(ResampleArgs),
    /// Generate a synthetic step-ramp recording.
    Synth(SynthArgs),
    /// Grid-search velocity and dispersion thresholds.
    Tune(TuneArgs),
    /// Aggregate score reports into plot-ready tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Column overrides, e.g. `timestamp_ms=time,x_deg=gx`.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct HmmArgs {
    /// Convergence epsilons for mean, std and transitions.
    #[arg(long, value_name = "MEAN,STD,TRANS")]
    epsilons: Option<String>,
    /// Refinement passes per HMM stage; 0 reproduces I-VDT.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "ivdt-hmm")]
    algorithm: String,
    /// Velocity threshold (deg/s).
    #[arg(long, default_value_t = 75.0)]
    vt: f64,
    /// Dispersion threshold (deg).
    #[arg(long, default_value_t = 0.67)]
    dt: f64,
    /// Window duration (ms).
    #[arg(long, default_value_t = 150.0)]
    wt: f64,
    /// Decimate to these rates before classifying.
    #[arg(long, value_delimiter = ',')]
    hz: Vec<f64>,
    /// I-BDT fixation threshold: `zero`, `mean` or `mean+K` (K standard deviations).
    #[arg(long, default_value = "mean")]
    fixation_threshold: String,
    #[command(flatten)]
    hmm: HmmArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ResampleArgs {
    input: PathBuf,
    /// Target rates; defaults to 30,50,60,100,200,300,500.
    #[arg(long, value_delimiter = ',')]
    hz: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// JSON spec; the built-in step-ramp spec when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the spec's noise standard deviation (deg).
    #[arg(long)]
    noise: Option<f64>,
    /// Override the spec's sampling rate.
    #[arg(long)]
    hz: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "ivdt-hmm")]
    algorithm: String,
    /// Velocity grid: a value, `lo:hi:step` or a comma list.
    #[arg(long, default_value = "70:150:5")]
    vt: String,
    /// Dispersion grid: a value, `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0.1:2.0:0.1")]
    dt: String,
    #[arg(long, default_value_t = 150.0)]
    wt: f64,
    /// Seven weights: fqns,sqns,pqns,misfix,fqls,pqls_p,pqls_v.
    #[arg(long, default_value = "10,10,10,10,10,1,1")]
    weights: String,
    /// Decimate inputs to this rate first.
    #[arg(long)]
    hz: Option<f64>,
    /// Tune each recording on its own instead of on the averaged cost.
    #[arg(long)]
    per_recording: bool,
    #[command(flatten)]
    hmm: HmmArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding `*.scores.json` files.
    dir: PathBuf,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    configure_threads();
    let result = match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Resample(a) => cmd_resample(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_DOMAIN
            }
        }
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("GAZEKIT_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => log::warn!("ignoring GAZEKIT_THREADS={v:?}"),
    }
}

fn columns(common: &Common) -> Result<ColumnMap> {
    common.format.as_deref().map_or_else(|| Ok(ColumnMap::default()), ColumnMap::with_overrides)
}

fn with_path(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_dataset(path: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let file = File::open(path).map_err(with_path(path))?;
    parse_recording(BufReader::new(file), columns)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "recording".into())
}

fn hz_tag(hz: f64) -> String {
    if hz.fract() == 0.0 {
        format!("{}hz", hz as i64)
    } else {
        format!("{hz}hz")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn hmm_config(a: &HmmArgs) -> Result<HmmConfig> {
    let mut cfg = HmmConfig::guarded();
    if let Some(e) = &a.epsilons {
        let v: Vec<f64> = e
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse epsilons {e:?}")))?;
        let [m, s, t] = v[..] else {
            return Err(Error::InvalidParameter(format!("expected three epsilons, got {e:?}")));
        };
        cfg.convergence =
            ConvergenceConfig { epsilon_mean: m, epsilon_std: s, epsilon_transition: t, ..cfg.convergence };
    }
    if let Some(n) = a.max_iter {
        cfg.convergence.max_iterations = n;
    }
    cfg.convergence.validate()?;
    Ok(cfg)
}

fn fixation_mode(s: &str) -> Result<FixationThresholdMode> {
    match s.trim() {
        "zero" => Ok(FixationThresholdMode::Zero),
        "mean" => Ok(FixationThresholdMode::Mean),
        other => other
            .strip_prefix("mean+")
            .and_then(|k| k.parse::<f64>().ok())
            .map(FixationThresholdMode::MeanPlusKSigma)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixation threshold {other:?}"))),
    }
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let params = ClassifierParams {
        thresholds: ThresholdSet::new(a.vt, a.dt, a.wt)?,
        hmm: hmm_config(&a.hmm)?,
        ibdt: IbdtConfig { fixation_threshold_mode: fixation_mode(&a.fixation_threshold)?, ..IbdtConfig::default() },
    };
    let cols = columns(&a.common)?;
    fs::create_dir_all(&a.common.out)?;
    let scoring = ScoreConfig::default();
    for input in &a.inputs {
        let original = read_dataset(input, &cols)?;
        let rates: Vec<Option<f64>> =
            if a.hz.is_empty() { vec![None] } else { a.hz.iter().map(|&h| Some(h)).collect() };
        for rate in rates {
            let data = match rate {
                Some(hz) => resample(&original, hz)?,
                None => original.clone(),
            };
            let tag = hz_tag(data.recording.rate_hz());
            let base = format!("{}.{}.{}", stem(input), algorithm, tag);
            let start = Instant::now();
            let labels = classify(&data.recording, algorithm, &params)?;
            let elapsed = start.elapsed().as_secs_f64();
            write_labels_csv(create(&a.common.out.join(format!("{base}.labels.csv")))?, &data.recording, &labels)?;
            let mut report = match &data.stimulus {
                Some(stim) => evaluate(&labels, stim, &data.recording, &scoring)?,
                None => ScoreReport::default(),
            };
            report.classification_time_s = Some(elapsed);
            if data.stimulus.is_some() {
                write_json(&a.common.out.join(format!("{base}.scores.json")), &report)?;
            }
            log::info!("{}: {} samples classified in {elapsed:.3} s", input.display(), labels.len());
        }
    }
    Ok(())
}

fn cmd_resample(a: &ResampleArgs) -> Result<()> {
    let data = read_dataset(&a.input, &columns(&a.common)?)?;
    let rates: Vec<f64> = if a.hz.is_empty() { PROTOCOL_FREQUENCIES_HZ.to_vec() } else { a.hz.clone() };
    // validate every rate before writing anything
    let outputs = rates.iter().map(|&hz| resample(&data, hz).map(|d| (hz, d))).collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&a.common.out)?;
    for (hz, d) in outputs {
        let path = a.common.out.join(format!("{}_{}.csv", stem(&a.input), hz_tag(hz)));
        write_csv(create(&path)?, &d)?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let (mut spec, name) = match &a.spec {
        Some(p) => (SynthSpec::from_json(&fs::read_to_string(p).map_err(with_path(p))?)?, stem(p)),
        None => (SynthSpec::default(), "step_ramp".to_string()),
    };
    spec.oculomotor.seed = a.seed;
    if let Some(n) = a.noise {
        spec.oculomotor.noise_std = n;
    }
    if let Some(hz) = a.hz {
        spec.stimulus.rate_hz = hz;
    }
    spec.stimulus.validate()?;
    spec.oculomotor.validate()?;
    let data = synthesize(&spec)?;
    fs::create_dir_all(&a.out)?;
    write_csv(create(&a.out.join(format!("{name}_seed{}.csv", a.seed)))?, &data)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct BestThresholds {
    algorithm: String,
    velocity: f64,
    dispersion: f64,
    duration_ms: f64,
    cost: f64,
    recordings: Vec<String>,
}

fn write_tuning(out: &Path, prefix: &str, algorithm: Algorithm, result: &GridResult, names: Vec<String>) -> Result<()> {
    let best = BestThresholds {
        algorithm: algorithm.to_string(),
        velocity: result.best.velocity,
        dispersion: result.best.dispersion,
        duration_ms: result.best.duration_ms,
        cost: result.best_cost,
        recordings: names,
    };
    write_json(&out.join(format!("{prefix}best_thresholds.json")), &best)?;
    write_cost_table(create(&out.join(format!("{prefix}cost_table.csv")))?, &result.table)
}

fn cmd_tune(a: &TuneArgs) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let grid = GridSpec { velocity: parse_axis(&a.vt)?, dispersion: parse_axis(&a.dt)?, duration_ms: a.wt };
    grid.validate()?;
    let weights: WeightVector = a.weights.parse()?;
    let cols = columns(&a.common)?;
    let scoring = ScoreConfig::default();
    let mut cases = Vec::with_capacity(a.inputs.len());
    for input in &a.inputs {
        let mut d = read_dataset(input, &cols)?;
        if let Some(hz) = a.hz {
            d = resample(&d, hz)?;
        }
        let stimulus =
            d.stimulus.ok_or_else(|| Error::Format(format!("{} has no stimulus columns", input.display())))?;
        let ideals = ideal_scores(&stimulus, &scoring)?;
        cases.push(TuningCase { recording: d.recording, stimulus, ideals });
    }
    let cfg = SearchConfig {
        algorithm,
        params: ClassifierParams { hmm: hmm_config(&a.hmm)?, ..ClassifierParams::default() },
        scoring,
        weights,
    };
    fs::create_dir_all(&a.common.out)?;
    let names: Vec<String> = a.inputs.iter().map(|p| stem(p)).collect();
    if a.per_recording {
        let results = grid_search_per_recording(&cases, &grid, &cfg)?;
        for (r, name) in results.iter().zip(names) {
            write_tuning(&a.common.out, &format!("{name}."), algorithm, r, vec![name.clone()])?;
        }
    } else {
        let r = grid_search(&cases, &grid, &cfg)?;
        write_tuning(&a.common.out, "", algorithm, &r, names)?;
    }
    Ok(())
}

/// `<stem>.<algorithm>.<hz>hz.scores.json` → (algorithm, hz).
fn report_key(name: &str) -> Option<(String, f64)> {
    let base = name.strip_suffix(".scores.json")?;
    let mut parts = base.rsplitn(3, '.');
    let hz = parts.next()?.strip_suffix("hz")?.parse::<f64>().ok()?;
    let alg = parts.next()?.to_string();
    parts.next()?;
    Some((alg, hz))
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    // (algorithm, hz in mHz) → reports
    let mut groups: BTreeMap<(String, i64), Vec<ScoreReport>> = BTreeMap::new();
    let mut entries: Vec<_> = fs::read_dir(&a.dir).map_err(with_path(&a.dir))?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some((alg, hz)) = report_key(&name) else { continue };
        let report: ScoreReport = serde_json::from_reader(BufReader::new(File::open(entry.path())?))?;
        groups.entry((alg, (hz * 1000.0).round() as i64)).or_default().push(report);
    }
    if groups.is_empty() {
        return Err(Error::Format(format!("no score reports in {}", a.dir.display())));
    }
    let out = a.out.clone().unwrap_or_else(|| a.dir.clone());
    fs::create_dir_all(&out)?;

    let mut scores = csv::Writer::from_writer(create(&out.join("score_table.csv"))?);
    let mut header = vec!["algorithm", "hz", "recordings"];
    header.extend(ScoreKind::ALL.iter().map(|k| k.name()));
    scores.write_record(&header)?;
    let mut timing = csv::Writer::from_writer(create(&out.join("timing.csv"))?);
    timing.write_record(["algorithm", "hz", "mean_time_s"])?;
    for ((alg, mhz), reports) in &groups {
        let hz = (*mhz as f64 / 1000.0).to_string();
        let mut row = vec![alg.clone(), hz.clone(), reports.len().to_string()];
        for k in ScoreKind::ALL {
            let vals: Vec<f64> = reports.iter().filter_map(|r| r.get(k)).collect();
            row.push(mean(&vals).map(|v| v.to_string()).unwrap_or_default());
        }
        scores.write_record(&row)?;
        let times: Vec<f64> = reports.iter().filter_map(|r| r.classification_time_s).collect();
        timing.write_record([alg.clone(), hz, mean(&times).map(|v| v.to_string()).unwrap_or_default()])?;
    }
    scores.flush()?;
    timing.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_names() {
        assert_eq!(report_key("s1.ivdt-hmm.1000hz.scores.json"), Some(("ivdt-hmm".into(), 1000.0)));
        assert_eq!(report_key("a.b.ivt.30hz.scores.json"), Some(("ivt".into(), 30.0)));
        assert_eq!(report_key("x.scores.json"), None);
        assert_eq!(report_key("best_thresholds.json"), None);
    }

    #[test]
    fn hz_tags() {
        assert_eq!(hz_tag(30.0), "30hz");
        assert_eq!(hz_tag(62.5), "62.5hz");
    }

    #[test]
    fn fixation_modes() {
        assert_eq!(fixation_mode("mean+1.5").unwrap(), FixationThresholdMode::MeanPlusKSigma(1.5));
        assert!(fixation_mode("median").is_err());
    }

    #[test]
    fn epsilons_parse() {
        let a = HmmArgs { epsilons: Some("0.1,0.2,0.3".into()), max_iter: Some(4) };
        let c = hmm_config(&a).unwrap();
        assert_eq!(c.convergence.epsilon_std, 0.2);
        assert_eq!(c.convergence.max_iterations, 4);
        assert!(hmm_config(&HmmArgs { epsilons: Some("1,2".into()), max_iter: None }).is_err());
    }

    #[test]
    fn help_and_bad_usage_codes() {
        assert_eq!(run(["gazekit", "--help"]), EXIT_OK);
        assert_eq!(run(["gazekit", "frobnicate"]), EXIT_INPUT);
        assert_eq!(run(["gazekit", "classify", "missing.csv", "--algorithm", "nope"]), EXIT_INPUT);
    }
}
