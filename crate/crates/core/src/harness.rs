//! Monte Carlo RMSE sweeps, complexity tables and their CSV / plot-data
//! serialization.
//!
//! Trial `t` of every (estimator, SNR) point draws its fading and noise from
//! the scene streams of `(seed, t)`, so all estimators and SNR points see
//! common random numbers and a parallel run reproduces a serial one exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doppler::{estimate, Algorithm, EstimatorConfig};
use crate::locator::{detect, extract_slow_time, DetectionMode, SlowTimeVector};
use crate::numlin::OpCounter;
use crate::scene::{stream_rng, synthesize_cube_trial, RadarParams, Target};
use crate::{Error, Result, C64};

/// Stream slot for the per-trial common velocity offset.
const JITTER_STREAM: u64 = 0xFFFE;

/// CSV column names, in order.
pub const CSV_HEADER: [&str; 11] = [
    "estimator",
    "algorithm",
    "N",
    "pri_us",
    "P_or_L",
    "snr_db",
    "trials",
    "failures",
    "rmse_mps",
    "complex_mults",
    "mem_words",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Rmse,
    /// Fraction of trials where every target is matched within half the
    /// Doppler resolution (RMSE is still reported).
    DetectionRate,
}

/// One estimator in a sweep, optionally with its own packet count and PRI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEstimator {
    pub label: String,
    pub config: EstimatorConfig,
    #[serde(default)]
    pub packets: Option<usize>,
    #[serde(default)]
    pub pri_s: Option<f64>,
}

impl SweepEstimator {
    pub fn new(label: impl Into<String>, config: EstimatorConfig) -> Self {
        Self {
            label: label.into(),
            config,
            packets: None,
            pri_s: None,
        }
    }

    pub fn with_cpi(mut self, packets: usize, pri_s: f64) -> Self {
        self.packets = Some(packets);
        self.pri_s = Some(pri_s);
        self
    }

    /// Scene parameters this estimator runs on.
    pub fn params(&self, base: &RadarParams) -> RadarParams {
        RadarParams {
            packets: self.packets.unwrap_or(base.packets),
            pri_s: self.pri_s.unwrap_or(base.pri_s),
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Per-sample SNR points; `+∞` means noiseless.
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    /// Base scene; `snr_db` is replaced by each grid point.
    pub params: RadarParams,
    pub targets: Vec<Target>,
    pub estimators: Vec<SweepEstimator>,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub detection: DetectionMode,
    /// Half-width of a uniform offset added to every target velocity per trial.
    #[serde(default)]
    pub velocity_jitter_mps: f64,
    /// Worker thread cap; `None` uses the global rayon pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::config(
                "snr_grid_db must be non-empty and free of NaN",
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("at least one estimator is required"));
        }
        if self.targets.is_empty() {
            return Err(Error::EmptyScene);
        }
        if !(self.velocity_jitter_mps.is_finite() && self.velocity_jitter_mps >= 0.0) {
            return Err(Error::config(
                "velocity_jitter_mps must be finite and non-negative",
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be positive"));
        }
        for e in &self.estimators {
            let p = e.params(&self.params);
            p.validate()?;
            e.config
                .validate(p.packets)
                .map_err(|err| Error::config(format!("estimator {:?}: {err}", e.label)))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub estimator: String,
    pub algorithm: Algorithm,
    #[serde(rename = "N")]
    pub packets: usize,
    pub pri_us: f64,
    #[serde(rename = "P_or_L")]
    pub size_param: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub failures: usize,
    pub rmse_mps: f64,
    /// Mean over successful trials.
    pub complex_mults: u64,
    /// Mean over successful trials.
    pub mem_words: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_rate: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    /// Free-text provenance lines written as `#` comments.
    pub comments: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, estimator: &str, snr_db: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.snr_db == snr_db)
    }

    /// `(snr_db, rmse_mps)` pairs of one estimator in grid order.
    pub fn series(&self, estimator: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator)
            .map(|r| (r.snr_db, r.rmse_mps))
            .collect()
    }
}

/// Minimum total squared error over assignments of estimates to truths.
///
/// Unmatched truths (fewer estimates than targets) cost `penalty²` each.
pub fn assignment_error(estimates: &[f64], truths: &[f64], penalty: f64) -> f64 {
    fn go(est: &[f64], truths: &[f64], used: &mut Vec<bool>, penalty: f64) -> f64 {
        let Some((&t, rest)) = truths.split_first() else {
            return 0.0;
        };
        let mut best = penalty * penalty + go(est, rest, used, penalty);
        for i in 0..est.len() {
            if !used[i] {
                used[i] = true;
                let e = (est[i] - t).powi(2) + go(est, rest, used, penalty);
                used[i] = false;
                best = best.min(e);
            }
        }
        best
    }
    go(
        estimates,
        truths,
        &mut vec![false; estimates.len()],
        penalty,
    )
}

#[derive(Clone, Copy, Default)]
struct Tally {
    sq_error: f64,
    failures: usize,
    detections: usize,
    successes: u64,
    mults: u64,
    mem: u64,
}

/// One trial of one estimator: squared error summed over targets.
fn run_trial(
    spec: &SweepSpec,
    est: &SweepEstimator,
    snr_db: f64,
    trial: u64,
) -> Result<(f64, bool, OpCounter)> {
    let mut params = est.params(&spec.params);
    params.snr_db = snr_db.is_finite().then_some(snr_db);
    let offset = if spec.velocity_jitter_mps > 0.0 {
        let j = spec.velocity_jitter_mps;
        stream_rng(params.rng_seed, trial, JITTER_STREAM).random_range(-j..=j)
    } else {
        0.0
    };
    let targets: Vec<Target> = spec
        .targets
        .iter()
        .map(|t| Target {
            velocity_mps: t.velocity_mps + offset,
            ..t.clone()
        })
        .collect();
    let truths: Vec<f64> = targets.iter().map(|t| t.velocity_mps).collect();
    let cube = synthesize_cube_trial(&targets, &params, trial)?;
    let det = detect(&cube, spec.detection)?;
    let y = extract_slow_time(&cube, &det)?;
    let out = estimate(&y, &est.config)?;
    let penalty = failure_penalty(&params);
    let err = assignment_error(&out.velocities_mps, &truths, penalty);
    let half_res = 0.5 * crate::doppler::resolution(&params);
    let matched = worst_match(&out.velocities_mps, &truths) <= half_res;
    Ok((err, matched, out.ops))
}

/// Largest per-target error under the better assignment (K ≤ 2).
fn worst_match(estimates: &[f64], truths: &[f64]) -> f64 {
    match (estimates, truths) {
        (_, [t]) => estimates
            .iter()
            .map(|e| (e - t).abs())
            .fold(f64::INFINITY, f64::min),
        ([a, b], [s, t]) => {
            let direct = (a - s).abs().max((b - t).abs());
            let swapped = (a - t).abs().max((b - s).abs());
            direct.min(swapped)
        }
        _ => f64::INFINITY,
    }
}

/// Velocity error charged per target when an estimate fails: the full
/// unambiguous span `λ/(2·T_PRI)`.
pub fn failure_penalty(params: &RadarParams) -> f64 {
    params.wavelength_m / (2.0 * params.pri_s)
}

/// Runs every (estimator, SNR) point of `spec`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(|| sweep_inner(spec)),
        None => sweep_inner(spec),
    }
}

fn sweep_inner(spec: &SweepSpec) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(spec.estimators.len() * spec.snr_grid_db.len());
    for est in &spec.estimators {
        let params = est.params(&spec.params);
        let penalty = failure_penalty(&params);
        for &snr in &spec.snr_grid_db {
            let outcomes: Vec<Result<(f64, bool, OpCounter)>> = (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| run_trial(spec, est, snr, t))
                .collect();
            let mut tally = Tally::default();
            for outcome in outcomes {
                match outcome {
                    Ok((err, matched, ops)) => {
                        tally.sq_error += err;
                        tally.detections += usize::from(matched);
                        tally.successes += 1;
                        tally.mults += ops.complex_mults;
                        tally.mem += ops.peak_memory_words;
                    }
                    Err(
                        Error::Singular { .. } | Error::NoConvergence { .. } | Error::ZeroSlice,
                    ) => {
                        tally.failures += 1;
                        tally.sq_error += spec.targets.len() as f64 * penalty * penalty;
                    }
                    Err(e) => return Err(e),
                }
            }
            let n_targets = spec.targets.len() as f64;
            rows.push(SweepRow {
                estimator: est.label.clone(),
                algorithm: est.config.algorithm,
                packets: params.packets,
                pri_us: params.pri_s * 1e6,
                size_param: est.config.size_parameter(params.packets),
                snr_db: snr,
                trials: spec.trials,
                failures: tally.failures,
                rmse_mps: (tally.sq_error / (spec.trials as f64 * n_targets)).sqrt(),
                complex_mults: tally.mults.checked_div(tally.successes).unwrap_or(0),
                mem_words: tally.mem.checked_div(tally.successes).unwrap_or(0),
                detection_rate: (spec.metric == Metric::DetectionRate)
                    .then(|| tally.detections as f64 / spec.trials as f64),
            });
        }
    }
    Ok(SweepResult {
        comments: provenance(spec),
        rows,
    })
}

fn provenance(spec: &SweepSpec) -> Vec<String> {
    let mut lines = vec![format!(
        "seed={} trials={} rician_k_db={} snr_grid_db={:?} detection={} jitter_mps={}",
        spec.params.rng_seed,
        spec.trials,
        spec.params
            .rician_k_db
            .map_or("none".to_string(), |k| k.to_string()),
        spec.snr_grid_db,
        serde_json::to_string(&spec.detection).expect("detection mode serializes"),
        spec.velocity_jitter_mps
    )];
    let truths: Vec<String> = spec
        .targets
        .iter()
        .map(|t| format!("{}", t.velocity_mps))
        .collect();
    lines.push(format!("target_velocities_mps={}", truths.join(";")));
    lines
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub packets: usize,
    pub size_param: usize,
    pub ops: OpCounter,
    /// Relative to the baseline row.
    pub mult_ratio: f64,
    pub mem_ratio: f64,
}

/// Noiseless two-tone reference input with tones at `+0.1` and `−0.23` of the
/// unambiguous limit.
pub fn reference_input(params: &RadarParams) -> SlowTimeVector<f64> {
    let vmax = params.max_unambiguous_velocity();
    let steps = [
        params.phase_step(0.1 * vmax),
        params.phase_step(-0.23 * vmax),
    ];
    let samples = (0..params.packets)
        .map(|n| {
            steps
                .iter()
                .map(|s| C64::from_polar(1.0, -s * n as f64))
                .sum()
        })
        .collect();
    SlowTimeVector {
        samples,
        params: params.clone(),
        origin: None,
    }
}

/// Runs each configuration once on [`reference_input`] and tabulates its op
/// counts against the row labelled `baseline` (or the first row).
pub fn complexity_report(
    configs: &[SweepEstimator],
    params: &RadarParams,
    baseline: &str,
) -> Result<Vec<ComplexityRow>> {
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        let p = c.params(params);
        let out = estimate(&reference_input(&p), &c.config)?;
        rows.push(ComplexityRow {
            label: c.label.clone(),
            algorithm: c.config.algorithm,
            packets: p.packets,
            size_param: c.config.size_parameter(p.packets),
            ops: out.ops,
            mult_ratio: 1.0,
            mem_ratio: 1.0,
        });
    }
    let base = rows
        .iter()
        .find(|r| r.label == baseline)
        .or(rows.first())
        .map(|r| r.ops);
    if let Some(base) = base {
        for r in &mut rows {
            r.mult_ratio = r.ops.complex_mults as f64 / base.complex_mults.max(1) as f64;
            r.mem_ratio = r.ops.peak_memory_words as f64 / base.peak_memory_words.max(1) as f64;
        }
    }
    Ok(rows)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `result` as CSV to any writer.
pub fn write_csv<W: Write>(
    result: &SweepResult,
    mut out: W,
) -> std::result::Result<(), csv::Error> {
    for c in &result.comments {
        writeln!(out, "# {c}")?;
    }
    let with_rate = result.rows.iter().any(|r| r.detection_rate.is_some());
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_rate {
        header.push("detection_rate");
    }
    w.write_record(&header)?;
    for r in &result.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `result` to `path`.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_csv(result, BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

/// Reads a CSV written by [`emit_csv`].
pub fn parse_csv(path: &Path) -> Result<SweepResult> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut comments = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        match line.strip_prefix('#') {
            Some(c) => comments.push(c.strip_prefix(' ').unwrap_or(c).to_string()),
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().take(CSV_HEADER.len()).ne(CSV_HEADER) {
        return Err(Error::config(format!(
            "{}: unexpected CSV header {:?}",
            path.display(),
            header
        )));
    }
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok(SweepResult { comments, rows })
}

/// Writes one `<stem>_<estimator>.dat` file per estimator next to `path`,
/// each holding `snr_db rmse_mps` lines. Returns the files written.
pub fn emit_plotdata(result: &SweepResult, path: &Path) -> Result<Vec<std::path::PathBuf>> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let mut labels: Vec<&str> = Vec::new();
    for r in &result.rows {
        if !labels.contains(&r.estimator.as_str()) {
            labels.push(&r.estimator);
        }
    }
    let mut written = Vec::with_capacity(labels.len());
    for label in labels {
        let safe: String = label
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let file_path = dir.join(format!("{stem}_{safe}.dat"));
        let file = File::create(&file_path).map_err(|e| io_err(&file_path, e))?;
        let mut w = BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "# snr_db rmse_mps ({label})")?;
            for (snr, rmse) in result.series(label) {
                writeln!(w, "{snr} {rmse}")?;
            }
            w.flush()
        };
        body().map_err(|e| io_err(&file_path, e))?;
        written.push(file_path);
    }
    Ok(written)
}
