//! Runtime reconfiguration policy: picks the estimator, FFT size, packet
//! count and PRI from the task mode and an SNR estimate, and charges a cost
//! whenever the algorithm (rather than just its parameters) changes.
//!
//! Fine-mode switch points come from [`calibrate`], which sweeps RMSE for
//! every packet option against the largest one and records the lowest SNR
//! from which the smaller option stays within `rho` of the larger.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doppler::{estimate, precision, EstimatorConfig};
use crate::harness::{reference_input, run_sweep, Metric, SweepEstimator, SweepResult, SweepSpec};
use crate::locator::DetectionMode;
use crate::scene::{RadarParams, Target};
use crate::{Error, Result};

pub const POLICY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Coarse,
    Fine,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Mode::Coarse),
            "fine" => Ok(Mode::Fine),
            other => Err(Error::config(format!(
                "unknown mode {other:?} (expected coarse or fine)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    CoarseDefault,
    FineLowSnr,
    FineHighSnr,
    PrecisionRequest,
}

/// A `(N, T_PRI)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketOption {
    pub packets: usize,
    pub pri_s: f64,
}

impl PacketOption {
    pub const fn new(packets: usize, pri_s: f64) -> Self {
        Self { packets, pri_s }
    }

    pub fn cpi_s(&self) -> f64 {
        self.packets as f64 * self.pri_s
    }

    fn apply(&self, base: &RadarParams) -> RadarParams {
        RadarParams {
            packets: self.packets,
            pri_s: self.pri_s,
            ..base.clone()
        }
    }
}

/// Calibrated switch point for one separation bucket and option pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchPoint {
    pub separation_mps: f64,
    pub small: PacketOption,
    pub large: PacketOption,
    /// Lowest grid SNR from which `small` stays within `rho` of `large`;
    /// `None` when that never happens on the calibration grid.
    pub snr_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    pub schema_version: u32,
    /// Fine-mode candidates.
    pub packet_options: Vec<PacketOption>,
    /// Coarse-mode FFT sizes.
    pub fft_sizes: Vec<usize>,
    /// Packet count and PRI used in coarse mode.
    pub coarse_option: PacketOption,
    pub thresholds: Vec<SwitchPoint>,
    pub reconfig_cost_ops: u64,
    /// Relative RMSE tolerance for "no loss in performance".
    pub rho: f64,
    /// A grid precision counts as meeting a request `q` when it is at most
    /// `q·(1 + precision_slack)`.
    pub precision_slack: f64,
    pub default_precision_mps: f64,
    pub model_order: usize,
    /// Scene used to derive predicted op counts.
    pub reference: RadarParams,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            schema_version: POLICY_SCHEMA_VERSION,
            packet_options: vec![
                PacketOption::new(50, 2e-6),
                PacketOption::new(100, 2e-6),
                PacketOption::new(200, 2e-6),
            ],
            fft_sizes: vec![1024, 2048, 4096, 8192, 16384],
            coarse_option: PacketOption::new(200, 0.58e-6),
            thresholds: Vec::new(),
            reconfig_cost_ops: 1_000_000,
            rho: 0.1,
            precision_slack: 0.1,
            default_precision_mps: 1.0,
            model_order: 2,
            reference: RadarParams::default(),
        }
    }
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != POLICY_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: POLICY_SCHEMA_VERSION,
            });
        }
        if self.packet_options.is_empty() {
            return Err(Error::config("packet_options must not be empty"));
        }
        if self.fft_sizes.is_empty() {
            return Err(Error::config("fft_sizes must not be empty"));
        }
        let bad_option =
            |o: &PacketOption| o.packets < 4 || !(o.pri_s.is_finite() && o.pri_s > 0.0);
        if self.packet_options.iter().any(bad_option) || bad_option(&self.coarse_option) {
            return Err(Error::config(
                "packet options need >= 4 packets and a positive PRI",
            ));
        }
        for &p in &self.fft_sizes {
            if !p.is_power_of_two() || p < self.coarse_option.packets {
                return Err(Error::config(format!(
                    "fft size {p} must be a power of two >= {} packets",
                    self.coarse_option.packets
                )));
            }
        }
        for t in &self.thresholds {
            if !t.separation_mps.is_finite() || t.snr_db.is_some_and(|s| !s.is_finite()) {
                return Err(Error::config("thresholds must be finite"));
            }
        }
        let finite_pos = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_pos(self.rho)
            || !finite_pos(self.precision_slack)
            || !(self.default_precision_mps.is_finite() && self.default_precision_mps > 0.0)
        {
            return Err(Error::config(
                "rho, precision_slack and default_precision_mps must be non-negative",
            ));
        }
        if !(1..=2).contains(&self.model_order) {
            return Err(Error::config("model_order must be 1 or 2"));
        }
        self.reference.validate()
    }

    /// The option with the longest CPI (ties: more packets).
    pub fn largest_option(&self) -> PacketOption {
        *self
            .packet_options
            .iter()
            .max_by(|a, b| {
                a.cpi_s()
                    .total_cmp(&b.cpi_s())
                    .then(a.packets.cmp(&b.packets))
            })
            .expect("validated policy has options")
    }

    /// Calibrated separations in ascending order.
    pub fn buckets(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.thresholds.iter().map(|t| t.separation_mps).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == POLICY_SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::SchemaVersion {
                    found: u32::try_from(v).unwrap_or(u32::MAX),
                    expected: POLICY_SCHEMA_VERSION,
                })
            }
            None => {
                return Err(Error::config(format!(
                    "{}: missing schema_version",
                    path.display()
                )))
            }
        }
        let policy: Policy = serde_json::from_value(raw).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub mode: Mode,
    pub snr_db: f64,
    pub separation_hint_mps: Option<f64>,
    /// Coarse mode only; `None` uses the policy default.
    pub precision_mps: Option<f64>,
}

impl PlanRequest {
    pub fn coarse(precision_mps: Option<f64>) -> Self {
        Self {
            mode: Mode::Coarse,
            snr_db: f64::INFINITY,
            separation_hint_mps: None,
            precision_mps,
        }
    }

    pub fn fine(snr_db: f64, separation_hint_mps: Option<f64>) -> Self {
        Self {
            mode: Mode::Fine,
            snr_db,
            separation_hint_mps,
            precision_mps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDecision {
    pub mode: Mode,
    pub config: EstimatorConfig,
    pub packets: usize,
    pub pri_s: f64,
    pub rationale: Rationale,
    /// Complex multiplications of one run on the reference input.
    pub predicted_latency_ops: u64,
    /// Separation bucket consulted in fine mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket_mps: Option<f64>,
}

/// Chooses a configuration for `req`. Pure in its arguments.
pub fn plan(req: &PlanRequest, policy: &Policy) -> Result<PlanDecision> {
    policy.validate()?;
    if req.snr_db.is_nan() {
        return Err(Error::config("snr_db must not be NaN"));
    }
    match req.mode {
        Mode::Coarse => plan_coarse(req, policy),
        Mode::Fine => plan_fine(req, policy),
    }
}

fn plan_coarse(req: &PlanRequest, policy: &Policy) -> Result<PlanDecision> {
    let option = policy.coarse_option;
    let params = option.apply(&policy.reference);
    let wanted = req.precision_mps.unwrap_or(policy.default_precision_mps);
    if !(wanted.is_finite() && wanted > 0.0) {
        return Err(Error::config("precision must be positive"));
    }
    let mut sizes = policy.fft_sizes.clone();
    sizes.sort_unstable();
    let limit = wanted * (1.0 + policy.precision_slack);
    let fft_size = sizes
        .iter()
        .copied()
        .find(|&p| precision(&params, p) <= limit)
        .unwrap_or(*sizes.last().expect("validated policy has fft sizes"));
    let config = EstimatorConfig::fft(fft_size, 1);
    let ops = estimate(&reference_input(&params), &config)?.ops;
    Ok(PlanDecision {
        mode: Mode::Coarse,
        config,
        packets: option.packets,
        pri_s: option.pri_s,
        rationale: if req.precision_mps.is_some() {
            Rationale::PrecisionRequest
        } else {
            Rationale::CoarseDefault
        },
        predicted_latency_ops: ops.complex_mults,
        bucket_mps: None,
    })
}

fn plan_fine(req: &PlanRequest, policy: &Policy) -> Result<PlanDecision> {
    let large = policy.largest_option();
    let buckets = policy.buckets();
    // the largest calibrated separation not exceeding the hint; the smallest
    // (most demanding) bucket when there is no usable hint
    let bucket = match req.separation_hint_mps {
        Some(h) => buckets
            .iter()
            .rev()
            .find(|&&b| b <= h)
            .or(buckets.first())
            .copied(),
        None => buckets.first().copied(),
    };

    let mut smaller: Vec<PacketOption> = policy
        .packet_options
        .iter()
        .copied()
        .filter(|o| *o != large)
        .collect();
    smaller.sort_by(|a, b| {
        a.packets
            .cmp(&b.packets)
            .then(a.cpi_s().total_cmp(&b.cpi_s()))
    });
    let eligible = |o: &PacketOption| {
        bucket.is_some_and(|b| {
            policy.thresholds.iter().any(|t| {
                t.separation_mps == b
                    && t.small == *o
                    && t.large == large
                    && t.snr_db.is_some_and(|s| req.snr_db >= s)
            })
        })
    };
    let (option, rationale) = match smaller.iter().find(|o| eligible(o)) {
        Some(o) => (*o, Rationale::FineHighSnr),
        None if smaller.is_empty() => (large, Rationale::FineHighSnr),
        None => (large, Rationale::FineLowSnr),
    };

    let config = EstimatorConfig::esprit_lo(policy.model_order);
    let params = option.apply(&policy.reference);
    let ops = estimate(&reference_input(&params), &config)?.ops;
    Ok(PlanDecision {
        mode: Mode::Fine,
        config,
        packets: option.packets,
        pri_s: option.pri_s,
        rationale,
        predicted_latency_ops: ops.complex_mults,
        bucket_mps: bucket,
    })
}

/// Cost of moving from `current` to `next`: a full reload when the
/// algorithm changes, free when only parameters change.
pub fn reconfigure(current: &EstimatorConfig, next: &EstimatorConfig, policy: &Policy) -> u64 {
    if current.algorithm == next.algorithm {
        0
    } else {
        policy.reconfig_cost_ops
    }
}

/// Scenario family swept by [`calibrate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationGrid {
    pub separations_mps: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    /// Scene template (grid, channel, seed); packets and PRI come from the options.
    pub params: RadarParams,
    /// Velocity of the slower target before jitter.
    pub base_velocity_mps: f64,
    #[serde(default)]
    pub velocity_jitter_mps: f64,
    #[serde(default)]
    pub detection: DetectionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationBucket {
    pub separation_mps: f64,
    pub sweep: SweepResult,
    pub switch_points: Vec<SwitchPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub rho: f64,
    pub buckets: Vec<CalibrationBucket>,
}

fn option_label(o: &PacketOption) -> String {
    format!("esprit_lo_N{}_T{}us", o.packets, o.pri_s * 1e6)
}

/// Lowest grid SNR `s*` such that `|small − large| ≤ rho·large` at every
/// grid SNR `≥ s*`.
pub fn switch_point(
    curve_small: &[(f64, f64)],
    curve_large: &[(f64, f64)],
    rho: f64,
) -> Option<f64> {
    let mut pairs: Vec<(f64, f64, f64)> = curve_small
        .iter()
        .filter_map(|&(s, r)| {
            curve_large
                .iter()
                .find(|&&(t, _)| t == s)
                .map(|&(_, q)| (s, r, q))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = None;
    for &(snr, small, large) in pairs.iter().rev() {
        if (small - large).abs() <= rho * large {
            best = Some(snr);
        } else {
            break;
        }
    }
    best
}

/// Runs one RMSE sweep per separation over every packet option and writes
/// the resulting switch points into a copy of `template`.
pub fn calibrate(template: &Policy, grid: &CalibrationGrid) -> Result<(Policy, CalibrationReport)> {
    template.validate()?;
    let mut policy = template.clone();
    let mut report = CalibrationReport {
        rho: template.rho,
        buckets: Vec::new(),
    };
    if template.packet_options.len() < 2 {
        return Ok((policy, report));
    }
    if grid.separations_mps.is_empty()
        || grid
            .separations_mps
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
    {
        return Err(Error::config(
            "separations_mps must be non-empty and positive",
        ));
    }
    let large = template.largest_option();
    let estimators: Vec<SweepEstimator> = template
        .packet_options
        .iter()
        .map(|o| {
            SweepEstimator::new(
                option_label(o),
                EstimatorConfig::esprit_lo(template.model_order),
            )
            .with_cpi(o.packets, o.pri_s)
        })
        .collect();

    let mut thresholds = Vec::new();
    for &sep in &grid.separations_mps {
        let targets = vec![
            Target::on_grid(&grid.params, 0, 0, grid.base_velocity_mps),
            Target::on_grid(&grid.params, 0, 0, grid.base_velocity_mps + sep),
        ];
        let spec = SweepSpec {
            snr_grid_db: grid.snr_grid_db.clone(),
            trials: grid.trials,
            params: grid.params.clone(),
            targets,
            estimators: estimators.clone(),
            metric: Metric::Rmse,
            detection: grid.detection,
            velocity_jitter_mps: grid.velocity_jitter_mps,
            threads: grid.threads,
        };
        let sweep = run_sweep(&spec)?;
        let large_curve = sweep.series(&option_label(&large));
        let mut points = Vec::new();
        for o in template.packet_options.iter().filter(|o| **o != large) {
            let snr = switch_point(&sweep.series(&option_label(o)), &large_curve, template.rho);
            points.push(SwitchPoint {
                separation_mps: sep,
                small: *o,
                large,
                snr_db: snr,
            });
        }
        thresholds.extend(points.iter().cloned());
        report.buckets.push(CalibrationBucket {
            separation_mps: sep,
            sweep,
            switch_points: points,
        });
    }
    policy.thresholds = thresholds;
    Ok((policy, report))
}

/// Human-readable table of switch points and the RMSE curves behind them.
pub fn threshold_report(report: &CalibrationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "switch points (rho = {:.0}%)", report.rho * 100.0);
    for b in &report.buckets {
        let _ = writeln!(out, "\nseparation {} m/s", b.separation_mps);
        for sp in &b.switch_points {
            let at = match sp.snr_db {
                Some(s) => format!("{s} dB"),
                None => "none on grid".to_string(),
            };
            let _ = writeln!(
                out,
                "  N={} T={}us vs N={} T={}us: switch at {at}",
                sp.small.packets,
                sp.small.pri_s * 1e6,
                sp.large.packets,
                sp.large.pri_s * 1e6
            );
        }
        let mut labels: Vec<&str> = Vec::new();
        for r in &b.sweep.rows {
            if !labels.contains(&r.estimator.as_str()) {
                labels.push(&r.estimator);
            }
        }
        for l in labels {
            let curve: Vec<String> = b
                .sweep
                .series(l)
                .iter()
                .map(|(s, r)| format!("{s}:{r:.4}"))
                .collect();
            let _ = writeln!(out, "  {l:<24} {}", curve.join(" "));
        }
    }
    out
}
