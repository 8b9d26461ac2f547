//! `isac-doppler` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 runtime failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_doppler::controller::{self, CalibrationGrid, Mode, PlanRequest, Policy};
use isac_doppler::doppler::{estimate, Algorithm, EstimatorConfig};
use isac_doppler::harness::{self, SweepEstimator};
use isac_doppler::locator::{detect, estimate_snr_db, extract_slow_time};
use isac_doppler::scenario::Scenario;
use isac_doppler::scene::synthesize_cube;
use isac_doppler::Error;
use serde_json::json;

const THREADS_ENV: &str = "DOPPLER_ISAC_THREADS";

#[derive(Parser)]
#[command(
    name = "isac-doppler",
    version,
    about = "Doppler velocity estimation for TDM ISAC radar"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one cube, detect the target cell and dump its slow-time samples.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every scenario estimator on one synthesized cube.
    Estimate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo RMSE sweep over the scenario's SNR grid.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// CSV output; plot-data files are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate fine-mode switch points and write a policy file.
    Calibrate {
        /// Calibration grid (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Policy template; defaults to the built-in policy.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Op counts of the scenario estimators on the reference input.
    Complexity {
        #[arg(long)]
        scenario: PathBuf,
        /// Label of the baseline row; defaults to the first estimator.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose an estimator configuration for a task mode and SNR.
    Plan {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Target separation hint in m/s (fine mode).
        #[arg(long)]
        separation: Option<f64>,
        /// Requested grid precision in m/s (coarse mode).
        #[arg(long)]
        precision: Option<f64>,
    },
}

/// Field overrides applied on top of the scenario file.
#[derive(Args, Default, Clone)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-sample SNR; for sweeps, replaces the grid with this single point.
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, global = true)]
    packets: Option<usize>,
    #[arg(long, global = true)]
    pri_us: Option<f64>,
    /// Replace the scenario's estimator list with this algorithm.
    #[arg(long, global = true)]
    algorithm: Option<Algorithm>,
    #[arg(long, global = true)]
    fft_size: Option<usize>,
    #[arg(long, global = true)]
    smoothing_len: Option<usize>,
    #[arg(long, global = true)]
    order: Option<usize>,
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.channel.seed = seed;
        }
        if let Some(snr) = self.snr_db {
            s.channel.snr_db = Some(snr);
            if let Some(sweep) = &mut s.sweep {
                sweep.snr_grid_db = vec![snr];
            }
        }
        s.override_radar(self.packets, self.pri_us.map(|us| us * 1e-6));
        if let Some(alg) = self.algorithm {
            s.estimators = vec![SweepEstimator::new(alg.as_str(), EstimatorConfig::new(alg))];
        }
        if s.estimators.is_empty() {
            s.estimators = vec![SweepEstimator::new(
                "esprit_lo",
                EstimatorConfig::esprit_lo(2),
            )];
        }
        for e in &mut s.estimators {
            if let Some(p) = self.fft_size {
                e.config.fft_size = p;
            }
            if let Some(l) = self.smoothing_len {
                e.config.smoothing_len = Some(l);
            }
            if let Some(k) = self.order {
                e.config.model_order = k;
            }
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_)
            | Error::SchemaVersion { .. }
            | Error::Json { .. }
            | Error::AmbiguousVelocity { .. }
            | Error::EmptyScene => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_failure(e: Error) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 4,
        message: format!("{}: {e}", path.display()),
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure {
                code: 3,
                message: format!("{THREADS_ENV} must be a positive integer, got {v:?}"),
            }),
        },
        Err(_) => Ok(None),
    }
}

fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario, Failure> {
    // reading counts as configuration: unreadable and malformed files exit 3
    let mut s = Scenario::load(path).map_err(config_failure)?;
    overrides.apply(&mut s);
    s.validate().map_err(config_failure)?;
    Ok(s)
}

fn load_policy(path: Option<&Path>) -> Result<Policy, Failure> {
    match path {
        Some(p) => Policy::load(p).map_err(config_failure),
        None => Ok(Policy::default()),
    }
}

fn compact(s: &Scenario) -> String {
    serde_json::to_string(s).expect("scenario serializes")
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn simulate(s: &Scenario, out: Option<&Path>) -> Result<(), Failure> {
    let params = s.params();
    let cube = synthesize_cube(&s.targets()?, &params)?;
    let det = detect(&cube, s.detection)?;
    let y = extract_slow_time(&cube, &det)?;
    let samples: Vec<[f64; 2]> = y.samples.iter().map(|z| [z.re, z.im]).collect();
    let doc = json!({
        "config": s,
        "detection": det,
        "estimated_snr_db": finite_or_null(estimate_snr_db(&cube, &det, 1)),
        "truth_velocities_mps": s.targets()?.iter().map(|t| t.velocity_mps).collect::<Vec<_>>(),
        "slow_time": samples,
    });
    write_output(out, &pretty(&doc))
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn run_estimate(s: &Scenario, out: Option<&Path>) -> Result<(), Failure> {
    let base = s.params();
    let truths: Vec<f64> = s.targets()?.iter().map(|t| t.velocity_mps).collect();
    let mut results = Vec::new();
    let mut text = String::new();
    for e in &s.estimators {
        let params = e.params(&base);
        let cube = synthesize_cube(&s.targets()?, &params)?;
        let det = detect(&cube, s.detection)?;
        let y = extract_slow_time(&cube, &det)?;
        let est = estimate(&y, &e.config)?;
        let _ = write!(text, "{:<12}", e.label);
        for (i, v) in est.velocities_mps.iter().enumerate() {
            let _ = write!(text, " v{i}={v:>10.4} m/s");
            if let Some(m) = est.eigen_moduli.get(i) {
                let _ = write!(text, " |mu{i}|={m:.6}");
            }
        }
        let _ = writeln!(text, "  cell=({}, {})", det.range_bin, det.angle_bin);
        results.push(json!({ "label": e.label, "detection": det, "estimate": est }));
    }
    match out {
        Some(path) => {
            let doc = json!({ "config": s, "truth_velocities_mps": truths, "results": results });
            write_output(Some(path), &pretty(&doc))?;
            write_output(None, &text)
        }
        None => {
            let mut header = format!("# config: {}\n", compact(s));
            let _ = writeln!(header, "# truth_velocities_mps: {truths:?}");
            write_output(None, &(header + &text))
        }
    }
}

fn run_sweep(s: &Scenario, out: &Path) -> Result<(), Failure> {
    let mut spec = s.sweep_spec()?;
    spec.threads = threads_from_env()?;
    let mut result = harness::run_sweep(&spec)?;
    result.comments.insert(0, format!("config: {}", compact(s)));
    harness::emit_csv(&result, out)?;
    let files = harness::emit_plotdata(&result, out)?;
    eprintln!(
        "wrote {} ({} rows) and {} plot-data files",
        out.display(),
        result.rows.len(),
        files.len()
    );
    Ok(())
}

fn run_calibrate(
    grid_path: &Path,
    policy: Option<&Path>,
    out: &Path,
    overrides: &Overrides,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(grid_path).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", grid_path.display()),
    })?;
    let mut grid: CalibrationGrid = serde_json::from_str(&text).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", grid_path.display()),
    })?;
    if let Some(seed) = overrides.seed {
        grid.params.rng_seed = seed;
    }
    if let Some(threads) = threads_from_env()? {
        grid.threads = Some(threads);
    }
    let template = load_policy(policy)?;
    let (policy, report) = controller::calibrate(&template, &grid)?;
    policy.save(out)?;
    let report_path = out.with_extension("report.txt");
    let grid_echo = serde_json::to_string(&grid).expect("grid serializes");
    let body = format!(
        "# grid: {grid_echo}\n{}",
        controller::threshold_report(&report)
    );
    write_output(Some(&report_path), &body)?;
    write_output(None, &body)
}

fn run_complexity(s: &Scenario, baseline: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let baseline = baseline.unwrap_or(&s.estimators[0].label);
    let rows = harness::complexity_report(&s.estimators, &s.params(), baseline)?;
    let mut text = format!("# config: {}\n# baseline: {baseline}\n", compact(s));
    text.push_str("label,algorithm,N,P_or_L,complex_mults,complex_adds,divisions,sqrt_ops,mem_words,mult_ratio,mem_ratio\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{:.4},{:.4}",
            r.label,
            r.algorithm,
            r.packets,
            r.size_param,
            r.ops.complex_mults,
            r.ops.complex_adds,
            r.ops.divisions,
            r.ops.sqrt_ops,
            r.ops.peak_memory_words,
            r.mult_ratio,
            r.mem_ratio
        );
    }
    write_output(out, &text)
}

fn run_plan(
    mode: Mode,
    policy: Option<&Path>,
    separation: Option<f64>,
    precision: Option<f64>,
    overrides: &Overrides,
) -> Result<(), Failure> {
    let policy = load_policy(policy)?;
    let req = match mode {
        Mode::Coarse => PlanRequest {
            snr_db: overrides.snr_db.unwrap_or(f64::INFINITY),
            ..PlanRequest::coarse(precision)
        },
        Mode::Fine => {
            let snr = overrides.snr_db.ok_or_else(|| Failure {
                code: 2,
                message: "plan --mode fine needs --snr-db".into(),
            })?;
            PlanRequest::fine(snr, separation)
        }
    };
    let decision = controller::plan(&req, &policy)?;
    let doc = json!({
        "request": {
            "mode": req.mode,
            "snr_db": finite_or_null(req.snr_db),
            "separation_hint_mps": req.separation_hint_mps,
            "precision_mps": req.precision_mps,
        },
        "decision": decision,
    });
    write_output(None, &pretty(&doc))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let o = &cli.overrides;
    match &cli.command {
        Command::Simulate { scenario, out } => {
            simulate(&load_scenario(scenario, o)?, out.as_deref())
        }
        Command::Estimate { scenario, out } => {
            run_estimate(&load_scenario(scenario, o)?, out.as_deref())
        }
        Command::Sweep { scenario, out } => run_sweep(&load_scenario(scenario, o)?, out),
        Command::Calibrate {
            scenario,
            policy,
            out,
        } => run_calibrate(scenario, policy.as_deref(), out, o),
        Command::Complexity {
            scenario,
            baseline,
            out,
        } => run_complexity(
            &load_scenario(scenario, o)?,
            baseline.as_deref(),
            out.as_deref(),
        ),
        Command::Plan {
            mode,
            policy,
            separation,
            precision,
        } => run_plan(*mode, policy.as_deref(), *separation, *precision, o),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
