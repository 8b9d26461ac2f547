//! Post-processing range–azimuth–slow-time ambiguity cube synthesis.
//!
//! Each target contributes `a·h·Ω(r − r_z, φ − φ_z)·exp(−j·4π/λ·v·n·T_PRI)`
//! where `Ω` is a separable sinc kernel and `h` a Rician block-fading
//! coefficient drawn once per target per CPI. Complex white Gaussian noise is
//! added with a variance set by the per-sample SNR at the strongest target's
//! peak cell.
//!
//! Randomness comes from ChaCha8 streams: the generator is seeded with
//! `rng_seed` and the stream id is `(trial << 16) | slot`, where `slot` is the
//! target index for fading draws and [`NOISE_STREAM`] for the noise field.
//! Any trial can therefore be regenerated independently of the others.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Stream slot reserved for the additive noise field.
pub const NOISE_STREAM: u64 = 0xFFFF;

/// Offsets closer than this to an integer bin are snapped onto the grid.
const GRID_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub velocity_mps: f64,
    #[serde(default = "unit_amplitude")]
    pub amplitude: C64,
}

fn unit_amplitude() -> C64 {
    Complex::new(1.0, 0.0)
}

impl Target {
    /// Target placed exactly on a range/angle grid cell with unit amplitude.
    pub fn on_grid(
        params: &RadarParams,
        range_bin: usize,
        angle_bin: usize,
        velocity_mps: f64,
    ) -> Self {
        Self {
            range_m: range_bin as f64 * params.range_resolution_m,
            azimuth_rad: params.bin_azimuth(angle_bin),
            velocity_mps,
            amplitude: unit_amplitude(),
        }
    }

    pub fn with_amplitude(mut self, amplitude: C64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarParams {
    pub wavelength_m: f64,
    pub pri_s: f64,
    pub packets: usize,
    pub range_bins: usize,
    pub angle_bins: usize,
    pub range_resolution_m: f64,
    /// Range kernel width in bins (the sinc mainlobe is −4 dB at ±width/2).
    pub range_mainlobe_bins: f64,
    pub angle_mainlobe_bins: f64,
    /// Rician K-factor in dB; `None` disables fading (`h = 1`).
    pub rician_k_db: Option<f64>,
    /// Per-sample SNR at the strongest target's peak cell; `None` disables noise.
    pub snr_db: Option<f64>,
    pub rng_seed: u64,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            wavelength_m: 4.99e-3,
            pri_s: 2e-6,
            packets: 200,
            range_bins: 256,
            angle_bins: 64,
            range_resolution_m: 0.085,
            range_mainlobe_bins: 1.0,
            angle_mainlobe_bins: 1.0,
            rician_k_db: Some(2.0),
            snr_db: Some(20.0),
            rng_seed: 0,
        }
    }
}

impl RadarParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("wavelength_m", self.wavelength_m)?;
        positive("pri_s", self.pri_s)?;
        positive("range_resolution_m", self.range_resolution_m)?;
        positive("range_mainlobe_bins", self.range_mainlobe_bins)?;
        positive("angle_mainlobe_bins", self.angle_mainlobe_bins)?;
        if self.packets < 4 {
            return Err(Error::config(format!(
                "packets must be >= 4, got {}",
                self.packets
            )));
        }
        if self.range_bins == 0 || self.angle_bins == 0 {
            return Err(Error::config("range_bins and angle_bins must be non-zero"));
        }
        if self.rician_k_db.is_some_and(f64::is_nan) || self.snr_db.is_some_and(f64::is_nan) {
            return Err(Error::config("rician_k_db and snr_db must not be NaN"));
        }
        Ok(())
    }

    /// `T_CPI = N·T_PRI`.
    pub fn cpi_s(&self) -> f64 {
        self.packets as f64 * self.pri_s
    }

    /// `λ/(4·T_PRI)`.
    pub fn max_unambiguous_velocity(&self) -> f64 {
        self.wavelength_m / (4.0 * self.pri_s)
    }

    /// Per-packet phase advance of a target moving at `velocity_mps`.
    pub fn phase_step(&self, velocity_mps: f64) -> f64 {
        4.0 * PI * velocity_mps * self.pri_s / self.wavelength_m
    }

    /// Velocity corresponding to one radian of per-packet phase, `λ/(4π·T_PRI)`.
    pub fn velocity_per_radian(&self) -> f64 {
        self.wavelength_m / (4.0 * PI * self.pri_s)
    }

    pub fn with_snr_db(mut self, snr_db: Option<f64>) -> Self {
        self.snr_db = snr_db;
        self
    }

    /// Azimuth of the centre of angle bin `i`; bins tile `[−π/2, π/2)`.
    pub fn bin_azimuth(&self, i: usize) -> f64 {
        -PI / 2.0 + i as f64 * PI / self.angle_bins as f64
    }

    /// Fractional range bin of a range in metres.
    pub fn range_bin_of(&self, range_m: f64) -> f64 {
        snap(range_m / self.range_resolution_m)
    }

    /// Fractional angle bin of an azimuth in radians.
    pub fn angle_bin_of(&self, azimuth_rad: f64) -> f64 {
        snap((azimuth_rad + PI / 2.0) / (PI / self.angle_bins as f64))
    }

    /// Nearest grid cell of a target, clamped into the map.
    pub fn cell_of(&self, target: &Target) -> (usize, usize) {
        let r = self
            .range_bin_of(target.range_m)
            .round()
            .clamp(0.0, (self.range_bins - 1) as f64);
        let a = self
            .angle_bin_of(target.azimuth_rad)
            .round()
            .clamp(0.0, (self.angle_bins - 1) as f64);
        (r as usize, a as usize)
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < GRID_SNAP {
        r
    } else {
        x
    }
}

/// Complex ambiguity cube `Y[r, φ, n]` of shape `M × I × N`, slow time contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguityCube {
    data: Vec<C64>,
    params: RadarParams,
}

impl AmbiguityCube {
    pub fn zeros(params: RadarParams) -> Self {
        let len = params.range_bins * params.angle_bins * params.packets;
        Self {
            data: vec![Complex::new(0.0, 0.0); len],
            params,
        }
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    /// `(M, I, N)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.params.range_bins,
            self.params.angle_bins,
            self.params.packets,
        )
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    fn offset(&self, r: usize, a: usize) -> usize {
        (r * self.params.angle_bins + a) * self.params.packets
    }

    pub fn at(&self, r: usize, a: usize, n: usize) -> C64 {
        self.data[self.offset(r, a) + n]
    }

    /// All `N` samples of one range–azimuth cell.
    pub fn slow_time(&self, r: usize, a: usize) -> &[C64] {
        let o = self.offset(r, a);
        &self.data[o..o + self.params.packets]
    }

    /// Same cube with every sample multiplied by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        Self {
            data: self.data.iter().map(|&z| z * c).collect(),
            params: self.params.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Deterministic random stream for one `(trial, slot)` pair.
pub fn stream_rng(seed: u64, trial: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 16) | (slot & 0xFFFF));
    rng
}

/// Circularly-symmetric complex Gaussian with unit variance.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Noise variance per complex sample for a given signal power and SNR.
pub fn snr_scale(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Rician fading coefficient with `E|h|² = 1`.
///
/// `None` or `+∞` gives the pure line-of-sight limit `h = 1`; `−∞` gives a
/// Rayleigh draw.
pub fn draw_rician<R: Rng + ?Sized>(k_db: Option<f64>, rng: &mut R) -> C64 {
    let k_db = match k_db {
        None => return Complex::new(1.0, 0.0),
        Some(k) if k == f64::INFINITY => return Complex::new(1.0, 0.0),
        Some(k) => k,
    };
    let k = 10f64.powf(k_db / 10.0);
    let los = (k / (k + 1.0)).sqrt();
    let scatter = (1.0 / (k + 1.0)).sqrt();
    Complex::new(los, 0.0) + complex_normal(rng) * scatter
}

/// Noise variance the scene will use, or `None` when noise is disabled.
pub fn noise_variance(targets: &[Target], params: &RadarParams) -> Result<Option<f64>> {
    let Some(snr_db) = params.snr_db else {
        return Ok(None);
    };
    let power = targets
        .iter()
        .map(|t| t.amplitude.norm_sqr())
        .fold(0.0, f64::max);
    if power <= 0.0 {
        return Err(Error::config(
            "SNR reference needs at least one target with non-zero amplitude",
        ));
    }
    Ok(Some(snr_scale(power, snr_db)))
}

fn check_targets(targets: &[Target], params: &RadarParams) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::EmptyScene);
    }
    let limit = params.max_unambiguous_velocity();
    for (index, t) in targets.iter().enumerate() {
        let finite = [
            t.range_m,
            t.azimuth_rad,
            t.velocity_mps,
            t.amplitude.re,
            t.amplitude.im,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::config(format!(
                "target {index} has a non-finite field"
            )));
        }
        if t.velocity_mps.abs() >= limit {
            return Err(Error::AmbiguousVelocity {
                index,
                velocity_mps: t.velocity_mps,
                limit_mps: limit,
            });
        }
    }
    Ok(())
}

/// Synthesizes the cube for trial 0 of `params.rng_seed`.
pub fn synthesize_cube(targets: &[Target], params: &RadarParams) -> Result<AmbiguityCube> {
    synthesize_cube_trial(targets, params, 0)
}

/// Synthesizes the cube for Monte Carlo trial `trial`.
pub fn synthesize_cube_trial(
    targets: &[Target],
    params: &RadarParams,
    trial: u64,
) -> Result<AmbiguityCube> {
    params.validate()?;
    check_targets(targets, params)?;
    let sigma2 = noise_variance(targets, params)?;
    let (m, i, n) = (params.range_bins, params.angle_bins, params.packets);
    let mut cube = AmbiguityCube::zeros(params.clone());

    for (z, t) in targets.iter().enumerate() {
        let h = draw_rician(
            params.rician_k_db,
            &mut stream_rng(params.rng_seed, trial, z as u64),
        );
        let gain = t.amplitude * h;
        let rb = params.range_bin_of(t.range_m);
        let ab = params.angle_bin_of(t.azimuth_rad);
        let range_kernel: Vec<f64> = (0..m)
            .map(|r| sinc((r as f64 - rb) / params.range_mainlobe_bins))
            .collect();
        let angle_kernel: Vec<f64> = (0..i)
            .map(|a| sinc((a as f64 - ab) / params.angle_mainlobe_bins))
            .collect();
        let step = params.phase_step(t.velocity_mps);
        let tone: Vec<C64> = (0..n)
            .map(|k| Complex::from_polar(1.0, -step * k as f64))
            .collect();
        for (r, &kr) in range_kernel.iter().enumerate() {
            for (a, &ka) in angle_kernel.iter().enumerate() {
                let w = kr * ka;
                if w == 0.0 {
                    continue;
                }
                let cell_gain = gain * w;
                let o = cube.offset(r, a);
                for (y, &ph) in cube.data[o..o + n].iter_mut().zip(&tone) {
                    *y += cell_gain * ph;
                }
            }
        }
    }

    if let Some(var) = sigma2 {
        let sd = var.sqrt();
        let mut rng = stream_rng(params.rng_seed, trial, NOISE_STREAM);
        for y in cube.data.iter_mut() {
            *y += complex_normal(&mut rng) * sd;
        }
    }
    Ok(cube)
}
