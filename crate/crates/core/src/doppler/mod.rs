//! Doppler velocity estimators operating on a slow-time vector.
//!
//! * [`fft_doppler`]: zero-padded periodogram peak search (coarse).
//! * [`esprit`]: rotational-invariance subspace estimator (fine), with the
//!   pseudo-inverse of the shifted subspace block taken either from an SVD of
//!   the zero-padded block ([`Algorithm::EspritHi`]) or from the 2×2 normal
//!   equations ([`Algorithm::EspritLo`]).
//! * [`music`]: noise-subspace pseudospectrum search (baseline).
//!
//! All of them share the forward spatially-smoothed covariance of
//! [`smooth_covariance`]. Velocities follow the sign of the slow-time phase
//! model `y[n] ∝ exp(−j·4π·v·n·T_PRI/λ)`.

mod covariance;
mod esprit;
mod fft;
mod music;
mod peaks;

use serde::{Deserialize, Serialize};

pub use covariance::{estimate_order, smooth_covariance};
pub use esprit::esprit;
pub use fft::fft_doppler;
pub use music::music;

use crate::locator::SlowTimeVector;
use crate::numlin::{EvdMode, OpCounter};
use crate::scene::RadarParams;
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fft,
    EspritHi,
    EspritLo,
    Music,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Fft => "fft",
            Algorithm::EspritHi => "esprit_hi",
            Algorithm::EspritLo => "esprit_lo",
            Algorithm::Music => "music",
        }
    }

    pub fn is_subspace(self) -> bool {
        !matches!(self, Algorithm::Fft)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft" => Ok(Algorithm::Fft),
            "esprit_hi" => Ok(Algorithm::EspritHi),
            "esprit_lo" => Ok(Algorithm::EspritLo),
            "music" => Ok(Algorithm::Music),
            other => Err(Error::config(format!(
                "unknown algorithm {other:?} (expected fft, esprit_hi, esprit_lo or music)"
            ))),
        }
    }
}

fn default_fft_size() -> usize {
    1024
}
fn default_order() -> usize {
    2
}
fn default_search_grid() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub algorithm: Algorithm,
    /// Zero-padded transform length `P` (FFT only).
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
    /// Subvector length `L`; `None` means `⌊N/2⌋`.
    #[serde(default)]
    pub smoothing_len: Option<usize>,
    /// Number of tones `K` to report.
    #[serde(default = "default_order")]
    pub model_order: usize,
    /// Velocity grid size (MUSIC only).
    #[serde(default = "default_search_grid")]
    pub search_grid: usize,
    #[serde(default)]
    pub evd_mode: EvdMode,
    /// Extend the smoothing sum to `l = N − L`, using the final sample.
    #[serde(default)]
    pub use_all_samples: bool,
}

impl EstimatorConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            fft_size: default_fft_size(),
            smoothing_len: None,
            model_order: default_order(),
            search_grid: default_search_grid(),
            evd_mode: EvdMode::default(),
            use_all_samples: false,
        }
    }

    pub fn fft(fft_size: usize, model_order: usize) -> Self {
        Self {
            fft_size,
            model_order,
            ..Self::new(Algorithm::Fft)
        }
    }

    pub fn esprit_lo(model_order: usize) -> Self {
        Self {
            model_order,
            ..Self::new(Algorithm::EspritLo)
        }
    }

    pub fn esprit_hi(model_order: usize) -> Self {
        Self {
            model_order,
            ..Self::new(Algorithm::EspritHi)
        }
    }

    pub fn music(model_order: usize, search_grid: usize) -> Self {
        Self {
            model_order,
            search_grid,
            ..Self::new(Algorithm::Music)
        }
    }

    pub fn with_smoothing_len(mut self, len: usize) -> Self {
        self.smoothing_len = Some(len);
        self
    }

    pub fn with_evd_mode(mut self, mode: EvdMode) -> Self {
        self.evd_mode = mode;
        self
    }

    /// Effective `L` for an `N`-sample input.
    pub fn smoothing_len_for(&self, packets: usize) -> usize {
        self.smoothing_len.unwrap_or(packets / 2)
    }

    /// `P` for FFT, `L` for the subspace methods.
    pub fn size_parameter(&self, packets: usize) -> usize {
        match self.algorithm {
            Algorithm::Fft => self.fft_size,
            _ => self.smoothing_len_for(packets),
        }
    }

    /// Checks the configuration against an `N`-sample input.
    pub fn validate(&self, packets: usize) -> Result<()> {
        let k = self.model_order;
        if !(1..=2).contains(&k) {
            return Err(Error::config(format!(
                "model_order must be 1 or 2, got {k}"
            )));
        }
        match self.algorithm {
            Algorithm::Fft => {
                if self.fft_size < packets || !self.fft_size.is_power_of_two() {
                    return Err(Error::config(format!(
                        "fft_size must be a power of two >= {packets}, got {}",
                        self.fft_size
                    )));
                }
            }
            alg => {
                let l = self.smoothing_len_for(packets);
                if l < 2 || l + 1 > packets {
                    return Err(Error::config(format!(
                        "smoothing_len must lie in [2, {}], got {l}",
                        packets - 1
                    )));
                }
                if k > l - 1 {
                    return Err(Error::config(format!(
                        "model_order {k} exceeds smoothing_len - 1 = {}",
                        l - 1
                    )));
                }
                if alg == Algorithm::Music && self.search_grid < 64 {
                    return Err(Error::config(format!(
                        "search_grid must be >= 64, got {}",
                        self.search_grid
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DopplerEstimate {
    pub algorithm: Algorithm,
    /// `K` velocities, largest magnitude first.
    pub velocities_mps: Vec<f64>,
    /// `|μ_k|` for ESPRIT, in the same order as the velocities.
    pub eigen_moduli: Vec<f64>,
    /// `λ/(2·T_CPI)`.
    pub resolution_mps: f64,
    /// Velocity grid step for grid searches.
    pub precision_mps: Option<f64>,
    pub ops: OpCounter,
}

/// Doppler resolution `λ/(2·T_CPI)`.
pub fn resolution(params: &RadarParams) -> f64 {
    params.wavelength_m / (2.0 * params.cpi_s())
}

/// FFT velocity precision `λ/(2·P·T_PRI)`.
pub fn precision(params: &RadarParams, fft_size: usize) -> f64 {
    params.wavelength_m / (2.0 * fft_size as f64 * params.pri_s)
}

/// Runs the estimator selected by `cfg.algorithm`.
pub fn estimate<T: Real>(y: &SlowTimeVector<T>, cfg: &EstimatorConfig) -> Result<DopplerEstimate> {
    match cfg.algorithm {
        Algorithm::Fft => fft_doppler(y, cfg),
        Algorithm::EspritHi | Algorithm::EspritLo => esprit(y, cfg),
        Algorithm::Music => music(y, cfg),
    }
}

pub(crate) fn check_input<T: Real>(
    y: &SlowTimeVector<T>,
    cfg: &EstimatorConfig,
    expected: &[Algorithm],
    op: &'static str,
) -> Result<()> {
    if !expected.contains(&cfg.algorithm) {
        return Err(Error::config(format!(
            "{op} cannot run algorithm {}",
            cfg.algorithm
        )));
    }
    cfg.validate(y.len())?;
    if y.samples
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

/// Velocity of normalized frequency `f` (cycles per packet), wrapped to `(−½, ½]`.
pub(crate) fn wrap_cycles(f: f64) -> f64 {
    let w = f - f.round();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

/// Orders `(velocity, modulus)` pairs by descending `|v|` (ties: larger v first).
pub(crate) fn sort_by_speed(pairs: &mut [(f64, f64)]) {
    pairs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then(b.0.total_cmp(&a.0)));
}
