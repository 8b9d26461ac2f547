//! Range–azimuth peak search and slow-time extraction.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::scene::{AmbiguityCube, RadarParams};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub range_bin: usize,
    pub angle_bin: usize,
    pub peak_magnitude: f64,
}

/// Which map drives the peak search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DetectionMode {
    /// `|Y[·, ·, n_ref]|` of a single packet.
    Packet { n_ref: usize },
    /// `|Y|` averaged over all packets.
    CoherentAvg,
    /// Peak of each cell's Doppler periodogram (coherent integration over
    /// the CPI, zero-padded to twice the next power of two).
    DopplerPeak,
}

impl Default for DetectionMode {
    fn default() -> Self {
        DetectionMode::Packet { n_ref: 0 }
    }
}

/// Slow-time samples `y[n] = Y[r̂, φ̂, n]` of one detected cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SlowTimeVector<T> {
    pub samples: Vec<Complex<T>>,
    pub params: RadarParams,
    pub origin: Option<Detection>,
}

impl<T: Real> SlowTimeVector<T> {
    /// Wraps raw samples; the length must equal `params.packets`.
    pub fn new(samples: Vec<Complex<T>>, params: RadarParams) -> Result<Self> {
        if samples.len() != params.packets {
            return Err(Error::dims(
                "SlowTimeVector::new",
                format!("{} samples", params.packets),
                format!("{}", samples.len()),
            ));
        }
        Ok(Self {
            samples,
            params,
            origin: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Real>(&self) -> SlowTimeVector<U> {
        SlowTimeVector {
            samples: self
                .samples
                .iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
            params: self.params.clone(),
            origin: self.origin,
        }
    }

    /// Same vector with every sample multiplied by `c`.
    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| z * c).collect(),
            ..self.clone()
        }
    }

    /// Same vector, complex conjugated.
    pub fn conj(&self) -> Self {
        Self {
            samples: self.samples.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }
}

fn argmax_map(
    cube: &AmbiguityCube,
    mut magnitude: impl FnMut(usize, usize) -> f64,
) -> Result<Detection> {
    let (m, i, _) = cube.shape();
    let mut best = Detection {
        range_bin: 0,
        angle_bin: 0,
        peak_magnitude: f64::NEG_INFINITY,
    };
    for r in 0..m {
        for a in 0..i {
            let mag = magnitude(r, a);
            if mag > best.peak_magnitude {
                best = Detection {
                    range_bin: r,
                    angle_bin: a,
                    peak_magnitude: mag,
                };
            }
        }
    }
    if best.peak_magnitude <= 0.0 || !best.peak_magnitude.is_finite() {
        return Err(Error::ZeroSlice);
    }
    Ok(best)
}

/// `argmax_(r, φ) |Y[r, φ, n_ref]|`; ties go to the lowest `(range, angle)`.
pub fn peak_search(cube: &AmbiguityCube, n_ref: usize) -> Result<Detection> {
    let n = cube.shape().2;
    if n_ref >= n {
        return Err(Error::config(format!(
            "n_ref {n_ref} out of range for {n} packets"
        )));
    }
    argmax_map(cube, |r, a| cube.at(r, a, n_ref).norm())
}

/// Peak of `|Y|` averaged over all packets.
pub fn peak_search_averaged(cube: &AmbiguityCube) -> Result<Detection> {
    let n = cube.shape().2 as f64;
    argmax_map(cube, |r, a| {
        cube.slow_time(r, a).iter().map(|z| z.norm()).sum::<f64>() / n
    })
}

/// Peak over cells of `max_f |FFT(y)|/N`, the coherently integrated slow time.
pub fn peak_search_doppler(cube: &AmbiguityCube) -> Result<Detection> {
    let n = cube.shape().2;
    let p = 2 * n.next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(p);
    let mut buf = vec![Complex::new(0.0, 0.0); p];
    argmax_map(cube, |r, a| {
        buf.fill(Complex::new(0.0, 0.0));
        buf[..n].copy_from_slice(cube.slow_time(r, a));
        fft.process(&mut buf);
        buf.iter().map(|z| z.norm()).fold(0.0, f64::max) / n as f64
    })
}

pub fn detect(cube: &AmbiguityCube, mode: DetectionMode) -> Result<Detection> {
    match mode {
        DetectionMode::Packet { n_ref } => peak_search(cube, n_ref),
        DetectionMode::CoherentAvg => peak_search_averaged(cube),
        DetectionMode::DopplerPeak => peak_search_doppler(cube),
    }
}

pub fn extract_slow_time(cube: &AmbiguityCube, det: &Detection) -> Result<SlowTimeVector<f64>> {
    let (m, i, _) = cube.shape();
    if det.range_bin >= m || det.angle_bin >= i {
        return Err(Error::dims(
            "extract_slow_time",
            format!("cell within {m}x{i}"),
            format!("({}, {})", det.range_bin, det.angle_bin),
        ));
    }
    Ok(SlowTimeVector {
        samples: cube.slow_time(det.range_bin, det.angle_bin).to_vec(),
        params: cube.params().clone(),
        origin: Some(*det),
    })
}

/// Peak-to-noise-floor ratio in dB at a detection.
///
/// Signal power is the mean `|Y|²` over packets at the detected cell; the
/// floor is the mean `|Y|²` of all cells outside a ±`guard`-bin window
/// around it. Returns `+∞` when the floor is zero.
pub fn estimate_snr_db(cube: &AmbiguityCube, det: &Detection, guard: usize) -> f64 {
    let (m, i, n) = cube.shape();
    let power = |r: usize, a: usize| {
        cube.slow_time(r, a)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / n as f64
    };
    let mut floor: Vec<f64> = Vec::with_capacity(m * i);
    for r in 0..m {
        for a in 0..i {
            if r.abs_diff(det.range_bin) > guard || a.abs_diff(det.angle_bin) > guard {
                floor.push(power(r, a));
            }
        }
    }
    if floor.is_empty() {
        return f64::INFINITY;
    }
    let noise = floor.iter().sum::<f64>() / floor.len() as f64;
    let peak = power(det.range_bin, det.angle_bin);
    if noise <= 0.0 {
        return f64::INFINITY;
    }
    10.0 * ((peak - noise).max(f64::MIN_POSITIVE) / noise).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synthesize_cube, synthesize_cube_trial, Target};

    fn small(snr: Option<f64>) -> RadarParams {
        RadarParams {
            packets: 16,
            range_bins: 12,
            angle_bins: 6,
            rician_k_db: None,
            snr_db: snr,
            ..RadarParams::default()
        }
    }

    #[test]
    fn finds_grid_target() {
        let p = small(None);
        let cube = synthesize_cube(&[Target::on_grid(&p, 7, 2, 3.0)], &p).unwrap();
        let det = peak_search(&cube, 0).unwrap();
        assert_eq!((det.range_bin, det.angle_bin), (7, 2));
        let y = extract_slow_time(&cube, &det).unwrap();
        assert_eq!(y.samples, cube.slow_time(7, 2));
    }

    #[test]
    fn two_targets_one_cell() {
        let p = small(None);
        let t = [
            Target::on_grid(&p, 4, 4, 3.0),
            Target::on_grid(&p, 4, 4, -2.0),
        ];
        let cube = synthesize_cube(&t, &p).unwrap();
        let det = peak_search_averaged(&cube).unwrap();
        assert_eq!((det.range_bin, det.angle_bin), (4, 4));
    }

    #[test]
    fn zero_doppler_slice_is_constant() {
        let p = small(None);
        let cube = synthesize_cube(&[Target::on_grid(&p, 1, 1, 0.0)], &p).unwrap();
        let y = extract_slow_time(&cube, &peak_search(&cube, 0).unwrap()).unwrap();
        assert!(y.samples.iter().all(|&s| s == y.samples[0]));
    }

    #[test]
    fn noise_only_cell_has_configured_variance() {
        let mut p = small(Some(0.0));
        p.packets = 4096;
        p.range_bins = 4;
        p.angle_bins = 2;
        let target = Target::on_grid(&p, 0, 0, 1.0);
        let cube = synthesize_cube_trial(&[target], &p, 3).unwrap();
        let det = Detection {
            range_bin: 3,
            angle_bin: 1,
            peak_magnitude: 0.0,
        };
        let y = extract_slow_time(&cube, &det).unwrap();
        let mean: Complex<f64> = y.samples.iter().sum::<Complex<f64>>() / y.len() as f64;
        let var =
            y.samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / (y.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.08, "{var}");
    }

    #[test]
    fn errors() {
        let p = small(None);
        let cube = AmbiguityCube::zeros(p.clone());
        assert!(matches!(peak_search(&cube, 0), Err(Error::ZeroSlice)));
        assert!(peak_search(&cube, 99).is_err());
        let det = Detection {
            range_bin: 100,
            angle_bin: 0,
            peak_magnitude: 1.0,
        };
        assert!(extract_slow_time(&cube, &det).is_err());
    }

    #[test]
    fn snr_estimate_tracks_configuration() {
        let mut p = small(Some(10.0));
        p.range_bins = 32;
        p.angle_bins = 16;
        p.packets = 64;
        let cube = synthesize_cube(&[Target::on_grid(&p, 10, 5, 1.0)], &p).unwrap();
        let det = peak_search_averaged(&cube).unwrap();
        let snr = estimate_snr_db(&cube, &det, 1);
        assert!((snr - 10.0).abs() < 1.5, "{snr}");
    }
}
