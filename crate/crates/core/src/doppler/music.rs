use num_complex::Complex;
use rustfft::FftPlanner;

use super::{
    check_input, peaks, resolution, smooth_covariance, sort_by_speed, wrap_cycles, Algorithm,
    DopplerEstimate, EstimatorConfig,
};
use crate::locator::SlowTimeVector;
use crate::numlin::{HermitianEig, OpCounter};
use crate::{Real, Result};

/// MUSIC pseudospectrum search on a `G`-point velocity grid.
///
/// `aᴴ(v_g)·e` for every grid point and noise eigenvector `e` is one
/// unnormalized inverse FFT of `e` (folded modulo `G` when `L > G`); the
/// pseudospectrum peaks are the minima of `Σ_e |aᴴe|²`.
pub fn music<T: Real>(y: &SlowTimeVector<T>, cfg: &EstimatorConfig) -> Result<DopplerEstimate> {
    check_input(y, cfg, &[Algorithm::Music], "music")?;
    let n = y.len();
    let l = cfg.smoothing_len_for(n);
    let k = cfg.model_order;
    let g = cfg.search_grid;
    let mut ops = OpCounter::new();
    ops.alloc(n);

    let a = smooth_covariance(y, l, cfg.use_all_samples, &mut ops)?;
    let eig = HermitianEig::compute(&a, cfg.evd_mode, &mut ops)?;

    let ifft = FftPlanner::new().plan_fft_inverse(g);
    let mut buf = vec![Complex::<T>::default(); g];
    let mut denom = vec![T::zero(); g];
    ops.alloc(2 * g);
    for col in k..l {
        buf.fill(Complex::default());
        for r in 0..l {
            buf[r % g] += eig.vectors[(r, col)];
        }
        ifft.process(&mut buf);
        for (d, z) in denom.iter_mut().zip(&buf) {
            *d += z.norm_sqr();
        }
    }
    let noise_dim = l - k;
    let stages = g.next_power_of_two().trailing_zeros() as usize;
    ops.mults(noise_dim * (g / 2 * stages + g));
    ops.adds(noise_dim * (g * stages + g));

    let inverted: Vec<T> = denom.iter().map(|&d| -d).collect();
    let span = y.params.wavelength_m / (2.0 * y.params.pri_s);
    let mut pairs: Vec<(f64, f64)> = peaks::pick(&inverted, k)
        .into_iter()
        .map(|bin| (span * wrap_cycles(bin as f64 / g as f64), 0.0))
        .collect();
    sort_by_speed(&mut pairs);

    Ok(DopplerEstimate {
        algorithm: Algorithm::Music,
        velocities_mps: pairs.iter().map(|v| v.0).collect(),
        eigen_moduli: Vec::new(),
        resolution_mps: resolution(&y.params),
        precision_mps: Some(span / g as f64),
        ops,
    })
}
