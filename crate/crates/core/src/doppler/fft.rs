use num_complex::Complex;
use rustfft::FftPlanner;

use super::{
    check_input, peaks, precision, resolution, sort_by_speed, wrap_cycles, Algorithm,
    DopplerEstimate, EstimatorConfig,
};
use crate::locator::SlowTimeVector;
use crate::numlin::OpCounter;
use crate::{Real, Result};

/// Zero-padded `P`-point periodogram estimate.
///
/// Bin `p` maps to `v = −λ/(2·T_PRI)·wrap(p/P)`. For `K = 2` the two
/// strongest local maxima at least two bins apart are reported.
pub fn fft_doppler<T: Real>(
    y: &SlowTimeVector<T>,
    cfg: &EstimatorConfig,
) -> Result<DopplerEstimate> {
    check_input(y, cfg, &[Algorithm::Fft], "fft_doppler")?;
    let n = y.len();
    let p = cfg.fft_size;
    let mut ops = OpCounter::new();

    let mut buf = vec![Complex::<T>::default(); p];
    buf[..n].copy_from_slice(&y.samples);
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    let stages = p.trailing_zeros() as usize;
    ops.alloc(n + p);
    ops.mults(p / 2 * stages);
    ops.adds(p * stages);

    let power: Vec<T> = buf.iter().map(|z| z.norm_sqr()).collect();
    let span = y.params.wavelength_m / (2.0 * y.params.pri_s);
    let mut pairs: Vec<(f64, f64)> = peaks::pick(&power, cfg.model_order)
        .into_iter()
        .map(|bin| (-span * wrap_cycles(bin as f64 / p as f64), 0.0))
        .collect();
    sort_by_speed(&mut pairs);

    Ok(DopplerEstimate {
        algorithm: Algorithm::Fft,
        velocities_mps: pairs.iter().map(|v| v.0).collect(),
        eigen_moduli: Vec::new(),
        resolution_mps: resolution(&y.params),
        precision_mps: Some(precision(&y.params, p)),
        ops,
    })
}
