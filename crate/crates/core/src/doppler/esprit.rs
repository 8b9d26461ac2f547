use num_complex::Complex;

use super::{
    check_input, resolution, smooth_covariance, sort_by_speed, Algorithm, DopplerEstimate,
    EstimatorConfig,
};
use crate::locator::SlowTimeVector;
use crate::numlin::{
    eig_2x2, matmul, pinv_normal, pinv_svd, slice, ComplexMatrix, HermitianEig, OpCounter,
};
use crate::{Real, Result};

/// ESPRIT velocity estimate.
///
/// The top-`K` eigenvectors `E_s` of the smoothed covariance are split into
/// `E₁` (rows `0..L−1`) and `E₂` (rows `1..L`). The rotation
/// `ε = E₂⁺·E₁` has eigenvalues `μ_k = exp(+j·4π·v_k·T_PRI/λ)` for the
/// model `y[n] ∝ exp(−j·4π·v·n·T_PRI/λ)`, so `v_k = λ/(4π·T_PRI)·arg μ_k`.
///
/// `EspritHi` takes `E₂⁺` from an SVD of `E₂` zero-padded to square;
/// `EspritLo` uses `(E₂ᴴE₂)⁻¹E₂ᴴ` with a closed-form 2×2 inverse.
pub fn esprit<T: Real>(y: &SlowTimeVector<T>, cfg: &EstimatorConfig) -> Result<DopplerEstimate> {
    check_input(
        y,
        cfg,
        &[Algorithm::EspritHi, Algorithm::EspritLo],
        "esprit",
    )?;
    let n = y.len();
    let l = cfg.smoothing_len_for(n);
    let k = cfg.model_order;
    let mut ops = OpCounter::new();
    ops.alloc(n);

    let a = smooth_covariance(y, l, cfg.use_all_samples, &mut ops)?;
    let eig = HermitianEig::compute(&a, cfg.evd_mode, &mut ops)?;
    let e1 = slice(&eig.vectors, 0..l - 1, 0..k, &mut ops)?;
    let e2 = slice(&eig.vectors, 1..l, 0..k, &mut ops)?;

    let e2_pinv = match cfg.algorithm {
        Algorithm::EspritLo => pinv_normal(&e2, &mut ops)?,
        _ => {
            let m = l - 1;
            let padded = ComplexMatrix::from_fn(m, m, |i, j| {
                if j < k {
                    e2[(i, j)]
                } else {
                    Complex::default()
                }
            });
            ops.alloc(m * m);
            let full = pinv_svd(&padded, &mut ops)?;
            slice(&full, 0..k, 0..m, &mut ops)?
        }
    };
    let rotation = matmul(&e2_pinv, &e1, &mut ops)?;
    let mu: Vec<Complex<T>> = if k == 1 {
        vec![rotation[(0, 0)]]
    } else {
        eig_2x2(&rotation, &mut ops)?.to_vec()
    };

    let per_radian = y.params.velocity_per_radian();
    let mut pairs: Vec<(f64, f64)> = mu
        .iter()
        .map(|m| {
            (
                per_radian * crate::numlin::canonical_arg(*m).as_f64(),
                m.norm().as_f64(),
            )
        })
        .collect();
    sort_by_speed(&mut pairs);

    Ok(DopplerEstimate {
        algorithm: cfg.algorithm,
        velocities_mps: pairs.iter().map(|p| p.0).collect(),
        eigen_moduli: pairs.iter().map(|p| p.1).collect(),
        resolution_mps: resolution(&y.params),
        precision_mps: None,
        ops,
    })
}
