use num_complex::Complex;
use num_traits::Zero;

use crate::locator::SlowTimeVector;
use crate::numlin::{ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

/// Forward spatially-smoothed covariance `A = Σ_l s_l·s_lᴴ`, `s_l = y[l .. l+L]`.
///
/// The sum runs over `l = 0 ..= N−L−1`; `use_all_samples` extends it to
/// `l = N−L`. No normalization by the snapshot count is applied. Only the
/// upper triangle is accumulated, so the result is exactly Hermitian.
pub fn smooth_covariance<T: Real>(
    y: &SlowTimeVector<T>,
    len: usize,
    use_all_samples: bool,
    ops: &mut OpCounter,
) -> Result<ComplexMatrix<T>> {
    let n = y.len();
    if len < 2 || len + 1 > n {
        return Err(Error::config(format!(
            "smoothing length {len} outside [2, {}]",
            n.saturating_sub(1)
        )));
    }
    let snapshots = if use_all_samples {
        n - len + 1
    } else {
        n - len
    };
    let s = &y.samples;
    let mut a = ComplexMatrix::zeros(len, len);
    for i in 0..len {
        for j in i..len {
            let acc =
                (0..snapshots).fold(Complex::zero(), |acc, l| acc + s[l + i] * s[l + j].conj());
            a[(i, j)] = acc;
            a[(j, i)] = acc.conj();
        }
    }
    ops.macs(snapshots * len * (len + 1) / 2);
    ops.alloc(len * len);
    Ok(a)
}

/// Number of eigenvalues at or above `threshold·λ₁` (descending input).
pub fn estimate_order<T: Real>(eigenvalues: &[T], threshold: T) -> usize {
    match eigenvalues.first() {
        Some(&l1) if l1 > T::zero() => eigenvalues
            .iter()
            .take_while(|&&v| v >= threshold * l1)
            .count(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::RadarParams;

    fn vector(samples: Vec<Complex<f64>>) -> SlowTimeVector<f64> {
        let params = RadarParams {
            packets: samples.len(),
            ..RadarParams::default()
        };
        SlowTimeVector::new(samples, params).unwrap()
    }

    #[test]
    fn all_ones_hand_expansion() {
        let y = vector(vec![Complex::new(1.0, 0.0); 4]);
        let mut ops = OpCounter::new();
        let a = smooth_covariance(&y, 2, false, &mut ops).unwrap();
        let two = Complex::new(2.0, 0.0);
        assert_eq!(a.data(), &[two, two, two, two]);
    }

    #[test]
    fn impulse_contributes_once() {
        let mut s = vec![Complex::new(0.0, 0.0); 6];
        s[0] = Complex::new(1.0, 0.0);
        let y = vector(s);
        let mut ops = OpCounter::new();
        let a = smooth_covariance(&y, 3, false, &mut ops).unwrap();
        let mut expect = ComplexMatrix::<f64>::zeros(3, 3);
        expect[(0, 0)] = Complex::new(1.0, 0.0);
        assert_eq!(a, expect);
    }

    #[test]
    fn final_sample_only_with_flag() {
        let mut s = vec![Complex::new(0.0, 0.0); 5];
        s[4] = Complex::new(1.0, 0.0);
        let y = vector(s);
        let mut ops = OpCounter::new();
        let exact = smooth_covariance(&y, 2, false, &mut ops).unwrap();
        assert_eq!(exact.frobenius_norm(), 0.0);
        let all = smooth_covariance(&y, 2, true, &mut ops).unwrap();
        assert_eq!(all[(1, 1)], Complex::new(1.0, 0.0));
    }

    #[test]
    fn length_bounds() {
        let y = vector(vec![Complex::new(1.0, 0.0); 5]);
        let mut ops = OpCounter::new();
        assert!(smooth_covariance(&y, 1, false, &mut ops).is_err());
        assert!(smooth_covariance(&y, 5, false, &mut ops).is_err());
        assert!(smooth_covariance(&y, 4, false, &mut ops).is_ok());
    }

    #[test]
    fn order_threshold() {
        assert_eq!(estimate_order(&[10.0, 0.5, 0.01], 0.01), 2);
        assert_eq!(estimate_order(&[10.0, 0.2, 0.1], 0.01), 3);
        assert_eq!(estimate_order::<f64>(&[0.0, 0.0], 0.01), 0);
    }
}
