use num_complex::Complex;
use num_traits::Zero;

use super::{ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

/// Column-pivoted QR factorization `A·P = Q·R`.
///
/// `permutation[k]` is the column of `A` that ended up in column `k` of `R`.
/// The diagonal of `R` is real, non-negative and non-increasing.
#[derive(Clone, Debug)]
pub struct QrDecomposition<T> {
    pub q: ComplexMatrix<T>,
    pub r: ComplexMatrix<T>,
    pub permutation: Vec<usize>,
}

impl<T: Real> QrDecomposition<T> {
    /// `A·P`, the matrix that `Q·R` reproduces.
    pub fn permuted_input(&self, a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, self.permutation[j])])
    }

    /// `|R_kk|` in factorization order.
    pub fn diagonal_magnitudes(&self) -> Vec<T> {
        (0..self.r.rows().min(self.r.cols()))
            .map(|k| self.r[(k, k)].norm())
            .collect()
    }
}

/// Householder QR with column pivoting of a square matrix.
pub fn qr_factorize<T: Real>(
    a: &ComplexMatrix<T>,
    ops: &mut OpCounter,
) -> Result<QrDecomposition<T>> {
    if !a.is_square() {
        return Err(Error::dims(
            "qr_factorize",
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    a.require_finite("qr_factorize")?;
    Ok(householder_qr(a, true, ops))
}

/// Reflector `H = I − τ·v·vᴴ` with `H·x = α·e₁`. `None` when `x` is already
/// a multiple of `e₁`.
pub(crate) fn householder<T: Real>(
    x: &[Complex<T>],
    ops: &mut OpCounter,
) -> Option<(Vec<Complex<T>>, T, Complex<T>)> {
    let tail: T = x[1..].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    ops.macs(x.len());
    if tail == T::zero() {
        return None;
    }
    let x0 = x[0];
    let x0_abs = x0.norm();
    let norm = (x0_abs * x0_abs + tail).sqrt();
    ops.sqrts(2);
    let phase = if x0_abs > T::zero() {
        x0 / x0_abs
    } else {
        Complex::new(T::one(), T::zero())
    };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] = phase * (x0_abs + norm);
    let vnorm2 = v[0].norm_sqr() + tail;
    let tau = T::lit(2.0) / vnorm2;
    ops.divs(2);
    Some((v, tau, alpha))
}

/// Householder QR of an `m×n` matrix, returning the full `m×m` `Q`.
pub(crate) fn householder_qr<T: Real>(
    a: &ComplexMatrix<T>,
    pivot: bool,
    ops: &mut OpCounter,
) -> QrDecomposition<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(m);
    let mut permutation: Vec<usize> = (0..n).collect();
    ops.alloc(m * m + m * n);

    for k in 0..m.min(n) {
        if pivot {
            let mut best = k;
            let mut best_norm = T::neg_infinity();
            for j in k..n {
                let norm = (k..m).fold(T::zero(), |acc, i| acc + r[(i, j)].norm_sqr());
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            ops.macs((n - k) * (m - k));
            r.swap_cols(k, best);
            permutation.swap(k, best);
        }

        let x: Vec<Complex<T>> = (k..m).map(|i| r[(i, k)]).collect();
        let Some((v, tau, alpha)) = householder(&x, ops) else {
            continue;
        };
        for j in (k + 1)..n {
            let w = (k..m).fold(Complex::zero(), |acc, i| acc + v[i - k].conj() * r[(i, j)]) * tau;
            for i in k..m {
                let vi = v[i - k];
                r[(i, j)] -= vi * w;
            }
        }
        ops.macs(2 * (n - k - 1) * (m - k));
        r[(k, k)] = alpha;
        for i in (k + 1)..m {
            r[(i, k)] = Complex::zero();
        }
        for i in 0..m {
            let w = (k..m).fold(Complex::zero(), |acc, c| acc + q[(i, c)] * v[c - k]) * tau;
            for c in k..m {
                let vc = v[c - k].conj();
                q[(i, c)] -= w * vc;
            }
        }
        ops.macs(2 * m * (m - k));
    }

    // Rotate phases so that diag(R) is real and non-negative.
    for k in 0..m.min(n) {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag > T::zero() {
            let p = d / mag;
            for j in k..n {
                r[(k, j)] *= p.conj();
            }
            r[(k, k)] = Complex::new(mag, T::zero());
            for i in 0..m {
                q[(i, k)] *= p;
            }
            ops.mults(n - k + m);
        }
    }

    QrDecomposition { q, r, permutation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::matmul;

    type C = Complex<f64>;

    fn residuals(a: &ComplexMatrix<f64>) -> (f64, f64) {
        let mut ops = OpCounter::new();
        let qr = qr_factorize(a, &mut ops).unwrap();
        let n = a.rows();
        let qhq = matmul(&qr.q.adjoint(), &qr.q, &mut ops).unwrap();
        let unitarity = qhq.sub(&ComplexMatrix::identity(n)).frobenius_norm();
        let recon = matmul(&qr.q, &qr.r, &mut ops).unwrap();
        let fit =
            recon.sub(&qr.permuted_input(a)).frobenius_norm() / a.frobenius_norm().max(1e-300);
        (unitarity, fit)
    }

    #[test]
    fn identity_factors_trivially() {
        let mut ops = OpCounter::new();
        let qr = qr_factorize(&ComplexMatrix::<f64>::identity(4), &mut ops).unwrap();
        assert_eq!(qr.q, ComplexMatrix::identity(4));
        assert_eq!(qr.r, ComplexMatrix::identity(4));
        assert_eq!(qr.permutation, vec![0, 1, 2, 3]);
    }

    #[test]
    fn symmetric_two_by_two() {
        let a = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let (unitarity, fit) = residuals(&a);
        assert!(unitarity < 1e-12, "{unitarity}");
        assert!(fit < 1e-12, "{fit}");
    }

    #[test]
    fn upper_triangular_with_sorted_diagonal() {
        let a = ComplexMatrix::from_fn(6, 6, |i, j| {
            C::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64)
        });
        let mut ops = OpCounter::new();
        let qr = qr_factorize(&a, &mut ops).unwrap();
        for i in 0..6 {
            for j in 0..i {
                assert_eq!(qr.r[(i, j)], C::new(0.0, 0.0));
            }
        }
        let d = qr.diagonal_magnitudes();
        assert!(d.windows(2).all(|w| w[0] >= w[1] - 1e-12), "{d:?}");
        let (unitarity, fit) = residuals(&a);
        assert!(unitarity < 1e-10 * 6.0);
        assert!(fit < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let mut ops = OpCounter::new();
        assert!(matches!(
            qr_factorize(&ComplexMatrix::<f64>::zeros(3, 2), &mut ops),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut a = ComplexMatrix::<f64>::identity(2);
        a[(0, 1)] = C::new(f64::NAN, 0.0);
        assert!(matches!(
            qr_factorize(&a, &mut ops),
            Err(Error::NonFinite { .. })
        ));
    }
}
