use num_complex::Complex;
use num_traits::Zero;

use super::{inv_2x2, matmul_hermitian_transpose, svd_small, ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

/// Moore–Penrose pseudo-inverse `A⁺ = V·Σ⁺·Uᴴ`.
///
/// Singular values at or below `Real::pinv_rel_tol()·σ₁` are treated as zero.
pub fn pinv_svd<T: Real>(a: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<ComplexMatrix<T>> {
    let svd = svd_small(a, ops)?;
    let (m, n) = (a.rows(), a.cols());
    let rank = significant_rank(&svd.sigma);
    let mut out = ComplexMatrix::zeros(n, m);
    for s in 0..rank {
        let inv = T::one() / svd.sigma[s];
        for i in 0..n {
            let vi = svd.v[(i, s)] * inv;
            for j in 0..m {
                out[(i, j)] += vi * svd.u[(j, s)].conj();
            }
        }
    }
    ops.divs(rank);
    ops.mults(rank * n * (m + 1));
    ops.adds(rank * n * m);
    ops.alloc(n * m);
    Ok(out)
}

pub(crate) fn significant_rank<T: Real>(sigma: &[T]) -> usize {
    let Some(&s1) = sigma.first() else { return 0 };
    let cutoff = T::pinv_rel_tol() * s1;
    sigma
        .iter()
        .take_while(|&&s| s > cutoff && s > T::zero())
        .count()
}

/// Pseudo-inverse of a full-column-rank matrix with one or two columns via
/// the normal equations, `A⁺ = (AᴴA)⁻¹·Aᴴ`.
pub fn pinv_normal<T: Real>(a: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<ComplexMatrix<T>> {
    a.require_finite("pinv_normal")?;
    let gram = matmul_hermitian_transpose(a, a, ops)?;
    let gram_inv = match a.cols() {
        1 => {
            let g = gram[(0, 0)];
            let threshold = T::det_rel_tol();
            if g.norm() <= threshold {
                return Err(Error::Singular {
                    det: g.norm().as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            ops.divs(1);
            ops.alloc(1);
            ComplexMatrix::new(1, 1, vec![Complex::new(T::one(), T::zero()) / g])?
        }
        2 => inv_2x2(&gram, ops)?,
        k => {
            return Err(Error::dims(
                "pinv_normal",
                "1 or 2 columns",
                format!("{k} columns"),
            ))
        }
    };
    // (AᴴA)⁻¹·Aᴴ without materializing Aᴴ
    let (m, k) = (a.rows(), a.cols());
    let mut out = ComplexMatrix::zeros(k, m);
    for i in 0..k {
        for j in 0..m {
            out[(i, j)] = (0..k).fold(Complex::zero(), |acc, c| {
                acc + gram_inv[(i, c)] * a[(j, c)].conj()
            });
        }
    }
    ops.macs(k * k * m);
    ops.alloc(k * m);
    Ok(out)
}
