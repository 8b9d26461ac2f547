use std::cmp::Ordering;

use num_complex::Complex;

use super::{ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

fn require_2x2<T: Real>(m: &ComplexMatrix<T>, op: &'static str) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::dims(op, "2x2", format!("{}x{}", m.rows(), m.cols())));
    }
    m.require_finite(op)
}

/// Inverse of a 2×2 matrix through its determinant and adjugate.
///
/// Fails with [`Error::Singular`] when `|det M| ≤ ε·‖M‖²_F`, where `ε` is
/// [`Real::det_rel_tol`].
pub fn inv_2x2<T: Real>(m: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<ComplexMatrix<T>> {
    require_2x2(m, "inv_2x2")?;
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let det = a * d - b * c;
    let norm2 = m.data().iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let threshold = T::det_rel_tol() * norm2;
    ops.mults(2);
    ops.adds(1);
    if det.norm() <= threshold || norm2 == T::zero() {
        return Err(Error::Singular {
            det: det.norm().as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    let inv_det = det.inv();
    ops.divs(1);
    ops.mults(4);
    ops.alloc(4);
    ComplexMatrix::new(
        2,
        2,
        vec![d * inv_det, -b * inv_det, -c * inv_det, a * inv_det],
    )
}

/// Eigenvalues of a 2×2 matrix as the roots of `λ² − tr·λ + det`.
///
/// Ordered by descending magnitude; equal magnitudes by ascending phase.
pub fn eig_2x2<T: Real>(m: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<[Complex<T>; 2]> {
    require_2x2(m, "eig_2x2")?;
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let det = a * d - b * c;
    let mut root = (mean * mean - det).sqrt();
    // Pick the root that avoids cancellation, then recover the other via the product.
    if (mean.conj() * root).re < T::zero() {
        root = -root;
    }
    let mu1 = mean + root;
    let mu2 = if mu1.norm() > T::zero() {
        det / mu1
    } else {
        mean - root
    };
    ops.mults(5);
    ops.adds(5);
    ops.sqrts(1);
    ops.divs(1);

    let mut pair = [mu1, mu2];
    let tie = T::epsilon() * T::lit(64.0) * pair[0].norm().max(pair[1].norm());
    pair.sort_by(|x, y| {
        let (mx, my) = (x.norm(), y.norm());
        if (mx - my).abs() <= tie {
            canonical_arg(*x)
                .partial_cmp(&canonical_arg(*y))
                .unwrap_or(Ordering::Equal)
        } else {
            my.partial_cmp(&mx).unwrap_or(Ordering::Equal)
        }
    });
    Ok(pair)
}

/// Argument in `(−π, π]`.
pub(crate) fn canonical_arg<T: Real>(z: Complex<T>) -> T {
    let a = z.arg();
    if a == -T::PI() {
        T::PI()
    } else {
        a
    }
}
