use num_complex::Complex;
use num_traits::Zero;

use super::qr::householder_qr;
use super::{ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

const MAX_SWEEPS: usize = 64;

/// `A = U·Σ·Vᴴ` with `U` (`m×m`) and `V` (`n×n`) unitary and the
/// `min(m, n)` singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: ComplexMatrix<T>,
    pub sigma: Vec<T>,
    pub v: ComplexMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// `U·Σ·Vᴴ`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let (m, n) = (self.u.rows(), self.v.rows());
        ComplexMatrix::from_fn(m, n, |i, j| {
            self.sigma
                .iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (s, &sv)| {
                    acc + self.u[(i, s)] * self.v[(j, s)].conj() * sv
                })
        })
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd_small<T: Real>(a: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<Svd<T>> {
    a.require_finite("svd_small")?;
    if a.rows().min(a.cols()) > 256 {
        return Err(Error::dims(
            "svd_small",
            "a dimension <= 256",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if a.rows() >= a.cols() {
        jacobi_tall(a, ops)
    } else {
        let t = jacobi_tall(&a.adjoint(), ops)?;
        Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

#[allow(clippy::needless_range_loop)]
fn jacobi_tall<T: Real>(a: &ComplexMatrix<T>, ops: &mut OpCounter) -> Result<Svd<T>> {
    let (m, n) = (a.rows(), a.cols());
    // column-major working copy
    let mut w: Vec<Vec<Complex<T>>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    if i == j {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::zero()
                    }
                })
                .collect()
        })
        .collect();
    ops.alloc(m * n + n * n + n);

    let tol = T::epsilon() * T::lit(m.max(1) as f64);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = Complex::zero();
                for i in 0..m {
                    alpha += w[p][i].norm_sqr();
                    beta += w[q][i].norm_sqr();
                    gamma += w[p][i].conj() * w[q][i];
                }
                ops.macs(3 * m);
                let g = gamma.norm();
                if g == T::zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = T::one().copysign(zeta) / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let se = e.conj() * s;
                let ce = e.conj() * c;
                for i in 0..m {
                    let (wp, wq) = (w[p][i], w[q][i]);
                    w[p][i] = wp * c - wq * se;
                    w[q][i] = wp * s + wq * ce;
                }
                for i in 0..n {
                    let (vp, vq) = (v[p][i], v[q][i]);
                    v[p][i] = vp * c - vq * se;
                    v[q][i] = vp * s + vq * ce;
                }
                ops.mults(4 * (m + n));
                ops.adds(2 * (m + n));
                ops.divs(4);
                ops.sqrts(3);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            op: "svd_small",
            iterations: MAX_SWEEPS,
        });
    }

    let norms: Vec<T> = w
        .iter()
        .map(|c| c.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt())
        .collect();
    ops.macs(m * n);
    ops.sqrts(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let vmat = ComplexMatrix::from_fn(n, n, |i, c| v[order[c]][i]);
    let smax = sigma.first().copied().unwrap_or(T::zero());
    let cutoff = smax * T::epsilon() * T::lit(m.max(n) as f64);
    let rank = sigma
        .iter()
        .take_while(|&&s| s > cutoff && s > T::zero())
        .count();

    let basis = ComplexMatrix::from_fn(m, rank, |i, c| w[order[c]][i] / sigma[c]);
    ops.divs(m * rank);
    let u = if rank == m {
        basis
    } else {
        // Complete to a unitary basis from the Householder Q of the known columns.
        let full = householder_qr(&basis, false, ops).q;
        ComplexMatrix::from_fn(m, m, |i, c| {
            if c < rank {
                basis[(i, c)]
            } else {
                full[(i, c)]
            }
        })
    };
    ops.alloc(m * m);

    Ok(Svd { u, sigma, v: vmat })
}
