use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::qr::{householder, qr_factorize};
use super::{ComplexMatrix, OpCounter};
use crate::{Error, Real, Result};

/// How the covariance eigen-structure is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvdMode {
    /// One column-pivoted QR factorization; `Q` is taken as the eigenvector
    /// basis and `|diag(R)|` as the eigenvalues. Exact for the column space
    /// of a rank-deficient matrix, approximate otherwise.
    SingleQr,
    /// Householder tridiagonalization followed by implicit Wilkinson-shifted
    /// QR iteration to convergence.
    #[default]
    Iterated,
}

/// Eigenvalues in descending order and the matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEig<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEig<T> {
    /// Decomposes `a` with the given mode, using the default tolerance and an
    /// iteration budget of `100·n` QR sweeps.
    pub fn compute(a: &ComplexMatrix<T>, mode: EvdMode, ops: &mut OpCounter) -> Result<Self> {
        match mode {
            EvdMode::Iterated => hermitian_eig(a, 100 * a.rows().max(1), T::default_tol(), ops),
            EvdMode::SingleQr => {
                check_hermitian(a)?;
                let qr = qr_factorize(a, ops)?;
                let values = qr.diagonal_magnitudes();
                Ok(Self {
                    values,
                    vectors: qr.q,
                })
            }
        }
    }
}

fn check_hermitian<T: Real>(a: &ComplexMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dims(
            "hermitian_eig",
            "square matrix",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    a.require_finite("hermitian_eig")?;
    let n = a.rows();
    let mut asym = T::zero();
    for i in 0..n {
        for j in 0..n {
            asym += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    let asym = asym.sqrt();
    let norm = a.frobenius_norm();
    if asym > T::hermitian_tol() * norm {
        return Err(Error::NotHermitian {
            asymmetry: (asym / norm).as_f64(),
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The matrix is reduced to real symmetric tridiagonal form with Householder
/// reflections and a diagonal phase rotation, then diagonalized with
/// implicit Wilkinson-shifted QR sweeps. `max_iters` bounds the total number
/// of sweeps; off-diagonals below `tol·1e-6·‖A‖_F` (or machine precision
/// relative to their neighbours) are deflated.
pub fn hermitian_eig<T: Real>(
    a: &ComplexMatrix<T>,
    max_iters: usize,
    tol: T,
    ops: &mut OpCounter,
) -> Result<HermitianEig<T>> {
    check_hermitian(a)?;
    let n = a.rows();
    let anorm = a.frobenius_norm();

    // Hermitian part, reduced in place.
    let mut b = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5));
    let mut z = ComplexMatrix::<T>::identity(n);
    ops.alloc(2 * n * n + 2 * n);

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| b[(i, k)]).collect();
        let Some((v, tau, alpha)) = householder(&x, ops) else {
            continue;
        };
        let off = k + 1;
        // p = τ·T·v over the trailing block
        let p: Vec<Complex<T>> = (0..m)
            .map(|i| {
                (0..m).fold(Complex::zero(), |acc, j| acc + b[(off + i, off + j)] * v[j]) * tau
            })
            .collect();
        let vhp = (0..m).fold(Complex::zero(), |acc, i| acc + v[i].conj() * p[i]);
        let kappa = vhp * (tau * T::lit(0.5));
        let w: Vec<Complex<T>> = (0..m).map(|i| p[i] - v[i] * kappa).collect();
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                b[(off + i, off + j)] -= upd;
            }
        }
        ops.macs(m * m + m);
        ops.mults(2 * m * m + m);
        b[(off, k)] = alpha;
        b[(k, off)] = alpha.conj();
        for i in (off + 1)..n {
            b[(i, k)] = Complex::zero();
            b[(k, i)] = Complex::zero();
        }
        for r in 0..n {
            let s = (0..m).fold(Complex::zero(), |acc, j| acc + z[(r, off + j)] * v[j]) * tau;
            for j in 0..m {
                let vj = v[j].conj();
                z[(r, off + j)] -= s * vj;
            }
        }
        ops.macs(2 * n * m);
    }

    // Rotate phases so the sub-diagonal is real and non-negative.
    let mut d: Vec<T> = (0..n).map(|i| b[(i, i)].re).collect();
    let mut e: Vec<T> = vec![T::zero(); n];
    let mut phase = Complex::new(T::one(), T::zero());
    for i in 0..n {
        if i > 0 {
            let sub = b[(i, i - 1)];
            let mag = sub.norm();
            e[i - 1] = mag;
            if mag > T::zero() {
                phase *= sub / mag;
            }
            for r in 0..n {
                z[(r, i)] *= phase;
            }
            ops.mults(n + 1);
        }
    }

    let floor = tol * T::lit(1e-6) * anorm;
    let mut sweeps = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > max_iters {
                return Err(Error::NoConvergence {
                    op: "hermitian_eig",
                    iterations: sweeps - 1,
                });
            }
            let two = T::lit(2.0);
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                for k in 0..n {
                    let zi = z[(k, i)];
                    let zi1 = z[(k, i + 1)];
                    z[(k, i + 1)] = zi * s + zi1 * c;
                    z[(k, i)] = zi * c - zi1 * s;
                }
                ops.mults(2 * n);
                ops.adds(2 * n);
                ops.divs(2);
                ops.sqrts(1);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[j].partial_cmp(&d[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}
