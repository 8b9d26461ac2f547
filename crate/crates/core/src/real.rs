use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar accepted by the linear algebra kernels and the
/// Doppler estimators.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + FftNum + Debug + Display + Default
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Default convergence tolerance for iterative kernels: `1e-10` in
    /// double precision, loosened to the type's resolution otherwise.
    fn default_tol() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(1e3))
    }

    /// Relative asymmetry accepted by the Hermitian eigensolver.
    fn hermitian_tol() -> Self {
        Self::lit(1e-8).max(Self::epsilon() * Self::lit(1e2))
    }

    /// Relative determinant threshold (times `‖M‖²_F`) below which a 2×2
    /// matrix is treated as singular.
    fn det_rel_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(10.0))
    }

    /// Relative cutoff (times `σ₁`) below which singular values are dropped
    /// from a pseudo-inverse.
    fn pinv_rel_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(10.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
