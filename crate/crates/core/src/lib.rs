//! Coarse (FFT) and fine (ESPRIT / MUSIC) Doppler velocity estimation for
//! time-division ISAC radar, with a runtime reconfiguration controller and a
//! Monte Carlo evaluation harness.
//!
//! The processing chain is:
//!
//! ```text
//! scene::synthesize_cube ──► locator::peak_search ──► locator::extract_slow_time
//!                                                        │
//!                         doppler::{fft_doppler, esprit, music} ◄──┘
//!                                                        │
//!                         controller::plan / harness::run_sweep
//! ```
//!
//! The linear algebra kernels in [`numlin`] and the estimators in [`doppler`]
//! are generic over the floating-point scalar ([`Real`], implemented for `f32`
//! and `f64`). Scene synthesis and the harness run in `f64`.

pub mod controller;
pub mod doppler;
pub mod error;
pub mod harness;
pub mod locator;
pub mod numlin;
pub mod real;
pub mod scenario;
pub mod scene;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex sample.
pub type C32 = num_complex::Complex<f32>;

/// Double-precision dense complex matrix.
pub type ComplexMatrix64 = numlin::ComplexMatrix<f64>;
/// Single-precision dense complex matrix.
pub type ComplexMatrix32 = numlin::ComplexMatrix<f32>;

/// Double-precision slow-time vector.
pub type SlowTimeVector64 = locator::SlowTimeVector<f64>;
/// Single-precision slow-time vector.
pub type SlowTimeVector32 = locator::SlowTimeVector<f32>;
