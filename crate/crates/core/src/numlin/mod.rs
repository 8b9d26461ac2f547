//! Dense complex linear algebra for the small matrices that appear in
//! subspace Doppler estimation (covariance up to a couple of hundred rows,
//! signal subspace of rank at most two).
//!
//! Every kernel threads an [`OpCounter`] so that estimators can report a
//! deterministic operation and memory footprint.

mod counter;
mod eig;
mod matrix;
mod pinv;
mod qr;
mod small;
mod svd;

pub use counter::OpCounter;
pub use eig::{hermitian_eig, EvdMode, HermitianEig};
pub use matrix::{matmul, matmul_hermitian_transpose, slice, ComplexMatrix};
pub use pinv::{pinv_normal, pinv_svd};
pub use qr::{qr_factorize, QrDecomposition};
pub(crate) use small::canonical_arg;
pub use small::{eig_2x2, inv_2x2};
pub use svd::{svd_small, Svd};
