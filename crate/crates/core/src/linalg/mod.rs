//! Dense kernels: matrix storage, SVD and pseudoinverse, symmetric
//! eigendecomposition, QR/Cholesky, Haar sampling and correlation statistics.

mod eigen;
mod matrix;
mod qr;
mod random;
mod stats;
mod svd;

pub(crate) use eigen::fix_sign;
pub use eigen::{sym_eig, EigenResult};
pub use matrix::{dot, norm2, Matrix};
pub use qr::{cholesky, householder_qr};
pub use random::{derive_seed, haar_orthogonal, haar_orthogonal_with, seeded_rng, standard_normal_matrix};
pub use stats::{corr, cross_corr, norm_fro, Correlation, DEGENERATE_STD};
pub use svd::{pinv, rank, svd, Svd, DEFAULT_PINV_TOL};
