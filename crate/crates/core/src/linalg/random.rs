use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::linalg::qr::householder_qr;
use crate::scalar::Scalar;

/// The crate's seeded generator. ChaCha output is stable across platforms and releases.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent-looking seed for a named sub-task (SplitMix64 finalizer).
///
/// Used where two generators would otherwise be seeded with the same value,
/// e.g. the mixing map and the latent sample of one repetition.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Matrix of independent standard normals, filled row by row.
pub fn standard_normal_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::of(rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-distributed `d × d` orthogonal matrix.
///
/// QR-factorizes a Gaussian matrix and multiplies each column of `Q` by the
/// sign of the matching diagonal entry of `R`; without that correction the
/// distribution depends on the QR sign convention and is not Haar.
pub fn haar_orthogonal<T: Scalar>(d: usize, seed: u64) -> Result<Matrix<T>> {
    haar_orthogonal_with(d, &mut seeded_rng(seed))
}

pub fn haar_orthogonal_with<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix<T>> {
    if d == 0 {
        return Err(Error::invalid("haar_orthogonal needs d >= 1"));
    }
    let g: Matrix<T> = standard_normal_matrix(d, d, rng);
    let (mut q, r) = householder_qr(&g)?;
    for j in 0..d {
        if r[(j, j)] < T::zero() {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}
