//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Jacobi is slower than tridiagonal QR for large matrices but it is simple,
//! backward stable and computes small eigenvalues to high relative accuracy,
//! which the content-subspace solver relies on.

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    /// Sorted descending.
    pub eigenvalues: Vec<T>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix<T>,
}

impl<T: Scalar> EigenResult<T> {
    /// The leading `k` eigenvectors as the rows of a `k × n` matrix.
    pub fn top_rows(&self, k: usize) -> Matrix<T> {
        let n = self.eigenvectors.nrows();
        Matrix::from_fn(k, n, |i, j| self.eigenvectors[(j, i)])
    }

    pub fn vector(&self, i: usize) -> Vec<T> {
        self.eigenvectors.column(i)
    }
}

/// Full spectral decomposition of a symmetric matrix.
///
/// The input is symmetrized as `(M + Mᵀ)/2` after checking that it is
/// symmetric to within `1e-10` relative to its largest entry. Each
/// eigenvector is signed so its largest-magnitude entry is positive, with
/// near-ties resolved toward the lowest index.
pub fn sym_eig<T: Scalar>(m: &Matrix<T>) -> Result<EigenResult<T>> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::invalid(format!("sym_eig needs a square matrix, got {rows}x{cols}")));
    }
    if rows == 0 {
        return Err(Error::invalid("sym_eig of an empty matrix"));
    }
    if !m.is_finite() {
        return Err(Error::invalid("sym_eig input has non-finite entries"));
    }
    let scale = m.max_abs();
    if m.asymmetry() > T::tol_floor(1e-10) * scale {
        return Err(Error::invalid(format!("sym_eig input is not symmetric: max |M - Mᵀ| = {:e}", m.asymmetry().as_f64())));
    }

    let n = rows;
    let half = T::of(0.5);
    let mut a = Matrix::from_fn(n, n, |i, j| half * (m[(i, j)] + m[(j, i)]));
    let mut v = Matrix::identity(n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let total = a.frobenius();
        let off = off_diagonal_norm(&a);
        if off <= T::epsilon() * total || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let total = a.frobenius();
        if off_diagonal_norm(&a) > T::of(8.0) * T::epsilon() * total {
            return Err(Error::NumericalFailure(format!(
                "Jacobi eigensolver did not converge within {MAX_SWEEPS} sweeps on a {n}x{n} matrix"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps equal eigenvalues in solver order, so output is reproducible.
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).expect("finite eigenvalues"));

    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_sign(&mut col);
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenResult { eigenvalues, eigenvectors })
}

fn off_diagonal_norm<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.nrows();
    let two = T::of(2.0);
    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -mag
        } else {
            mag
        }
    };
    if t == T::zero() {
        a[(p, q)] = T::zero();
        a[(q, p)] = T::zero();
        return;
    }
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[(r, p)] = new_rp;
        a[(p, r)] = new_rp;
        a[(r, q)] = new_rq;
        a[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub(crate) fn fix_sign<T: Scalar>(v: &mut [T]) {
    let peak = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if peak == T::zero() {
        return;
    }
    let cutoff = peak * (T::one() - T::of(64.0) * T::epsilon());
    let lead = v.iter().position(|x| x.abs() >= cutoff).expect("peak entry exists");
    if v[lead] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
