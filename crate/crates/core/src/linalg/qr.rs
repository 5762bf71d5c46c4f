use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::scalar::Scalar;

/// Thin Householder QR of a tall matrix: `M = Q · R` with `Q` of shape
/// `rows × cols` (orthonormal columns) and `R` upper triangular `cols × cols`.
pub fn householder_qr<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (rows, cols) = m.shape();
    if rows < cols || cols == 0 {
        return Err(Error::invalid(format!("householder_qr needs rows >= cols >= 1, got {rows}x{cols}")));
    }
    let mut r = m.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let norm = (k..rows).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if norm == T::zero() {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        v.iter_mut().for_each(|x| *x /= vnorm);
        apply_reflector(&mut r, &v, k, k);
        r[(k, k)] = alpha;
        for i in (k + 1)..rows {
            r[(i, k)] = T::zero();
        }
        reflectors.push(v);
    }

    let mut q = Matrix::from_fn(rows, cols, |i, j| if i == j { T::one() } else { T::zero() });
    for (k, v) in reflectors.iter().enumerate().rev() {
        if !v.is_empty() {
            apply_reflector(&mut q, v, k, 0);
        }
    }
    let r = Matrix::from_fn(cols, cols, |i, j| if j >= i { r[(i, j)] } else { T::zero() });
    Ok((q, r))
}

/// Applies `I - 2vvᵀ` to rows `offset..` of `m`, columns `first_col..`.
fn apply_reflector<T: Scalar>(m: &mut Matrix<T>, v: &[T], offset: usize, first_col: usize) {
    let two = T::of(2.0);
    for j in first_col..m.ncols() {
        let s = v.iter().enumerate().map(|(i, &vi)| vi * m[(offset + i, j)]).sum::<T>();
        if s == T::zero() {
            continue;
        }
        for (i, &vi) in v.iter().enumerate() {
            m[(offset + i, j)] -= two * s * vi;
        }
    }
}

/// Lower Cholesky factor `L` with `M = L·Lᵀ`; fails unless `M` is positive definite.
pub fn cholesky<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid(format!("cholesky needs a square matrix, got {}x{}", n, m.ncols())));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag.is_nan() || diag <= T::zero() {
            return Err(Error::NumericalFailure(format!("cholesky: matrix is not positive definite (pivot {j} = {diag})")));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}
