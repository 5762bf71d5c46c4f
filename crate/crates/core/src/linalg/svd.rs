//! Thin SVD by one-sided (Hestenes) Jacobi and the pseudoinverse built on it.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, Matrix};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U · diag(σ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `rows × r`, orthonormal columns for nonzero singular values.
    pub u: Matrix<T>,
    /// Length `r = min(rows, cols)`, sorted descending.
    pub singular_values: Vec<T>,
    /// `cols × r`, orthonormal columns.
    pub v: Matrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn max_singular_value(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min_singular_value(&self) -> T {
        self.singular_values.last().copied().unwrap_or_else(T::zero)
    }
}

pub fn svd<T: Scalar>(m: &Matrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("svd of a {rows}x{cols} matrix")));
    }
    if !m.is_finite() {
        return Err(Error::invalid("svd input has non-finite entries"));
    }
    if rows >= cols {
        tall_svd(m)
    } else {
        let t = tall_svd(&m.transpose())?;
        Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u })
    }
}

fn tall_svd<T: Scalar>(m: &Matrix<T>) -> Result<Svd<T>> {
    let (rows, n) = m.shape();
    // Columns of M, stored contiguously.
    let mut w: Vec<Vec<T>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n).map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let tol = T::epsilon() * T::of_usize(rows).sqrt();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let mag = T::one() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta < T::zero() { -mag } else { mag };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (wp, wq) = pair_mut(&mut w, p, q);
                rotate_pair(wp, wq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate_pair(vp, vq, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "one-sided Jacobi SVD did not converge within {MAX_SWEEPS} sweeps on a {rows}x{n} matrix"
        )));
    }

    let sigma: Vec<T> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("finite singular values"));

    let mut u = Matrix::zeros(rows, n);
    let mut vm = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        singular_values.push(s);
        if s > T::zero() {
            let col: Vec<T> = w[src].iter().map(|&x| x / s).collect();
            u.set_column(dst, &col);
        }
        vm.set_column(dst, &v[src]);
    }
    Ok(Svd { u, singular_values, v: vm })
}

fn pair_mut<T>(v: &mut [Vec<T>], p: usize, q: usize) -> (&mut Vec<T>, &mut Vec<T>) {
    debug_assert!(p < q);
    let (head, tail) = v.split_at_mut(q);
    (&mut head[p], &mut tail[0])
}

fn rotate_pair<T: Scalar>(a: &mut [T], b: &mut [T], c: T, s: T) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Default relative cutoff for [`pinv`].
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

/// Moore–Penrose pseudoinverse via SVD, discarding singular values below
/// `rel_tol · σ_max`.
pub fn pinv<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> Result<Matrix<T>> {
    if m.is_empty() {
        return Err(Error::invalid(format!("pinv of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(Error::invalid(format!("pinv rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let d = svd(m)?;
    let cutoff = rel_tol * d.max_singular_value();
    let (rows, cols) = m.shape();
    let mut out = Matrix::zeros(cols, rows);
    for (r, &s) in d.singular_values.iter().enumerate() {
        if s == T::zero() || s < cutoff {
            continue;
        }
        let inv = T::one() / s;
        for i in 0..cols {
            let vi = d.v[(i, r)] * inv;
            if vi == T::zero() {
                continue;
            }
            for j in 0..rows {
                out[(i, j)] += vi * d.u[(j, r)];
            }
        }
    }
    Ok(out)
}

/// Numerical rank: singular values at or above `rel_tol · σ_max`.
pub fn rank<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> Result<usize> {
    let d = svd(m)?;
    let cutoff = rel_tol * d.max_singular_value();
    Ok(d.singular_values.iter().filter(|&&s| s > T::zero() && s >= cutoff).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_own_pseudoinverse() {
        let i3 = Matrix::<f64>::identity(3);
        assert!(pinv(&i3, 1e-12).unwrap().sub(&i3).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_diagonal() {
        let m = Matrix::from_diag(&[2.0, 0.0]);
        let p = pinv(&m, 1e-12).unwrap();
        assert_eq!(p, Matrix::from_diag(&[0.5, 0.0]));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let m = Matrix::<f64>::identity(2);
        assert!(pinv(&m, 0.0).is_err());
        assert!(pinv(&m, 1.0).is_err());
        assert!(pinv(&Matrix::<f64>::zeros(0, 2), 1e-12).is_err());
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]).unwrap();
        for a in [m.clone(), m.transpose()] {
            let d = svd(&a).unwrap();
            let us = Matrix::from_fn(d.u.nrows(), d.u.ncols(), |i, j| d.u[(i, j)] * d.singular_values[j]);
            let back = us.matmul(&d.v.transpose()).unwrap();
            assert!(back.sub(&a).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn zero_matrix() {
        let z = Matrix::<f64>::zeros(3, 2);
        assert_eq!(pinv(&z, 1e-12).unwrap(), Matrix::zeros(2, 3));
        assert_eq!(rank(&z, 1e-12).unwrap(), 0);
    }
}
