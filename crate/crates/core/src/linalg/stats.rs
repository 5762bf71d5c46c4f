use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::scalar::Scalar;

/// Columns whose sample standard deviation falls below this are treated as constant.
pub const DEGENERATE_STD: f64 = 1e-12;

/// A correlation matrix plus a flag raised when any input column was constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation<T> {
    pub matrix: Matrix<T>,
    /// Set when some column had (near) zero variance; its correlations are reported as 0.
    pub degenerate: bool,
}

struct Standardized<T> {
    centered: Vec<Vec<T>>,
    std: Vec<T>,
}

fn standardize<T: Scalar>(x: &Matrix<T>) -> Standardized<T> {
    let n = T::of_usize(x.nrows());
    let mut centered = Vec::with_capacity(x.ncols());
    let mut std = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mean = col.iter().copied().sum::<T>() / n;
        let c: Vec<T> = col.iter().map(|&v| v - mean).collect();
        let var = c.iter().map(|&v| v * v).sum::<T>() / (n - T::one());
        std.push(var.sqrt());
        centered.push(c);
    }
    Standardized { centered, std }
}

fn correlate<T: Scalar>(a: &Standardized<T>, b: &Standardized<T>, n: usize) -> Correlation<T> {
    let floor = T::of(DEGENERATE_STD);
    let denom = T::of_usize(n) - T::one();
    let mut degenerate = false;
    let matrix = Matrix::from_fn(a.centered.len(), b.centered.len(), |i, j| {
        let (si, sj) = (a.std[i], b.std[j]);
        if si < floor || sj < floor {
            degenerate = true;
            return T::zero();
        }
        let cov = a.centered[i].iter().zip(&b.centered[j]).map(|(&x, &y)| x * y).sum::<T>() / denom;
        cov / (si * sj)
    });
    if degenerate {
        log::warn!("correlation input has a zero-variance column; its entries are reported as 0");
    }
    Correlation { matrix, degenerate }
}

/// Pearson correlation between the columns of `x` (rows are samples).
pub fn corr<T: Scalar>(x: &Matrix<T>) -> Result<Correlation<T>> {
    if x.nrows() < 2 || x.ncols() == 0 {
        return Err(Error::invalid(format!("corr needs >= 2 rows and >= 1 column, got {}x{}", x.nrows(), x.ncols())));
    }
    let s = standardize(x);
    let mut c = correlate(&s, &s, x.nrows());
    // Exact symmetry and unit diagonal regardless of summation order.
    let p = x.ncols();
    for i in 0..p {
        for j in 0..i {
            c.matrix[(j, i)] = c.matrix[(i, j)];
        }
        if s.std[i] >= T::of(DEGENERATE_STD) {
            c.matrix[(i, i)] = T::one();
        }
    }
    Ok(c)
}

/// Cross-correlation: entry `(i, j)` is `corr(x[:, i], y[:, j])`.
pub fn cross_corr<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>) -> Result<Correlation<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::invalid(format!("cross_corr row mismatch: {} vs {}", x.nrows(), y.nrows())));
    }
    if x.nrows() < 2 || x.ncols() == 0 || y.ncols() == 0 {
        return Err(Error::invalid("cross_corr needs >= 2 rows and nonempty column sets"));
    }
    Ok(correlate(&standardize(x), &standardize(y), x.nrows()))
}

/// Frobenius norm divided by `sqrt(rows · cols)`.
pub fn norm_fro<T: Scalar>(a: &Matrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    let count = T::of_usize(a.nrows() * a.ncols());
    (a.as_slice().iter().map(|&v| v * v).sum::<T>() / count).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_columns_are_perfectly_correlated() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![4.0, 4.0]]).unwrap();
        let c = corr(&x).unwrap();
        assert!(!c.degenerate);
        assert!(c.matrix.sub(&Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn self_cross_correlation_matches() {
        let x =
            Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![2.0, 0.0, 1.5], vec![-1.0, 3.0, 0.0], vec![0.5, 1.0, 2.0]]).unwrap();
        let a = corr(&x).unwrap().matrix;
        let b = cross_corr(&x, &x).unwrap().matrix;
        assert!(a.sub(&b).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn constant_column_is_flagged_not_fatal() {
        let x = Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 3.0], vec![5.0, 3.0]]).unwrap();
        let c = corr(&x).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.matrix[(0, 0)], 1.0);
        assert_eq!(c.matrix[(1, 1)], 0.0);
        assert_eq!(c.matrix[(0, 1)], 0.0);
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(corr(&x).is_err());
        assert!(cross_corr(&x, &x).is_err());
        let y = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let z = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert!(cross_corr(&y, &z).is_err());
    }

    #[test]
    fn normalized_frobenius() {
        let i3 = Matrix::<f64>::identity(3);
        assert!((norm_fro(&i3) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(norm_fro(&Matrix::<f64>::zeros(2, 5)), 0.0);
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((norm_fro(&m) - (30.0f64 / 4.0).sqrt()).abs() < 1e-15);
    }
}
