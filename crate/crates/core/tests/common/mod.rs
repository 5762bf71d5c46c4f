//! Independent reference implementations used as test oracles. None of them
//! call the crate's decompositions.

#![allow(dead_code, clippy::needless_range_loop)]

use pisco_core::linalg::{seeded_rng, standard_normal_matrix};
use pisco_core::Matrix;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    standard_normal_matrix(rows, cols, &mut seeded_rng(seed))
}

pub fn symmetric(n: usize, seed: u64) -> Matrix<f64> {
    let g = gaussian(n, n, seed);
    Matrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

pub fn max_abs_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Determinant by LU with partial pivoting.
pub fn det(a: &Matrix<f64>) -> f64 {
    let n = a.nrows();
    let mut m = a.to_rows();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        d *= m[col][col];
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    d
}

/// Eigenvalues of a symmetric matrix, descending, by shifted power iteration
/// with Hotelling deflation.
pub fn power_eigenvalues(m: &Matrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let shift = m.frobenius() + 1.0;
    let mut work = Matrix::from_fn(n, n, |i, j| m[(i, j)] + if i == j { shift } else { 0.0 });
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + k * 3) % 5) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..500_000 {
            let w = work.matvec(&v).unwrap();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let rq: f64 = next.iter().zip(work.matvec(&next).unwrap()).map(|(a, b)| a * b).sum();
            let moved = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            let done = (rq - lambda).abs() <= 1e-15 * rq.abs() && moved < 1e-13;
            lambda = rq;
            if done {
                break;
            }
        }
        out.push(lambda - shift);
        for i in 0..n {
            for j in 0..n {
                work[(i, j)] -= lambda * v[i] * v[j];
            }
        }
    }
    out
}

/// Centered ridge solution `(XᵀX/N + μI)⁻¹ Xᵀy/N` on stacked, centered rows.
pub fn ridge_direction(rows: &Matrix<f64>, y: &[f64], mu: f64) -> Vec<f64> {
    let (n, p) = rows.shape();
    let mean: Vec<f64> = (0..p).map(|j| rows.column(j).iter().sum::<f64>() / n as f64).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let xc = Matrix::from_fn(n, p, |i, j| rows[(i, j)] - mean[j]);
    let mut g = Matrix::from_fn(p, p, |a, b| (0..n).map(|i| xc[(i, a)] * xc[(i, b)]).sum::<f64>() / n as f64);
    for i in 0..p {
        g[(i, i)] += mu;
    }
    let c: Vec<f64> = (0..p).map(|a| (0..n).map(|i| xc[(i, a)] * (y[i] - ybar)).sum::<f64>() / n as f64).collect();
    solve(&g, &c)
}

/// Polynomial extrapolation to `μ = 0` through the given (μ, solution) points (Neville).
pub fn extrapolate_to_zero(mus: &[f64], sols: &[Vec<f64>]) -> Vec<f64> {
    let p = sols[0].len();
    (0..p)
        .map(|c| {
            let mut t: Vec<f64> = sols.iter().map(|s| s[c]).collect();
            let k = mus.len();
            for level in 1..k {
                for i in 0..(k - level) {
                    let (a, b) = (mus[i], mus[i + level]);
                    t[i] = (a * t[i + 1] - b * t[i]) / (a - b);
                }
            }
            t[0]
        })
        .collect()
}

/// The four Penrose conditions, as the largest entrywise violation.
pub fn penrose_violation(m: &Matrix<f64>, p: &Matrix<f64>) -> f64 {
    let mp = m.matmul(p).unwrap();
    let pm = p.matmul(m).unwrap();
    [
        max_abs_diff(&mp.matmul(m).unwrap(), m),
        max_abs_diff(&pm.matmul(p).unwrap(), p),
        max_abs_diff(&mp, &mp.transpose()),
        max_abs_diff(&pm, &pm.transpose()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
