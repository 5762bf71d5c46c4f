//! Correlation-based disentanglement diagnostics and identifiability residuals.

use crate::error::{Error, Result};
use crate::linalg::{corr, cross_corr, norm2, norm_fro, svd, Matrix};
use crate::pisco::{transform, ProjectionMatrix};
use crate::scalar::Scalar;
use crate::synthetic::{PairedDataset, SIGN_ANNOTATION_SLOPE};

/// `‖corr(z_S, ẑ_S) − corr(z_S)‖` in normalized Frobenius norm.
pub fn style_recovery_discrepancy<T: Scalar>(z_style: &Matrix<T>, zhat_style: &Matrix<T>) -> Result<T> {
    if z_style.shape() != zhat_style.shape() {
        return Err(Error::invalid(format!(
            "true style factors are {:?}, estimates are {:?}",
            z_style.shape(),
            zhat_style.shape()
        )));
    }
    let cross = cross_corr(z_style, zhat_style)?.matrix;
    let own = corr(z_style)?.matrix;
    Ok(norm_fro(&cross.sub(&own)?))
}

/// Style–content disentanglement: `‖corr(ẑ_C, z_S)‖` in normalized Frobenius norm.
pub fn scd<T: Scalar>(zhat_content: &Matrix<T>, z_style: &Matrix<T>) -> Result<T> {
    Ok(norm_fro(&cross_corr(zhat_content, z_style)?.matrix))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityResiduals<T> {
    /// Per style: `‖Aᵀp̂_j − β_j e_j‖₂ / |β_j|`.
    pub t1: Vec<T>,
    /// `max |Q · A[:, F_S]|`.
    pub t2_null: T,
    /// Smallest singular value of `Q · A[:, F_C]`.
    pub t2_min_sv: T,
}

/// Checks a fitted projection against the true mixing matrix `a` (`d′ × d`).
pub fn identifiability_residuals<T: Scalar>(
    p: &ProjectionMatrix<T>,
    a: &Matrix<T>,
    style_set: &[usize],
    beta: &[T],
) -> Result<IdentifiabilityResiduals<T>> {
    let (dp, d) = a.shape();
    if dp != p.d_prime() {
        return Err(Error::invalid(format!("mixing matrix has {dp} rows, projection expects {}", p.d_prime())));
    }
    if style_set.len() != p.m() || beta.len() != p.m() {
        return Err(Error::invalid(format!(
            "{} style coordinates and {} slopes for {} fitted styles",
            style_set.len(),
            beta.len(),
            p.m()
        )));
    }
    if let Some(&bad) = style_set.iter().find(|&&s| s >= d) {
        return Err(Error::invalid(format!("style coordinate {bad} outside latent dimension {d}")));
    }
    if let Some(j) = beta.iter().position(|b| *b == T::zero() || !b.is_finite()) {
        return Err(Error::invalid(format!("beta[{j}] must be finite and nonzero")));
    }

    let at = a.transpose();
    let mut t1 = Vec::with_capacity(p.m());
    for (j, (&s, &b)) in style_set.iter().zip(beta).enumerate() {
        let mut r = at.matvec(p.style_direction(j))?;
        r[s] -= b;
        t1.push(norm2(&r) / b.abs());
    }

    let qa = p.content_rows().matmul(a)?;
    let content: Vec<usize> = (0..d).filter(|i| !style_set.contains(i)).collect();
    let t2_null = qa.select_columns(style_set).max_abs();
    let t2_min_sv = if content.is_empty() { T::zero() } else { svd(&qa.select_columns(&content))?.min_singular_value() };
    Ok(IdentifiabilityResiduals { t1, t2_null, t2_min_sv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisentangleReport<T> {
    pub style_recovery_discrepancy: T,
    pub scd: T,
    /// `|corr(ẑ_j, z_j)|` per style.
    pub per_style_corr: Vec<T>,
    /// `‖corr(ẑ_S) − corr(z_S)‖` in normalized Frobenius norm.
    pub corr_recovery_residual: T,
    pub direction_residual: Vec<T>,
    pub content_null_residual: T,
    pub content_min_sv: T,
    /// Some correlation input had a constant column.
    pub degenerate: bool,
}

impl<T: Scalar> DisentangleReport<T> {
    pub fn t1_max(&self) -> T {
        self.direction_residual.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

/// Full report with the sign-annotation slope as `β_j` for every style.
pub fn full_report<T: Scalar>(ds: &PairedDataset<T>, p: &ProjectionMatrix<T>, a: &Matrix<T>) -> Result<DisentangleReport<T>> {
    let beta = vec![T::of(SIGN_ANNOTATION_SLOPE); p.m()];
    full_report_with_beta(ds, p, a, &beta)
}

pub fn full_report_with_beta<T: Scalar>(
    ds: &PairedDataset<T>,
    p: &ProjectionMatrix<T>,
    a: &Matrix<T>,
    beta: &[T],
) -> Result<DisentangleReport<T>> {
    let gt = ds.ground_truth.as_ref().ok_or_else(|| Error::invalid("report needs ground-truth latents"))?;
    report_from_parts(&ds.base, &gt.latents, &gt.style_set, p, a, beta)
}

/// Report from base features and their latents alone, e.g. when loaded from disk.
pub fn report_from_parts<T: Scalar>(
    base: &Matrix<T>,
    latents: &Matrix<T>,
    style_set: &[usize],
    p: &ProjectionMatrix<T>,
    a: &Matrix<T>,
    beta: &[T],
) -> Result<DisentangleReport<T>> {
    if style_set.len() != p.m() {
        return Err(Error::invalid(format!("dataset has {} styles, projection has {}", style_set.len(), p.m())));
    }
    if base.nrows() != latents.nrows() {
        return Err(Error::invalid(format!("{} feature rows but {} latent rows", base.nrows(), latents.nrows())));
    }
    let factors = transform(p, base)?;
    let z_style = latents.select_columns(style_set);

    let cross = cross_corr(&z_style, &factors.style_factors)?;
    let own = corr(&z_style)?;
    let est = corr(&factors.style_factors)?;
    let content_cross = cross_corr(&factors.content_factors, &z_style)?;
    let per_style_corr = (0..p.m()).map(|j| cross.matrix[(j, j)].abs()).collect();
    let residuals = identifiability_residuals(p, a, style_set, beta)?;

    Ok(DisentangleReport {
        style_recovery_discrepancy: norm_fro(&cross.matrix.sub(&own.matrix)?),
        scd: norm_fro(&content_cross.matrix),
        per_style_corr,
        corr_recovery_residual: norm_fro(&est.matrix.sub(&own.matrix)?),
        direction_residual: residuals.t1,
        content_null_residual: residuals.t2_null,
        content_min_sv: residuals.t2_min_sv,
        degenerate: cross.degenerate || own.degenerate || est.degenerate || content_cross.degenerate,
    })
}

/// Median and interquartile range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Quantiles by linear interpolation between order statistics. NaNs are rejected.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("summarize needs a nonempty NaN-free sample"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Summary { median: quantile(&v, 0.5), q1: quantile(&v, 0.25), q3: quantile(&v, 0.75) })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> Result<f64> {
    Ok(summarize(values)?.median)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("spearman needs two equal-length samples of size >= 2"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let mx = rx.iter().sum::<f64>() / rx.len() as f64;
    let my = ry.iter().sum::<f64>() / ry.len() as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
