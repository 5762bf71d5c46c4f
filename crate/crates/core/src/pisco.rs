//! The post-processing estimator.
//!
//! Each style factor gets its own minimum-norm least-squares direction. The
//! content factors are the top eigenvectors of a second-moment matrix
//! penalized by how much each direction moves under style manipulations. At
//! `λ = +∞` the penalty becomes a hard constraint and the content rows are
//! taken from the exact null space of the manipulation differences.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, fix_sign, norm2, pinv, svd, sym_eig, Matrix, DEFAULT_PINV_TOL};
use crate::scalar::Scalar;
use crate::synthetic::PairedDataset;

/// Default relative singular-value cutoff for the `λ = +∞` null space.
pub const DEFAULT_NULL_TOL: f64 = 1e-10;
/// Default fraction of the feature dimension kept as style + content rows.
pub const DEFAULT_ETA: f64 = 0.95;

/// Penalty strength: a finite non-negative value or the exact-invariance limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Lambda::Infinite)
    }

    pub fn finite(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Lambda::Finite(value))
        } else if value == f64::INFINITY {
            Ok(Lambda::Infinite)
        } else {
            Err(Error::invalid(format!("lambda must be >= 0, got {value}")))
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(v) => write!(f, "{v}"),
            Lambda::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "+inf" | "infinity") {
            return Ok(Lambda::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| Error::invalid(format!("cannot parse lambda `{s}`")))?;
        Lambda::finite(v)
    }
}

/// A fitted style direction `p̂_j` with its intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleFit<T> {
    pub name: String,
    pub direction: Vec<T>,
    pub intercept: T,
    /// Mean squared residual of the regression on the stacked rows.
    pub mse: T,
}

impl<T: Scalar> StyleFit<T> {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Unit-length copy of the direction, for reporting only.
    pub fn normalized_direction(&self) -> Vec<T> {
        let n = norm2(&self.direction);
        if n == T::zero() {
            return self.direction.clone();
        }
        self.direction.iter().map(|&v| v / n).collect()
    }
}

/// Minimum-norm least-squares direction for one style, using the default pinv cutoff.
pub fn fit_style_direction<T: Scalar>(
    base: &Matrix<T>,
    modified: &Matrix<T>,
    ann_base: &[T],
    ann_modified: &[T],
) -> Result<StyleFit<T>> {
    fit_style_direction_with_tol(base, modified, ann_base, ann_modified, T::of(DEFAULT_PINV_TOL))
}

/// Regresses annotations on features over the stacked `2n` rows.
///
/// The vanishing-ridge limit is evaluated in closed form:
/// `p̂ = Σ̂⁺ ĉ` where `Σ̂` is the centered feature covariance and `ĉ` the
/// centered feature/annotation cross-covariance.
pub fn fit_style_direction_with_tol<T: Scalar>(
    base: &Matrix<T>,
    modified: &Matrix<T>,
    ann_base: &[T],
    ann_modified: &[T],
    rel_tol: T,
) -> Result<StyleFit<T>> {
    if base.shape() != modified.shape() {
        return Err(Error::invalid(format!(
            "base features are {:?} but modified features are {:?}",
            base.shape(),
            modified.shape()
        )));
    }
    let (n, dp) = base.shape();
    if n < 2 {
        return Err(Error::invalid(format!("style regression needs n >= 2 samples, got {n}")));
    }
    if ann_base.len() != n || ann_modified.len() != n {
        return Err(Error::invalid(format!("annotation lengths {}/{} do not match n = {n}", ann_base.len(), ann_modified.len())));
    }
    let y: Vec<T> = ann_base.iter().chain(ann_modified).copied().collect();
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::DegenerateRegression { rows: 2 * n });
    }
    let x = Matrix::vstack(&[base, modified])?;
    let rows = T::of_usize(2 * n);

    let x_mean: Vec<T> = (0..dp).map(|j| x.column(j).into_iter().sum::<T>() / rows).collect();
    let y_mean = y.iter().copied().sum::<T>() / rows;
    let xc = Matrix::from_fn(2 * n, dp, |i, j| x[(i, j)] - x_mean[j]);
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();

    let cov = xc.gram().scale(T::one() / rows);
    let cross: Vec<T> = xc.transpose().matvec(&yc)?.into_iter().map(|v| v / rows).collect();
    let direction = pinv(&cov, rel_tol)?.matvec(&cross)?;
    let intercept = y_mean - dot(&direction, &x_mean);

    let mse = x
        .rows_iter()
        .zip(&y)
        .map(|(r, &t)| {
            let e = t - intercept - dot(r, &direction);
            e * e
        })
        .sum::<T>()
        / rows;
    Ok(StyleFit { name: String::new(), direction, intercept, mse })
}

fn check_content_inputs<T: Scalar>(all_features: &Matrix<T>, deltas: &[Matrix<T>]) -> Result<()> {
    if all_features.is_empty() {
        return Err(Error::invalid("feature stack is empty"));
    }
    let dp = all_features.ncols();
    for (j, d) in deltas.iter().enumerate() {
        if d.ncols() != dp {
            return Err(Error::invalid(format!("delta {j} has {} columns, features have {dp}", d.ncols())));
        }
        if d.nrows() == 0 {
            return Err(Error::invalid(format!("delta {j} has no rows")));
        }
    }
    Ok(())
}

/// `UᵀU/N − (λ/m)·Σⱼ ΔⱼᵀΔⱼ/nⱼ`, where `N` is the row count of the feature stack.
pub fn content_objective_matrix<T: Scalar>(all_features: &Matrix<T>, deltas: &[Matrix<T>], lambda: T) -> Result<Matrix<T>> {
    check_content_inputs(all_features, deltas)?;
    if !(lambda.is_finite() && lambda >= T::zero()) {
        return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let mut out = all_features.gram().scale(T::one() / T::of_usize(all_features.nrows()));
    if deltas.is_empty() || lambda == T::zero() {
        return Ok(out);
    }
    let weight = lambda / T::of_usize(deltas.len());
    for d in deltas {
        let pen = d.gram().scale(weight / T::of_usize(d.nrows()));
        out = out.sub(&pen)?;
    }
    Ok(out)
}

/// Eigen-solution of the content problem: the rows and the eigenvalues that selected them.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentSolution<T> {
    pub rows: Matrix<T>,
    /// Full spectrum of the (possibly projected) objective matrix, descending.
    pub spectrum: Vec<T>,
    /// Number of style-invariant directions; equals `d′` for finite λ.
    pub feasible_dim: usize,
}

pub fn solve_content<T: Scalar>(
    all_features: &Matrix<T>,
    deltas: &[Matrix<T>],
    lambda: T,
    k: usize,
) -> Result<ContentSolution<T>> {
    let dp = all_features.ncols();
    if k == 0 || k > dp {
        return Err(Error::invalid(format!("need 1 <= k <= d' = {dp}, got k = {k}")));
    }
    let m = content_objective_matrix(all_features, deltas, lambda)?;
    let eig = sym_eig(&m)?;
    Ok(ContentSolution { rows: eig.top_rows(k), spectrum: eig.eigenvalues, feasible_dim: dp })
}

/// Top-`k` eigenvectors (as rows) of [`content_objective_matrix`].
pub fn fit_content<T: Scalar>(all_features: &Matrix<T>, deltas: &[Matrix<T>], lambda: T, k: usize) -> Result<Matrix<T>> {
    Ok(solve_content(all_features, deltas, lambda, k)?.rows)
}

/// Orthonormal basis (columns) of the directions annihilated by every delta row.
pub fn style_null_space<T: Scalar>(dp: usize, deltas: &[Matrix<T>], null_tol: T) -> Result<Matrix<T>> {
    if deltas.is_empty() {
        return Ok(Matrix::identity(dp));
    }
    let mut parts: Vec<&Matrix<T>> = deltas.iter().collect();
    let rows: usize = deltas.iter().map(Matrix::nrows).sum();
    let pad = Matrix::zeros(dp.saturating_sub(rows), dp);
    if rows < dp {
        parts.push(&pad);
    }
    let stacked = Matrix::vstack(&parts)?;
    let d = svd(&stacked)?;
    let cutoff = null_tol * d.max_singular_value();
    let keep: Vec<usize> = (0..dp)
        .filter(|&i| {
            let s = d.singular_values[i];
            s == T::zero() || s < cutoff
        })
        .collect();
    Ok(d.v.select_columns(&keep))
}

pub fn solve_content_exact<T: Scalar>(
    all_features: &Matrix<T>,
    deltas: &[Matrix<T>],
    k: usize,
    null_tol: T,
) -> Result<ContentSolution<T>> {
    check_content_inputs(all_features, deltas)?;
    let dp = all_features.ncols();
    if k == 0 {
        return Err(Error::invalid("need k >= 1 content rows"));
    }
    if !(null_tol > T::zero() && null_tol < T::one()) {
        return Err(Error::invalid(format!("null_tol must lie in (0, 1), got {null_tol}")));
    }
    let basis = style_null_space(dp, deltas, null_tol)?;
    let available = basis.ncols();
    if available < k {
        return Err(Error::InsufficientNullSpace { requested: k, available });
    }
    let second_moment = all_features.gram().scale(T::one() / T::of_usize(all_features.nrows()));
    let projected = basis.transpose().matmul(&second_moment)?.matmul(&basis)?;
    let eig = sym_eig(&projected)?;
    // Rows of Q are basis · w for the leading eigenvectors w.
    let lifted = basis.matmul(&eig.eigenvectors.select_columns(&(0..k).collect::<Vec<_>>()))?;
    let mut rows = lifted.transpose();
    for i in 0..k {
        fix_sign(rows.row_mut(i));
    }
    Ok(ContentSolution { rows, spectrum: eig.eigenvalues, feasible_dim: available })
}

/// Content rows in the `λ = +∞` limit: top-`k` second-moment directions inside
/// the null space of the stacked manipulation differences.
pub fn fit_content_exact<T: Scalar>(all_features: &Matrix<T>, deltas: &[Matrix<T>], k: usize, null_tol: T) -> Result<Matrix<T>> {
    Ok(solve_content_exact(all_features, deltas, k, null_tol)?.rows)
}

/// Average over styles of `tr[QᵀQ ΔⱼᵀΔⱼ/nⱼ]`, the quantity the λ penalty weighs.
pub fn style_penalty<T: Scalar>(q: &Matrix<T>, deltas: &[Matrix<T>]) -> Result<T> {
    if deltas.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for d in deltas {
        let moved = d.matmul_transposed(q)?;
        total += moved.as_slice().iter().map(|&v| v * v).sum::<T>() / T::of_usize(d.nrows());
    }
    Ok(total / T::of_usize(deltas.len()))
}

/// Number of content rows from `k = round(η·d′) − m`.
pub fn content_rank_from_eta(d_prime: usize, m: usize, eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    let kept = (eta * d_prime as f64).round() as i64;
    let k = kept - m as i64;
    if k < 1 {
        return Err(Error::invalid(format!(
            "eta = {eta} keeps {kept} of {d_prime} dimensions, leaving no content rows after {m} styles"
        )));
    }
    Ok(k as usize)
}

/// The fitted post-processing map: style rows on top, orthonormal content rows below.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix<T> {
    style_rows: Matrix<T>,
    content_rows: Matrix<T>,
    lambda: Lambda,
    eta: f64,
    style_names: Vec<String>,
}

impl<T: Scalar> ProjectionMatrix<T> {
    pub fn new(
        style_rows: Matrix<T>,
        content_rows: Matrix<T>,
        lambda: Lambda,
        eta: f64,
        style_names: Vec<String>,
    ) -> Result<Self> {
        let (m, dp) = style_rows.shape();
        let (k, dpc) = content_rows.shape();
        if dp != dpc {
            return Err(Error::invalid(format!("style rows have {dp} columns, content rows have {dpc}")));
        }
        if style_names.len() != m {
            return Err(Error::invalid(format!("{} style names for {m} style rows", style_names.len())));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = style_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate style name `{dup}`")));
        }
        if k == 0 {
            return Err(Error::invalid("projection needs k >= 1 content rows"));
        }
        if m + k > dp {
            return Err(Error::invalid(format!("m + k = {} exceeds d' = {dp}", m + k)));
        }
        if !style_rows.is_finite() || !content_rows.is_finite() {
            return Err(Error::invalid("projection has non-finite entries"));
        }
        let gram = content_rows.matmul_transposed(&content_rows)?;
        let err = gram.sub(&Matrix::identity(k))?.max_abs();
        if err > T::tol_floor(1e-8) {
            return Err(Error::invalid(format!("content rows are not orthonormal: max |QQᵀ - I| = {:e}", err.as_f64())));
        }
        Ok(Self { style_rows, content_rows, lambda, eta, style_names })
    }

    pub fn style_rows(&self) -> &Matrix<T> {
        &self.style_rows
    }

    pub fn content_rows(&self) -> &Matrix<T> {
        &self.content_rows
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn style_names(&self) -> &[String] {
        &self.style_names
    }

    pub fn d_prime(&self) -> usize {
        self.style_rows.ncols()
    }

    pub fn m(&self) -> usize {
        self.style_rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.content_rows.nrows()
    }

    /// `P` as one `(m + k) × d′` matrix.
    pub fn stacked(&self) -> Matrix<T> {
        Matrix::vstack(&[&self.style_rows, &self.content_rows]).expect("column counts checked at construction")
    }

    pub fn style_direction(&self, j: usize) -> &[T] {
        self.style_rows.row(j)
    }
}

/// Stacks fitted style directions over the content rows.
pub fn assemble<T: Scalar>(
    style_fits: &[StyleFit<T>],
    content: Matrix<T>,
    lambda: Lambda,
    eta: f64,
) -> Result<ProjectionMatrix<T>> {
    if style_fits.is_empty() {
        return Err(Error::invalid("assemble needs at least one style fit"));
    }
    let dp = content.ncols();
    if let Some(bad) = style_fits.iter().find(|f| f.direction.len() != dp) {
        return Err(Error::invalid(format!(
            "style `{}` direction has length {}, content rows have {dp} columns",
            bad.name,
            bad.direction.len()
        )));
    }
    let style_rows = Matrix::from_fn(style_fits.len(), dp, |i, j| style_fits[i].direction[j]);
    let names = style_fits.iter().map(|f| f.name.clone()).collect();
    ProjectionMatrix::new(style_rows, content, lambda, eta, names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedFeatures<T> {
    /// `n × m`.
    pub style_factors: Matrix<T>,
    /// `n × k`.
    pub content_factors: Matrix<T>,
}

fn check_features<T: Scalar>(p: &ProjectionMatrix<T>, features: &Matrix<T>) -> Result<()> {
    if features.ncols() != p.d_prime() {
        return Err(Error::invalid(format!(
            "features have {} columns, projection expects d' = {}",
            features.ncols(),
            p.d_prime()
        )));
    }
    Ok(())
}

pub fn transform<T: Scalar>(p: &ProjectionMatrix<T>, features: &Matrix<T>) -> Result<FactorizedFeatures<T>> {
    check_features(p, features)?;
    Ok(FactorizedFeatures {
        style_factors: features.matmul_transposed(&p.style_rows)?,
        content_factors: features.matmul_transposed(&p.content_rows)?,
    })
}

/// Content factors only; style factors are discarded.
pub fn content_only<T: Scalar>(p: &ProjectionMatrix<T>, features: &Matrix<T>) -> Result<Matrix<T>> {
    check_features(p, features)?;
    features.matmul_transposed(&p.content_rows)
}

/// Paired observations for one style.
///
/// `original = None` is the single-manipulation pairing: the base features
/// annotated with `ann_original` against one modified copy. `Some(rows)` is
/// the two-sided pairing where both rows are manipulations of the base.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleSamples<T> {
    pub name: String,
    pub original: Option<Matrix<T>>,
    pub modified: Matrix<T>,
    pub ann_original: Vec<T>,
    pub ann_modified: Vec<T>,
}

impl<T: Scalar> PairedDataset<T> {
    /// Two-sided pairing: `(u⁺, ann⁺)` against `(u⁻, ann⁻)` for each style.
    pub fn style_samples(&self) -> Vec<StyleSamples<T>> {
        self.styles
            .iter()
            .map(|s| StyleSamples {
                name: s.name.clone(),
                original: Some(s.plus.clone()),
                modified: s.minus.clone(),
                ann_original: s.ann_plus.clone(),
                ann_modified: s.ann_minus.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiscoConfig {
    pub lambda: Lambda,
    /// Content rows; `None` applies the `round(η·d′) − m` rule.
    pub k: Option<usize>,
    pub eta: f64,
    pub pinv_tol: f64,
    pub null_tol: f64,
}

impl Default for PiscoConfig {
    fn default() -> Self {
        Self { lambda: Lambda::Infinite, k: None, eta: DEFAULT_ETA, pinv_tol: DEFAULT_PINV_TOL, null_tol: DEFAULT_NULL_TOL }
    }
}

impl PiscoConfig {
    pub fn with_lambda(mut self, lambda: Lambda) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiscoFit<T> {
    pub projection: ProjectionMatrix<T>,
    pub style_fits: Vec<StyleFit<T>>,
    pub content: ContentSolution<T>,
}

/// The inputs of the content problem: the feature stack `U` and one delta matrix per style.
pub struct ContentInputs<T> {
    pub all_features: Matrix<T>,
    pub deltas: Vec<Matrix<T>>,
}

pub fn content_inputs<T: Scalar>(base: &Matrix<T>, styles: &[StyleSamples<T>]) -> Result<ContentInputs<T>> {
    let mut parts: Vec<&Matrix<T>> = vec![base];
    let mut deltas = Vec::with_capacity(styles.len());
    for s in styles {
        if let Some(orig) = &s.original {
            parts.push(orig);
        }
        parts.push(&s.modified);
        let reference = s.original.as_ref().unwrap_or(base);
        deltas.push(reference.sub(&s.modified)?);
    }
    Ok(ContentInputs { all_features: Matrix::vstack(&parts)?, deltas })
}

/// Fits every style direction and the content rows, then assembles `P(λ)`.
pub fn fit<T: Scalar>(base: &Matrix<T>, styles: &[StyleSamples<T>], cfg: &PiscoConfig) -> Result<PiscoFit<T>> {
    let style_fits = fit_styles(base, styles, cfg)?;
    let inputs = content_inputs(base, styles)?;
    fit_with_styles(&inputs, style_fits, cfg)
}

pub fn fit_styles<T: Scalar>(base: &Matrix<T>, styles: &[StyleSamples<T>], cfg: &PiscoConfig) -> Result<Vec<StyleFit<T>>> {
    if styles.is_empty() {
        return Err(Error::invalid("need at least one style"));
    }
    styles
        .iter()
        .map(|s| {
            let original = s.original.as_ref().unwrap_or(base);
            if original.shape() != base.shape() {
                return Err(Error::invalid(format!("style `{}` original features do not match base shape", s.name)));
            }
            let fit = fit_style_direction_with_tol(original, &s.modified, &s.ann_original, &s.ann_modified, T::of(cfg.pinv_tol))
                .map_err(|e| match e {
                    Error::InvalidArgument(msg) => Error::InvalidArgument(format!("style `{}`: {msg}", s.name)),
                    other => other,
                })?;
            log::debug!("style `{}`: regression mse = {}", s.name, fit.mse);
            Ok(fit.with_name(s.name.clone()))
        })
        .collect()
}

/// Content step plus assembly, reusing already fitted style directions.
pub fn fit_with_styles<T: Scalar>(
    inputs: &ContentInputs<T>,
    style_fits: Vec<StyleFit<T>>,
    cfg: &PiscoConfig,
) -> Result<PiscoFit<T>> {
    let dp = inputs.all_features.ncols();
    let m = style_fits.len();
    let k = match cfg.k {
        Some(k) => k,
        None => content_rank_from_eta(dp, m, cfg.eta)?,
    };
    let content = match cfg.lambda {
        Lambda::Infinite => solve_content_exact(&inputs.all_features, &inputs.deltas, k, T::of(cfg.null_tol))?,
        Lambda::Finite(l) => solve_content(&inputs.all_features, &inputs.deltas, T::of(l), k)?,
    };
    let projection = assemble(&style_fits, content.rows.clone(), cfg.lambda, cfg.eta)?;
    Ok(PiscoFit { projection, style_fits, content })
}

pub fn fit_dataset<T: Scalar>(ds: &PairedDataset<T>, cfg: &PiscoConfig) -> Result<PiscoFit<T>> {
    fit(&ds.base, &ds.style_samples(), cfg)
}
