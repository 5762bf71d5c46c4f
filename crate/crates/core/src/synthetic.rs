//! Synthetic benchmark: correlated Gaussian latents, a triangular × orthogonal
//! mixing map, one-sided sign manipulations of each style coordinate and ±1
//! annotations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, haar_orthogonal_with, seeded_rng, standard_normal_matrix, svd, Matrix};
use crate::scalar::Scalar;

/// ChaCha stream for the entangler's orthogonal factor (latents use 0, annotation noise 1).
const ENTANGLER_STREAM: u64 = 3;

/// Population slope of a `±1` sign annotation regressed on a unit-variance
/// Gaussian coordinate under the two-sided manipulation scheme:
/// `E|z| / E[z²] = sqrt(2/π)`.
pub const SIGN_ANNOTATION_SLOPE: f64 = 0.797_884_560_802_865_4;

/// Generative latent model: `z ~ N(0, Σ)` with `Σ = I` except `Σ₀₁ = Σ₁₀ = rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpec {
    pub d: usize,
    /// Style coordinates, strictly increasing.
    pub style_set: Vec<usize>,
    pub rho: f64,
    pub annotation_noise_std: f64,
}

impl Default for LatentSpec {
    fn default() -> Self {
        Self { d: 10, style_set: (0..5).collect(), rho: 0.0, annotation_noise_std: 0.0 }
    }
}

impl LatentSpec {
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn m(&self) -> usize {
        self.style_set.len()
    }

    /// Complement of the style set, ascending.
    pub fn content_set(&self) -> Vec<usize> {
        (0..self.d).filter(|i| !self.style_set.contains(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let spec = |field, reason: String| Err(Error::InvalidSpec { field, reason });
        if self.style_set.is_empty() {
            return spec("style_set", "must name at least one style coordinate".into());
        }
        if self.style_set.windows(2).any(|w| w[0] >= w[1]) {
            return spec("style_set", format!("must be strictly increasing, got {:?}", self.style_set));
        }
        if let Some(&bad) = self.style_set.iter().find(|&&j| j >= self.d) {
            return spec("style_set", format!("index {bad} is outside 0..{}", self.d));
        }
        if self.style_set.len() >= self.d {
            return spec("style_set", format!("needs m < d, got m = {} and d = {}", self.style_set.len(), self.d));
        }
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            return spec("rho", format!("must satisfy |rho| < 1, got {}", self.rho));
        }
        if self.rho != 0.0 && self.style_set.contains(&0) != self.style_set.contains(&1) {
            return spec("style_set", "with rho != 0 coordinates 0 and 1 must both be style or both be content".into());
        }
        if !(self.annotation_noise_std.is_finite() && self.annotation_noise_std >= 0.0) {
            return spec("annotation_noise_std", format!("must be finite and >= 0, got {}", self.annotation_noise_std));
        }
        Ok(())
    }

    pub fn covariance<T: Scalar>(&self) -> Matrix<T> {
        let mut s = Matrix::identity(self.d);
        if self.d >= 2 {
            s[(0, 1)] = T::of(self.rho);
            s[(1, 0)] = T::of(self.rho);
        }
        s
    }

    fn partner(&self, j: usize) -> Option<usize> {
        match j {
            0 | 1 if self.d >= 2 && self.rho != 0.0 => Some(1 - j),
            _ => None,
        }
    }
}

/// Mixing map `A = L · O`: `L` unit lower triangular with `offdiag` below the
/// diagonal, `O` the first `d` columns of a Haar orthogonal `d′ × d′` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglerSpec {
    pub d_prime: usize,
    pub offdiag: f64,
    pub seed: u64,
}

impl Default for EntanglerSpec {
    fn default() -> Self {
        Self { d_prime: 10, offdiag: 0.9, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

pub fn sample_latents<T: Scalar>(spec: &LatentSpec, n: usize, seed: u64) -> Result<Matrix<T>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample_latents needs n >= 1"));
    }
    let chol = cholesky(&spec.covariance::<T>())
        .map_err(|e| Error::InvalidSpec { field: "rho", reason: format!("latent covariance is not positive definite: {e}") })?;
    let g: Matrix<T> = standard_normal_matrix(n, spec.d, &mut seeded_rng(seed));
    // Rows z = L g.
    g.matmul_transposed(&chol)
}

/// Sets coordinate `j` to `±|z_j|`. When `j` is one of the correlated pair
/// {0, 1}, the partner moves by `rho · δ` where `δ` is the change applied to `j`.
pub fn manipulate<T: Scalar>(z_row: &[T], j: usize, sign: Sign, spec: &LatentSpec) -> Result<Vec<T>> {
    if !spec.style_set.contains(&j) {
        return Err(Error::invalid(format!("coordinate {j} is not a style coordinate")));
    }
    if z_row.len() != spec.d {
        return Err(Error::invalid(format!("latent row has length {}, expected {}", z_row.len(), spec.d)));
    }
    let mut out = z_row.to_vec();
    let old = z_row[j];
    let new = match sign {
        Sign::Plus => old.abs(),
        Sign::Minus => -old.abs(),
    };
    out[j] = new;
    if let Some(p) = spec.partner(j) {
        out[p] += T::of(spec.rho) * (new - old);
    }
    Ok(out)
}

pub fn build_entangler<T: Scalar>(spec: &EntanglerSpec, d: usize) -> Result<Matrix<T>> {
    if d == 0 || spec.d_prime < d {
        return Err(Error::InvalidSpec {
            field: "d_prime",
            reason: format!("need d_prime >= d >= 1, got d_prime = {} and d = {d}", spec.d_prime),
        });
    }
    if !spec.offdiag.is_finite() {
        return Err(Error::InvalidSpec { field: "offdiag", reason: "must be finite".into() });
    }
    let dp = spec.d_prime;
    let off = T::of(spec.offdiag);
    let lower = Matrix::from_fn(dp, dp, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => T::one(),
        std::cmp::Ordering::Greater => off,
        std::cmp::Ordering::Less => T::zero(),
    });
    // Own stream, so an entangler seed equal to a data seed draws different numbers.
    let mut rng = seeded_rng(spec.seed);
    rng.set_stream(ENTANGLER_STREAM);
    let haar: Matrix<T> = haar_orthogonal_with(dp, &mut rng)?;
    let cols: Vec<usize> = (0..d).collect();
    let a = lower.matmul(&haar.select_columns(&cols))?;
    let smallest = svd(&a)?.min_singular_value();
    if smallest.is_nan() || smallest.as_f64() <= 1e-10 {
        return Err(Error::EntanglerConstruction { min_singular_value: smallest.as_f64() });
    }
    Ok(a)
}

/// Observed features for one style: both one-sided manipulations of every base sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleManipulation<T> {
    pub name: String,
    /// Latent coordinate this style controls, when known.
    pub index: Option<usize>,
    pub plus: Matrix<T>,
    pub minus: Matrix<T>,
    pub ann_plus: Vec<T>,
    pub ann_minus: Vec<T>,
}

/// Latents behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T> {
    pub latents: Matrix<T>,
    /// One entry per style, aligned with [`PairedDataset::styles`].
    pub plus: Vec<Matrix<T>>,
    pub minus: Vec<Matrix<T>>,
    pub style_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset<T> {
    pub base: Matrix<T>,
    pub styles: Vec<StyleManipulation<T>>,
    pub ground_truth: Option<GroundTruth<T>>,
}

impl<T: Scalar> PairedDataset<T> {
    pub fn new(base: Matrix<T>, styles: Vec<StyleManipulation<T>>, ground_truth: Option<GroundTruth<T>>) -> Result<Self> {
        let ds = Self { base, styles, ground_truth };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.base.nrows()
    }

    pub fn d_prime(&self) -> usize {
        self.base.ncols()
    }

    pub fn m(&self) -> usize {
        self.styles.len()
    }

    pub fn style_names(&self) -> Vec<String> {
        self.styles.iter().map(|s| s.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.base.shape();
        if self.styles.is_empty() {
            return Err(Error::invalid("dataset has no styles"));
        }
        for s in &self.styles {
            if s.plus.shape() != shape || s.minus.shape() != shape {
                return Err(Error::invalid(format!(
                    "style `{}` features are {:?}/{:?}, base is {:?}",
                    s.name,
                    s.plus.shape(),
                    s.minus.shape(),
                    shape
                )));
            }
            if s.ann_plus.len() != shape.0 || s.ann_minus.len() != shape.0 {
                return Err(Error::invalid(format!("style `{}` annotation length mismatch", s.name)));
            }
        }
        if let Some(gt) = &self.ground_truth {
            if gt.latents.nrows() != shape.0 || gt.plus.len() != self.m() || gt.minus.len() != self.m() {
                return Err(Error::invalid("ground truth does not match dataset shape"));
            }
            let d = gt.latents.ncols();
            let content: Vec<usize> = (0..d).filter(|i| !gt.style_set.contains(i)).collect();
            for (zp, zm) in gt.plus.iter().zip(&gt.minus) {
                for (i, z) in gt.latents.rows_iter().enumerate() {
                    for &c in &content {
                        if zp[(i, c)] != z[c] || zm[(i, c)] != z[c] {
                            return Err(Error::invalid(format!("manipulated latent row {i} changes content coordinate {c}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the mixing map from `ent` and samples a dataset through it.
pub fn generate<T: Scalar>(latent: &LatentSpec, ent: &EntanglerSpec, n: usize, seed: u64) -> Result<PairedDataset<T>> {
    latent.validate()?;
    let a = build_entangler(ent, latent.d)?;
    generate_with_mixing(latent, &a, n, seed)
}

/// Samples latents, manipulates every style both ways and maps everything through `a`.
///
/// Annotations are `+1 + ε` and `-1 + ε` with `ε ~ N(0, annotation_noise_std²)`
/// drawn from a stream independent of the latent draws.
pub fn generate_with_mixing<T: Scalar>(latent: &LatentSpec, a: &Matrix<T>, n: usize, seed: u64) -> Result<PairedDataset<T>> {
    latent.validate()?;
    if a.ncols() != latent.d {
        return Err(Error::invalid(format!("mixing matrix has {} columns, latent dimension is {}", a.ncols(), latent.d)));
    }
    let z: Matrix<T> = sample_latents(latent, n, seed)?;
    let base = z.matmul_transposed(a)?;

    let mut noise_rng = seeded_rng(seed);
    noise_rng.set_stream(1);
    let std = latent.annotation_noise_std;
    let mut annotate =
        |target: f64| -> Vec<T> { (0..n).map(|_| T::of(target + std * noise_rng.sample::<f64, _>(StandardNormal))).collect() };

    let mut styles = Vec::with_capacity(latent.m());
    let mut gt_plus = Vec::with_capacity(latent.m());
    let mut gt_minus = Vec::with_capacity(latent.m());
    for &j in &latent.style_set {
        let mut zp = Matrix::zeros(n, latent.d);
        let mut zm = Matrix::zeros(n, latent.d);
        for (i, row) in z.rows_iter().enumerate() {
            zp.row_mut(i).copy_from_slice(&manipulate(row, j, Sign::Plus, latent)?);
            zm.row_mut(i).copy_from_slice(&manipulate(row, j, Sign::Minus, latent)?);
        }
        let ann_plus = annotate(1.0);
        let ann_minus = annotate(-1.0);
        styles.push(StyleManipulation {
            name: style_name(j),
            index: Some(j),
            plus: zp.matmul_transposed(a)?,
            minus: zm.matmul_transposed(a)?,
            ann_plus,
            ann_minus,
        });
        gt_plus.push(zp);
        gt_minus.push(zm);
    }
    let gt = GroundTruth { latents: z, plus: gt_plus, minus: gt_minus, style_set: latent.style_set.clone() };
    PairedDataset::new(base, styles, Some(gt))
}

pub fn style_name(j: usize) -> String {
    format!("style{j}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_the_field() {
        let bad = LatentSpec { style_set: vec![], ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidSpec { field: "style_set", .. })));
        let bad = LatentSpec { style_set: vec![2, 1], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = LatentSpec { style_set: (0..10).collect(), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = LatentSpec::default().with_rho(1.0);
        assert!(matches!(bad.validate(), Err(Error::InvalidSpec { field: "rho", .. })));
        let bad = LatentSpec { style_set: vec![0], rho: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let ok = LatentSpec { style_set: vec![3], rho: 0.5, ..Default::default() };
        assert!(ok.validate().is_ok());
        assert_eq!(LatentSpec::default().content_set(), vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn single_sample_shape() {
        let z: Matrix<f64> = sample_latents(&LatentSpec::default(), 1, 3).unwrap();
        assert_eq!(z.shape(), (1, 10));
        assert!(z.is_finite());
        assert!(sample_latents::<f64>(&LatentSpec::default(), 0, 3).is_err());
    }

    #[test]
    fn manipulation_rules() {
        let spec = LatentSpec::default().with_rho(0.5);
        let z = [-2.0, 1.0, 0.3, -0.7, 0.1, 5.0, 6.0, 7.0, 8.0, 9.0];
        let out = manipulate(&z, 0, Sign::Plus, &spec).unwrap();
        assert_eq!(out[0], 2.0);
        assert_eq!(out[1], 3.0);
        assert_eq!(&out[2..], &z[2..]);

        // Already non-negative: unchanged bit for bit.
        assert_eq!(manipulate(&z, 2, Sign::Plus, &spec).unwrap(), z.to_vec());
        assert_eq!(manipulate(&z, 3, Sign::Minus, &spec).unwrap(), z.to_vec());

        let spec0 = LatentSpec::default();
        let out = manipulate(&z, 0, Sign::Plus, &spec0).unwrap();
        assert_eq!(out[1], z[1]);
        assert!(manipulate(&z, 7, Sign::Plus, &spec0).is_err());
    }

    #[test]
    fn entangler_shapes() {
        let plain = EntanglerSpec { offdiag: 0.0, ..Default::default() };
        let a: Matrix<f64> = build_entangler(&plain, 10).unwrap();
        let ata = a.transpose().matmul(&a).unwrap();
        assert!(ata.sub(&Matrix::identity(10)).unwrap().max_abs() < 1e-12);

        let tall: Matrix<f64> = build_entangler(&EntanglerSpec { d_prime: 12, ..Default::default() }, 10).unwrap();
        assert_eq!(tall.shape(), (12, 10));
        assert!(svd(&tall).unwrap().min_singular_value() > 1e-10);

        assert!(build_entangler::<f64>(&EntanglerSpec { d_prime: 4, ..Default::default() }, 10).is_err());
    }

    #[test]
    fn noiseless_annotations_are_exact() {
        let ds: PairedDataset<f64> = generate(&LatentSpec::default(), &EntanglerSpec::default(), 50, 9).unwrap();
        for s in &ds.styles {
            assert!(s.ann_plus.iter().all(|&v| v == 1.0));
            assert!(s.ann_minus.iter().all(|&v| v == -1.0));
        }
    }

    #[test]
    fn noisy_annotations_are_centered_on_targets() {
        let latent = LatentSpec { annotation_noise_std: 0.5, ..Default::default() };
        let ds: PairedDataset<f64> = generate(&latent, &EntanglerSpec::default(), 2000, 9).unwrap();
        let mean = ds.styles[0].ann_plus.iter().sum::<f64>() / 2000.0;
        assert!((mean - 1.0).abs() < 0.05);
        assert!(ds.styles[0].ann_plus.iter().any(|&v| v != 1.0));
    }
}
