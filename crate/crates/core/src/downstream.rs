//! Spurious-correlation protocol and a full-batch multinomial logistic
//! regression used to score raw versus content-only features.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm2, seeded_rng, standard_normal_matrix, Matrix};
use crate::pisco::{content_only, ProjectionMatrix};
use crate::scalar::Scalar;
use crate::synthetic::PairedDataset;

/// Manipulation probabilities evaluated by default.
pub const DEFAULT_ALPHAS: [f64; 6] = [0.5, 0.75, 0.90, 0.95, 0.99, 1.0];
/// Restarts averaged per α.
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousConfig {
    /// Probability that a first-half training row is manipulated, in `[0.5, 1]`.
    pub alpha: f64,
    pub n_classes: usize,
    /// Position in [`PairedDataset::styles`] of the style correlated with the label.
    pub style: usize,
    pub seed: u64,
}

impl SpuriousConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidSpec { field: "alpha", reason: format!("must lie in [0.5, 1], got {}", self.alpha) });
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidSpec { field: "n_classes", reason: format!("need at least 2, got {}", self.n_classes) });
        }
        Ok(())
    }

    /// Labels below this are the "first half".
    pub fn half(&self) -> usize {
        self.n_classes / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures<T> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// Rows that carry the manipulated feature instead of the base one.
    pub transformed: Vec<bool>,
}

impl<T: Scalar> LabeledFeatures<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, n_classes: usize, transformed: Vec<bool>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || transformed.len() != n {
            return Err(Error::invalid(format!("{n} feature rows, {} labels, {} mask entries", labels.len(), transformed.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!("label {bad} outside 0..{n_classes}")));
        }
        Ok(Self { features, labels, n_classes, transformed })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Same rows with features replaced, e.g. by content factors.
    pub fn with_features(&self, features: Matrix<T>) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.n_classes, self.transformed.clone())
    }
}

/// Labels from a seeded random linear rule on the content coordinates:
/// `argmax_c (W · z_C)_c` with `W` a `n_classes × |F_C|` Gaussian matrix
/// whose rows are scaled to unit length. Unit rows all lie on the sphere, so
/// every class owns a nonempty cone of latent space.
pub fn content_labels<T: Scalar>(latents: &Matrix<T>, content_set: &[usize], n_classes: usize, seed: u64) -> Result<Vec<usize>> {
    if n_classes < 2 || content_set.is_empty() {
        return Err(Error::invalid("content labels need >= 2 classes and a nonempty content set"));
    }
    let mut w: Matrix<T> = standard_normal_matrix(n_classes, content_set.len(), &mut seeded_rng(seed));
    for c in 0..n_classes {
        let norm = norm2(w.row(c));
        w.row_mut(c).iter_mut().for_each(|v| *v /= norm);
    }
    let scores = latents.select_columns(content_set).matmul_transposed(&w)?;
    Ok(scores.rows_iter().map(argmax).collect())
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Splits the samples in half (seeded shuffle) and draws manipulation masks.
///
/// Training rows with label below `C/2` take the manipulated feature with
/// probability α, the rest with probability `1 − α`; the test half reverses
/// the two probabilities. Masks come from independent RNG streams.
pub fn build_spurious_split<T: Scalar>(
    dataset: &PairedDataset<T>,
    labels: &[usize],
    cfg: &SpuriousConfig,
) -> Result<(LabeledFeatures<T>, LabeledFeatures<T>)> {
    cfg.validate()?;
    let n = dataset.n();
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} samples", labels.len())));
    }
    let style =
        dataset.styles.get(cfg.style).ok_or_else(|| Error::invalid(format!("dataset has no style at position {}", cfg.style)))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(cfg.seed));
    let (train_rows, test_rows) = order.split_at(n / 2);

    let build = |rows: &[usize], stream: u64, first_half_p: f64| -> Result<LabeledFeatures<T>> {
        let mut rng = seeded_rng(cfg.seed);
        rng.set_stream(stream);
        let mut features = Matrix::zeros(rows.len(), dataset.d_prime());
        let mut mask = Vec::with_capacity(rows.len());
        let mut out_labels = Vec::with_capacity(rows.len());
        for (dst, &src) in rows.iter().enumerate() {
            let label = labels[src];
            let p = if label < cfg.half() { first_half_p } else { 1.0 - first_half_p };
            let draw: f64 = rng.random();
            let hit = draw < p;
            let from = if hit { &style.plus } else { &dataset.base };
            features.row_mut(dst).copy_from_slice(from.row(src));
            mask.push(hit);
            out_labels.push(label);
        }
        LabeledFeatures::new(features, out_labels, cfg.n_classes, mask)
    };
    let train = build(train_rows, 1, cfg.alpha)?;
    let test = build(test_rows, 2, 1.0 - cfg.alpha)?;
    if let Some(c) = train.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::InvalidSplit(format!("class {c} has no training rows")));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub iters: usize,
    pub l2: f64,
    /// Recorded for provenance; training starts from zero weights.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.1, iters: 500, l2: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<T> {
    /// `C × p`.
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub config: TrainConfig,
    /// Loss after each accepted step, starting with the loss at zero weights.
    pub loss_history: Vec<T>,
    pub final_grad_norm: T,
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn predict(&self, features: &Matrix<T>) -> Result<Vec<usize>> {
        if features.ncols() != self.weights.ncols() {
            return Err(Error::invalid(format!(
                "features have {} columns, model expects {}",
                features.ncols(),
                self.weights.ncols()
            )));
        }
        let logits = logits(&self.weights, &self.bias, features)?;
        Ok(logits.rows_iter().map(argmax).collect())
    }
}

fn logits<T: Scalar>(w: &Matrix<T>, b: &[T], x: &Matrix<T>) -> Result<Matrix<T>> {
    let mut z = x.matmul_transposed(w)?;
    for i in 0..z.nrows() {
        for (v, &bias) in z.row_mut(i).iter_mut().zip(b) {
            *v += bias;
        }
    }
    Ok(z)
}

/// Row-wise softmax in place; returns the mean cross-entropy against `labels`.
fn softmax_cross_entropy<T: Scalar>(z: &mut Matrix<T>, labels: &[usize]) -> T {
    let mut total = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let row = z.row_mut(i);
        let peak = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - peak).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        total -= row[y].max(T::min_positive_value()).ln();
    }
    total / T::of_usize(labels.len())
}

fn l2_term<T: Scalar>(w: &Matrix<T>, l2: T) -> T {
    l2 * T::of(0.5) * w.as_slice().iter().map(|&v| v * v).sum::<T>()
}

/// Regularized loss and its gradient with respect to weights and bias.
pub fn loss_and_gradient<T: Scalar>(
    weights: &Matrix<T>,
    bias: &[T],
    data: &LabeledFeatures<T>,
    l2: T,
) -> Result<(T, Matrix<T>, Vec<T>)> {
    let mut probs = logits(weights, bias, &data.features)?;
    let loss = softmax_cross_entropy(&mut probs, &data.labels) + l2_term(weights, l2);
    let (gw, gb) = gradient_from_probs(probs, weights, data, l2)?;
    Ok((loss, gw, gb))
}

fn gradient_from_probs<T: Scalar>(
    mut probs: Matrix<T>,
    weights: &Matrix<T>,
    data: &LabeledFeatures<T>,
    l2: T,
) -> Result<(Matrix<T>, Vec<T>)> {
    let n = T::of_usize(data.len());
    for (i, &y) in data.labels.iter().enumerate() {
        probs[(i, y)] -= T::one();
    }
    let gw = probs.transpose().matmul(&data.features)?;
    let gw = gw.zip_with(weights, |g, w| g / n + l2 * w)?;
    let gb = (0..probs.ncols()).map(|c| probs.column(c).into_iter().sum::<T>() / n).collect();
    Ok((gw, gb))
}

const MAX_HALVINGS: usize = 60;

/// Full-batch gradient descent from zero weights. A step that would raise the
/// loss is retried at half the learning rate, so the loss never increases.
pub fn train_softmax<T: Scalar>(data: &LabeledFeatures<T>, cfg: &TrainConfig) -> Result<ClassifierModel<T>> {
    if !data.features.is_finite() {
        return Err(Error::invalid("training features contain non-finite values"));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::invalid(format!("training needs at least 2 classes present, found {present}")));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) || !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) {
        return Err(Error::invalid("learning rate must be > 0 and l2 >= 0"));
    }
    let c = data.n_classes;
    let p = data.features.ncols();
    let l2 = T::of(cfg.l2);
    let mut w = Matrix::zeros(c, p);
    let mut b = vec![T::zero(); c];
    let mut lr = T::of(cfg.lr);

    let mut probs = logits(&w, &b, &data.features)?;
    let mut loss = softmax_cross_entropy(&mut probs, &data.labels) + l2_term(&w, l2);
    if !loss.is_finite() {
        return Err(Error::TrainingDivergence { iteration: 0 });
    }
    let mut history = vec![loss];
    let (mut gw, mut gb) = gradient_from_probs(probs, &w, data, l2)?;

    for iter in 1..=cfg.iters {
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let w_new = w.zip_with(&gw, |a, g| a - lr * g)?;
            let b_new: Vec<T> = b.iter().zip(&gb).map(|(&a, &g)| a - lr * g).collect();
            let mut probs = logits(&w_new, &b_new, &data.features)?;
            let cand = softmax_cross_entropy(&mut probs, &data.labels) + l2_term(&w_new, l2);
            if cand.is_finite() && cand <= loss {
                accepted = Some((w_new, b_new, probs, cand));
                break;
            }
            lr *= T::of(0.5);
        }
        match accepted {
            Some((w_new, b_new, probs, cand)) => {
                w = w_new;
                b = b_new;
                loss = cand;
                history.push(loss);
                (gw, gb) = gradient_from_probs(probs, &w, data, l2)?;
            }
            None if !loss.is_finite() => return Err(Error::TrainingDivergence { iteration: iter }),
            // No descent step exists at machine precision: converged.
            None => break,
        }
    }
    let final_grad_norm = (gw.as_slice().iter().map(|&v| v * v).sum::<T>() + gb.iter().map(|&v| v * v).sum::<T>()).sqrt();
    Ok(ClassifierModel { weights: w, bias: b, config: cfg.clone(), loss_history: history, final_grad_norm })
}

/// Fraction of rows whose argmax prediction (ties to the lowest class) matches the label.
pub fn evaluate<T: Scalar>(model: &ClassifierModel<T>, data: &LabeledFeatures<T>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty dataset"));
    }
    let pred = model.predict(&data.features)?;
    let hits = pred.iter().zip(&data.labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousOutcome {
    pub alpha: f64,
    /// Test accuracy per restart, in restart order.
    pub accuracies: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SpuriousOutcome {
    pub fn mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len() as f64
    }
}

/// One cell of the protocol: split, optionally map to content factors, train, score on the test half.
pub fn spurious_trial<T: Scalar>(
    dataset: &PairedDataset<T>,
    labels: &[usize],
    cfg: &SpuriousConfig,
    projection: Option<&ProjectionMatrix<T>>,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let (train, test) = build_spurious_split(dataset, labels, cfg)?;
    let (train, test) = match projection {
        Some(p) => {
            (train.with_features(content_only(p, &train.features)?)?, test.with_features(content_only(p, &test.features)?)?)
        }
        None => (train, test),
    };
    let model = train_softmax(&train, train_cfg)?;
    evaluate(&model, &test)
}

/// Runs every α in `alphas` for `restarts` split seeds starting at `cfg.seed`.
pub fn spurious_experiment<T: Scalar>(
    dataset: &PairedDataset<T>,
    labels: &[usize],
    cfg: &SpuriousConfig,
    alphas: &[f64],
    restarts: usize,
    projection: Option<&ProjectionMatrix<T>>,
    train_cfg: &TrainConfig,
) -> Result<Vec<SpuriousOutcome>> {
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let seeds: Vec<u64> = (0..restarts as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
            let accuracies = seeds
                .iter()
                .map(|&seed| {
                    let cell = SpuriousConfig { alpha, seed, ..cfg.clone() };
                    spurious_trial(dataset, labels, &cell, projection, train_cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SpuriousOutcome { alpha, accuracies, seeds })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledFeatures<f64> {
        let x = Matrix::from_rows(&[
            vec![2.0, 0.1],
            vec![1.5, -0.3],
            vec![3.0, 0.5],
            vec![-2.0, 0.2],
            vec![-1.0, -0.4],
            vec![-2.5, 0.0],
        ])
        .unwrap();
        LabeledFeatures::new(x, vec![0, 0, 0, 1, 1, 1], 2, vec![false; 6]).unwrap()
    }

    #[test]
    fn separable_toy_is_fit_perfectly() {
        let data = toy();
        let model = train_softmax(&data, &TrainConfig::default()).unwrap();
        assert_eq!(evaluate(&model, &data).unwrap(), 1.0);
        assert!(model.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_model_scores_chance() {
        let n = 400;
        let x = Matrix::from_fn(n, 2, |i, j| (i * 3 + j) as f64);
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let data = LabeledFeatures::new(x, labels, 4, vec![false; n]).unwrap();
        let model = ClassifierModel {
            weights: Matrix::zeros(4, 2),
            bias: vec![0.0; 4],
            config: TrainConfig::default(),
            loss_history: vec![],
            final_grad_norm: 0.0,
        };
        // Ties go to class 0, a quarter of the balanced labels.
        assert_eq!(evaluate(&model, &data).unwrap(), 0.25);
        let wrong = LabeledFeatures::new(Matrix::zeros(n, 3), vec![0; n], 4, vec![false; n]).unwrap();
        assert!(evaluate(&model, &wrong).is_err());
    }

    #[test]
    fn gradient_at_zero_is_mean_residual_times_features() {
        let data = toy();
        let (loss, gw, gb) = loss_and_gradient(&Matrix::zeros(2, 2), &[0.0, 0.0], &data, 0.0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        for c in 0..2 {
            let expect_b: f64 = data.labels.iter().map(|&y| 0.5 - if y == c { 1.0 } else { 0.0 }).sum::<f64>() / 6.0;
            assert!((gb[c] - expect_b).abs() < 1e-15);
            for j in 0..2 {
                let expect: f64 = data
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| (0.5 - if y == c { 1.0 } else { 0.0 }) * data.features[(i, j)])
                    .sum::<f64>()
                    / 6.0;
                assert!((gw[(c, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn predictive_coordinate_gets_the_largest_weights() {
        let mut rng = seeded_rng(3);
        let n = 300;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let x = Matrix::from_fn(n, 4, |i, j| {
            let noise: f64 = rng.random::<f64>() - 0.5;
            if j == 2 {
                labels[i] as f64 * 2.0 - 2.0
            } else {
                noise
            }
        });
        let data = LabeledFeatures::new(x, labels, 3, vec![false; n]).unwrap();
        let model = train_softmax(&data, &TrainConfig::default()).unwrap();
        for c in [0, 2] {
            let row = model.weights.row(c);
            let top = (0..4).max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs())).unwrap();
            assert_eq!(top, 2, "class {c} weights {row:?}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let data = LabeledFeatures::new(x, vec![1, 1], 2, vec![false; 2]).unwrap();
        assert!(train_softmax(&data, &TrainConfig::default()).is_err());
        assert!(SpuriousConfig { alpha: 0.4, n_classes: 10, style: 0, seed: 0 }.validate().is_err());
    }
}
