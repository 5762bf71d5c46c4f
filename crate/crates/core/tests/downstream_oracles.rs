mod common;

use common::*;
use pisco_core::downstream::{
    build_spurious_split, content_labels, evaluate, loss_and_gradient, spurious_experiment, train_softmax, LabeledFeatures,
    SpuriousConfig, TrainConfig,
};
use pisco_core::linalg::seeded_rng;
use pisco_core::synthetic::{generate, EntanglerSpec, LatentSpec};
use pisco_core::{Error, Matrix, PairedDataset};
use rand::seq::SliceRandom;

fn dataset(n: usize, seed: u64) -> (PairedDataset, Vec<usize>) {
    let latent = LatentSpec::default();
    let ds: PairedDataset = generate(&latent, &EntanglerSpec::default(), n, seed).unwrap();
    let z = &ds.ground_truth.as_ref().unwrap().latents;
    let labels = content_labels(z, &latent.content_set(), 10, seed + 1).unwrap();
    (ds, labels)
}

fn split(alpha: f64, seed: u64) -> SpuriousConfig {
    SpuriousConfig { alpha, n_classes: 10, style: 0, seed }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let (ds, labels) = dataset(300, 3);
    let data: LabeledFeatures<f64> = LabeledFeatures::new(ds.base.clone(), labels, 10, vec![false; 300]).unwrap();
    let l2 = 1e-4;
    let h = 1e-5;
    for point in 0..5u64 {
        let w = gaussian(10, 10, 900 + point).scale(0.3);
        let b = gaussian(1, 10, 950 + point).scale(0.3).into_vec();
        let (_, gw, gb) = loss_and_gradient(&w, &b, &data, l2).unwrap();
        let loss_at = |w: &Matrix<f64>, b: &[f64]| loss_and_gradient(w, b, &data, l2).unwrap().0;

        let mut analytic = gw.as_slice().to_vec();
        analytic.extend(&gb);
        let mut numeric = Vec::with_capacity(analytic.len());
        for idx in 0..100 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[(idx / 10, idx % 10)] += h;
            wm[(idx / 10, idx % 10)] -= h;
            numeric.push((loss_at(&wp, &b) - loss_at(&wm, &b)) / (2.0 * h));
        }
        for c in 0..10 {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[c] += h;
            bm[c] -= h;
            numeric.push((loss_at(&w, &bp) - loss_at(&w, &bm)) / (2.0 * h));
        }
        let diff = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        assert!(diff / scale <= 1e-5, "point {point}: relative error {:e}", diff / scale);
    }
}

#[test]
fn first_half_manipulation_rate_is_binomial() {
    let (ds, labels) = dataset(2000, 5);
    for alpha in [0.5, 0.75, 0.9] {
        let (train, test) = build_spurious_split(&ds, &labels, &split(alpha, 11)).unwrap();
        let rate = |d: &LabeledFeatures<f64>, first: bool| {
            let rows: Vec<bool> = (0..d.len()).filter(|&i| (d.labels[i] < 5) == first).map(|i| d.transformed[i]).collect();
            (rows.iter().filter(|&&t| t).count() as f64 / rows.len() as f64, rows.len() as f64)
        };
        let (r, n) = rate(&train, true);
        let se = (alpha * (1.0 - alpha) / n).sqrt();
        assert!((r - alpha).abs() < 3.0 * se, "alpha {alpha}: train first-half rate {r}");
        let (r, n) = rate(&train, false);
        assert!((r - (1.0 - alpha)).abs() < 3.0 * (alpha * (1.0 - alpha) / n).sqrt());
        let (r, n) = rate(&test, true);
        assert!((r - (1.0 - alpha)).abs() < 3.0 * (alpha * (1.0 - alpha) / n).sqrt());
    }
}

#[test]
fn balanced_split_has_the_same_rate_everywhere() {
    let (ds, labels) = dataset(2000, 5);
    let (train, test) = build_spurious_split(&ds, &labels, &split(0.5, 2)).unwrap();
    for d in [&train, &test] {
        for c in 0..10 {
            let rows: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == c).collect();
            let rate = rows.iter().filter(|&&i| d.transformed[i]).count() as f64 / rows.len() as f64;
            let se = (0.25 / rows.len() as f64).sqrt();
            assert!((rate - 0.5).abs() < 4.0 * se, "class {c}: {rate}");
        }
    }
}

#[test]
fn extreme_split_is_fully_determined_by_the_label() {
    let (ds, labels) = dataset(1000, 8);
    let (train, test) = build_spurious_split(&ds, &labels, &split(1.0, 4)).unwrap();
    for i in 0..train.len() {
        assert_eq!(train.transformed[i], train.labels[i] < 5);
    }
    for i in 0..test.len() {
        assert_eq!(test.transformed[i], test.labels[i] >= 5);
    }
    // The transformed rows really carry the manipulated features.
    let plus = &ds.styles[0].plus;
    let row = train.features.row(train.transformed.iter().position(|&t| t).unwrap());
    assert!((0..ds.n()).any(|i| plus.row(i) == row));
}

#[test]
fn split_is_deterministic_and_masks_are_independent() {
    let (ds, labels) = dataset(1000, 9);
    let a = build_spurious_split(&ds, &labels, &split(0.75, 3)).unwrap();
    assert_eq!(a, build_spurious_split(&ds, &labels, &split(0.75, 3)).unwrap());
    assert_ne!(a, build_spurious_split(&ds, &labels, &split(0.75, 4)).unwrap());
    let agree = a.0.transformed.iter().zip(&a.1.transformed).filter(|(x, y)| x == y).count() as f64 / 500.0;
    assert!((0.3..0.7).contains(&agree), "train/test masks agree on {agree}");
}

#[test]
fn empty_training_class_is_an_invalid_split() {
    let (ds, mut labels) = dataset(200, 1);
    labels.iter_mut().for_each(|l| *l = (*l).min(8));
    assert!(matches!(build_spurious_split(&ds, &labels, &split(0.5, 0)), Err(Error::InvalidSplit(_))));
}

#[test]
fn labels_cover_every_class() {
    let (_, labels) = dataset(2000, 5);
    let mut counts = [0usize; 10];
    labels.iter().for_each(|&l| counts[l] += 1);
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn training_beats_a_label_permutation_control() {
    let (ds, labels) = dataset(1000, 2);
    let (train, _) = build_spurious_split(&ds, &labels, &split(0.5, 1)).unwrap();
    let cfg = TrainConfig::default();
    let model = train_softmax(&train, &cfg).unwrap();
    assert!(model.loss_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(model.weights.is_finite() && model.bias.iter().all(|b| b.is_finite()));
    let real = evaluate(&model, &train).unwrap();

    let mut shuffled = train.labels.clone();
    shuffled.shuffle(&mut seeded_rng(77));
    let control = LabeledFeatures::new(train.features.clone(), shuffled, 10, train.transformed.clone()).unwrap();
    let control_model = train_softmax(&control, &cfg).unwrap();
    assert!(real >= evaluate(&control_model, &control).unwrap());
}

#[test]
fn experiment_reports_every_alpha_in_order() {
    let (ds, labels) = dataset(400, 4);
    let cfg = TrainConfig { iters: 50, ..TrainConfig::default() };
    let out = spurious_experiment(&ds, &labels, &split(0.5, 0), &[0.5, 1.0], 2, None, &cfg).unwrap();
    assert_eq!(out.iter().map(|o| o.alpha).collect::<Vec<_>>(), vec![0.5, 1.0]);
    assert!(out.iter().all(|o| o.accuracies.len() == 2 && o.seeds == vec![0, 1]));
    assert!(out.iter().all(|o| (0.0..=1.0).contains(&o.mean())));
}
