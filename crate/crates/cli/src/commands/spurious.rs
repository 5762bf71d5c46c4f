//! Label-correlated style manipulation: raw features versus content factors.

use std::path::PathBuf;

use rayon::prelude::*;

use pisco_core::downstream::{content_labels, spurious_trial, SpuriousConfig};
use pisco_core::linalg::derive_seed;
use pisco_core::metrics::spearman;
use pisco_core::pisco::{fit_dataset, ProjectionMatrix};
use pisco_core::synthetic::{build_entangler, generate_with_mixing};
use pisco_core::Lambda;

use super::Globals;
use crate::config::{self, SpuriousRunConfig};
use crate::error::{CliError, Result};
use crate::formats;
use crate::io::{self, format_float};

pub const SPURIOUS_CSV: &str = "spurious.csv";
pub const SUMMARY_CSV: &str = "spurious_summary.csv";
pub const COLUMNS: [&str; 4] = ["alpha", "seed", "variant", "accuracy"];

const LABEL_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousRow {
    pub alpha: f64,
    pub seed: u64,
    pub variant: String,
    pub accuracy: f64,
}

/// Mean accuracy of one (α, variant) pair over restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousMean {
    pub alpha: f64,
    pub variant: String,
    pub mean: f64,
}

pub fn validate(cfg: &SpuriousRunConfig) -> Result<()> {
    cfg.params().validate()?;
    if cfg.n < 2 || cfg.restarts == 0 || cfg.alphas.is_empty() {
        return Err(CliError::config("need n >= 2, restarts >= 1 and a nonempty alpha grid"));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) {
        return Err(CliError::config(format!(
            "lambda is the finite-penalty variant and must be a finite number >= 0, got {}",
            cfg.lambda
        )));
    }
    for &alpha in &cfg.alphas {
        SpuriousConfig { alpha, n_classes: cfg.n_classes, style: cfg.style, seed: 0 }.validate()?;
    }
    if cfg.style >= cfg.latent.style_set.len() {
        return Err(CliError::config(format!(
            "style {} is outside the {} configured styles",
            cfg.style,
            cfg.latent.style_set.len()
        )));
    }
    Ok(())
}

pub fn variant_names(cfg: &SpuriousRunConfig) -> [String; 3] {
    ["raw".into(), format!("pisco-{}", Lambda::Finite(cfg.lambda)), format!("pisco-{}", Lambda::Infinite)]
}

/// Rows ordered by α, then restart, then variant (raw, finite λ, exact).
///
/// One dataset is drawn and both projections are fitted on all of its paired
/// samples; labels and the per-restart splits use seeds derived from `seed`.
pub fn compute(cfg: &SpuriousRunConfig) -> Result<Vec<SpuriousRow>> {
    validate(cfg)?;
    let latent = cfg.latent.spec();
    let a = build_entangler::<f64>(&cfg.entangler.spec(), latent.d)?;
    let ds = generate_with_mixing(&latent, &a, cfg.n, cfg.seed)?;
    let latents = &ds.ground_truth.as_ref().expect("generated data carries ground truth").latents;
    let labels = content_labels(latents, &latent.content_set(), cfg.n_classes, derive_seed(cfg.seed, LABEL_STREAM))?;

    let params = cfg.params();
    let p_finite = fit_dataset(&ds, &params.pisco(Lambda::Finite(cfg.lambda)))?.projection;
    let p_inf = fit_dataset(&ds, &params.pisco(Lambda::Infinite))?.projection;
    let names = variant_names(cfg);
    let projections: [Option<&ProjectionMatrix<f64>>; 3] = [None, Some(&p_finite), Some(&p_inf)];

    let split_base = derive_seed(cfg.seed, SPLIT_STREAM);
    let cells: Vec<(f64, u64, usize)> = cfg
        .alphas
        .iter()
        .flat_map(|&alpha| {
            (0..cfg.restarts as u64).flat_map(move |r| (0..3).map(move |v| (alpha, split_base.wrapping_add(r), v)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, seed, v)| {
            let split = SpuriousConfig { alpha, n_classes: cfg.n_classes, style: cfg.style, seed };
            let accuracy = spurious_trial(&ds, &labels, &split, projections[v], &cfg.train.train_config(seed))?;
            Ok(SpuriousRow { alpha, seed, variant: names[v].clone(), accuracy })
        })
        .collect()
}

/// Per-(α, variant) means in row order.
pub fn means(rows: &[SpuriousRow]) -> Vec<SpuriousMean> {
    let mut out: Vec<SpuriousMean> = Vec::new();
    for r in rows {
        if out.iter().any(|m| m.alpha == r.alpha && m.variant == r.variant) {
            continue;
        }
        let acc: Vec<f64> = rows.iter().filter(|x| x.alpha == r.alpha && x.variant == r.variant).map(|x| x.accuracy).collect();
        out.push(SpuriousMean { alpha: r.alpha, variant: r.variant.clone(), mean: acc.iter().sum::<f64>() / acc.len() as f64 });
    }
    out
}

pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let mut cfg = config::load::<SpuriousRunConfig>(g.config.as_deref())?.config;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let out = formats::out_dir(g.out.as_deref())?;
    let rows = compute(&cfg)?;

    let headers: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    let body = rows.iter().map(|r| vec![r.alpha.to_string(), r.seed.to_string(), r.variant.clone(), format_float(r.accuracy)]);
    let rows_path = out.join(SPURIOUS_CSV);
    io::write_bytes(&rows_path, &io::csv_bytes(&headers, body))?;

    let means = means(&rows);
    let headers = vec!["alpha".to_string(), "variant".into(), "mean_accuracy".into()];
    let body = means.iter().map(|m| vec![m.alpha.to_string(), m.variant.clone(), format_float(m.mean)]);
    let summary_path = out.join(SUMMARY_CSV);
    io::write_bytes(&summary_path, &io::csv_bytes(&headers, body))?;

    for name in variant_names(&cfg) {
        let (alphas, acc): (Vec<f64>, Vec<f64>) = means.iter().filter(|m| m.variant == name).map(|m| (m.alpha, m.mean)).unzip();
        let trend =
            if alphas.len() >= 2 { spearman(&alphas, &acc).map(|s| format!("{s:.3}")).unwrap_or_default() } else { "n/a".into() };
        log::info!(
            "{name}: mean accuracy {:?}, Spearman trend over alpha {trend}",
            acc.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()
        );
    }
    Ok(vec![rows_path, summary_path])
}
