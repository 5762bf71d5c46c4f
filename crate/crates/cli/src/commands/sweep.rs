//! Full-factorial (λ, ρ, seed) study of the recovery metrics.

use std::path::PathBuf;

use rayon::prelude::*;

use pisco_core::metrics::{full_report, summarize};
use pisco_core::pisco::{content_inputs, fit_styles, fit_with_styles};
use pisco_core::synthetic::{build_entangler, generate_with_mixing};
use pisco_core::Lambda;

use super::Globals;
use crate::config::{self, SweepConfig};
use crate::error::{CliError, Result};
use crate::formats;
use crate::io::{self, format_float};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SUMMARY_CSV: &str = "sweep_summary.csv";

pub const COLUMNS: [&str; 8] = ["lambda", "rho", "seed", "style_recovery", "scd", "t1_max", "t2_null", "t2_min_sv"];
pub const SUMMARY_COLUMNS: [&str; 8] =
    ["lambda", "rho", "style_recovery_median", "style_recovery_q1", "style_recovery_q3", "scd_median", "scd_q1", "scd_q3"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: Lambda,
    pub rho: f64,
    pub seed: u64,
    pub style_recovery: f64,
    pub scd: f64,
    pub t1_max: f64,
    pub t2_null: f64,
    pub t2_min_sv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub lambda: Lambda,
    pub rho: f64,
    pub style_recovery: pisco_core::metrics::Summary,
    pub scd: pisco_core::metrics::Summary,
}

pub fn validate(cfg: &SweepConfig) -> Result<()> {
    cfg.params().validate()?;
    if cfg.n == 0 || cfg.repetitions == 0 {
        return Err(CliError::config("n and repetitions must be at least 1"));
    }
    if cfg.lambdas.is_empty() || cfg.rhos.is_empty() {
        return Err(CliError::config("lambdas and rhos must be nonempty"));
    }
    for &rho in &cfg.rhos {
        cfg.latent(rho).validate()?;
    }
    Ok(())
}

/// Rows in (λ, ρ, seed) order.
///
/// Each (ρ, seed) cell draws one dataset and fits the style directions once;
/// every λ then reuses them, so style metrics differ across λ only through
/// the content rows. Cells run on the current rayon pool.
pub fn compute(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    validate(cfg)?;
    let cells: Vec<(f64, u64)> =
        cfg.rhos.iter().flat_map(|&rho| (0..cfg.repetitions as u64).map(move |r| (rho, cfg.seed.wrapping_add(r)))).collect();
    let per_cell: Vec<Vec<SweepRow>> = cells.par_iter().map(|&(rho, seed)| run_cell(cfg, rho, seed)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(cells.len() * cfg.lambdas.len());
    for li in 0..cfg.lambdas.len() {
        rows.extend(per_cell.iter().map(|cell| cell[li].clone()));
    }
    Ok(rows)
}

fn run_cell(cfg: &SweepConfig, rho: f64, seed: u64) -> Result<Vec<SweepRow>> {
    let latent = cfg.latent(rho);
    let a = build_entangler::<f64>(&cfg.entangler(seed), latent.d)?;
    let ds = generate_with_mixing(&latent, &a, cfg.n, seed)?;
    let params = cfg.params();
    let samples = ds.style_samples();
    let style_fits = fit_styles(&ds.base, &samples, &params.pisco(Lambda::Infinite))?;
    let inputs = content_inputs(&ds.base, &samples)?;
    cfg.lambdas
        .iter()
        .map(|l| {
            let fitted = fit_with_styles(&inputs, style_fits.clone(), &params.pisco(l.0))?;
            let r = full_report(&ds, &fitted.projection, &a)?;
            Ok(SweepRow {
                lambda: l.0,
                rho,
                seed,
                style_recovery: r.style_recovery_discrepancy,
                scd: r.scd,
                t1_max: r.t1_max(),
                t2_null: r.content_null_residual,
                t2_min_sv: r.content_min_sv,
            })
        })
        .collect()
}

/// Median and IQR per (λ, ρ), in first-appearance order.
pub fn summarize_rows(rows: &[SweepRow]) -> Result<Vec<SummaryRow>> {
    let mut keys: Vec<(Lambda, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(l, rho)| l == r.lambda && rho == r.rho) {
            keys.push((r.lambda, r.rho));
        }
    }
    keys.into_iter()
        .map(|(lambda, rho)| {
            let cell: Vec<&SweepRow> = rows.iter().filter(|r| r.lambda == lambda && r.rho == rho).collect();
            let style: Vec<f64> = cell.iter().map(|r| r.style_recovery).collect();
            let scd: Vec<f64> = cell.iter().map(|r| r.scd).collect();
            Ok(SummaryRow { lambda, rho, style_recovery: summarize(&style)?, scd: summarize(&scd)? })
        })
        .collect()
}

pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let mut cfg = config::load::<SweepConfig>(g.config.as_deref())?.config;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let out = formats::out_dir(g.out.as_deref())?;
    let rows = compute(&cfg)?;
    let summary = summarize_rows(&rows)?;

    let headers: Vec<String> = COLUMNS.iter().map(|s| s.to_string()).collect();
    let body = rows.iter().map(|r| {
        vec![
            r.lambda.to_string(),
            r.rho.to_string(),
            r.seed.to_string(),
            format_float(r.style_recovery),
            format_float(r.scd),
            format_float(r.t1_max),
            format_float(r.t2_null),
            format_float(r.t2_min_sv),
        ]
    });
    let sweep_path = out.join(SWEEP_CSV);
    io::write_bytes(&sweep_path, &io::csv_bytes(&headers, body))?;

    let headers: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    let body = summary.iter().map(|s| {
        log::info!(
            "lambda = {}, rho = {}: style recovery median {:.4e}, scd median {:.4e}",
            s.lambda,
            s.rho,
            s.style_recovery.median,
            s.scd.median
        );
        vec![
            s.lambda.to_string(),
            s.rho.to_string(),
            format_float(s.style_recovery.median),
            format_float(s.style_recovery.q1),
            format_float(s.style_recovery.q3),
            format_float(s.scd.median),
            format_float(s.scd.q1),
            format_float(s.scd.q3),
        ]
    });
    let summary_path = out.join(SUMMARY_CSV);
    io::write_bytes(&summary_path, &io::csv_bytes(&headers, body))?;
    Ok(vec![sweep_path, summary_path])
}
