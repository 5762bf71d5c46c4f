use std::path::PathBuf;

use serde::Serialize;

use pisco_core::metrics::{report_from_parts, DisentangleReport};
use pisco_core::synthetic::SIGN_ANNOTATION_SLOPE;

use super::Globals;
use crate::config::{self, EvalConfig, LambdaValue};
use crate::error::{CliError, Result};
use crate::formats::{self, DataDir, ProjectionFile};
use crate::io::{self, format_float};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

pub const CSV_COLUMNS: [&str; 9] =
    ["lambda", "k", "style_recovery", "scd", "corr_recovery", "t1_max", "t2_null", "t2_min_sv", "degenerate"];

#[derive(Debug, Serialize)]
struct ReportFile {
    lambda: LambdaValue,
    k: usize,
    style_names: Vec<String>,
    style_recovery_discrepancy: f64,
    scd: f64,
    per_style_corr: Vec<f64>,
    corr_recovery_residual: f64,
    direction_residual: Vec<f64>,
    t1_max: f64,
    content_null_residual: f64,
    content_min_sv: f64,
    degenerate: bool,
}

pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let loaded = config::load::<EvalConfig>(g.config.as_deref())?;
    let cfg = loaded.config;
    let data_dir = io::resolve(&loaded.base_dir, config::require("data", &cfg.data)?);
    let proj_path = io::resolve(&loaded.base_dir, config::require("projection", &cfg.projection)?);
    let data = DataDir::load(&data_dir)?;
    let (_, p) = ProjectionFile::read(&proj_path)?;
    let (Some(latents), Some(mixing)) = (&data.latents, &data.mixing) else {
        return Err(CliError::config(format!(
            "{} has no ground truth: eval needs `{}` and `{}` listed in its manifest",
            data_dir.display(),
            formats::LATENT,
            formats::MIXING
        )));
    };
    if p.style_names() != data.manifest.style_names.as_slice() {
        return Err(CliError::config("projection and data name different styles"));
    }
    let beta = vec![SIGN_ANNOTATION_SLOPE; p.m()];
    let r = report_from_parts(&data.dataset.base, latents, &data.manifest.latent.style_set, &p, mixing, &beta)?;
    if r.degenerate {
        log::warn!("a correlation input had a constant column; affected entries are reported as 0");
    }

    let out = formats::out_dir(g.out.as_deref())?;
    let json_path = out.join(REPORT_JSON);
    io::write_json(&json_path, &report_file(&r, LambdaValue(p.lambda()), p.k(), p.style_names().to_vec()))?;
    let csv_path = out.join(REPORT_CSV);
    let headers: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    let row = vec![
        p.lambda().to_string(),
        p.k().to_string(),
        format_float(r.style_recovery_discrepancy),
        format_float(r.scd),
        format_float(r.corr_recovery_residual),
        format_float(r.t1_max()),
        format_float(r.content_null_residual),
        format_float(r.content_min_sv),
        r.degenerate.to_string(),
    ];
    io::write_bytes(&csv_path, &io::csv_bytes(&headers, [row]))?;
    log::info!("style recovery {:.4e}, scd {:.4e}", r.style_recovery_discrepancy, r.scd);
    Ok(vec![json_path, csv_path])
}

fn report_file(r: &DisentangleReport<f64>, lambda: LambdaValue, k: usize, style_names: Vec<String>) -> ReportFile {
    ReportFile {
        lambda,
        k,
        style_names,
        style_recovery_discrepancy: r.style_recovery_discrepancy,
        scd: r.scd,
        per_style_corr: r.per_style_corr.clone(),
        corr_recovery_residual: r.corr_recovery_residual,
        direction_residual: r.direction_residual.clone(),
        t1_max: r.t1_max(),
        content_null_residual: r.content_null_residual,
        content_min_sv: r.content_min_sv,
        degenerate: r.degenerate,
    }
}
