use std::path::PathBuf;

use pisco_core::pisco::{fit, PiscoFit};

use super::Globals;
use crate::config::{self, FitConfig};
use crate::error::Result;
use crate::formats::{self, DataDir, ProjectionFile, Provenance};
use crate::io;

pub const PROJECTION: &str = "projection.json";

pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let loaded = config::load::<FitConfig>(g.config.as_deref())?;
    let cfg = loaded.config;
    let params = cfg.params();
    params.validate()?;
    let data_dir = io::resolve(&loaded.base_dir, config::require("data", &cfg.data)?);
    let data = DataDir::load(&data_dir)?;
    let out = formats::out_dir(g.out.as_deref())?;

    let fitted = fit(&data.dataset.base, &data.dataset.style_samples(), &params.pisco(cfg.lambda.0))?;
    log_fit(&fitted);

    let provenance = Provenance {
        command: "fit".into(),
        n: data.manifest.n,
        data_seed: data.manifest.seed,
        entangler_seed: data.manifest.entangler.seed,
        manifest_sha256: data.manifest_digest.clone(),
        inputs: data.manifest.files.clone(),
    };
    let path = out.join(PROJECTION);
    io::write_json(&path, &ProjectionFile::new(&fitted.projection, provenance))?;
    log::info!("wrote {}", path.display());
    Ok(vec![path])
}

fn log_fit(f: &PiscoFit<f64>) {
    for s in &f.style_fits {
        log::info!("style `{}`: regression mse = {:.6e}", s.name, s.mse);
    }
    let spec = &f.content.spectrum;
    let k = f.projection.k();
    log::info!(
        "content: lambda = {}, k = {k}, feasible dimension = {}, kept eigenvalues [{:.6e}, {:.6e}], next {}",
        f.projection.lambda(),
        f.content.feasible_dim,
        spec.first().copied().unwrap_or(f64::NAN),
        spec.get(k - 1).copied().unwrap_or(f64::NAN),
        spec.get(k).map_or("none".to_string(), |v| format!("{v:.6e}")),
    );
}
