use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pisco_core::synthetic::{build_entangler, generate_with_mixing};

use super::Globals;
use crate::config::{self, SynthConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, Manifest, SCHEMA_VERSION};
use crate::io;

pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let mut cfg = config::load::<SynthConfig>(g.config.as_deref())?.config;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let out = formats::out_dir(g.out.as_deref())?;
    synthesize(&cfg, &out)
}

/// Writes features, annotations, latents, the mixing map and a manifest into `out`.
pub fn synthesize(cfg: &SynthConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if cfg.n == 0 {
        return Err(CliError::config("n must be at least 1"));
    }
    let latent = cfg.latent.spec();
    latent.validate()?;
    let a = build_entangler::<f64>(&cfg.entangler.spec(), latent.d)?;
    let ds = generate_with_mixing(&latent, &a, cfg.n, cfg.seed)?;
    let gt = ds.ground_truth.as_ref().expect("generated data carries ground truth");
    let names = ds.style_names();
    let fh = formats::feature_headers(ds.d_prime());

    let mut files = BTreeMap::new();
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = out.join(&name);
        files.insert(name, io::write_bytes(&path, &bytes)?);
        written.push(path);
        Ok(())
    };
    put(formats::BASE.into(), io::matrix_csv_bytes(&fh, &ds.base))?;
    for s in &ds.styles {
        put(formats::plus_file(&s.name), io::matrix_csv_bytes(&fh, &s.plus))?;
        put(formats::minus_file(&s.name), io::matrix_csv_bytes(&fh, &s.minus))?;
    }
    let ann_rows = (0..ds.n())
        .map(|i| ds.styles.iter().flat_map(|s| [io::format_float(s.ann_plus[i]), io::format_float(s.ann_minus[i])]).collect());
    put(formats::ANNOTATIONS.into(), io::csv_bytes(&formats::annotation_headers(&names), ann_rows))?;
    put(formats::LATENT.into(), io::matrix_csv_bytes(&formats::latent_headers(latent.d), &gt.latents))?;
    put(formats::MIXING.into(), io::matrix_csv_bytes(&formats::latent_headers(latent.d), &a))?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        description: format!(
            "{}-dimensional latent with {} style coordinates (rho = {}) mixed into {}-dimensional features",
            latent.d,
            latent.m(),
            latent.rho,
            cfg.entangler.d_prime
        ),
        n: cfg.n,
        seed: cfg.seed,
        latent: cfg.latent.clone(),
        entangler: cfg.entangler.clone(),
        style_names: names,
        files,
    };
    let manifest_path = out.join(formats::MANIFEST);
    io::write_json(&manifest_path, &manifest)?;
    written.push(manifest_path);
    log::info!("wrote {} samples ({} files) to {}", cfg.n, written.len(), out.display());
    Ok(written)
}
