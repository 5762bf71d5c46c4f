//! Dataset directories, manifests and projection files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pisco_core::pisco::ProjectionMatrix;
use pisco_core::synthetic::{PairedDataset, StyleManipulation};
use pisco_core::Matrix;

use crate::config::{EntanglerConfig, LambdaValue, LatentConfig};
use crate::error::{CliError, Result};
use crate::io::{self, numbered_headers, read_bytes, sha256_hex};

pub const SCHEMA_VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";
pub const BASE: &str = "base.csv";
pub const ANNOTATIONS: &str = "annotations.csv";
pub const LATENT: &str = "latent.csv";
pub const MIXING: &str = "mixing.csv";

pub fn plus_file(style: &str) -> String {
    format!("{style}_plus.csv")
}

pub fn minus_file(style: &str) -> String {
    format!("{style}_minus.csv")
}

pub fn feature_headers(d_prime: usize) -> Vec<String> {
    numbered_headers("f", d_prime)
}

pub fn latent_headers(d: usize) -> Vec<String> {
    numbered_headers("z", d)
}

/// Annotation columns: `<style>_plus, <style>_minus` per style.
pub fn annotation_headers(styles: &[String]) -> Vec<String> {
    styles.iter().flat_map(|s| [format!("{s}_plus"), format!("{s}_minus")]).collect()
}

/// Written by `synth` next to the data; `files` maps file names to SHA-256 digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub description: String,
    pub n: usize,
    pub seed: u64,
    pub latent: LatentConfig,
    pub entangler: EntanglerConfig,
    pub style_names: Vec<String>,
    pub files: BTreeMap<String, String>,
}

/// A dataset directory loaded after checking every digest in its manifest.
pub struct DataDir {
    pub manifest: Manifest,
    pub manifest_digest: String,
    pub dataset: PairedDataset<f64>,
    pub latents: Option<Matrix<f64>>,
    pub mixing: Option<Matrix<f64>>,
}

impl DataDir {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST);
        let manifest_bytes = read_bytes(&manifest_path)?;
        let manifest: Manifest =
            serde_json::from_slice(&manifest_bytes).map_err(|e| CliError::input(&manifest_path, e.to_string()))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(&manifest_path, format!("unsupported schema version {}", manifest.schema_version)));
        }

        let load = |name: &str| -> Result<Option<io::Table>> {
            let Some(expected) = manifest.files.get(name) else { return Ok(None) };
            let path = dir.join(name);
            let bytes = read_bytes(&path)?;
            let actual = sha256_hex(&bytes);
            if &actual != expected {
                return Err(CliError::DigestMismatch { path, expected: expected.clone(), actual });
            }
            io::parse_table(&path, &bytes).map(Some)
        };
        let required = |name: &str| -> Result<io::Table> {
            load(name)?.ok_or_else(|| CliError::input(&manifest_path, format!("manifest does not list `{name}`")))
        };
        let numbered = |name: &str, t: io::Table, prefix: &str| -> Result<Matrix<f64>> {
            io::check_numbered(&dir.join(name), &t, prefix)?;
            Ok(t.values)
        };

        let base = numbered(BASE, required(BASE)?, "f")?;
        let ann_path = dir.join(ANNOTATIONS);
        let ann = required(ANNOTATIONS)?;
        if ann.headers != annotation_headers(&manifest.style_names) {
            return Err(CliError::input(&ann_path, "annotation columns do not match the manifest's style names"));
        }
        let mut styles = Vec::with_capacity(manifest.style_names.len());
        for (j, name) in manifest.style_names.iter().enumerate() {
            let plus = numbered(&plus_file(name), required(&plus_file(name))?, "f")?;
            let minus = numbered(&minus_file(name), required(&minus_file(name))?, "f")?;
            styles.push(StyleManipulation {
                name: name.clone(),
                index: manifest.latent.style_set.get(j).copied(),
                plus,
                minus,
                ann_plus: ann.values.column(2 * j),
                ann_minus: ann.values.column(2 * j + 1),
            });
        }
        let dataset = PairedDataset::new(base, styles, None).map_err(|e| CliError::input(dir, e.to_string()))?;
        let latents = load(LATENT)?.map(|t| numbered(LATENT, t, "z")).transpose()?;
        let mixing = load(MIXING)?.map(|t| numbered(MIXING, t, "z")).transpose()?;
        Ok(Self { manifest, manifest_digest: sha256_hex(&manifest_bytes), dataset, latents, mixing })
    }
}

/// Where a projection came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub n: usize,
    pub data_seed: u64,
    pub entangler_seed: u64,
    pub manifest_sha256: String,
    /// Input file digests, copied from the manifest that was verified.
    pub inputs: BTreeMap<String, String>,
}

/// `P(λ)` on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionFile {
    pub schema_version: u32,
    pub d_prime: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: LambdaValue,
    pub eta: f64,
    pub style_names: Vec<String>,
    pub style_rows: Vec<Vec<f64>>,
    pub content_rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl ProjectionFile {
    pub fn new(p: &ProjectionMatrix<f64>, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            d_prime: p.d_prime(),
            m: p.m(),
            k: p.k(),
            lambda: LambdaValue(p.lambda()),
            eta: p.eta(),
            style_names: p.style_names().to_vec(),
            style_rows: p.style_rows().to_rows(),
            content_rows: p.content_rows().to_rows(),
            provenance,
        }
    }

    /// Rebuilds the matrix, re-running its validation.
    pub fn projection(&self, path: &Path) -> Result<ProjectionMatrix<f64>> {
        let bad = |reason: String| CliError::input(path, reason);
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema version {}", self.schema_version)));
        }
        if self.style_rows.len() != self.m || self.content_rows.len() != self.k {
            return Err(bad(format!(
                "declares m = {}, k = {} but stores {} style and {} content rows",
                self.m,
                self.k,
                self.style_rows.len(),
                self.content_rows.len()
            )));
        }
        let rows = |r: &[Vec<f64>]| -> Result<Matrix<f64>> {
            if r.iter().any(|row| row.len() != self.d_prime) {
                return Err(bad(format!("every row must have d_prime = {} entries", self.d_prime)));
            }
            Matrix::from_rows(r).map_err(|e| bad(e.to_string()))
        };
        ProjectionMatrix::new(
            rows(&self.style_rows)?,
            rows(&self.content_rows)?,
            self.lambda.0,
            self.eta,
            self.style_names.clone(),
        )
        .map_err(|e| bad(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<(Self, ProjectionMatrix<f64>)> {
        let file: Self = io::read_json(path)?;
        let p = file.projection(path)?;
        Ok((file, p))
    }
}

/// Output location for a command: `--out` or the current directory.
pub fn out_dir(out: Option<&Path>) -> Result<PathBuf> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    io::ensure_dir(&dir)?;
    Ok(dir)
}
