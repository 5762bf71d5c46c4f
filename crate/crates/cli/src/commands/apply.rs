use std::path::PathBuf;

use pisco_core::pisco::transform;
use pisco_core::Matrix;

use super::Globals;
use crate::config::{self, ApplyConfig};
use crate::error::Result;
use crate::formats::{self, ProjectionFile};
use crate::io;

pub const FACTORS: &str = "factors.csv";
pub const CONTENT: &str = "content.csv";

/// Maps a feature CSV through a stored projection.
///
/// `factors.csv` holds one column per style followed by `content0..`;
/// `content.csv` (with `content_only`) holds just the content columns.
pub fn run(g: &Globals) -> Result<Vec<PathBuf>> {
    let loaded = config::load::<ApplyConfig>(g.config.as_deref())?;
    let cfg = loaded.config;
    let proj_path = io::resolve(&loaded.base_dir, config::require("projection", &cfg.projection)?);
    let feat_path = io::resolve(&loaded.base_dir, config::require("features", &cfg.features)?);
    let (_, p) = ProjectionFile::read(&proj_path)?;
    let features = io::read_numbered(&feat_path, "f")?;
    let out = formats::out_dir(g.out.as_deref())?;

    let factors = transform(&p, &features)?;
    let content_headers = io::numbered_headers("content", p.k());
    let (name, bytes) = if cfg.content_only {
        (CONTENT, io::matrix_csv_bytes(&content_headers, &factors.content_factors))
    } else {
        let n = features.nrows();
        let both = Matrix::from_fn(n, p.m() + p.k(), |i, j| {
            if j < p.m() {
                factors.style_factors[(i, j)]
            } else {
                factors.content_factors[(i, j - p.m())]
            }
        });
        let mut headers = p.style_names().to_vec();
        headers.extend(content_headers);
        (FACTORS, io::matrix_csv_bytes(&headers, &both))
    };
    let path = out.join(name);
    io::write_bytes(&path, &bytes)?;
    log::info!("wrote {} rows to {}", features.nrows(), path.display());
    Ok(vec![path])
}
