pub mod apply;
pub mod eval;
pub mod fit;
pub mod spurious;
pub mod sweep;
pub mod synth;

use std::path::PathBuf;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Overrides the config's seed where the command has one.
    pub seed: Option<u64>,
}
