//! JSON run configurations. Every struct rejects unknown keys and every field
//! has a default, so `{}` is a complete config wherever no input path is needed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pisco_core::downstream::{TrainConfig, DEFAULT_ALPHAS, DEFAULT_RESTARTS};
use pisco_core::linalg::DEFAULT_PINV_TOL;
use pisco_core::pisco::{DEFAULT_ETA, DEFAULT_NULL_TOL};
use pisco_core::synthetic::{EntanglerSpec, LatentSpec};
use pisco_core::{Lambda, PiscoConfig};

use crate::error::{CliError, Result};
use crate::io::read_bytes;

/// `λ` as it appears in JSON: a non-negative number or the token `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLambda", into = "RawLambda")]
pub struct LambdaValue(pub Lambda);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawLambda {
    Number(f64),
    Token(String),
}

impl TryFrom<RawLambda> for LambdaValue {
    type Error = String;

    fn try_from(raw: RawLambda) -> std::result::Result<Self, String> {
        match raw {
            RawLambda::Number(v) => Lambda::finite(v).map(LambdaValue).map_err(|e| e.to_string()),
            RawLambda::Token(t) if t == "inf" => Ok(LambdaValue(Lambda::Infinite)),
            RawLambda::Token(t) => Err(format!("lambda must be a number or \"inf\", got {t:?}")),
        }
    }
}

impl From<LambdaValue> for RawLambda {
    fn from(v: LambdaValue) -> Self {
        match v.0 {
            Lambda::Finite(x) => RawLambda::Number(x),
            Lambda::Infinite => RawLambda::Token("inf".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentConfig {
    pub d: usize,
    pub style_set: Vec<usize>,
    pub rho: f64,
    pub annotation_noise_std: f64,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentSpec::default().into()
    }
}

impl From<LatentSpec> for LatentConfig {
    fn from(s: LatentSpec) -> Self {
        Self { d: s.d, style_set: s.style_set, rho: s.rho, annotation_noise_std: s.annotation_noise_std }
    }
}

impl LatentConfig {
    pub fn spec(&self) -> LatentSpec {
        LatentSpec {
            d: self.d,
            style_set: self.style_set.clone(),
            rho: self.rho,
            annotation_noise_std: self.annotation_noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntanglerConfig {
    pub d_prime: usize,
    pub offdiag: f64,
    pub seed: u64,
}

impl Default for EntanglerConfig {
    fn default() -> Self {
        let s = EntanglerSpec::default();
        Self { d_prime: s.d_prime, offdiag: s.offdiag, seed: s.seed }
    }
}

impl EntanglerConfig {
    pub fn spec(&self) -> EntanglerSpec {
        EntanglerSpec { d_prime: self.d_prime, offdiag: self.offdiag, seed: self.seed }
    }
}

/// Fit parameters shared by `fit`, `sweep` and `spurious`; each config
/// carries them as top-level keys.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    /// Content rank; `None` derives it from `eta`.
    pub k: Option<usize>,
    pub eta: f64,
    pub pinv_tol: f64,
    pub null_tol: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self { k: None, eta: DEFAULT_ETA, pinv_tol: DEFAULT_PINV_TOL, null_tol: DEFAULT_NULL_TOL }
    }
}

impl FitParams {
    pub fn pisco(&self, lambda: Lambda) -> PiscoConfig {
        PiscoConfig { lambda, k: self.k, eta: self.eta, pinv_tol: self.pinv_tol, null_tol: self.null_tol }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(CliError::config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.pinv_tol > 0.0 && self.pinv_tol < 1.0) || !(self.null_tol > 0.0 && self.null_tol < 1.0) {
            return Err(CliError::config("pinv_tol and null_tol must lie in (0, 1)"));
        }
        if self.k == Some(0) {
            return Err(CliError::config("k must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub latent: LatentConfig,
    pub entangler: EntanglerConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 900, seed: 0, latent: LatentConfig::default(), entangler: EntanglerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Directory written by `synth`.
    pub data: Option<PathBuf>,
    pub lambda: LambdaValue,
    /// Content rank; `null` derives it from `eta`.
    pub k: Option<usize>,
    pub eta: f64,
    pub pinv_tol: f64,
    pub null_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            lambda: LambdaValue(Lambda::Infinite),
            k: None,
            eta: DEFAULT_ETA,
            pinv_tol: DEFAULT_PINV_TOL,
            null_tol: DEFAULT_NULL_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApplyConfig {
    pub projection: Option<PathBuf>,
    /// Feature CSV with columns `f0..`.
    pub features: Option<PathBuf>,
    /// Emit only the content factors.
    pub content_only: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub data: Option<PathBuf>,
    pub projection: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub lambdas: Vec<LambdaValue>,
    pub rhos: Vec<f64>,
    pub repetitions: usize,
    /// Repetition `r` uses `seed + r` for both the mixing map and the sample.
    pub seed: u64,
    pub d: usize,
    pub style_set: Vec<usize>,
    pub annotation_noise_std: f64,
    pub d_prime: usize,
    pub offdiag: f64,
    /// Content rank; `null` derives it from `eta`.
    pub k: Option<usize>,
    pub eta: f64,
    pub pinv_tol: f64,
    pub null_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let latent = LatentSpec::default();
        let ent = EntanglerSpec::default();
        Self {
            n: 900,
            lambdas: [1.0, 10.0, 100.0, 1e3, 1e4].iter().map(|&l| LambdaValue(Lambda::Finite(l))).collect(),
            rhos: vec![0.0, 0.3, 0.6, 0.9],
            repetitions: 50,
            seed: 0,
            d: latent.d,
            style_set: latent.style_set,
            annotation_noise_std: latent.annotation_noise_std,
            d_prime: ent.d_prime,
            offdiag: ent.offdiag,
            k: None,
            eta: DEFAULT_ETA,
            pinv_tol: DEFAULT_PINV_TOL,
            null_tol: DEFAULT_NULL_TOL,
        }
    }
}

impl SweepConfig {
    pub fn latent(&self, rho: f64) -> LatentSpec {
        LatentSpec { d: self.d, style_set: self.style_set.clone(), rho, annotation_noise_std: self.annotation_noise_std }
    }

    pub fn entangler(&self, seed: u64) -> EntanglerSpec {
        EntanglerSpec { d_prime: self.d_prime, offdiag: self.offdiag, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub lr: f64,
    pub iters: usize,
    pub l2: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self { lr: t.lr, iters: t.iters, l2: t.l2 }
    }
}

impl TrainSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig { lr: self.lr, iters: self.iters, l2: self.l2, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpuriousRunConfig {
    pub n: usize,
    /// Drives the sample; labels and splits use seeds derived from it.
    pub seed: u64,
    pub n_classes: usize,
    /// Position of the label-correlated style within the style set.
    pub style: usize,
    pub alphas: Vec<f64>,
    pub restarts: usize,
    /// Penalty of the finite-λ variant; the exact variant is always included.
    pub lambda: f64,
    pub latent: LatentConfig,
    pub entangler: EntanglerConfig,
    /// Content rank; `null` derives it from `eta`.
    pub k: Option<usize>,
    pub eta: f64,
    pub pinv_tol: f64,
    pub null_tol: f64,
    pub train: TrainSettings,
}

impl Default for SpuriousRunConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            seed: 0,
            n_classes: 10,
            style: 0,
            alphas: DEFAULT_ALPHAS.to_vec(),
            restarts: DEFAULT_RESTARTS,
            lambda: 100.0,
            latent: LatentConfig::default(),
            entangler: EntanglerConfig::default(),
            k: None,
            eta: DEFAULT_ETA,
            pinv_tol: DEFAULT_PINV_TOL,
            null_tol: DEFAULT_NULL_TOL,
            train: TrainSettings::default(),
        }
    }
}

macro_rules! fit_params {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn params(&self) -> FitParams {
                FitParams { k: self.k, eta: self.eta, pinv_tol: self.pinv_tol, null_tol: self.null_tol }
            }
        }
    )*};
}

fit_params!(FitConfig, SweepConfig, SpuriousRunConfig);

/// A parsed config plus the directory its relative paths are resolved against.
pub struct Loaded<T> {
    pub config: T,
    pub base_dir: PathBuf,
}

/// Reads `path` as JSON, or returns the defaults when no file is given.
pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<Loaded<T>> {
    match path {
        None => Ok(Loaded { config: T::default(), base_dir: PathBuf::from(".") }),
        Some(p) => {
            let bytes = read_bytes(p)?;
            let config = serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            let base_dir = p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            Ok(Loaded { config, base_dir })
        }
    }
}

pub fn require<'a>(field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::config(format!("missing required field `{field}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_accepts_numbers_and_inf_only() {
        let v: LambdaValue = serde_json::from_str("100").unwrap();
        assert_eq!(v.0, Lambda::Finite(100.0));
        let v: LambdaValue = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(v.0, Lambda::Infinite);
        assert!(serde_json::from_str::<LambdaValue>("\"infinity\"").is_err());
        assert!(serde_json::from_str::<LambdaValue>("-1").is_err());
        assert_eq!(serde_json::to_string(&LambdaValue(Lambda::Infinite)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&LambdaValue(Lambda::Finite(0.5))).unwrap(), "0.5");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<SynthConfig>(r#"{"n": 10, "sede": 3}"#).is_err());
        assert!(serde_json::from_str::<SynthConfig>(r#"{"latent": {"rh": 0.5}}"#).is_err());
        assert!(serde_json::from_str::<FitConfig>(r#"{"lamda": 1}"#).is_err());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"etaa": 1}"#).is_err());
    }

    #[test]
    fn empty_object_gives_defaults() {
        let c: SynthConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, SynthConfig::default());
        let f: FitConfig = serde_json::from_str(r#"{"lambda": "inf", "k": 5}"#).unwrap();
        assert_eq!(f.k, Some(5));
        assert_eq!(f.lambda.0, Lambda::Infinite);
    }
}
