//! Linear post-processing that splits entangled feature vectors into style
//! factors (one regression direction per style) and content factors (an
//! orthonormal subspace that is invariant to style manipulations).
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which every tolerance in this crate
//! is tuned for.

pub mod downstream;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pisco;
pub mod scalar;
pub mod synthetic;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use pisco::{Lambda, PiscoConfig};
pub use scalar::Scalar;

pub type DenseMatrix = Matrix<f64>;
pub type EigenResult = linalg::EigenResult<f64>;
pub type StyleFit = pisco::StyleFit<f64>;
pub type ProjectionMatrix = pisco::ProjectionMatrix<f64>;
pub type FactorizedFeatures = pisco::FactorizedFeatures<f64>;
pub type PairedDataset = synthetic::PairedDataset<f64>;
pub type DisentangleReport = metrics::DisentangleReport<f64>;
pub type LabeledFeatures = downstream::LabeledFeatures<f64>;
pub type ClassifierModel = downstream::ClassifierModel<f64>;

pub type DenseMatrixF32 = Matrix<f32>;
pub type ProjectionMatrixF32 = pisco::ProjectionMatrix<f32>;
