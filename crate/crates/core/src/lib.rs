//! Regularized low-rank matrix-variate regression.
//!
//! Fits coefficient pairs `(C, γ)` of the model
//!
//! ```text
//! y_i = ⟨X_i, C⟩ + zᵢᵀγ + εᵢ          (regression)
//! y_i ~ Bernoulli(σ(⟨X_i, C⟩ + zᵢᵀγ))   (classification)
//! ```
//!
//! under a hard rank constraint `rank(C) = r` and an elementwise ℓ1 penalty
//! on `C`, by alternating projected gradient descent with backtracking line
//! search. Three loss functions are supported: squared error, Huber, and
//! logistic.
//!
//! The crate is organized as:
//!
//! - [`linalg`] — dense matrices, truncated-SVD rank projection, and the
//!   fixed-rank tangent-space projectors;
//! - [`model`] — losses, the penalized objective, analytic gradients, and the
//!   curvature-weighted Gram (Hessian) matrix;
//! - [`solver`] — the alternating projected gradient descent loop;
//! - [`datagen`] — reproducible generators for 2D shape signals, low-rank
//!   sparse signals, and the noise/response regimes used in simulations;
//! - [`eval`] — coefficient/prediction metrics, k-fold cross-validation for
//!   the penalty weight, and the nested-CV protocol;
//! - [`theory`] — executable spot checks of the spectral assumptions, the
//!   manifold curvature bound, the descent lower bound, and the error-rate
//!   scaling experiment;
//! - [`io`] — the plain-text dataset and truth-sidecar file formats.
//!
//! All numerical code is generic over the scalar type through the [`Scalar`]
//! trait (`f32` or `f64`); concrete `f64` aliases are exported at the crate
//! root. Simulations and the command-line tools use `f64` throughout.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod theory;

pub use error::Error;
pub use linalg::{Coefficients, Mat, TangentFrame};
pub use model::{Dataset, LossModel, Objective};
pub use scalar::Scalar;
pub use solver::{FitResult, SolverConfig, Termination};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// `f64` matrix, the default for simulations and file I/O.
pub type Mat64 = Mat<f64>;
/// `f32` matrix.
pub type Mat32 = Mat<f32>;
/// `f64` coefficient pair.
pub type Coefficients64 = Coefficients<f64>;
/// `f64` dataset.
pub type Dataset64 = Dataset<f64>;
/// `f64` loss model.
pub type LossModel64 = LossModel<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = SolverConfig<f64>;
