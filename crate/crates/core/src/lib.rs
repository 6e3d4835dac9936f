//! Gaussian-process regression with low-rank kernel approximations.
//!
//! Four regression schemes share one set of building blocks:
//!
//! * exact GP regression ([`models::FullGp`]),
//! * a low-rank GP whose kernel is approximated by tunable, local, bounded
//!   basis functions placed on equally spaced knots ([`models::build_tl_model`]),
//! * the Laplace-eigenfunction (Hilbert space) reduced-rank GP
//!   ([`models::build_hilbert_model`]),
//! * Titsias' variational free-energy sparse GP ([`models::Vfe`]).
//!
//! Hyperparameters are fitted by minimising the negative log marginal
//! likelihood (or the negative ELBO) with [`optimize`]; [`metrics`] and
//! [`data`] provide the benchmark plumbing.

pub mod basis;
pub mod data;
mod error;
pub mod kernels;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod optimize;

pub use basis::{kappa, HilbertBasis, TunableBasis};
pub use data::{Dataset, Split, SplitRule, Standardization};
pub use error::{Error, Result};
pub use kernels::KernelSpec;
pub use metrics::MetricReport;
pub use models::{
    FeatureSource, FullGp, LowRankModel, PredictiveDistribution, VariationalPosterior, Vfe,
    WeightPrior,
};
pub use numerics::CholFactor;
pub use optimize::{ModelKind, ModelSpec, ParameterVector};

/// Re-exported so downstream crates build matrices with the same version.
pub use nalgebra::{DMatrix, DVector};
