//! Hyperparameter fitting: parameter transforms, a finite-difference
//! L-BFGS minimizer, and model objectives with feature caching.

mod lbfgs;
mod objective;
mod params;

pub use lbfgs::{finite_diff_grad, minimize, multistart, MinimizeOptions, MinimizeResult, Termination, PENALTY};
pub use objective::{
    default_alpha, fit, initial_inducing, BuiltModel, FitOptions, FitResult, Fitted, ModelKind, ModelSpec,
    Objective,
};
pub use params::{Parameter, ParameterVector, Transform};
