//! Regression models: exact GP, the shared low-rank scheme behind the tunable
//! and Hilbert bases, and the variational sparse GP.

mod full;
mod lowrank;
mod vfe;

pub use full::{FullGp, FullGpPosterior};
pub use lowrank::{
    build_hilbert_model, build_tl_model, lowrank_nll_parts, FeatureSource, LowRankModel,
    LowRankPosterior, VariationalPosterior,
};
pub use vfe::{quantile_inducing, Vfe, VfePosterior};

pub use crate::numerics::WeightPrior;


pub(crate) const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

/// Per-point Gaussian predictive marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Whether `variance` contains the observation noise.
    pub includes_noise: bool,
}

impl PredictiveDistribution {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// `mean - 1.96·sd`
    pub fn lower95(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.variance).map(|(m, v)| m - 1.96 * v.sqrt()).collect()
    }

    pub fn upper95(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.variance).map(|(m, v)| m + 1.96 * v.sqrt()).collect()
    }

    /// Undo a target standardization `y_std = (y - shift) / scale`.
    pub fn rescaled(&self, shift: f64, scale: f64) -> Self {
        PredictiveDistribution {
            mean: self.mean.iter().map(|m| m * scale + shift).collect(),
            variance: self.variance.iter().map(|v| v * scale * scale).collect(),
            includes_noise: self.includes_noise,
        }
    }
}

#[cfg(test)]
pub(crate) fn gaussian_nll_iid(y: &[f64], variance: f64) -> f64 {
    let n = y.len() as f64;
    let ss: f64 = y.iter().map(|v| v * v).sum();
    0.5 * n * (2.0 * std::f64::consts::PI * variance).ln() + 0.5 * ss / variance
}

pub(crate) fn check_noise(noise: f64) -> crate::Result<()> {
    if noise > 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("noise variance must be positive, got {noise}")))
    }
}

pub(crate) fn check_rows(x: &nalgebra::DMatrix<f64>, y: &nalgebra::DVector<f64>) -> crate::Result<()> {
    if x.nrows() != y.len() {
        return Err(crate::Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    if y.is_empty() {
        return Err(crate::Error::InvalidParameter("no training points".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        let p = PredictiveDistribution { mean: vec![1.0], variance: vec![4.0], includes_noise: true };
        assert_eq!(p.lower95(), vec![1.0 - 3.92]);
        assert_eq!(p.upper95(), vec![1.0 + 3.92]);
        let r = p.rescaled(10.0, 2.0);
        assert_eq!(r.mean, vec![12.0]);
        assert_eq!(r.variance, vec![16.0]);
    }

    #[test]
    fn iid_nll() {
        assert!((gaussian_nll_iid(&[0.0], 1.0) - HALF_LOG_2PI).abs() < 1e-15);
        assert!((HALF_LOG_2PI - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }
}
