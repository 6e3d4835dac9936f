use nalgebra::{DMatrix, DVector};

use super::{check_noise, check_rows, PredictiveDistribution, HALF_LOG_2PI};
use crate::kernels::KernelSpec;
use crate::numerics::{jittered_cholesky, CholFactor};
use crate::Result;

/// Exact GP regression with Gaussian noise.
#[derive(Debug, Clone)]
pub struct FullGp {
    pub kernel: KernelSpec,
    pub noise: f64,
}

/// Training data conditioned into a Cholesky factor of `K + σ²I`.
#[derive(Debug, Clone)]
pub struct FullGpPosterior {
    kernel: KernelSpec,
    noise: f64,
    x: DMatrix<f64>,
    factor: CholFactor,
    weights: DVector<f64>,
    quad: f64,
}

impl FullGp {
    pub fn new(kernel: KernelSpec, noise: f64) -> Result<Self> {
        kernel.validate()?;
        check_noise(noise)?;
        Ok(FullGp { kernel, noise })
    }

    pub fn fit(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<FullGpPosterior> {
        check_rows(x, y)?;
        let mut k = self.kernel.gram_symmetric(x)?;
        for i in 0..k.nrows() {
            k[(i, i)] += self.noise;
        }
        let factor = jittered_cholesky(&k)?;
        let z = factor.solve_lower_vec(y);
        let quad = z.norm_squared();
        let weights = factor.l().tr_solve_lower_triangular(&z).expect("positive diagonal");
        Ok(FullGpPosterior {
            kernel: self.kernel.clone(),
            noise: self.noise,
            x: x.clone(),
            factor,
            weights,
            quad,
        })
    }

    /// Negative log marginal likelihood.
    pub fn nll(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(self.fit(x, y)?.nll())
    }

    pub fn predict(&self, x: &DMatrix<f64>, y: &DVector<f64>, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        self.fit(x, y)?.predict(xs)
    }
}

impl FullGpPosterior {
    pub fn nll(&self) -> f64 {
        let n = self.weights.len() as f64;
        n * HALF_LOG_2PI + 0.5 * self.factor.logdet() + 0.5 * self.quad
    }

    /// Diagonal jitter the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    pub fn predict(&self, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        let ks = self.kernel.gram(&self.x, xs)?;
        let mean = ks.tr_mul(&self.weights);
        let v = self.factor.solve_lower(&ks);
        let kss = self.kernel.diag(xs)?;
        let variance = kss
            .iter()
            .enumerate()
            .map(|(j, k)| (k - v.column(j).norm_squared()).max(0.0) + self.noise)
            .collect();
        Ok(PredictiveDistribution { mean: mean.iter().copied().collect(), variance, includes_noise: true })
    }
}
