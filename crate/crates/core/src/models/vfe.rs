use nalgebra::{DMatrix, DVector};

use super::{check_noise, check_rows, PredictiveDistribution, HALF_LOG_2PI};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::{jittered_cholesky, CholFactor, PsdRoot};

/// Sparse GP with inducing inputs `z` and the collapsed variational bound.
#[derive(Debug, Clone)]
pub struct Vfe {
    pub kernel: KernelSpec,
    pub noise: f64,
    /// `M × D` inducing inputs.
    pub inducing: DMatrix<f64>,
}

/// Everything prediction needs after conditioning on the training data.
#[derive(Debug, Clone)]
pub struct VfePosterior {
    kernel: KernelSpec,
    noise: f64,
    inducing: DMatrix<f64>,
    kuu: PsdRoot,
    a: CholFactor,
    // A⁻¹ V y / σ²
    weights: DVector<f64>,
    elbo: f64,
}

/// `m` inducing inputs at evenly spaced empirical quantiles of each input
/// column (sorted independently per dimension).
pub fn quantile_inducing(x: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let mut z = DMatrix::zeros(m, x.ncols());
    for d in 0..x.ncols() {
        let mut v: Vec<f64> = x.column(d).iter().copied().collect();
        v.sort_by(f64::total_cmp);
        for i in 0..m {
            let q = if m == 1 { 0.5 } else { i as f64 / (m - 1) as f64 };
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let t = pos - lo as f64;
            z[(i, d)] = v[lo] * (1.0 - t) + v[hi] * t;
        }
    }
    z
}

impl Vfe {
    pub fn new(kernel: KernelSpec, noise: f64, inducing: DMatrix<f64>) -> Result<Self> {
        kernel.validate()?;
        check_noise(noise)?;
        if inducing.nrows() == 0 {
            return Err(Error::InvalidParameter("need at least one inducing input".into()));
        }
        Ok(Vfe { kernel, noise, inducing })
    }

    pub fn fit(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<VfePosterior> {
        check_rows(x, y)?;
        if x.ncols() != self.inducing.ncols() {
            return Err(Error::DimensionMismatch { expected: x.ncols(), got: self.inducing.ncols() });
        }
        let s2 = self.noise;
        let n = y.len() as f64;
        let kuu = PsdRoot::new(&self.kernel.gram_symmetric(&self.inducing)?)?;
        let kuf = self.kernel.gram(&self.inducing, x)?;
        let v = kuu.whiten(&kuf);
        let m = v.nrows();
        let mut a = (&v * v.transpose()) / s2;
        for i in 0..m {
            a[(i, i)] += 1.0;
        }
        let a = jittered_cholesky(&a)?;
        let vy = &v * y;
        let c = a.solve_lower_vec(&vy);
        let logdet = n * s2.ln() + a.logdet();
        let quad = y.norm_squared() / s2 - c.norm_squared() / (s2 * s2);
        let kff: f64 = self.kernel.diag(x)?.iter().sum();
        let trace = (kff - v.norm_squared()) / (2.0 * s2);
        let elbo = -n * HALF_LOG_2PI - 0.5 * logdet - 0.5 * quad - trace;
        let weights = a.l().tr_solve_lower_triangular(&c).expect("positive diagonal") / s2;
        Ok(VfePosterior {
            kernel: self.kernel.clone(),
            noise: s2,
            inducing: self.inducing.clone(),
            kuu,
            a,
            weights,
            elbo,
        })
    }

    pub fn elbo(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(self.fit(x, y)?.elbo)
    }

    pub fn predict(&self, x: &DMatrix<f64>, y: &DVector<f64>, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        self.fit(x, y)?.predict(xs)
    }
}

impl VfePosterior {
    pub fn elbo(&self) -> f64 {
        self.elbo
    }

    pub fn jitter(&self) -> f64 {
        self.a.jitter()
    }

    /// Inducing directions dropped as numerically redundant.
    pub fn dropped_directions(&self) -> usize {
        self.kuu.dropped()
    }

    /// With `w* = W K_u*` (`W = L⁻¹` when `K_uu` factorizes): mean `w*ᵀ A⁻¹ V y / σ²`, variance
    /// `k** - |w*|² + |L_A⁻¹ w*|² + σ²`.
    pub fn predict(&self, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        let ws = self.kuu.whiten(&self.kernel.gram(&self.inducing, xs)?);
        let mean = ws.tr_mul(&self.weights);
        let r = self.a.solve_lower(&ws);
        let kss = self.kernel.diag(xs)?;
        let variance = kss
            .iter()
            .enumerate()
            .map(|(j, k)| (k - ws.column(j).norm_squared() + r.column(j).norm_squared()).max(0.0) + self.noise)
            .collect();
        Ok(PredictiveDistribution { mean: mean.iter().copied().collect(), variance, includes_noise: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FullGp;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn quantiles() {
        let x = col(&[3.0, 0.0, 1.0, 2.0, 4.0]);
        assert_eq!(quantile_inducing(&x, 3).as_slice(), &[0.0, 2.0, 4.0]);
        assert_eq!(quantile_inducing(&x, 1).as_slice(), &[2.0]);
    }

    #[test]
    fn scalar_case() {
        let kernel = KernelSpec::se(1.0, 1.0);
        let x = col(&[0.5]);
        let vfe = Vfe::new(kernel.clone(), 1.0, x.clone()).unwrap();
        let elbo = vfe.elbo(&x, &DVector::zeros(1)).unwrap();
        assert_relative_eq!(elbo, -HALF_LOG_2PI - 0.5 * 2f64.ln(), epsilon = 1e-14);
        let p = vfe.predict(&x, &DVector::from_vec(vec![3.0]), &x).unwrap();
        assert_relative_eq!(p.mean[0], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn exact_when_inducing_equals_training() {
        let x = col(&[-1.0, -0.3, 0.4, 1.2, 2.5]);
        let y = DVector::from_vec(vec![0.3, -0.2, 0.8, 1.1, -0.5]);
        let kernel = KernelSpec::matern52(0.9, 0.8);
        let full = FullGp::new(kernel.clone(), 0.15).unwrap();
        let vfe = Vfe::new(kernel, 0.15, x.clone()).unwrap();
        assert_relative_eq!(-vfe.elbo(&x, &y).unwrap(), full.nll(&x, &y).unwrap(), epsilon = 1e-6);
        let xs = col(&[-2.0, 0.0, 0.9, 3.0]);
        let a = full.predict(&x, &y, &xs).unwrap();
        let b = vfe.predict(&x, &y, &xs).unwrap();
        for j in 0..4 {
            assert!((a.mean[j] - b.mean[j]).abs() < 1e-6);
            assert!((a.variance[j] - b.variance[j]).abs() < 1e-6);
        }
        assert!(vfe.predict(&x, &DVector::zeros(5), &xs).unwrap().mean.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn exact_with_singular_inducing_gram() {
        // Dense smooth inputs make K_uu fail a plain Cholesky.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = DMatrix::from_fn(30, 1, |_, _| rng.random_range(-3.0..3.0));
        let y = DVector::from_fn(30, |_, _| rng.random_range(-2.0..2.0));
        let kernel = KernelSpec::se(1.7, 1.9);
        let full = FullGp::new(kernel.clone(), 0.06).unwrap();
        let post = Vfe::new(kernel, 0.06, x.clone()).unwrap().fit(&x, &y).unwrap();
        assert!(post.dropped_directions() > 0);
        assert_relative_eq!(-post.elbo(), full.nll(&x, &y).unwrap(), epsilon = 1e-7);
    }

    #[test]
    fn elbo_bounds_marginal_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.random_range(2..25);
            let m = rng.random_range(1..8);
            let x = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-3.0..3.0));
            let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            let z = DMatrix::from_fn(m, 1, |_, _| rng.random_range(-3.0..3.0));
            let kernel = KernelSpec::se(rng.random_range(0.5..2.0), rng.random_range(0.3..2.0));
            let noise = rng.random_range(0.05..1.0);
            let nll = FullGp::new(kernel.clone(), noise).unwrap().nll(&x, &y).unwrap();
            let vfe = Vfe::new(kernel, noise, z).unwrap();
            let post = vfe.fit(&x, &y).unwrap();
            // Jittered K_uu is the bound for inducing variables u + ε, still valid.
            assert!(-post.elbo() >= nll - 1e-8);
            assert!(post.predict(&x).unwrap().variance.iter().all(|v| *v > 0.0));
        }
    }
}
