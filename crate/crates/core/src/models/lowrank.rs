use nalgebra::{DMatrix, DVector};

use super::{check_noise, check_rows, PredictiveDistribution, HALF_LOG_2PI};
use crate::basis::{hilbert_frequency_grid, knot_grid, tensor_feature_matrix, HilbertBasis, TunableBasis};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numerics::{jittered_cholesky, LowRankCore, PriorFactor, WeightPrior};

/// Where the columns of Ψ come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    /// Tunable local basis, one per input dimension (tensor product in 2D).
    Tunable(Vec<TunableBasis>),
    /// Laplace eigenbasis, one per input dimension.
    Hilbert(Vec<HilbertBasis>),
}

impl FeatureSource {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureSource::Tunable(b) => b.len(),
            FeatureSource::Hilbert(b) => b.len(),
        }
    }

    /// Number of features (product of per-dimension counts).
    pub fn rank(&self) -> usize {
        match self {
            FeatureSource::Tunable(b) => b.iter().map(TunableBasis::len).product(),
            FeatureSource::Hilbert(b) => b.iter().map(HilbertBasis::len).product(),
        }
    }

    pub fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            FeatureSource::Tunable(b) => tensor_feature_matrix(b, x),
            FeatureSource::Hilbert(b) => Ok(crate::basis::hilbert_tensor_features(b, x)?.0),
        }
    }

    /// One feature matrix per input dimension, before the tensor product.
    pub fn per_dim_features(&self, x: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        let col = |d: usize| x.column(d).iter().copied().collect::<Vec<_>>();
        Ok(match self {
            FeatureSource::Tunable(b) => b.iter().enumerate().map(|(d, b)| b.feature_matrix(&col(d))).collect(),
            FeatureSource::Hilbert(b) => b.iter().enumerate().map(|(d, b)| b.features(&col(d)).0).collect(),
        })
    }
}

/// `f(x) = Ψ(x) w`, `w ~ N(0, Γ)`, observed with Gaussian noise.
#[derive(Debug, Clone)]
pub struct LowRankModel {
    pub source: FeatureSource,
    pub prior: WeightPrior,
    pub kernel: KernelSpec,
    pub noise: f64,
}

fn check_kernel_dim(kernel: &KernelSpec, dim: usize) -> Result<()> {
    kernel.validate()?;
    match kernel.input_dim() {
        Some(d) if d != dim => Err(Error::DimensionMismatch { expected: dim, got: d }),
        _ => Ok(()),
    }
}

/// Tunable-basis model: Γ is the kernel Gram over the knots (the knot grid
/// in 2D, in tensor order). Separable kernels get a Kronecker-structured Γ.
pub fn build_tl_model(kernel: &KernelSpec, bases: Vec<TunableBasis>, noise: f64) -> Result<LowRankModel> {
    if bases.is_empty() {
        return Err(Error::InvalidParameter("need one basis per input dimension".into()));
    }
    check_noise(noise)?;
    let d = bases.len();
    check_kernel_dim(kernel, d)?;
    let prior = match kernel.separable_factors(d).filter(|_| d > 1) {
        Some(factors) => WeightPrior::Kronecker(
            factors
                .iter()
                .zip(&bases)
                .map(|(k, b)| {
                    let t = b.knots();
                    k.gram_symmetric(&DMatrix::from_column_slice(t.len(), 1, &t))
                })
                .collect::<Result<_>>()?,
        ),
        None => WeightPrior::Dense(kernel.gram_symmetric(&knot_grid(&bases))?),
    };
    Ok(LowRankModel { source: FeatureSource::Tunable(bases), prior, kernel: kernel.clone(), noise })
}

/// Hilbert-space model: Γ is diagonal with the spectral density at the
/// eigenfrequencies.
pub fn build_hilbert_model(kernel: &KernelSpec, bases: Vec<HilbertBasis>, noise: f64) -> Result<LowRankModel> {
    if bases.is_empty() {
        return Err(Error::InvalidParameter("need one basis per input dimension".into()));
    }
    check_noise(noise)?;
    check_kernel_dim(kernel, bases.len())?;
    let dens = hilbert_frequency_grid(&bases)
        .iter()
        .map(|w| kernel.spectral_density_nd(w))
        .collect::<Result<Vec<f64>>>()?;
    Ok(LowRankModel {
        source: FeatureSource::Hilbert(bases),
        prior: WeightPrior::Diagonal(DVector::from_vec(dens)),
        kernel: kernel.clone(),
        noise,
    })
}

impl LowRankModel {
    pub fn rank(&self) -> usize {
        self.source.rank()
    }

    pub fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.source.features(x)
    }

    /// `Ψ(x1) Γ Ψ(x2)ᵀ`, the approximated kernel.
    pub fn kernel_approximation(&self, x1: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let p1 = self.features(x1)?;
        let p2 = self.features(x2)?;
        Ok(&p1 * self.prior.to_dense() * p2.transpose())
    }

    pub fn fit(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LowRankPosterior> {
        check_rows(x, y)?;
        let psi = self.features(x)?;
        let mut post = LowRankPosterior::from_features(&psi, y, &self.prior, self.noise)?;
        post.source = Some(self.source.clone());
        Ok(post)
    }

    pub fn nll(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(self.fit(x, y)?.nll())
    }

    /// The same likelihood through the `N × N` matrix `ΨΓΨᵀ + σ²I`, which is
    /// cheaper once N drops below the rank. A Kronecker prior makes `ΨΓΨᵀ`
    /// the elementwise product of the per-dimension `Ψ_d Γ_d Ψ_dᵀ`.
    /// Returns the NLL and the largest jitter applied.
    pub fn nll_dual(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
        check_rows(x, y)?;
        check_noise(self.noise)?;
        let n = y.len();
        let prior = self.prior.factor()?;
        let mut k = match &prior {
            PriorFactor::Kronecker(factors) => {
                let mut k = DMatrix::from_element(n, n, 1.0);
                for (psi, f) in self.source.per_dim_features(x)?.iter().zip(factors) {
                    let phi = psi * f.l();
                    k.component_mul_assign(&(&phi * phi.transpose()));
                }
                k
            }
            _ => {
                let phi_t = prior.lt_mul(&self.features(x)?.transpose());
                phi_t.tr_mul(&phi_t)
            }
        };
        for i in 0..n {
            k[(i, i)] += self.noise;
        }
        let c = jittered_cholesky(&k)?;
        let a = c.solve_lower_vec(y);
        let nll = 0.5 * a.norm_squared() + 0.5 * c.logdet() + n as f64 * HALF_LOG_2PI;
        Ok((nll, prior.jitter().max(c.jitter())))
    }

    pub fn predict(&self, x: &DMatrix<f64>, y: &DVector<f64>, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        self.fit(x, y)?.predict(xs)
    }

    pub fn variational_posterior(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<VariationalPosterior> {
        check_rows(x, y)?;
        VariationalPosterior::from_features(&self.features(x)?, y, &self.prior, self.noise)
    }

    /// Prediction through the weight posterior `q(w) = N(μ̂, Ŝ)`, noise included.
    pub fn predict_variational(
        &self,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        xs: &DMatrix<f64>,
    ) -> Result<PredictiveDistribution> {
        let q = self.variational_posterior(x, y)?;
        Ok(q.predict_features(&self.features(xs)?, Some(self.noise)))
    }
}

/// Conditioned low-rank model: Cholesky factor of `M = σ²Γ⁻¹ + ΨᵀΨ` and
/// `M⁻¹Ψᵀy`.
#[derive(Debug, Clone)]
pub struct LowRankPosterior {
    core: LowRankCore,
    weights: DVector<f64>,
    nll: f64,
    source: Option<FeatureSource>,
}

/// Negative log marginal likelihood from sufficient statistics `ΨᵀΨ`, `Ψᵀy`,
/// `yᵀy` and `N`, plus the factored core for reuse.
pub fn lowrank_nll_parts(
    psi_gram: &DMatrix<f64>,
    psi_t_y: &DVector<f64>,
    yty: f64,
    n: usize,
    prior: PriorFactor,
    noise: f64,
) -> Result<(f64, LowRankCore, DVector<f64>)> {
    if psi_t_y.len() != psi_gram.nrows() {
        return Err(Error::DimensionMismatch { expected: psi_gram.nrows(), got: psi_t_y.len() });
    }
    let core = LowRankCore::from_gram(psi_gram, prior, noise)?;
    let z = core.half_solve_vec(psi_t_y);
    let weights = core.weights_from_half(&z);
    let quad = yty - z.norm_squared();
    let nll = 0.5 * core.logdet_full(n) + n as f64 * HALF_LOG_2PI + 0.5 * quad / noise;
    Ok((nll, core, weights))
}

impl LowRankPosterior {
    pub fn from_features(psi: &DMatrix<f64>, y: &DVector<f64>, prior: &WeightPrior, noise: f64) -> Result<Self> {
        if psi.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: psi.nrows(), got: y.len() });
        }
        if psi.ncols() != prior.dim() {
            return Err(Error::DimensionMismatch { expected: prior.dim(), got: psi.ncols() });
        }
        let (nll, core, weights) =
            lowrank_nll_parts(&psi.tr_mul(psi), &psi.tr_mul(y), y.norm_squared(), y.len(), prior.factor()?, noise)?;
        Ok(LowRankPosterior { core, weights, nll, source: None })
    }

    pub fn from_parts(core: LowRankCore, weights: DVector<f64>, nll: f64, source: Option<FeatureSource>) -> Self {
        LowRankPosterior { core, weights, nll, source }
    }

    pub fn nll(&self) -> f64 {
        self.nll
    }

    /// Largest diagonal jitter applied to Γ or to `M`.
    pub fn jitter(&self) -> f64 {
        self.core.prior.jitter().max(self.core.core.jitter())
    }

    /// Mean `Ψ* M⁻¹Ψᵀy`, variance `σ² diag(Ψ* M⁻¹ Ψ*ᵀ) + σ²`.
    pub fn predict_features(&self, psi_star: &DMatrix<f64>) -> PredictiveDistribution {
        let mean = psi_star * &self.weights;
        let v = self.core.half_solve(&psi_star.transpose());
        let noise = self.core.noise;
        let variance = (0..v.ncols()).map(|j| noise * v.column(j).norm_squared() + noise).collect();
        PredictiveDistribution { mean: mean.iter().copied().collect(), variance, includes_noise: true }
    }

    pub fn predict(&self, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        let source = self
            .source
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("posterior has no feature source".into()))?;
        Ok(self.predict_features(&source.features(xs)?))
    }
}

/// Gaussian posterior over the basis weights.
#[derive(Debug, Clone)]
pub struct VariationalPosterior {
    /// `μ̂ = σ⁻² Ŝ Ψᵀ y`
    pub mean: DVector<f64>,
    /// `Ŝ = (Γ⁻¹ + σ⁻² ΨᵀΨ)⁻¹`
    pub cov: DMatrix<f64>,
}

impl VariationalPosterior {
    pub fn from_features(psi: &DMatrix<f64>, y: &DVector<f64>, prior: &WeightPrior, noise: f64) -> Result<Self> {
        check_noise(noise)?;
        if psi.nrows() != y.len() || psi.ncols() != prior.dim() {
            return Err(Error::DimensionMismatch { expected: prior.dim(), got: psi.ncols() });
        }
        let mut precision = prior.factor()?.scaled_inverse(1.0);
        precision += psi.tr_mul(psi) / noise;
        let cov = jittered_cholesky(&precision)?.inverse();
        let mean = &cov * psi.tr_mul(y) / noise;
        Ok(VariationalPosterior { mean, cov })
    }

    /// Mean `Ψ* μ̂` and variance `diag(Ψ* Ŝ Ψ*ᵀ)`, plus `noise` when given.
    pub fn predict_features(&self, psi_star: &DMatrix<f64>, noise: Option<f64>) -> PredictiveDistribution {
        let mean = psi_star * &self.mean;
        let ps = psi_star * &self.cov;
        let extra = noise.unwrap_or(0.0);
        let variance = (0..psi_star.nrows())
            .map(|i| ps.row(i).dot(&psi_star.row(i)) + extra)
            .collect();
        PredictiveDistribution { mean: mean.iter().copied().collect(), variance, includes_noise: noise.is_some() }
    }
}
