//! Dense linear algebra shared by the models.
//!
//! Every inverse is expressed through a Cholesky factor and triangular
//! solves. Factorization retries with a growing diagonal jitter, scaled by
//! the mean diagonal, and records which rung succeeded.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative jitter levels tried in order.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-8, 1e-6, 1e-4];

/// `A + jitter·I = L Lᵀ` with `L` lower triangular.
#[derive(Debug, Clone)]
pub struct CholFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl CholFactor {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Absolute jitter added to the diagonal before factorizing.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn logdet(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `L⁻¹ B`.
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l.solve_lower_triangular(b).expect("positive diagonal")
    }

    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.l.solve_lower_triangular(b).expect("positive diagonal")
    }

    /// `(L Lᵀ)⁻¹ B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.solve_lower(b);
        self.l.tr_solve_lower_triangular(&z).expect("positive diagonal")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let z = self.solve_lower_vec(b);
        self.l.tr_solve_lower_triangular(&z).expect("positive diagonal")
    }

    /// `(L Lᵀ)⁻¹` via triangular solves: `L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let linv = self.solve_lower(&DMatrix::identity(n, n));
        let mut inv = linv.tr_mul(&linv);
        symmetrize(&mut inv);
        inv
    }

    /// The matrix that was actually factorized, `L Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

pub fn logdet(f: &CholFactor) -> f64 {
    f.logdet()
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Cholesky of `(A + Aᵀ)/2`, adding `jitter · mean(diag)` along
/// [`JITTER_LADDER`] until it succeeds.
pub fn jittered_cholesky(a: &DMatrix<f64>) -> Result<CholFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let n = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { jitter: 0.0 });
    }
    let mut sym = a.clone();
    symmetrize(&mut sym);
    let mean_diag = if n == 0 { 0.0 } else { sym.diagonal().mean().abs() };
    // A zero matrix still needs a usable scale for the jitter.
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let mut last = 0.0;
    for rel in JITTER_LADDER {
        let jitter = rel * scale;
        last = jitter;
        let mut m = sym.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            let l = ch.unpack();
            if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(CholFactor { l, jitter });
            }
        }
    }
    Err(Error::NotPositiveDefinite { jitter: last })
}

/// Whitening map `W` for a PSD matrix, with `WᵀW = A⁻¹` (or the
/// pseudo-inverse when `A` is numerically singular).
///
/// Tries a plain Cholesky first. If that fails, eigenvalues below
/// `n·ε·λ_max` are dropped instead of adding jitter, which keeps
/// `Kᵀ W ᵀW K = K` exact for `K = A`.
#[derive(Debug, Clone)]
pub enum PsdRoot {
    Cholesky(CholFactor),
    Eigen { proj: DMatrix<f64>, dropped: usize },
}

impl PsdRoot {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite { jitter: 0.0 });
        }
        let mut sym = a.clone();
        symmetrize(&mut sym);
        if let Some(ch) = sym.clone().cholesky() {
            let l = ch.unpack();
            if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(PsdRoot::Cholesky(CholFactor { l, jitter: 0.0 }));
            }
        }
        let n = sym.nrows();
        let eig = sym.symmetric_eigen();
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(Error::NotPositiveDefinite { jitter: 0.0 });
        }
        let tol = n as f64 * f64::EPSILON * max;
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > tol).collect();
        let proj = DMatrix::from_fn(keep.len(), n, |r, c| {
            let i = keep[r];
            eig.eigenvectors[(c, i)] / eig.eigenvalues[i].sqrt()
        });
        Ok(PsdRoot::Eigen { proj, dropped: n - keep.len() })
    }

    /// `W B`.
    pub fn whiten(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            PsdRoot::Cholesky(c) => c.solve_lower(b),
            PsdRoot::Eigen { proj, .. } => proj * b,
        }
    }

    /// Eigen-directions discarded as numerically null.
    pub fn dropped(&self) -> usize {
        match self {
            PsdRoot::Cholesky(_) => 0,
            PsdRoot::Eigen { dropped, .. } => *dropped,
        }
    }
}

/// Prior covariance of the basis-function weights.
#[derive(Debug, Clone)]
pub enum WeightPrior {
    /// General SPD matrix (e.g. the kernel Gram over the knots).
    Dense(DMatrix<f64>),
    /// Diagonal (spectral density at the Laplace eigenfrequencies).
    Diagonal(DVector<f64>),
    /// `factors[D-1] ⊗ … ⊗ factors[0]`, matching tensor order where the first
    /// dimension varies fastest.
    Kronecker(Vec<DMatrix<f64>>),
}

/// Smallest diagonal prior entry, relative to the largest, before clamping.
pub const DIAGONAL_FLOOR: f64 = 1e-12;

impl WeightPrior {
    pub fn dim(&self) -> usize {
        match self {
            WeightPrior::Dense(g) => g.nrows(),
            WeightPrior::Diagonal(d) => d.len(),
            WeightPrior::Kronecker(f) => f.iter().map(|g| g.nrows()).product(),
        }
    }

    /// The prior as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            WeightPrior::Dense(g) => g.clone(),
            WeightPrior::Diagonal(d) => DMatrix::from_diagonal(d),
            WeightPrior::Kronecker(f) => kron_tensor_order(f),
        }
    }

    /// Factorizes the prior once so that `σ²Γ⁻¹` and `log|Γ|` can be formed.
    pub fn factor(&self) -> Result<PriorFactor> {
        match self {
            WeightPrior::Dense(g) => Ok(PriorFactor::Dense(jittered_cholesky(g)?)),
            WeightPrior::Diagonal(d) => {
                let max = d.iter().copied().fold(0.0, f64::max);
                if !(max > 0.0 && max.is_finite()) {
                    return Err(Error::NotPositiveDefinite { jitter: 0.0 });
                }
                let floor = DIAGONAL_FLOOR * max;
                Ok(PriorFactor::Diagonal(d.map(|v| if v > floor { v } else { floor })))
            }
            WeightPrior::Kronecker(f) => {
                Ok(PriorFactor::Kronecker(f.iter().map(jittered_cholesky).collect::<Result<_>>()?))
            }
        }
    }
}

/// Kronecker product with the first factor's index varying fastest.
pub fn kron_tensor_order(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        // New index = old + new_dim_index · old_size, so f is the slow factor.
        out = f.kronecker(&out);
    }
    out
}

/// Applies `(L_{D-1} ⊗ … ⊗ L_0)` (or its transpose) to every column of `b`,
/// one mode at a time.
fn kron_apply(factors: &[CholFactor], b: &DMatrix<f64>, transpose: bool) -> DMatrix<f64> {
    let total: usize = factors.iter().map(CholFactor::dim).product();
    assert_eq!(b.nrows(), total, "Kronecker operand has the wrong number of rows");
    let mut out = b.clone();
    let mut buf = vec![0.0; total];
    let mut stride = 1;
    for f in factors {
        let l = f.l();
        let md = l.nrows();
        let block = stride * md;
        for mut col in out.column_iter_mut() {
            for o in 0..total / block {
                for i in 0..stride {
                    let base = o * block + i;
                    for a in 0..md {
                        let mut acc = 0.0;
                        if transpose {
                            for k in a..md {
                                acc += l[(k, a)] * col[base + stride * k];
                            }
                        } else {
                            for k in 0..=a {
                                acc += l[(a, k)] * col[base + stride * k];
                            }
                        }
                        buf[base + stride * a] = acc;
                    }
                }
            }
            col.copy_from_slice(&buf);
        }
        stride = block;
    }
    out
}

/// Factorized weight prior.
#[derive(Debug, Clone)]
pub enum PriorFactor {
    Dense(CholFactor),
    Diagonal(DVector<f64>),
    Kronecker(Vec<CholFactor>),
}

impl PriorFactor {
    pub fn dim(&self) -> usize {
        match self {
            PriorFactor::Dense(c) => c.dim(),
            PriorFactor::Diagonal(d) => d.len(),
            PriorFactor::Kronecker(f) => f.iter().map(CholFactor::dim).product(),
        }
    }

    pub fn logdet(&self) -> f64 {
        match self {
            PriorFactor::Dense(c) => c.logdet(),
            PriorFactor::Diagonal(d) => d.iter().map(|v| v.ln()).sum(),
            PriorFactor::Kronecker(f) => {
                // log|A ⊗ B| = n_B log|A| + n_A log|B|
                let total = self.dim() as f64;
                f.iter().map(|c| total / c.dim() as f64 * c.logdet()).sum()
            }
        }
    }

    /// `scale · Γ⁻¹` (with whatever jitter the factorization needed).
    pub fn scaled_inverse(&self, scale: f64) -> DMatrix<f64> {
        match self {
            PriorFactor::Dense(c) => c.inverse() * scale,
            PriorFactor::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| scale / v)),
            PriorFactor::Kronecker(f) => {
                let mut inv: Vec<DMatrix<f64>> = f.iter().map(CholFactor::inverse).collect();
                inv[0] *= scale;
                kron_tensor_order(&inv)
            }
        }
    }

    /// `Lᵀ B` where `Γ = L Lᵀ`.
    pub fn lt_mul(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            PriorFactor::Dense(c) => c.l().tr_mul(b),
            PriorFactor::Diagonal(d) => {
                let mut out = b.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= d[i].sqrt();
                }
                out
            }
            PriorFactor::Kronecker(f) => kron_apply(f, b, true),
        }
    }

    /// `L w`.
    pub fn l_mul_vec(&self, w: &DVector<f64>) -> DVector<f64> {
        match self {
            PriorFactor::Dense(c) => c.l() * w,
            PriorFactor::Diagonal(d) => w.zip_map(d, |a, v| a * v.sqrt()),
            PriorFactor::Kronecker(f) => {
                let m = DMatrix::from_column_slice(w.len(), 1, w.as_slice());
                DVector::from_column_slice(kron_apply(f, &m, false).as_slice())
            }
        }
    }

    /// `Lᵀ G L` for symmetric `G`.
    pub fn whiten_gram(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        self.lt_mul(&self.lt_mul(g).transpose())
    }

    /// Largest jitter applied across the factors.
    pub fn jitter(&self) -> f64 {
        match self {
            PriorFactor::Dense(c) => c.jitter(),
            PriorFactor::Diagonal(_) => 0.0,
            PriorFactor::Kronecker(f) => f.iter().map(CholFactor::jitter).fold(0.0, f64::max),
        }
    }
}

/// The `m × m` system behind every low-rank prediction and likelihood.
///
/// With `Γ = L Lᵀ` the features are whitened, `Φ = Ψ L`, and only
/// `A = σ²I + ΦᵀΦ` is factorized. `σ²Γ⁻¹ + ΨᵀΨ = L⁻ᵀ A L⁻¹`, so nothing here
/// inverts Γ, which for smooth kernels is numerically singular.
#[derive(Debug, Clone)]
pub struct LowRankCore {
    pub prior: PriorFactor,
    pub core: CholFactor,
    pub noise: f64,
}

impl LowRankCore {
    /// Builds the core from a precomputed `ΨᵀΨ`.
    pub fn from_gram(psi_gram: &DMatrix<f64>, prior: PriorFactor, noise: f64) -> Result<Self> {
        if psi_gram.nrows() != prior.dim() {
            return Err(Error::DimensionMismatch { expected: prior.dim(), got: psi_gram.nrows() });
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {noise}")));
        }
        let mut a = prior.whiten_gram(psi_gram);
        for i in 0..a.nrows() {
            a[(i, i)] += noise;
        }
        let core = jittered_cholesky(&a)?;
        Ok(LowRankCore { prior, core, noise })
    }

    /// `L_A⁻¹ Lᵀ B`; `‖·‖²` of its columns gives `bᵀ M⁻¹ b`.
    pub fn half_solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.core.solve_lower(&self.prior.lt_mul(b))
    }

    pub fn half_solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        DVector::from_column_slice(self.half_solve(&m).as_slice())
    }

    /// `M⁻¹ b` with `M = σ²Γ⁻¹ + ΨᵀΨ`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let z = self.half_solve_vec(b);
        self.weights_from_half(&z)
    }

    /// `L L_A⁻ᵀ z`, the weights belonging to a half solve.
    pub fn weights_from_half(&self, z: &DVector<f64>) -> DVector<f64> {
        let w = self.core.l().tr_solve_lower_triangular(z).expect("positive diagonal");
        self.prior.l_mul_vec(&w)
    }

    /// `log|ΨΓΨᵀ + σ²I|` by the determinant lemma.
    pub fn logdet_full(&self, n: usize) -> f64 {
        let m = self.prior.dim() as f64;
        (n as f64 - m) * self.noise.ln() + self.core.logdet()
    }
}

/// Low-rank core given the features themselves.
pub fn lowrank_core(psi: &DMatrix<f64>, prior: &WeightPrior, noise: f64) -> Result<LowRankCore> {
    if psi.ncols() != prior.dim() {
        return Err(Error::DimensionMismatch { expected: prior.dim(), got: psi.ncols() });
    }
    LowRankCore::from_gram(&psi.tr_mul(psi), prior.factor()?, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identity_factor() {
        for n in [1, 3, 7] {
            let f = jittered_cholesky(&DMatrix::identity(n, n)).unwrap();
            assert_eq!(f.l(), &DMatrix::identity(n, n));
            assert_eq!(f.jitter(), 0.0);
            assert_eq!(f.logdet(), 0.0);
        }
    }

    #[test]
    fn hand_factorization() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = jittered_cholesky(&a).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
        assert!((f.l() - expected).amax() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_pure_jitter() {
        let f = jittered_cholesky(&DMatrix::zeros(2, 2)).unwrap();
        assert!(f.jitter() > 0.0);
        let expected = DMatrix::identity(2, 2) * f.jitter().sqrt();
        assert!((f.l() - expected).amax() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_fails_with_last_jitter() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match jittered_cholesky(&a) {
            Err(Error::NotPositiveDefinite { jitter }) => assert_eq!(jitter, 1e-4 * 0.0f64.max(1.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_singular_matrix_gets_jitter() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = &v * v.transpose();
        let f = jittered_cholesky(&a).unwrap();
        assert!(f.jitter() > 0.0);
        assert!((f.reconstruct() - (&a + DMatrix::identity(3, 3) * f.jitter())).amax() < 1e-12 * a.amax());
    }

    #[test]
    fn logdet_examples() {
        let f = jittered_cholesky(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0]))).unwrap();
        assert_relative_eq!(logdet(&f), 16f64.ln(), epsilon = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(&mut rng, 5);
        let c = 3.7;
        let scaled = jittered_cholesky(&(&a * c)).unwrap().logdet();
        assert_relative_eq!(scaled, jittered_cholesky(&a).unwrap().logdet() + 5.0 * c.ln(), epsilon = 1e-12);
    }

    #[test]
    fn inverse_matches_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spd(&mut rng, 6);
        let f = jittered_cholesky(&a).unwrap();
        assert!((&a * f.inverse() - DMatrix::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn scalar_core() {
        let psi = DMatrix::from_element(1, 1, 0.7);
        let core = lowrank_core(&psi, &WeightPrior::Dense(DMatrix::from_element(1, 1, 2.0)), 0.3).unwrap();
        // A = σ² + Γψ² = 0.3 + 2·0.49
        assert_relative_eq!(core.core.reconstruct()[(0, 0)], 1.28, epsilon = 1e-14);
        let b = DVector::from_element(1, 1.0);
        assert_relative_eq!(core.solve_vec(&b)[0], 1.0 / (0.3 / 2.0 + 0.49), epsilon = 1e-14);
    }

    #[test]
    fn zero_features_leave_scaled_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_spd(&mut rng, 4);
        let core = lowrank_core(&DMatrix::zeros(6, 4), &WeightPrior::Dense(g.clone()), 0.5).unwrap();
        // M⁻¹ = Γ / σ²
        for j in 0..4 {
            let e = DVector::from_fn(4, |i, _| if i == j { 1.0 } else { 0.0 });
            let col = core.solve_vec(&e);
            assert!((col - g.column(j) / 0.5).amax() < 1e-10);
        }
    }

    #[test]
    fn kronecker_whitening_matches_dense_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (g0, g1) = (random_spd(&mut rng, 3), random_spd(&mut rng, 4));
        let prior = WeightPrior::Kronecker(vec![g0.clone(), g1.clone()]);
        let f = prior.factor().unwrap();
        let l = kron_tensor_order(&[jittered_cholesky(&g0).unwrap().l().clone(), jittered_cholesky(&g1).unwrap().l().clone()]);
        let b = DMatrix::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        assert!((f.lt_mul(&b) - l.tr_mul(&b)).amax() < 1e-12);
        let w = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        assert!((f.l_mul_vec(&w) - &l * &w).amax() < 1e-12);
        let g = random_spd(&mut rng, 12);
        assert!((f.whiten_gram(&g) - l.tr_mul(&g) * &l).amax() < 1e-10);
    }

    // Dense oracle: (ΨΓΨᵀ + σ²I)⁻¹ y against the Woodbury route
    // σ⁻²(y - Ψ M⁻¹ Ψᵀ y).
    fn woodbury_vs_dense(rng: &mut impl Rng, n: usize, m: usize) -> (f64, f64) {
        let psi = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let g = random_spd(rng, m);
        let noise = rng.random_range(0.05..2.0);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let dense = &psi * &g * psi.transpose() + DMatrix::identity(n, n) * noise;
        let dense_f = jittered_cholesky(&dense).unwrap();
        let x_dense = dense_f.solve_vec(&y);
        let core = lowrank_core(&psi, &WeightPrior::Dense(g), noise).unwrap();
        let x_low = (&y - &psi * core.solve_vec(&(psi.transpose() * &y))) / noise;
        let rel = (&x_dense - &x_low).amax() / x_dense.amax();
        let ld = (dense_f.logdet() - core.logdet_full(n)).abs();
        (rel, ld)
    }

    #[test]
    fn woodbury_small_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (rel, ld) = woodbury_vs_dense(&mut rng, 8, 3);
        assert!(rel < 1e-8 && ld < 1e-8, "{rel} {ld}");
    }

    #[test]
    fn woodbury_identity_and_determinant_lemma() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.random_range(1..=30);
            let m = rng.random_range(1..=10);
            let (rel, ld) = woodbury_vs_dense(&mut rng, n, m);
            assert!(rel < 1e-8, "solve mismatch {rel}");
            assert!(ld < 1e-8, "logdet mismatch {ld}");
        }
    }

    #[test]
    fn diagonal_prior_is_clamped() {
        let d = DVector::from_vec(vec![1.0, 1e-20, 0.5]);
        let f = WeightPrior::Diagonal(d).factor().unwrap();
        let inv = f.scaled_inverse(1.0);
        assert_eq!(inv[(1, 1)], 1.0 / DIAGONAL_FLOOR);
        assert_eq!(inv[(2, 2)], 2.0);
    }

    #[test]
    fn kronecker_prior_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_spd(&mut rng, 3);
        let b = random_spd(&mut rng, 2);
        let kron = WeightPrior::Kronecker(vec![a.clone(), b.clone()]);
        let dense = kron.to_dense();
        // index = i_a + 3·i_b
        assert_relative_eq!(dense[(1 + 3, 2)], a[(1, 2)] * b[(1, 0)], epsilon = 1e-15);
        let fk = kron.factor().unwrap();
        let fd = WeightPrior::Dense(dense.clone()).factor().unwrap();
        assert_relative_eq!(fk.logdet(), fd.logdet(), epsilon = 1e-10);
        assert!((fk.scaled_inverse(0.3) - fd.scaled_inverse(0.3)).amax() < 1e-9);
    }
}
