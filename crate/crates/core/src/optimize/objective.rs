use std::cell::{Cell, RefCell};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lbfgs::{multistart, MinimizeOptions, Termination, PENALTY};
use super::params::{ParameterVector, Transform};
use crate::basis::{HilbertBasis, TunableBasis};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::models::{
    build_hilbert_model, build_tl_model, lowrank_nll_parts, quantile_inducing, FullGp, FullGpPosterior,
    LowRankModel, LowRankPosterior, PredictiveDistribution, Vfe, VfePosterior,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    Tl,
    Hilbert,
    Vfe,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Tl => "tl",
            ModelKind::Hilbert => "hilbert",
            ModelKind::Vfe => "vfe",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ModelKind::Full),
            "tl" => Ok(ModelKind::Tl),
            "hilbert" => Ok(ModelKind::Hilbert),
            "vfe" => Ok(ModelKind::Vfe),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Everything needed to turn a parameter vector into a model.
///
/// Parameter names: the kernel's own (`k.…`), `noise`, then `alpha` and
/// `beta` for the tunable basis or `z.{i}.{d}` for inducing inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Structure and initial hyperparameters.
    pub kernel: KernelSpec,
    pub noise: f64,
    /// Basis functions per input dimension (tl, hilbert); `m[0]` is the
    /// number of inducing inputs for vfe.
    pub m: Vec<usize>,
    pub domain: Vec<(f64, f64)>,
    /// Shared by all input dimensions.
    pub alpha: f64,
    pub beta: f64,
    /// Initial inducing inputs; defaults to training-input quantiles.
    pub inducing: Option<DMatrix<f64>>,
    /// Parameter names held fixed. `kernel` freezes every kernel
    /// hyperparameter, `basis` both `alpha` and `beta`, `inducing` all of `z`.
    pub frozen: Vec<String>,
}

/// `α` giving `αΔ = 1.5` for the knot spacing `Δ` of the first dimension.
pub fn default_alpha(domain: (f64, f64), m: usize) -> f64 {
    1.5 * (m.max(2) - 1) as f64 / (domain.1 - domain.0)
}

impl ModelSpec {
    pub fn new(kind: ModelKind, kernel: KernelSpec, noise: f64) -> Self {
        ModelSpec {
            kind,
            kernel,
            noise,
            m: Vec::new(),
            domain: Vec::new(),
            alpha: 1.0,
            beta: 0.0,
            inducing: None,
            frozen: Vec::new(),
        }
    }

    fn is_frozen(&self, name: &str) -> bool {
        self.frozen.iter().any(|f| {
            f == name
                || (f == "kernel" && name.starts_with("k."))
                || (f == "basis" && (name == "alpha" || name == "beta"))
                || (f == "inducing" && name.starts_with("z."))
        })
    }

    fn validate_shape(&self, dim: usize) -> Result<()> {
        match self.kind {
            ModelKind::Tl | ModelKind::Hilbert => {
                if self.m.len() != dim || self.domain.len() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "{} needs m and domain for each of {dim} input dimensions",
                        self.kind.name()
                    )));
                }
            }
            ModelKind::Vfe => {
                if self.m.is_empty() && self.inducing.is_none() {
                    return Err(Error::InvalidParameter("vfe needs the number of inducing inputs".into()));
                }
            }
            ModelKind::Full => {}
        }
        Ok(())
    }

    /// Initial parameters; `x` supplies default inducing inputs.
    pub fn initial_parameters(&self, x: &DMatrix<f64>) -> Result<ParameterVector> {
        self.validate_shape(x.ncols())?;
        let mut p = ParameterVector::new();
        for (name, v) in self.kernel.hyperparameter_names().into_iter().zip(self.kernel.hyperparameters()) {
            let frozen = self.is_frozen(&name);
            p.push(name, v, Transform::Log, frozen)?;
        }
        p.push("noise", self.noise, Transform::Log, self.is_frozen("noise"))?;
        match self.kind {
            ModelKind::Tl => {
                p.push("alpha", self.alpha, Transform::Identity, self.is_frozen("alpha"))?;
                p.push("beta", self.beta, Transform::Identity, self.is_frozen("beta"))?;
            }
            ModelKind::Vfe => {
                let z = match &self.inducing {
                    Some(z) => z.clone(),
                    None => initial_inducing(x, self.m[0]),
                };
                if z.ncols() != x.ncols() {
                    return Err(Error::DimensionMismatch { expected: x.ncols(), got: z.ncols() });
                }
                for i in 0..z.nrows() {
                    for d in 0..z.ncols() {
                        let name = format!("z.{i}.{d}");
                        let frozen = self.is_frozen(&name);
                        p.push(name, z[(i, d)], Transform::Identity, frozen)?;
                    }
                }
            }
            _ => {}
        }
        Ok(p)
    }

    /// Same parameters with the kernel hyperparameters taken from `kernel`.
    pub fn parameters_with_kernel(&self, base: &ParameterVector, kernel: &KernelSpec) -> Result<ParameterVector> {
        let mut p = base.clone();
        for (name, v) in kernel.hyperparameter_names().iter().zip(kernel.hyperparameters()) {
            p.set(name, v)?;
        }
        Ok(p)
    }

    pub fn kernel_from(&self, p: &ParameterVector) -> Result<KernelSpec> {
        self.kernel.with_hyperparameters(&p.values_with_prefix("k."))
    }

    fn noise_from(p: &ParameterVector) -> Result<f64> {
        p.get("noise").ok_or_else(|| Error::InvalidParameter("missing noise".into()))
    }

    fn tunable_bases(&self, p: &ParameterVector) -> Result<Vec<TunableBasis>> {
        let alpha = p.get("alpha").unwrap_or(self.alpha);
        let beta = p.get("beta").unwrap_or(self.beta);
        self.m
            .iter()
            .zip(&self.domain)
            .map(|(&m, &(lb, ub))| TunableBasis::new(alpha, beta, m, lb, ub))
            .collect()
    }

    fn hilbert_bases(&self) -> Result<Vec<HilbertBasis>> {
        self.m.iter().zip(&self.domain).map(|(&m, &(lb, ub))| HilbertBasis::new(m, lb, ub)).collect()
    }

    fn inducing_from(p: &ParameterVector, dim: usize) -> Result<DMatrix<f64>> {
        let z = p.values_with_prefix("z.");
        if z.is_empty() || !z.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter("inducing inputs missing or ragged".into()));
        }
        Ok(DMatrix::from_row_slice(z.len() / dim, dim, &z))
    }

    pub fn build(&self, p: &ParameterVector, dim: usize) -> Result<BuiltModel> {
        let kernel = self.kernel_from(p)?;
        let noise = Self::noise_from(p)?;
        Ok(match self.kind {
            ModelKind::Full => BuiltModel::Full(FullGp::new(kernel, noise)?),
            ModelKind::Tl => BuiltModel::LowRank(build_tl_model(&kernel, self.tunable_bases(p)?, noise)?),
            ModelKind::Hilbert => BuiltModel::LowRank(build_hilbert_model(&kernel, self.hilbert_bases()?, noise)?),
            ModelKind::Vfe => BuiltModel::Vfe(Vfe::new(kernel, noise, Self::inducing_from(p, dim)?)?),
        })
    }
}

/// Evenly spaced empirical quantiles in 1D; in 2D, training rows at evenly
/// spaced ranks of the first coordinate.
pub fn initial_inducing(x: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    if x.ncols() == 1 {
        return quantile_inducing(x, m);
    }
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[(a, 0)].total_cmp(&x[(b, 0)]).then(x[(a, 1)].total_cmp(&x[(b, 1)])));
    let rows: Vec<usize> = (0..m)
        .map(|i| {
            let q = if m == 1 { 0.5 } else { i as f64 / (m - 1) as f64 };
            order[(q * (n - 1) as f64).round() as usize]
        })
        .collect();
    x.select_rows(&rows)
}

#[derive(Debug, Clone)]
pub enum BuiltModel {
    Full(FullGp),
    LowRank(LowRankModel),
    Vfe(Vfe),
}

impl BuiltModel {
    pub fn fit(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Fitted> {
        Ok(match self {
            BuiltModel::Full(m) => Fitted::Full(m.fit(x, y)?),
            BuiltModel::LowRank(m) => Fitted::LowRank(m.fit(x, y)?),
            BuiltModel::Vfe(m) => Fitted::Vfe(m.fit(x, y)?),
        })
    }
}

/// A model conditioned on training data.
#[derive(Debug, Clone)]
pub enum Fitted {
    Full(FullGpPosterior),
    LowRank(LowRankPosterior),
    Vfe(VfePosterior),
}

impl Fitted {
    /// NLL, or −ELBO for the sparse variational model.
    pub fn objective(&self) -> f64 {
        match self {
            Fitted::Full(f) => f.nll(),
            Fitted::LowRank(f) => f.nll(),
            Fitted::Vfe(f) => -f.elbo(),
        }
    }

    pub fn predict(&self, xs: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        match self {
            Fitted::Full(f) => f.predict(xs),
            Fitted::LowRank(f) => f.predict(xs),
            Fitted::Vfe(f) => f.predict(xs),
        }
    }

    pub fn jitter(&self) -> f64 {
        match self {
            Fitted::Full(f) => f.jitter(),
            Fitted::LowRank(f) => f.jitter(),
            Fitted::Vfe(f) => f.jitter(),
        }
    }
}

struct TlStats {
    key: (u64, u64),
    gram: DMatrix<f64>,
    psi_t_y: DVector<f64>,
}

/// Training objective with cached feature statistics: the Hilbert `ΦᵀΦ` is
/// computed once, the tunable `ΨᵀΨ` once per `(α, β)`. A tunable basis with
/// more features than training rows goes through the `N × N` form instead.
pub struct Objective<'a> {
    spec: &'a ModelSpec,
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    template: ParameterVector,
    yty: f64,
    hilbert: Option<(DMatrix<f64>, DVector<f64>)>,
    tl: RefCell<Option<TlStats>>,
    evaluations: Cell<usize>,
    penalties: Cell<usize>,
    max_jitter: Cell<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(spec: &'a ModelSpec, x: &'a DMatrix<f64>, y: &'a DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        let template = spec.initial_parameters(x)?;
        let hilbert = if spec.kind == ModelKind::Hilbert {
            let phi = crate::basis::hilbert_tensor_features(&spec.hilbert_bases()?, x)?.0;
            Some((phi.tr_mul(&phi), phi.tr_mul(y)))
        } else {
            None
        };
        Ok(Objective {
            spec,
            x,
            y,
            template,
            yty: y.norm_squared(),
            hilbert,
            tl: RefCell::new(None),
            evaluations: Cell::new(0),
            penalties: Cell::new(0),
            max_jitter: Cell::new(0.0),
        })
    }

    pub fn template(&self) -> &ParameterVector {
        &self.template
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    /// Evaluations that hit the penalty value.
    pub fn penalties(&self) -> usize {
        self.penalties.get()
    }

    /// Largest diagonal jitter seen in any successful evaluation.
    pub fn max_jitter(&self) -> f64 {
        self.max_jitter.get()
    }

    pub fn try_value(&self, p: &ParameterVector) -> Result<f64> {
        let model = self.spec.build(p, self.x.ncols())?;
        let n = self.y.len();
        let (value, jitter) = match (&model, self.spec.kind) {
            (BuiltModel::LowRank(m), ModelKind::Hilbert) => {
                let (gram, b) = self.hilbert.as_ref().expect("precomputed for hilbert");
                let (nll, core, _) = lowrank_nll_parts(gram, b, self.yty, n, m.prior.factor()?, m.noise)?;
                (nll, core.prior.jitter().max(core.core.jitter()))
            }
            (BuiltModel::LowRank(m), ModelKind::Tl) if n < m.rank() => m.nll_dual(self.x, self.y)?,
            (BuiltModel::LowRank(m), ModelKind::Tl) => {
                let key = (p.get("alpha").unwrap_or(0.0).to_bits(), p.get("beta").unwrap_or(0.0).to_bits());
                let mut cache = self.tl.borrow_mut();
                if cache.as_ref().is_none_or(|c| c.key != key) {
                    let psi = m.features(self.x)?;
                    *cache = Some(TlStats { key, gram: psi.tr_mul(&psi), psi_t_y: psi.tr_mul(self.y) });
                }
                let stats = cache.as_ref().expect("filled above");
                let (nll, core, _) =
                    lowrank_nll_parts(&stats.gram, &stats.psi_t_y, self.yty, n, m.prior.factor()?, m.noise)?;
                (nll, core.prior.jitter().max(core.core.jitter()))
            }
            _ => {
                let fitted = model.fit(self.x, self.y)?;
                (fitted.objective(), fitted.jitter())
            }
        };
        if value.is_finite() && jitter > self.max_jitter.get() {
            self.max_jitter.set(jitter);
        }
        Ok(value)
    }

    /// Objective with failures mapped to [`PENALTY`].
    pub fn value(&self, p: &ParameterVector) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        match self.try_value(p) {
            Ok(v) if v.is_finite() => v,
            _ => {
                self.penalties.set(self.penalties.get() + 1);
                PENALTY
            }
        }
    }

    /// Objective at optimizer coordinates (all entries, frozen included).
    pub fn value_packed(&self, z: &[f64]) -> f64 {
        match self.template.unpack(z) {
            Ok(p) => self.value(&p),
            Err(_) => PENALTY,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    pub minimize: MinimizeOptions,
    /// Alternative initial kernels (same structure); the configured kernel
    /// is always the first start.
    pub kernel_starts: Vec<KernelSpec>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ParameterVector,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub start_index: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub penalties: usize,
    pub max_jitter: f64,
    pub termination: Termination,
    pub model: BuiltModel,
    pub fitted: Fitted,
}

/// Optimizes the spec's free parameters and conditions the final model.
pub fn fit(spec: &ModelSpec, x: &DMatrix<f64>, y: &DVector<f64>, opts: &FitOptions) -> Result<FitResult> {
    let obj = Objective::new(spec, x, y)?;
    let base = obj.template().clone();
    let mut starts = vec![base.pack()];
    for k in &opts.kernel_starts {
        starts.push(spec.parameters_with_kernel(&base, k)?.pack());
    }
    let frozen = base.frozen_mask();
    let (start_index, r) = multistart(|z| obj.value_packed(z), &starts, &frozen, &opts.minimize)?;
    let params = base.unpack(&r.x)?;
    let model = spec.build(&params, x.ncols())?;
    let fitted = model.fit(x, y)?;
    Ok(FitResult {
        objective: fitted.objective(),
        params,
        trace: r.trace,
        start_index,
        iterations: r.iterations,
        evaluations: obj.evaluations(),
        penalties: obj.penalties(),
        max_jitter: obj.max_jitter().max(fitted.jitter()),
        termination: r.termination,
        model,
        fitted,
    })
}
