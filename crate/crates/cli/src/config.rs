//! Experiment description, read from TOML.
//!
//! ```toml
//! name = "sunspot-tl"
//!
//! [dataset]
//! source = "csv"            # csv | snelson_synth | field2d_synth
//! path = "sunspots.csv"     # relative to the data directory
//! x_columns = ["year"]
//! y_column = "sunactivity"
//!
//! [split]
//! rule = "window_sample"    # random_fraction | range | index_list | window_sample
//! lo = 1700
//! hi = 1962
//! n_train = 131
//! seed = 0
//!
//! [model]
//! kind = "tl"               # full | tl | hilbert | vfe
//! kernel = "matern52*cos(len=11)"
//! m = [100]
//! domain = [[1689, 2010]]   # or: augment = 0.1
//!
//! [optimizer]
//! max_iter = 500
//!
//! [output]
//! dir = "runs/sunspot-tl"
//! ```
//!
//! Hyperparameters left out of the kernel expression default to: variance =
//! variance of the training targets (about 1 once standardized), lengthscale
//! = training input span / 10 per dimension, period = span / 10. Noise
//! defaults to a tenth of the target variance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use specgp_core::ModelKind;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Csv,
    SnelsonSynth,
    Field2dSynth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub x_columns: Vec<String>,
    #[serde(default)]
    pub y_column: Option<String>,
    /// Size of a synthetic set.
    #[serde(default)]
    pub n: Option<usize>,
    /// Generator seed of a synthetic set.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    RandomFraction,
    Range,
    IndexList,
    WindowSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub rule: SplitKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    /// Test windows on the first input; defaults to three evenly spaced
    /// windows covering 20% of the span.
    #[serde(default)]
    pub test_ranges: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub test_indices: Option<Vec<usize>>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub n_train: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            rule: SplitKind::RandomFraction,
            seed: 0,
            train_fraction: Some(0.8),
            test_ranges: None,
            test_indices: None,
            lo: None,
            hi: None,
            n_train: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub kernel: String,
    #[serde(default)]
    pub noise: Option<f64>,
    /// Basis functions per input dimension; a single value is used for
    /// every dimension.
    #[serde(default)]
    pub m: Option<Vec<usize>>,
    #[serde(default)]
    pub domain: Option<Vec<[f64; 2]>>,
    /// Pad the input range by this fraction on each side when no domain is
    /// given.
    #[serde(default)]
    pub augment: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Number of inducing inputs (vfe); defaults to the first `m`.
    #[serde(default)]
    pub inducing: Option<usize>,
    /// Parameters held fixed: names such as `noise`, `alpha`, or the groups
    /// `kernel`, `basis`, `inducing`.
    #[serde(default)]
    pub frozen: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Extra starting kernels (same structure as `model.kernel`).
    #[serde(default)]
    pub kernel_starts: Vec<String>,
}

fn default_max_iter() -> usize {
    500
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iter: default_max_iter(), tol: default_tol(), kernel_starts: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    /// Grid size for plot data (per axis in 2D: its square root).
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_grid() -> usize {
    400
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, grid_points: default_grid() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m_values: Vec<usize>,
    pub models: Vec<ModelKind>,
    /// Add an exact-GP row as the reference.
    #[serde(default = "yes")]
    pub include_full: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(k) = o.model {
            if k != self.model.kind {
                self.name = None;
            }
            self.model.kind = k;
        }
        if let Some(m) = o.m {
            self.model.m = Some(vec![m]);
            self.model.inducing = Some(m);
        }
        if o.alpha.is_some() {
            self.model.alpha = o.alpha;
        }
        if o.beta.is_some() {
            self.model.beta = o.beta;
        }
        if let Some(s) = o.seed {
            self.split.seed = s;
        }
        if o.out.is_some() {
            self.output.dir = o.out.clone();
        }
        self.validate()
    }

    /// Label used in reports: the config name, else the model kind.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.model.kind.name().to_string())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let d = &self.dataset;
        if d.source == DatasetSource::Csv {
            if d.path.is_none() || d.x_columns.is_empty() || d.y_column.is_none() {
                return bad("csv dataset needs path, x_columns and y_column".into());
            }
            if d.x_columns.len() > 2 {
                return bad("at most two input columns are supported".into());
            }
        }
        specgp_core::KernelSpec::parse_with_defaults(&self.model.kernel, &Default::default())
            .map_err(|e| CliError::Config(format!("kernel expression: {e}")))?;
        for k in &self.optimizer.kernel_starts {
            specgp_core::KernelSpec::parse_with_defaults(k, &Default::default())
                .map_err(|e| CliError::Config(format!("kernel start: {e}")))?;
        }
        let m = &self.model;
        // A sweep supplies m per run.
        let sized = self.sweep.is_some();
        match m.kind {
            ModelKind::Tl | ModelKind::Hilbert => {
                if !sized && m.m.as_ref().is_none_or(|v| v.is_empty()) {
                    return bad(format!("model kind {} needs m", m.kind.name()));
                }
                if m.domain.is_none() && m.augment.is_none() {
                    return bad(format!("model kind {} needs a domain or an augment fraction", m.kind.name()));
                }
            }
            ModelKind::Vfe => {
                if !sized && m.inducing.is_none() && m.m.as_ref().is_none_or(|v| v.is_empty()) {
                    return bad("vfe needs the number of inducing inputs".into());
                }
            }
            ModelKind::Full => {}
        }
        if let Some(v) = &m.m {
            if v.iter().any(|&x| x < 1) {
                return bad("m must be positive".into());
            }
        }
        if let Some(dom) = &m.domain {
            if dom.iter().any(|[a, b]| !(a < b)) {
                return bad("every domain needs lb < ub".into());
            }
        }
        let s = &self.split;
        let missing = match s.rule {
            SplitKind::RandomFraction => s.train_fraction.is_none(),
            SplitKind::IndexList => s.test_indices.is_none(),
            SplitKind::WindowSample => s.lo.is_none() || s.hi.is_none() || s.n_train.is_none(),
            SplitKind::Range => false,
        };
        if missing {
            return bad(format!("split rule {:?} is missing its parameters", s.rule));
        }
        if let Some(sw) = &self.sweep {
            if sw.m_values.is_empty() || sw.models.is_empty() {
                return bad("sweep needs m_values and models".into());
            }
        }
        Ok(())
    }
}
