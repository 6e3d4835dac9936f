//! Running experiments: data preparation, fitting, scoring and output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use specgp_core::data::{self, split, SplitRule, TestTag};
use specgp_core::kernels::KernelDefaults;
use specgp_core::metrics::{mnlp, nmse};
use specgp_core::optimize::{default_alpha, fit, FitOptions, MinimizeOptions, Termination};
use specgp_core::{
    DMatrix, DVector, Dataset, KernelSpec, MetricReport, ModelKind, ModelSpec, ParameterVector,
    PredictiveDistribution, Split, Standardization,
};

use crate::config::{DatasetSource, ExperimentConfig, SplitKind};
use crate::error::CliError;
use crate::output::{fmt12, round12, write_grid, write_json, write_predictions};

/// Environment variable naming the default data directory.
pub const DATA_ENV: &str = "SPECGP_DATA";

/// `--data-dir`, else `$SPECGP_DATA`, else `./data`.
pub fn resolve_data_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

pub fn load_dataset(cfg: &ExperimentConfig, data_dir: &Path) -> Result<Dataset, CliError> {
    let d = &cfg.dataset;
    Ok(match d.source {
        DatasetSource::Csv => {
            let rel = d.path.as_deref().expect("validated");
            let path = if Path::new(rel).is_absolute() { PathBuf::from(rel) } else { data_dir.join(rel) };
            if !path.exists() {
                return Err(CliError::Data(format!("{} not found", path.display())));
            }
            let cols: Vec<&str> = d.x_columns.iter().map(String::as_str).collect();
            data::load_table(&path, &cols, d.y_column.as_deref().expect("validated"))?
        }
        DatasetSource::SnelsonSynth => data::synth_snelson_like(d.n.unwrap_or(200), d.seed),
        DatasetSource::Field2dSynth => data::synth_field_2d(d.n.unwrap_or(1250), d.seed),
    })
}

/// Three evenly spaced test windows covering 20% of the first input's span.
pub fn default_gap_windows(x: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let (lo, hi) = (x.column(0).min(), x.column(0).max());
    let span = hi - lo;
    let half = span * 0.2 / 6.0;
    [0.25, 0.5, 0.75].iter().map(|c| (lo + c * span - half, lo + c * span + half)).collect()
}

pub fn make_split(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Split, CliError> {
    let s = &cfg.split;
    let rule = match s.rule {
        SplitKind::RandomFraction => SplitRule::RandomFraction { train_fraction: s.train_fraction.expect("validated") },
        SplitKind::IndexList => SplitRule::IndexList { test: s.test_indices.clone().expect("validated") },
        SplitKind::Range => SplitRule::Range {
            test: match &s.test_ranges {
                Some(r) => r.iter().map(|[a, b]| (*a, *b)).collect(),
                None => default_gap_windows(&ds.x),
            },
        },
        SplitKind::WindowSample => SplitRule::WindowSample {
            lo: s.lo.expect("validated"),
            hi: s.hi.expect("validated"),
            n_train: s.n_train.expect("validated"),
        },
    };
    Ok(split(ds, &rule, s.seed)?)
}

fn span(x: &DMatrix<f64>, d: usize) -> f64 {
    let c = x.column(d);
    (c.max() - c.min()).max(f64::MIN_POSITIVE)
}

/// Model, kernel and optimizer settings resolved against the data.
pub struct Prepared {
    pub split: Split,
    pub standardization: Option<Standardization>,
    /// Training targets in model units.
    pub y_train: DVector<f64>,
    pub spec: ModelSpec,
    pub fit_options: FitOptions,
}

pub fn prepare(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Prepared, CliError> {
    let split = make_split(cfg, ds)?;
    let dim = ds.dim();
    let (y_train, standardization) = if cfg.dataset.standardize {
        let s = Standardization::fit(&split.train.y)?;
        (s.apply(&split.train.y), Some(s))
    } else {
        (split.train.y.clone(), None)
    };
    let var = {
        let m = y_train.mean();
        y_train.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y_train.len().max(2).saturating_sub(1) as f64
    };
    let defaults = KernelDefaults {
        variance: if var > 0.0 { var } else { 1.0 },
        lengthscales: (0..dim).map(|d| span(&split.train.x, d) / 10.0).collect(),
        period: span(&split.train.x, 0) / 10.0,
    };
    let parse = |e: &str| KernelSpec::parse_with_defaults(e, &defaults).map_err(CliError::from);
    let kernel = parse(&cfg.model.kernel)?;
    let kernel_starts = cfg.optimizer.kernel_starts.iter().map(|e| parse(e)).collect::<Result<Vec<_>, _>>()?;

    let m = &cfg.model;
    let mut spec = ModelSpec::new(m.kind, kernel, m.noise.unwrap_or(0.1 * defaults.variance));
    if let Some(v) = &m.m {
        spec.m = if v.len() == 1 { vec![v[0]; dim] } else { v.clone() };
        if spec.m.len() != dim {
            return Err(CliError::Config(format!("m has {} entries for {dim} input dimensions", spec.m.len())));
        }
    }
    if matches!(m.kind, ModelKind::Tl | ModelKind::Hilbert) {
        if spec.m.is_empty() {
            return Err(CliError::Config(format!("model kind {} needs m", m.kind.name())));
        }
        spec.domain = match (&m.domain, m.augment) {
            (Some(d), _) => d.iter().map(|[a, b]| (*a, *b)).collect(),
            // All inputs (train and test locations) define the box, as the
            // basis has to cover where predictions are made.
            (None, Some(f)) => data::augment_domain(&ds.x, f)?,
            (None, None) => unreachable!("validated"),
        };
        if spec.domain.len() != dim {
            return Err(CliError::Config(format!("domain has {} entries for {dim} input dimensions", spec.domain.len())));
        }
    }
    if m.kind == ModelKind::Vfe {
        spec.m = vec![m.inducing.unwrap_or_else(|| spec.m.first().copied().unwrap_or(0))];
        if spec.m[0] == 0 || spec.m[0] > split.train.len() {
            return Err(CliError::Config(format!("{} inducing inputs for {} training points", spec.m[0], split.train.len())));
        }
    }
    if m.kind == ModelKind::Tl {
        spec.alpha = m.alpha.unwrap_or_else(|| default_alpha(spec.domain[0], spec.m[0]));
        spec.beta = m.beta.unwrap_or(0.0);
    }
    spec.frozen = m.frozen.clone();
    let fit_options = FitOptions {
        minimize: MinimizeOptions { max_iter: cfg.optimizer.max_iter, grad_tol: cfg.optimizer.tol, ..Default::default() },
        kernel_starts,
    };
    Ok(Prepared { split, standardization, y_train, spec, fit_options })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetReport {
    pub tag: TestTag,
    pub n_test: usize,
    pub nmse: f64,
    pub mnlp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    #[serde(flatten)]
    pub report: MetricReport,
    pub subsets: Vec<SubsetReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub parameters: ParameterVector,
    /// Objective in standardized target units.
    pub objective_model_units: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub penalty_evaluations: usize,
    pub max_jitter: f64,
    pub start_index: usize,
    pub termination: Termination,
}

pub struct RunResult {
    pub config: ExperimentConfig,
    pub metrics: MetricsRecord,
    pub fit: FitSummary,
    pub standardization: Option<Standardization>,
    pub test_x: DMatrix<f64>,
    pub test_y: Vec<f64>,
    pub test_tags: Vec<TestTag>,
    pub predictions: PredictiveDistribution,
    pub grid_x: DMatrix<f64>,
    pub grid: PredictiveDistribution,
    pub n_train: usize,
    pub wall_time_s: f64,
}

/// Dense plotting grid over the data range.
pub fn plot_grid(x: &DMatrix<f64>, points: usize) -> DMatrix<f64> {
    let dim = x.ncols();
    let per_axis = if dim == 1 { points.max(2) } else { ((points as f64).sqrt() as usize).max(2) };
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let (lo, hi) = (x.column(d).min(), x.column(d).max());
            (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64).collect()
        })
        .collect();
    let total = per_axis.pow(dim as u32);
    DMatrix::from_fn(total, dim, |r, d| axes[d][(r / per_axis.pow(d as u32)) % per_axis])
}

pub fn execute(cfg: &ExperimentConfig, data_dir: &Path) -> Result<RunResult, CliError> {
    let ds = load_dataset(cfg, data_dir)?;
    execute_on(cfg, &ds)
}

pub fn execute_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunResult, CliError> {
    let start = Instant::now();
    let prep = prepare(cfg, ds)?;
    let train = &prep.split.train;
    let test = &prep.split.test;
    let r = fit(&prep.spec, &train.x, &prep.y_train, &prep.fit_options)?;
    let unscale = |p: PredictiveDistribution| match prep.standardization {
        Some(s) => p.rescaled(s.shift, s.scale),
        None => p,
    };
    let predictions = unscale(r.fitted.predict(&test.x)?);
    let grid_x = plot_grid(&ds.x, cfg.output.grid_points);
    let grid = unscale(r.fitted.predict(&grid_x)?);
    let n_train = train.len() as f64;
    let objective = r.objective + prep.standardization.map_or(0.0, |s| n_train * s.scale.ln());
    let train_mean = train.y_mean();
    let report = MetricReport::compute(
        &cfg.label(),
        cfg.split.seed,
        &predictions.mean,
        &predictions.variance,
        test.y.as_slice(),
        train_mean,
        objective,
    )?;
    let mut subsets = Vec::new();
    for tag in [TestTag::Interpolation, TestTag::Extrapolation] {
        let idx: Vec<usize> = (0..test.len()).filter(|&i| prep.split.test_tags[i] == tag).collect();
        if idx.is_empty() || idx.len() == test.len() {
            continue;
        }
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let (mu, var, y) = (pick(&predictions.mean), pick(&predictions.variance), pick(test.y.as_slice()));
        subsets.push(SubsetReport {
            tag,
            n_test: idx.len(),
            nmse: round12(nmse(&mu, &y, train_mean)?),
            mnlp: round12(mnlp(&mu, &var, &y)?),
        });
    }
    let report = MetricReport {
        nmse: round12(report.nmse),
        mnlp: round12(report.mnlp),
        nll_or_neg_elbo: round12(report.nll_or_neg_elbo),
        ..report
    };
    Ok(RunResult {
        config: cfg.clone(),
        metrics: MetricsRecord { report, subsets },
        fit: FitSummary {
            parameters: r.params,
            objective_model_units: r.objective,
            iterations: r.iterations,
            evaluations: r.evaluations,
            penalty_evaluations: r.penalties,
            max_jitter: r.max_jitter,
            start_index: r.start_index,
            termination: r.termination,
        },
        standardization: prep.standardization,
        test_x: test.x.clone(),
        test_y: test.y.iter().copied().collect(),
        test_tags: prep.split.test_tags.clone(),
        predictions,
        grid_x,
        grid,
        n_train: train.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    fit: &'a FitSummary,
    standardization: Option<Standardization>,
    n_train: usize,
    n_test: usize,
    wall_time_s: f64,
}

/// Writes `predictions.csv`, `grid.csv`, `metrics.json` and `manifest.json`.
pub fn write_run(res: &RunResult, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let tags: Vec<&str> = res
        .test_tags
        .iter()
        .map(|t| match t {
            TestTag::Interpolation => "interpolation",
            TestTag::Extrapolation => "extrapolation",
        })
        .collect();
    write_predictions(&dir.join("predictions.csv"), &res.test_x, &res.test_y, &res.predictions, &tags)?;
    write_grid(&dir.join("grid.csv"), &res.grid_x, &res.grid)?;
    write_json(&dir.join("metrics.json"), &res.metrics)?;
    let manifest = Manifest {
        tool: "specgp",
        version: env!("CARGO_PKG_VERSION"),
        config: &res.config,
        fit: &res.fit,
        standardization: res.standardization,
        n_train: res.n_train,
        n_test: res.test_y.len(),
        wall_time_s: res.wall_time_s,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(())
}

/// One row of a sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub m: Option<usize>,
    pub nmse: Option<f64>,
    pub mnlp: Option<f64>,
    pub nll_or_neg_elbo: Option<f64>,
    pub status: String,
}

fn row_from(model: &str, m: Option<usize>, r: Result<RunResult, CliError>) -> (SweepRow, Option<RunResult>) {
    match r {
        Ok(res) => (
            SweepRow {
                model: model.to_string(),
                m,
                nmse: Some(res.metrics.report.nmse),
                mnlp: Some(res.metrics.report.mnlp),
                nll_or_neg_elbo: Some(res.metrics.report.nll_or_neg_elbo),
                status: "ok".into(),
            },
            Some(res),
        ),
        Err(e) => (
            SweepRow { model: model.to_string(), m, nmse: None, mnlp: None, nll_or_neg_elbo: None, status: format!("failed: {e}") },
            None,
        ),
    }
}

/// Runs every (model, m) pair of the sweep section, plus an exact-GP
/// reference row. Per-run outputs go under `<out>/<model>_m<m>/`.
pub fn sweep(cfg: &ExperimentConfig, ds: &Dataset, out: Option<&Path>) -> Result<Vec<SweepRow>, CliError> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("config has no [sweep] section".into()))?;
    let mut rows = Vec::new();
    let mut finish = |name: String, m: Option<usize>, r: Result<RunResult, CliError>| -> Result<(), CliError> {
        let (row, res) = row_from(&name, m, r);
        if let (Some(dir), Some(res)) = (out, res) {
            let sub = match m {
                Some(m) => format!("{name}_m{m}"),
                None => name.clone(),
            };
            write_run(&res, &dir.join(sub))?;
        }
        rows.push(row);
        Ok(())
    };
    if sw.include_full {
        let mut c = cfg.clone();
        c.model.kind = ModelKind::Full;
        c.name = Some("full".into());
        finish("full".into(), None, execute_on(&c, ds))?;
    }
    for &kind in &sw.models {
        for &m in &sw.m_values {
            let mut c = cfg.clone();
            c.model.kind = kind;
            c.model.m = Some(vec![m]);
            c.model.inducing = Some(m);
            c.name = Some(kind.name().into());
            c.validate()?;
            finish(kind.name().into(), Some(m), execute_on(&c, ds))?;
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), sweep_table(&rows))?;
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt12).unwrap_or_default()
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("model,m,nmse,mnlp,nll_or_neg_elbo,status\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model,
            r.m.map(|m| m.to_string()).unwrap_or_default(),
            opt(r.nmse),
            opt(r.mnlp),
            opt(r.nll_or_neg_elbo),
            r.status.replace(',', ";"),
        ));
    }
    s
}

/// Consolidated multi-method table.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub method: String,
    pub nmse: f64,
    pub mnlp: f64,
    pub nll_or_neg_elbo: f64,
    /// Columns in which this row is the smallest.
    pub best: Vec<&'static str>,
}

/// Runs each config on the shared data and split and flags the best value
/// per column.
pub fn compare(cfgs: &[ExperimentConfig], data_dir: &Path) -> Result<Vec<CompareRow>, CliError> {
    if cfgs.len() < 2 {
        return Err(CliError::Config("compare needs at least two configs".into()));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.dataset != first.dataset || c.split != first.split {
            return Err(CliError::Config(format!(
                "'{}' and '{}' do not share dataset and split",
                first.label(),
                c.label()
            )));
        }
    }
    let ds = load_dataset(first, data_dir)?;
    let mut rows = Vec::new();
    for c in cfgs {
        let r = execute_on(c, &ds)?;
        let m = &r.metrics.report;
        rows.push(CompareRow { method: c.label(), nmse: m.nmse, mnlp: m.mnlp, nll_or_neg_elbo: m.nll_or_neg_elbo, best: vec![] });
    }
    type Column = (&'static str, fn(&CompareRow) -> f64);
    let cols: [Column; 3] = [("nmse", |r| r.nmse), ("mnlp", |r| r.mnlp), ("nll_or_neg_elbo", |r| r.nll_or_neg_elbo)];
    for (name, get) in cols {
        let best = rows.iter().map(get).fold(f64::INFINITY, f64::min);
        for r in rows.iter_mut() {
            if get(r) == best {
                r.best.push(name);
            }
        }
    }
    Ok(rows)
}

pub fn compare_table(rows: &[CompareRow]) -> String {
    let mut s = String::from("method,nmse,mnlp,nll_or_neg_elbo,best\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            fmt12(r.nmse),
            fmt12(r.mnlp),
            fmt12(r.nll_or_neg_elbo),
            r.best.join(";")
        ));
    }
    s
}
