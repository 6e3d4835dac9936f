//! Datasets, train/test splits, target standardization and synthetic
//! stand-ins for benchmark data that is not shipped.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs `x` (`N × D`, `D ∈ {1, 2}`) and targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if y.is_empty() {
            return Err(Error::InvalidParameter("dataset has no rows".into()));
        }
        if !(1..=2).contains(&x.ncols()) {
            return Err(Error::InvalidParameter(format!("input dimension must be 1 or 2, got {}", x.ncols())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset contains non-finite values".into()));
        }
        Ok(Dataset { name: name.into(), x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn y_mean(&self) -> f64 {
        self.y.mean()
    }

    /// Rows `idx`, in that order. May be empty.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: self.x.select_rows(idx),
            y: self.y.select_rows(idx),
        }
    }
}

/// Reads a comma-separated file with a header row.
pub fn load_table(path: impl AsRef<Path>, x_columns: &[&str], y_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let load_err = |message: String| Error::Load { path: path.display().to_string(), message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| load_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| load_err(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(format!("missing column '{name}'")))
    };
    let xi: Vec<usize> = x_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let yi = find(y_column)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        // Header is line 1.
        let line = k + 2;
        let rec = rec.map_err(|e| load_err(format!("line {line}: {e}")))?;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| load_err(format!("line {line}, column '{name}': cannot parse '{raw}'")))?;
            if !v.is_finite() {
                return Err(load_err(format!("line {line}, column '{name}': non-finite value")));
            }
            Ok(v)
        };
        for (c, name) in xi.iter().zip(x_columns) {
            xs.push(cell(*c, name)?);
        }
        ys.push(cell(yi, y_column)?);
    }
    let n = ys.len();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Dataset::new(name, DMatrix::from_row_slice(n, x_columns.len(), &xs), DVector::from_vec(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// Uniformly random train subset of the given fraction.
    RandomFraction { train_fraction: f64 },
    /// Explicit test rows.
    IndexList { test: Vec<usize> },
    /// Test rows are those whose first input lies in any of the intervals.
    Range { test: Vec<(f64, f64)> },
    /// Sample `n_train` training rows among those with first input in
    /// `[lo, hi]`; the rest of that window is the interpolation test set and
    /// everything outside it the extrapolation test set.
    WindowSample { lo: f64, hi: f64, n_train: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestTag {
    Interpolation,
    Extrapolation,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub rule: SplitRule,
    pub seed: u64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// One tag per test row.
    pub test_tags: Vec<TestTag>,
}

/// Deterministic given `seed`. Index lists come out sorted.
pub fn split(ds: &Dataset, rule: &SplitRule, seed: u64) -> Result<Split> {
    let n = ds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = |i: usize| ds.x[(i, 0)];
    let mut is_train = vec![false; n];
    let mut tags = vec![TestTag::Interpolation; n];
    match rule {
        SplitRule::RandomFraction { train_fraction } => {
            if !(0.0..=1.0).contains(train_fraction) {
                return Err(Error::InfeasibleSplit(format!("train fraction {train_fraction} outside [0, 1]")));
            }
            let k = (train_fraction * n as f64).round() as usize;
            if k == 0 || k == n {
                return Err(Error::InfeasibleSplit(format!("{k} of {n} rows for training leaves a side empty")));
            }
            for i in sample(&mut rng, n, k) {
                is_train[i] = true;
            }
        }
        SplitRule::IndexList { test } => {
            is_train = vec![true; n];
            for &i in test {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                is_train[i] = false;
            }
        }
        SplitRule::Range { test } => {
            for (i, t) in is_train.iter_mut().enumerate() {
                *t = !test.iter().any(|(a, b)| (*a..=*b).contains(&first(i)));
            }
        }
        SplitRule::WindowSample { lo, hi, n_train } => {
            let window: Vec<usize> = (0..n).filter(|&i| (*lo..=*hi).contains(&first(i))).collect();
            if *n_train == 0 || *n_train > window.len() {
                return Err(Error::InfeasibleSplit(format!(
                    "cannot draw {n_train} training rows from {} in [{lo}, {hi}]",
                    window.len()
                )));
            }
            for k in sample(&mut rng, window.len(), *n_train) {
                is_train[window[k]] = true;
            }
            for (i, tag) in tags.iter_mut().enumerate() {
                if !(*lo..=*hi).contains(&first(i)) {
                    *tag = TestTag::Extrapolation;
                }
            }
        }
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| is_train[i]).collect();
    let test_idx: Vec<usize> = (0..n).filter(|&i| !is_train[i]).collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::InfeasibleSplit("split leaves the train or test side empty".into()));
    }
    Ok(Split {
        train: ds.subset(&train_idx),
        test: ds.subset(&test_idx),
        rule: rule.clone(),
        seed,
        test_tags: test_idx.iter().map(|&i| tags[i]).collect(),
        train_idx,
        test_idx,
    })
}

/// `y_std = (y - shift) / scale` with the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub shift: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn fit(y: &DVector<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidParameter("standardization needs at least 2 targets".into()));
        }
        let mean = y.mean();
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(var > 0.0) {
            return Err(Error::InvalidParameter("targets have zero variance".into()));
        }
        Ok(Standardization { shift: mean, scale: var.sqrt() })
    }

    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| (v - self.shift) / self.scale)
    }

    pub fn invert(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| v * self.scale + self.shift)
    }
}

/// Standardizes the targets of `ds`.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let s = Standardization::fit(&ds.y)?;
    Ok((Dataset { name: ds.name.clone(), x: ds.x.clone(), y: s.apply(&ds.y) }, s))
}

/// Per-dimension `[min - f·range, max + f·range]`.
pub fn augment_domain(x: &DMatrix<f64>, fraction: f64) -> Result<Vec<(f64, f64)>> {
    if !(fraction >= 0.0 && fraction.is_finite()) {
        return Err(Error::InvalidParameter(format!("augmentation fraction must be >= 0, got {fraction}")));
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidParameter("no inputs".into()));
    }
    (0..x.ncols())
        .map(|d| {
            let c = x.column(d);
            let (lo, hi) = (c.min(), c.max());
            let range = hi - lo;
            if !(range > 0.0) {
                return Err(Error::InvalidParameter(format!("input dimension {d} has zero range")));
            }
            Ok((lo - fraction * range, hi + fraction * range))
        })
        .collect()
}

/// Curve behind [`synth_snelson_like`].
pub fn snelson_curve(x: f64) -> f64 {
    (2.0 * x).sin() + 0.4 * (5.0 * x).cos() + 0.25 * x - 0.75
}

/// 1D stand-in for the classic 200-point toy set: `x ~ U[0, 6]`, sorted,
/// `y = snelson_curve(x) + N(0, 0.3²)`.
pub fn synth_snelson_like(n: usize, seed: u64) -> Dataset {
    synth_snelson_with_noise(n, seed, 0.3)
}

pub fn synth_snelson_with_noise(n: usize, seed: u64, noise_std: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..6.0)).collect();
    x.sort_by(f64::total_cmp);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let y: Vec<f64> = x.iter().map(|&v| snelson_curve(v) + noise_std * noise.sample(&mut rng)).collect();
    Dataset { name: "snelson_synth".into(), x: DMatrix::from_column_slice(n, 1, &x), y: DVector::from_vec(y) }
}

/// Smooth surface behind [`synth_field_2d`].
pub fn field_surface(x1: f64, x2: f64) -> f64 {
    (0.6 * x1).sin() * (0.4 * x2).cos() + 0.8 * (-((x1 - 6.5).powi(2) + (x2 - 3.0).powi(2)) / 3.0).exp()
        - 0.5 * (-((x1 - 2.5).powi(2) + (x2 - 7.0).powi(2)) / 5.0).exp()
}

/// 2D stand-in for a spatial field: inputs uniform on `[0, 10]²`,
/// `y = field_surface + N(0, 0.1²)`.
pub fn synth_field_2d(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.1).expect("valid std");
    let mut xs = Vec::with_capacity(2 * n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        xs.extend([a, b]);
        ys.push(field_surface(a, b) + noise.sample(&mut rng));
    }
    Dataset { name: "field2d_synth".into(), x: DMatrix::from_row_slice(n, 2, &xs), y: DVector::from_vec(ys) }
}
