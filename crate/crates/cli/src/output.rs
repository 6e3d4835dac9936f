use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use specgp_core::{DMatrix, PredictiveDistribution};

/// Rounds to 12 significant digits and prints the shortest form of the
/// result, so reruns produce byte-identical files.
pub fn fmt12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{}", round12(v))
}

pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn input_header(dim: usize) -> String {
    (0..dim).map(|d| format!("x{d}")).collect::<Vec<_>>().join(",")
}

fn input_cells(x: &DMatrix<f64>, i: usize) -> String {
    (0..x.ncols()).map(|d| fmt12(x[(i, d)])).collect::<Vec<_>>().join(",")
}

/// Test-set predictions with observed targets and an optional tag column.
pub fn write_predictions(
    path: &Path,
    x: &DMatrix<f64>,
    y: &[f64],
    pred: &PredictiveDistribution,
    tags: &[&str],
) -> std::io::Result<()> {
    let (lo, hi) = (pred.lower95(), pred.upper95());
    let mut out = format!("{},y,mean,variance,lower95,upper95,tag\n", input_header(x.ncols()));
    for i in 0..x.nrows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            input_cells(x, i),
            fmt12(y[i]),
            fmt12(pred.mean[i]),
            fmt12(pred.variance[i]),
            fmt12(lo[i]),
            fmt12(hi[i]),
            tags.get(i).copied().unwrap_or("test"),
        );
    }
    fs::write(path, out)
}

/// Predictive mean and band on a dense grid, for plotting.
pub fn write_grid(path: &Path, x: &DMatrix<f64>, pred: &PredictiveDistribution) -> std::io::Result<()> {
    let (lo, hi) = (pred.lower95(), pred.upper95());
    let mut out = format!("{},mean,lower95,upper95\n", input_header(x.ncols()));
    for i in 0..x.nrows() {
        let _ = writeln!(out, "{},{},{},{}", input_cells(x, i), fmt12(pred.mean[i]), fmt12(lo[i]), fmt12(hi[i]));
    }
    fs::write(path, out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}
