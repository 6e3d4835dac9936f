//! Benchmarks live in `benches/`; run them with `cargo bench -p specgp-bench`.

use specgp_core::DMatrix;

/// Evenly spaced column of `n` inputs on `[lo, hi]`.
pub fn line(n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, 1, |i, _| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64)
}
