//! Basis functions for the low-rank models.
//!
//! [`TunableBasis`] places `m` copies of a smooth, bounded, localized bump
//! `φ(x - t_j)` on equally spaced knots `t_j = lb + jΔ`. The shape has two
//! free parameters: `alpha` sets the width (larger is narrower) and `beta`
//! sets the common peak value `κ(β) = √(2 / (e^β + 1))`.
//!
//! [`HilbertBasis`] holds the Dirichlet Laplace eigenfunctions of an interval,
//! `√(2/L) sin(πj(x - lb)/L)` with frequencies `πj/L`.
//!
//! Multi-dimensional inputs use tensor products of per-dimension bases, with
//! the first dimension's index varying fastest.

use std::f64::consts::PI;
use std::sync::LazyLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Below this value of `(αu)²` the shape is evaluated from its power series.
///
/// Numerator and denominator of the closed form both vanish like `(αu)⁴`
/// at a knot; the series divides that factor out analytically.
pub const SERIES_CUTOFF: f64 = 1.0;

const SERIES_TERMS: usize = 20;

/// Panels of the composite Simpson rule used for overlap integrals.
pub const SIMPSON_PANELS: usize = 2048;

/// Peak value shared by every tunable basis function.
pub fn kappa(beta: f64) -> f64 {
    (2.0 / (beta.exp() + 1.0)).sqrt()
}

// With s = (αu)², write
//   g(s) = 1 - (1 + s) e^{-s}
//   χ(s) = 1 - e^{-s/2} (αu sin(αu) + cos(αu))
// Both are O(s²). These hold the coefficients of g/s² and χ/s² in powers of s.
struct Series {
    g: [f64; SERIES_TERMS],
    chi: [f64; SERIES_TERMS],
}

static SERIES: LazyLock<Series> = LazyLock::new(|| {
    let fact = |n: usize| (1..=n).fold(1.0f64, |acc, k| acc * k as f64);
    let n = SERIES_TERMS + 2;
    // αu sin(αu) + cos(αu) = Σ a_k s^k
    let a: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 / fact(2 * k) - 1.0 / fact(2 * k - 1))
            }
        })
        .collect();
    // e^{-s/2} = Σ b_k s^k
    let b: Vec<f64> = (0..n).map(|k| (-0.5f64).powi(k as i32) / fact(k)).collect();
    let mut g = [0.0; SERIES_TERMS];
    let mut chi = [0.0; SERIES_TERMS];
    for i in 0..SERIES_TERMS {
        let k = i + 2;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        g[i] = sign * (k as f64 - 1.0) / fact(k);
        let c: f64 = (0..=k).map(|j| a[j] * b[k - j]).sum();
        chi[i] = -c;
    }
    Series { g, chi }
});

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// The bump `φ(u)` centred at zero.
pub fn phi(alpha: f64, beta: f64, u: f64) -> f64 {
    let v = (alpha * u).abs();
    let s = v * v;
    let eb = beta.exp();
    if s < SERIES_CUTOFF {
        let series = &*SERIES;
        let g = horner(&series.g, s);
        let chi = horner(&series.chi, s);
        (-0.5 * s).exp() / (2.0 * eb * chi + g).sqrt()
    } else {
        let e = (-0.5 * s).exp();
        let chi = 1.0 - e * (v * v.sin() + v.cos());
        let g = 1.0 - (s + 1.0) * e * e;
        s * e / (2.0 * eb * chi + g).sqrt()
    }
}

/// Tunable local basis on one input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TunableBasis {
    pub alpha: f64,
    pub beta: f64,
    m: usize,
    lb: f64,
    ub: f64,
}

impl TunableBasis {
    pub fn new(alpha: f64, beta: f64, m: usize, lb: f64, ub: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 basis functions, got {m}")));
        }
        if !(lb.is_finite() && ub.is_finite() && lb < ub) {
            return Err(Error::InvalidParameter(format!("invalid domain [{lb}, {ub}]")));
        }
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite alpha={alpha} or beta={beta}")));
        }
        Ok(TunableBasis { alpha, beta, m, lb, ub })
    }

    pub fn with_shape(&self, alpha: f64, beta: f64) -> Result<Self> {
        TunableBasis::new(alpha, beta, self.m, self.lb, self.ub)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    pub fn spacing(&self) -> f64 {
        (self.ub - self.lb) / (self.m - 1) as f64
    }

    pub fn knot(&self, j: usize) -> f64 {
        if j == self.m - 1 {
            self.ub
        } else {
            self.lb + j as f64 * self.spacing()
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.knot(j)).collect()
    }

    pub fn kappa(&self) -> f64 {
        kappa(self.beta)
    }

    /// `φ_j(x) = φ(x - t_j)`.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange { index: j, len: self.m });
        }
        Ok(phi(self.alpha, self.beta, x - self.knot(j)))
    }

    /// `Ψ[i, j] = φ_j(x_i)`, an `N × m` matrix.
    pub fn feature_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let knots = self.knots();
        DMatrix::from_fn(x.len(), self.m, |i, j| phi(self.alpha, self.beta, x[i] - knots[j]))
    }

    /// `∫_{lb}^{ub} φ_i(x) φ_j(x) dx` by composite Simpson.
    pub fn orthogonality_integral(&self, i: usize, j: usize) -> Result<f64> {
        for idx in [i, j] {
            if idx >= self.m {
                return Err(Error::IndexOutOfRange { index: idx, len: self.m });
            }
        }
        let (ti, tj) = (self.knot(i), self.knot(j));
        Ok(simpson(self.lb, self.ub, SIMPSON_PANELS, |x| {
            phi(self.alpha, self.beta, x - ti) * phi(self.alpha, self.beta, x - tj)
        }))
    }
}

pub(crate) fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Row-wise tensor product of per-dimension feature matrices; column index
/// `a + b·m₁` (first dimension fastest).
pub fn tensor_product_rows(per_dim: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = per_dim.first() else {
        return Err(Error::InvalidParameter("no feature matrices".into()));
    };
    let n = first.nrows();
    let mut out = first.clone();
    for f in &per_dim[1..] {
        if f.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.nrows() });
        }
        let (ma, mb) = (out.ncols(), f.ncols());
        let mut next = DMatrix::zeros(n, ma * mb);
        for b in 0..mb {
            for a in 0..ma {
                let col = a + b * ma;
                for i in 0..n {
                    next[(i, col)] = out[(i, a)] * f[(i, b)];
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Feature matrix for multi-dimensional inputs, one basis per column of `x`.
pub fn tensor_feature_matrix(bases: &[TunableBasis], x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if bases.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: bases.len(), got: x.ncols() });
    }
    let per_dim: Vec<_> = bases
        .iter()
        .enumerate()
        .map(|(d, b)| b.feature_matrix(x.column(d).as_slice()))
        .collect();
    tensor_product_rows(&per_dim)
}

/// All knot combinations in tensor order, one row per combination.
pub fn knot_grid(bases: &[TunableBasis]) -> DMatrix<f64> {
    let per_dim: Vec<Vec<f64>> = bases.iter().map(TunableBasis::knots).collect();
    grid_points(&per_dim)
}

pub(crate) fn grid_points(per_dim: &[Vec<f64>]) -> DMatrix<f64> {
    let total: usize = per_dim.iter().map(Vec::len).product();
    let mut out = DMatrix::zeros(total, per_dim.len());
    for row in 0..total {
        let mut rem = row;
        for (d, pts) in per_dim.iter().enumerate() {
            out[(row, d)] = pts[rem % pts.len()];
            rem /= pts.len();
        }
    }
    out
}

/// Dirichlet Laplace eigenbasis on `[lb, ub]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertBasis {
    m: usize,
    lb: f64,
    ub: f64,
}

impl HilbertBasis {
    pub fn new(m: usize, lb: f64, ub: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("need at least one eigenfunction".into()));
        }
        if !(lb.is_finite() && ub.is_finite() && lb < ub) {
            return Err(Error::InvalidParameter(format!("invalid domain [{lb}, {ub}]")));
        }
        Ok(HilbertBasis { m, lb, ub })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    /// Square roots of the Laplace eigenvalues, `πj/L` for `j = 1..=m`.
    pub fn frequencies(&self) -> Vec<f64> {
        let len = self.ub - self.lb;
        (1..=self.m).map(|j| PI * j as f64 / len).collect()
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        let len = self.ub - self.lb;
        (2.0 / len).sqrt() * (PI * j as f64 * (x - self.lb) / len).sin()
    }

    /// `(Φ, λ)` with `Φ[i, j-1] = φ_j(x_i)`.
    pub fn features(&self, x: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let phi = DMatrix::from_fn(x.len(), self.m, |i, j| self.eval(j + 1, x[i]));
        (phi, self.frequencies())
    }
}

/// Tensor-product eigenbasis; returns the features and one frequency vector
/// per column (in the same tensor order).
pub fn hilbert_tensor_features(
    bases: &[HilbertBasis],
    x: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<Vec<f64>>)> {
    if bases.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: bases.len(), got: x.ncols() });
    }
    let per_dim: Vec<_> = bases
        .iter()
        .enumerate()
        .map(|(d, b)| b.features(x.column(d).as_slice()).0)
        .collect();
    let phi = tensor_product_rows(&per_dim)?;
    Ok((phi, hilbert_frequency_grid(bases)))
}

pub fn hilbert_frequency_grid(bases: &[HilbertBasis]) -> Vec<Vec<f64>> {
    let per_dim: Vec<Vec<f64>> = bases.iter().map(HilbertBasis::frequencies).collect();
    let grid = grid_points(&per_dim);
    (0..grid.nrows()).map(|r| grid.row(r).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Closed form exactly as written, no series: only usable away from u = 0.
    fn phi_raw(alpha: f64, beta: f64, u: f64) -> f64 {
        let v = alpha * u;
        let s = v * v;
        let chi = 1.0 - (-s / 2.0).exp() * (v * v.sin() + v.cos());
        s * (-s / 2.0).exp() / (2.0 * beta.exp() * chi - (s + 1.0) * (-s).exp() + 1.0).sqrt()
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0), 1.0);
        assert!(kappa(50.0) < 1e-10);
        assert_relative_eq!(kappa(-5.0), (2.0 / ((-5f64).exp() + 1.0)).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(kappa(-5.0), 1.409_473, epsilon = 1e-6);
    }

    #[test]
    fn kappa_is_the_maximum_on_a_grid() {
        for beta in [-5.0, 0.0, 1.0] {
            let max = (0..20001).map(|k| phi(5.0, beta, -2.0 + 4.0 * k as f64 / 20000.0)).fold(0.0, f64::max);
            assert_relative_eq!(max, kappa(beta), epsilon = 1e-12);
        }
    }

    #[test]
    fn knot_value_is_the_limit_of_the_closed_form() {
        // The raw formula at |αu| = 1e-2 still has ~8 good digits; the limit is κ.
        for alpha in [0.5, 5.0, 50.0] {
            let u = 1e-2 / alpha;
            assert!((phi_raw(alpha, 0.0, u) - 1.0).abs() < 1e-4);
            assert!((phi_raw(alpha, 0.0, -u) - 1.0).abs() < 1e-4);
            assert_eq!(phi(alpha, 0.0, 0.0), 1.0);
            assert!((phi(alpha, 0.0, 1e-5 / alpha) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn series_matches_closed_form_where_both_are_accurate() {
        for beta in [-5.0, 0.0, 4.0] {
            for v in [0.3, 0.6, 0.9, 0.99] {
                let s_branch = phi(1.0, beta, v);
                assert_relative_eq!(s_branch, phi_raw(1.0, beta, v), max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn continuous_across_series_cutoff() {
        let tau = SERIES_CUTOFF.sqrt();
        for alpha in [0.1, 1.0, 10.0, 100.0] {
            for beta in [-5.0, 0.0, 4.0] {
                let below = phi(alpha, beta, (tau * (1.0 - 1e-12)) / alpha);
                let above = phi(alpha, beta, (tau * (1.0 + 1e-12)) / alpha);
                assert!((below - above).abs() < 1e-8, "alpha={alpha} beta={beta}");
            }
        }
    }

    #[test]
    fn far_field_decay() {
        let v = phi(5.0, 0.0, 10.0 / 5.0);
        assert!(v >= 0.0 && v < 1e-15, "{v}");
    }

    #[test]
    fn alpha_zero_collapses_to_kappa() {
        for beta in [-2.0, 0.0, 3.0] {
            for u in [-100.0, -1.0, 0.0, 0.5, 1e6] {
                assert_eq!(phi(0.0, beta, u), kappa(beta));
            }
        }
    }

    #[test]
    fn basis_validation() {
        assert!(TunableBasis::new(1.0, 0.0, 1, 0.0, 1.0).is_err());
        assert!(TunableBasis::new(1.0, 0.0, 3, 1.0, 1.0).is_err());
        let b = TunableBasis::new(1.0, 0.0, 3, 0.0, 1.0).unwrap();
        assert!(matches!(b.eval(3, 0.0), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
        assert!(b.orthogonality_integral(0, 7).is_err());
    }

    #[test]
    fn knots_are_equally_spaced() {
        let b = TunableBasis::new(1.0, 0.0, 5, -1.0, 2.0).unwrap();
        assert_eq!(b.knots(), vec![-1.0, -0.25, 0.5, 1.25, 2.0]);
        assert_eq!(b.spacing(), 0.75);
    }

    #[test]
    fn feature_row_at_middle_knot() {
        let b = TunableBasis::new(3.0, 0.0, 3, 0.0, 2.0).unwrap();
        let psi = b.feature_matrix(&[b.knot(1)]);
        let side = phi(3.0, 0.0, b.spacing());
        assert_eq!(psi[(0, 1)], 1.0);
        assert_relative_eq!(psi[(0, 0)], side, epsilon = 1e-15);
        assert_relative_eq!(psi[(0, 2)], side, epsilon = 1e-15);
    }

    #[test]
    fn narrow_features_vanish_between_knots() {
        let b = TunableBasis::new(500.0, 0.0, 11, 0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..200).map(|i| 0.0025 + i as f64 * 0.005).collect();
        let psi = b.feature_matrix(&x);
        for (i, xi) in x.iter().enumerate() {
            for (j, t) in b.knots().iter().enumerate() {
                if (xi - t).abs() > 20.0 / 500.0 {
                    assert!(psi[(i, j)] < 1e-6);
                }
            }
        }
    }

    #[test]
    fn tensor_rows_are_kronecker_products() {
        let b1 = TunableBasis::new(2.0, 0.0, 3, 0.0, 1.0).unwrap();
        let b2 = TunableBasis::new(4.0, 0.5, 4, -1.0, 1.0).unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, 0.5, -0.9, 1.3, 0.0]);
        let psi = tensor_feature_matrix(&[b1.clone(), b2.clone()], &x).unwrap();
        assert_eq!(psi.ncols(), 12);
        for i in 0..3 {
            let r1 = b1.feature_matrix(&[x[(i, 0)]]);
            let r2 = b2.feature_matrix(&[x[(i, 1)]]);
            for b in 0..4 {
                for a in 0..3 {
                    assert_eq!(psi[(i, a + b * 3)], r1[(0, a)] * r2[(0, b)]);
                }
            }
        }
        let at_knots = DMatrix::from_row_slice(1, 2, &[b1.knot(2), b2.knot(1)]);
        let b2_flat = b2.with_shape(4.0, 0.0).unwrap();
        let row = tensor_feature_matrix(&[b1.clone(), b2_flat], &at_knots).unwrap();
        assert_eq!(row[(0, 2 + 3)], 1.0);
        assert_eq!(row.amax(), 1.0);
        assert!(tensor_feature_matrix(&[b1], &x).is_err());
    }

    #[test]
    fn single_column_tensor() {
        let a = DMatrix::from_row_slice(2, 1, &[0.5, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[3.0, 0.25]);
        assert_eq!(tensor_product_rows(&[a, b]).unwrap(), DMatrix::from_row_slice(2, 1, &[1.5, 0.5]));
    }

    #[test]
    fn knot_grid_order_matches_features() {
        let b1 = TunableBasis::new(2.0, 0.0, 2, 0.0, 1.0).unwrap();
        let b2 = TunableBasis::new(2.0, 0.0, 3, 5.0, 7.0).unwrap();
        let g = knot_grid(&[b1, b2]);
        assert_eq!(g.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 5.0]);
        assert_eq!(g.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 5.0]);
        assert_eq!(g.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 6.0]);
        assert_eq!(g.row(5).iter().copied().collect::<Vec<_>>(), vec![1.0, 7.0]);
    }

    #[test]
    fn orthogonality_examples() {
        // Five functions on [-1, 2]; α = 0 makes each the constant κ.
        let flat = TunableBasis::new(0.0, 0.0, 5, -1.0, 2.0).unwrap();
        assert_relative_eq!(flat.orthogonality_integral(0, 1).unwrap(), 3.0 * kappa(0.0).powi(2), epsilon = 1e-12);
        let spiky = TunableBasis::new(500.0, -5.0, 5, -1.0, 2.0).unwrap();
        assert!(spiky.orthogonality_integral(0, 1).unwrap() < 1e-3);
        let b = TunableBasis::new(3.0, 0.2, 5, -1.0, 2.0).unwrap();
        assert_eq!(b.orthogonality_integral(1, 3).unwrap(), b.orthogonality_integral(3, 1).unwrap());
    }

    #[test]
    fn orthogonality_trends() {
        let at = |alpha: f64, beta: f64| {
            TunableBasis::new(alpha, beta, 5, -1.0, 2.0).unwrap().orthogonality_integral(0, 1).unwrap()
        };
        let by_alpha: Vec<f64> = [0.5, 2.0, 8.0, 32.0].iter().map(|a| at(*a, 0.0)).collect();
        assert!(by_alpha.windows(2).all(|w| w[1] <= w[0]), "{by_alpha:?}");
        let by_beta: Vec<f64> = [-2.0, 0.0, 2.0, 4.0].iter().map(|b| at(1.0, *b)).collect();
        assert!(by_beta.windows(2).all(|w| w[1] <= w[0]), "{by_beta:?}");
        for a in [0.5, 2.0, 8.0] {
            assert_eq!(at(a, 0.3), at(-a, 0.3));
        }
    }

    #[test]
    fn hilbert_eigenfunction_values() {
        let h = HilbertBasis::new(4, 0.0, 2.0).unwrap();
        assert_relative_eq!(h.eval(1, 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.frequencies()[0], PI / 2.0, epsilon = 1e-15);
        for j in 1..=4 {
            assert!(h.eval(j, 0.0).abs() < 1e-15);
            assert!(h.eval(j, 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hilbert_eigen_equation_by_finite_differences() {
        let h = HilbertBasis::new(5, -1.0, 2.0).unwrap();
        let lambdas = h.frequencies();
        let step = 1e-4;
        for j in 1..=5 {
            for x in [-0.7, 0.1, 1.3] {
                let second = (h.eval(j, x + step) - 2.0 * h.eval(j, x) + h.eval(j, x - step)) / (step * step);
                let lam = lambdas[j - 1];
                assert!((-second - lam * lam * h.eval(j, x)).abs() < 1e-5 * (1.0 + lam * lam));
            }
        }
    }

    #[test]
    fn hilbert_orthonormality() {
        let h = HilbertBasis::new(6, -3.0, 3.0).unwrap();
        for i in 1..=6 {
            for j in 1..=6 {
                let v = simpson(-3.0, 3.0, 4096, |x| h.eval(i, x) * h.eval(j, x));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-6, "({i},{j}) -> {v}");
            }
        }
    }

    #[test]
    fn hilbert_tensor_frequencies_follow_column_order() {
        let b = [HilbertBasis::new(2, 0.0, 1.0).unwrap(), HilbertBasis::new(3, 0.0, 2.0).unwrap()];
        let x = DMatrix::from_row_slice(1, 2, &[0.3, 0.7]);
        let (phi, freqs) = hilbert_tensor_features(&b, &x).unwrap();
        assert_eq!(phi.ncols(), 6);
        assert_eq!(freqs[1], vec![2.0 * PI, PI / 2.0]);
        assert_eq!(freqs[2], vec![PI, PI]);
        assert_relative_eq!(phi[(0, 1 + 2 * 2)], b[0].eval(2, 0.3) * b[1].eval(3, 0.7), epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn bounded_by_kappa(alpha in -200.0..200.0f64, beta in -8.0..8.0f64, u in -5.0..5.0f64) {
            let v = phi(alpha, beta, u);
            prop_assert!(v >= 0.0);
            prop_assert!(v <= kappa(beta) + 1e-10, "phi={} kappa={}", v, kappa(beta));
        }

        #[test]
        fn even_in_offset(alpha in -50.0..50.0f64, beta in -5.0..5.0f64, u in 0.0..5.0f64) {
            prop_assert_eq!(phi(alpha, beta, u), phi(alpha, beta, -u));
            prop_assert_eq!(phi(alpha, beta, u), phi(-alpha, beta, u));
        }
    }

    #[test]
    fn bounded_on_a_large_random_sample() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let alpha = rng.random_range(-100.0..100.0);
            let beta = rng.random_range(-6.0..6.0);
            let u = rng.random_range(-3.0..3.0);
            let v = phi(alpha, beta, u);
            assert!((0.0..=kappa(beta) + 1e-10).contains(&v));
        }
    }

    #[test]
    fn even_symmetry_of_basis_functions() {
        // Dyadic knots and offsets keep x - t_j exact.
        let b = TunableBasis::new(7.0, 0.4, 5, -2.0, 2.0).unwrap();
        for j in 0..5 {
            for d in [0.015625, 0.25, 1.75] {
                assert_eq!(b.eval(j, b.knot(j) + d).unwrap(), b.eval(j, b.knot(j) - d).unwrap());
            }
        }
    }
}
