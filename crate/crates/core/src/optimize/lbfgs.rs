use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

/// Objective value standing in for "could not evaluate" (failed
/// factorization, invalid parameters, NaN).
pub const PENALTY: f64 = 1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative decrease is below this twice in a row.
    pub rel_tol: f64,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Largest infinity-norm of a trial step.
    pub max_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_iter: 500, grad_tol: 1e-6, rel_tol: 1e-9, memory: 10, max_step: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    RelativeImprovement,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Objective after every accepted step, starting with `f(x0)`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn guarded(f: &impl Fn(&[f64]) -> f64, x: &[f64], evals: &mut usize) -> f64 {
    *evals += 1;
    let v = f(x);
    if v.is_finite() {
        v.min(PENALTY)
    } else {
        PENALTY
    }
}

/// Central differences with step `1e-5·max(1, |p_i|)`; frozen coordinates
/// get a zero entry and are never perturbed.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, p: &[f64], frozen: &[bool]) -> Vec<f64> {
    let mut evals = 0;
    grad_counted(&f, p, frozen, &mut evals)
}

fn grad_counted(f: &impl Fn(&[f64]) -> f64, p: &[f64], frozen: &[bool], evals: &mut usize) -> Vec<f64> {
    let mut x = p.to_vec();
    (0..p.len())
        .map(|i| {
            if frozen.get(i).copied().unwrap_or(false) {
                return 0.0;
            }
            let h = 1e-5 * p[i].abs().max(1.0);
            x[i] = p[i] + h;
            let up = guarded(f, &x, evals);
            x[i] = p[i] - h;
            let down = guarded(f, &x, evals);
            x[i] = p[i];
            if up >= PENALTY || down >= PENALTY {
                // One side is infeasible: fall back to whichever one-sided
                // difference is available.
                let mid = guarded(f, p, evals);
                if up < PENALTY {
                    return (up - mid) / h;
                }
                if down < PENALTY {
                    return (mid - down) / h;
                }
                return 0.0;
            }
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

// Two-loop recursion: returns -H g.
fn direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Limited-memory BFGS with an Armijo backtracking line search and
/// finite-difference gradients. Deterministic given `f` and `x0`.
pub fn minimize(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    frozen: &[bool],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let mut evals = 0;
    let mut x = x0.to_vec();
    let mut fx = guarded(&f, &x, &mut evals);
    if fx >= PENALTY {
        return Err(Error::NonFiniteStart);
    }
    let mut g = grad_counted(&f, &x, frozen, &mut evals);
    let mut trace = vec![fx];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalls = 0;
    let mut iterations = 0;
    let termination = loop {
        if inf_norm(&g) < opts.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let mut d = direction(&g, &hist);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let dn = inf_norm(&d);
        if dn > opts.max_step {
            let c = opts.max_step / dn;
            d.iter_mut().for_each(|v| *v *= c);
            slope *= c;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fxn = guarded(&f, &xn, &mut evals);
            if fxn < PENALTY && fxn <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fxn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fxn)) = accepted else {
            if hist.is_empty() {
                break Termination::LineSearchFailed;
            }
            hist.clear();
            continue;
        };
        let gn = grad_counted(&f, &xn, frozen, &mut evals);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - fxn) / fx.abs().max(fxn.abs()).max(1e-300);
        x = xn;
        fx = fxn;
        g = gn;
        trace.push(fx);
        stalls = if rel < opts.rel_tol { stalls + 1 } else { 0 };
        if stalls >= 2 {
            break Termination::RelativeImprovement;
        }
    };
    Ok(MinimizeResult { x, f: fx, trace, iterations, evaluations: evals, termination })
}

/// Runs [`minimize`] from every start and keeps the lowest final objective
/// (earliest start on ties). Starts that cannot be evaluated are skipped.
pub fn multistart(
    f: impl Fn(&[f64]) -> f64,
    starts: &[Vec<f64>],
    frozen: &[bool],
    opts: &MinimizeOptions,
) -> Result<(usize, MinimizeResult)> {
    let mut best: Option<(usize, MinimizeResult)> = None;
    for (i, x0) in starts.iter().enumerate() {
        let Ok(r) = minimize(&f, x0, frozen, opts) else { continue };
        if best.as_ref().is_none_or(|(_, b)| r.f < b.f) {
            best = Some((i, r));
        }
    }
    best.ok_or(Error::NonFiniteStart)
}
