//! Stationary covariance functions.
//!
//! A [`KernelSpec`] is an immutable value: a base family with positive
//! hyperparameters, or a sum/product of children. Besides pointwise and Gram
//! evaluation it knows its spectral density (Fourier transform), which the
//! Hilbert-space approximation feeds with Laplace eigenfrequencies.
//!
//! Kernels can be written as expressions, e.g.
//! `matern52(var=1,len=1)*cos(var=1,len=11)`; `*` binds tighter than `+` and
//! parentheses group.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// Isotropic squared exponential.
    SquaredExponential { variance: f64, lengthscale: f64 },
    /// Squared exponential with one lengthscale per input dimension.
    SquaredExponentialArd { variance: f64, lengthscales: Vec<f64> },
    /// `variance * cos(2π r / period)`.
    Cosine { variance: f64, period: f64 },
    /// Matérn with smoothness 5/2, lengthscale in the exponent.
    Matern52 { variance: f64, lengthscale: f64 },
    Sum(Vec<KernelSpec>),
    Product(Vec<KernelSpec>),
}

impl KernelSpec {
    pub fn se(variance: f64, lengthscale: f64) -> Self {
        KernelSpec::SquaredExponential { variance, lengthscale }
    }

    pub fn se_ard(variance: f64, lengthscales: Vec<f64>) -> Self {
        KernelSpec::SquaredExponentialArd { variance, lengthscales }
    }

    pub fn cosine(variance: f64, period: f64) -> Self {
        KernelSpec::Cosine { variance, period }
    }

    pub fn matern52(variance: f64, lengthscale: f64) -> Self {
        KernelSpec::Matern52 { variance, lengthscale }
    }

    /// Checks positivity of every hyperparameter and that children agree on
    /// the input dimension.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        }
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale }
            | KernelSpec::Matern52 { variance, lengthscale } => {
                positive("variance", *variance)?;
                positive("lengthscale", *lengthscale)
            }
            KernelSpec::Cosine { variance, period } => {
                positive("variance", *variance)?;
                positive("period", *period)
            }
            KernelSpec::SquaredExponentialArd { variance, lengthscales } => {
                positive("variance", *variance)?;
                if lengthscales.is_empty() {
                    return Err(Error::InvalidParameter("se_ard needs at least one lengthscale".into()));
                }
                lengthscales.iter().try_for_each(|l| positive("lengthscale", *l))
            }
            KernelSpec::Sum(children) | KernelSpec::Product(children) => {
                if children.is_empty() {
                    return Err(Error::InvalidParameter("empty kernel composition".into()));
                }
                children.iter().try_for_each(KernelSpec::validate)?;
                self.input_dim_checked().map(|_| ())
            }
        }
    }

    /// The input dimension this kernel is tied to, if any. Isotropic
    /// families work for every dimension and return `None`.
    pub fn input_dim(&self) -> Option<usize> {
        self.input_dim_checked().ok().flatten()
    }

    fn input_dim_checked(&self) -> Result<Option<usize>> {
        match self {
            KernelSpec::SquaredExponentialArd { lengthscales, .. } => Ok(Some(lengthscales.len())),
            KernelSpec::Sum(children) | KernelSpec::Product(children) => {
                let mut dim = None;
                for child in children {
                    match (dim, child.input_dim_checked()?) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(Error::DimensionMismatch { expected: a, got: b })
                        }
                        (None, d) => dim = d,
                        _ => {}
                    }
                }
                Ok(dim)
            }
            _ => Ok(None),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self.input_dim() {
            Some(expected) if expected != d => Err(Error::DimensionMismatch { expected, got: d }),
            _ => Ok(()),
        }
    }

    /// `K(x, x2)`.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: x2.len() });
        }
        self.check_dim(x.len())?;
        Ok(self.eval_unchecked(x, x2))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale } => {
                variance * (-0.5 * sq_dist(x, x2) / (lengthscale * lengthscale)).exp()
            }
            KernelSpec::SquaredExponentialArd { variance, lengthscales } => {
                let s: f64 = x
                    .iter()
                    .zip(x2)
                    .zip(lengthscales)
                    .map(|((a, b), l)| {
                        let d = (a - b) / l;
                        d * d
                    })
                    .sum();
                variance * (-0.5 * s).exp()
            }
            KernelSpec::Cosine { variance, period } => {
                variance * (2.0 * PI * sq_dist(x, x2).sqrt() / period).cos()
            }
            KernelSpec::Matern52 { variance, lengthscale } => {
                let r = sq_dist(x, x2).sqrt() / lengthscale;
                variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * (-SQRT5 * r).exp()
            }
            KernelSpec::Sum(children) => children.iter().map(|k| k.eval_unchecked(x, x2)).sum(),
            KernelSpec::Product(children) => {
                children.iter().map(|k| k.eval_unchecked(x, x2)).product()
            }
        }
    }

    /// Cross-covariance matrix between the rows of `x` and the rows of `x2`.
    pub fn gram(&self, x: &DMatrix<f64>, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != x2.ncols() {
            return Err(Error::DimensionMismatch { expected: x.ncols(), got: x2.ncols() });
        }
        self.check_dim(x.ncols())?;
        let a = rows(x);
        let b = rows(x2);
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| self.eval_unchecked(&a[i], &b[j])))
    }

    /// `gram(x, x)`, filled from the lower triangle so it is exactly symmetric.
    pub fn gram_symmetric(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x.ncols())?;
        let a = rows(x);
        let n = a.len();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = self.eval_unchecked(&a[i], &a[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// `K(x, x)` for every row of `x`.
    pub fn diag(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_dim(x.ncols())?;
        Ok(rows(x).iter().map(|r| self.eval_unchecked(r, r)).collect())
    }

    /// Spectral density `S(ω) = ∫ K(r) e^{-iωr} dr` of a one-dimensional kernel.
    ///
    /// Supported: SE, Matérn-5/2, one-dimensional SE-ARD, sums of supported
    /// kernels, and products in which every factor but one is a cosine (each
    /// cosine shifts the density by `±2π/period`). A bare cosine has a Dirac
    /// density and is rejected.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        self.spectral_density_nd(&[omega])
    }

    /// Spectral density at a frequency vector; the dimension is `omega.len()`.
    pub fn spectral_density_nd(&self, omega: &[f64]) -> Result<f64> {
        let d = omega.len();
        self.check_dim(d)?;
        let w2: f64 = omega.iter().map(|w| w * w).sum();
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale } => {
                let l = *lengthscale;
                Ok(variance * (2.0 * PI).powf(d as f64 / 2.0) * l.powi(d as i32) * (-0.5 * l * l * w2).exp())
            }
            KernelSpec::SquaredExponentialArd { variance, lengthscales } => Ok(omega
                .iter()
                .zip(lengthscales)
                .fold(*variance, |acc, (w, l)| acc * (2.0 * PI).sqrt() * l * (-0.5 * l * l * w * w).exp())),
            KernelSpec::Matern52 { variance, lengthscale } => {
                let nu = 2.5;
                let df = d as f64;
                let l = *lengthscale;
                let scale = match d {
                    1 => 16.0 * 5f64.powf(2.5) / 3.0,
                    2 => 10.0 * PI * 5f64.powf(2.5),
                    _ => {
                        // 2^D π^{D/2} Γ(ν + D/2) (2ν)^ν / Γ(ν) for general D.
                        2f64.powi(d as i32) * PI.powf(df / 2.0) * gamma(nu + df / 2.0) * (2.0 * nu).powf(nu)
                            / gamma(nu)
                    }
                };
                Ok(variance * scale / l.powi(5) * (5.0 / (l * l) + w2).powf(-(nu + df / 2.0)))
            }
            KernelSpec::Cosine { .. } => Err(Error::UnsupportedKernel(
                "a bare cosine kernel (its spectrum is a pair of Dirac deltas)".into(),
            )),
            KernelSpec::Sum(children) => {
                children.iter().map(|k| k.spectral_density_nd(omega)).sum()
            }
            KernelSpec::Product(children) => {
                let (cosines, rest): (Vec<_>, Vec<_>) =
                    children.iter().partition(|k| matches!(k, KernelSpec::Cosine { .. }));
                let base = match rest.as_slice() {
                    [single] => *single,
                    [] => {
                        return Err(Error::UnsupportedKernel(
                            "a product of cosines (Dirac spectrum)".into(),
                        ))
                    }
                    _ => {
                        return Err(Error::UnsupportedKernel(
                            "a product of several non-cosine kernels (density is a convolution)".into(),
                        ))
                    }
                };
                if cosines.is_empty() {
                    return base.spectral_density_nd(omega);
                }
                if d != 1 {
                    return Err(Error::UnsupportedKernel(
                        "cosine factors in more than one input dimension".into(),
                    ));
                }
                shifted_density(base, &cosines, omega[0])
            }
        }
    }

    /// Positive hyperparameters in depth-first order.
    pub fn hyperparameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<f64>) {
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale }
            | KernelSpec::Matern52 { variance, lengthscale } => out.extend([*variance, *lengthscale]),
            KernelSpec::Cosine { variance, period } => out.extend([*variance, *period]),
            KernelSpec::SquaredExponentialArd { variance, lengthscales } => {
                out.push(*variance);
                out.extend(lengthscales);
            }
            KernelSpec::Sum(c) | KernelSpec::Product(c) => c.iter().for_each(|k| k.collect_params(out)),
        }
    }

    /// Names matching [`hyperparameters`](Self::hyperparameters), e.g.
    /// `k.0.matern52.lengthscale`.
    pub fn hyperparameter_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names("k", &mut out);
        out
    }

    fn collect_names(&self, prefix: &str, out: &mut Vec<String>) {
        match self {
            KernelSpec::SquaredExponential { .. } => {
                out.push(format!("{prefix}.se.variance"));
                out.push(format!("{prefix}.se.lengthscale"));
            }
            KernelSpec::Matern52 { .. } => {
                out.push(format!("{prefix}.matern52.variance"));
                out.push(format!("{prefix}.matern52.lengthscale"));
            }
            KernelSpec::Cosine { .. } => {
                out.push(format!("{prefix}.cos.variance"));
                out.push(format!("{prefix}.cos.period"));
            }
            KernelSpec::SquaredExponentialArd { lengthscales, .. } => {
                out.push(format!("{prefix}.se_ard.variance"));
                for d in 0..lengthscales.len() {
                    out.push(format!("{prefix}.se_ard.lengthscale{d}"));
                }
            }
            KernelSpec::Sum(c) | KernelSpec::Product(c) => {
                for (i, k) in c.iter().enumerate() {
                    k.collect_names(&format!("{prefix}.{i}"), out);
                }
            }
        }
    }

    pub fn num_hyperparameters(&self) -> usize {
        match self {
            KernelSpec::SquaredExponentialArd { lengthscales, .. } => 1 + lengthscales.len(),
            KernelSpec::Sum(c) | KernelSpec::Product(c) => c.iter().map(KernelSpec::num_hyperparameters).sum(),
            _ => 2,
        }
    }

    /// Same structure with new hyperparameter values (depth-first order).
    pub fn with_hyperparameters(&self, values: &[f64]) -> Result<Self> {
        let n = self.num_hyperparameters();
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.len() });
        }
        let mut it = values.iter().copied();
        let k = self.rebuild(&mut it);
        k.validate()?;
        Ok(k)
    }

    fn rebuild(&self, it: &mut impl Iterator<Item = f64>) -> Self {
        let mut next = || it.next().expect("length checked by caller");
        match self {
            KernelSpec::SquaredExponential { .. } => KernelSpec::se(next(), next()),
            KernelSpec::Matern52 { .. } => KernelSpec::matern52(next(), next()),
            KernelSpec::Cosine { .. } => KernelSpec::cosine(next(), next()),
            KernelSpec::SquaredExponentialArd { lengthscales, .. } => {
                let v = next();
                KernelSpec::se_ard(v, (0..lengthscales.len()).map(|_| next()).collect())
            }
            KernelSpec::Sum(c) => KernelSpec::Sum(c.iter().map(|k| k.rebuild(it)).collect()),
            KernelSpec::Product(c) => KernelSpec::Product(c.iter().map(|k| k.rebuild(it)).collect()),
        }
    }

    /// Parses an expression, filling unspecified hyperparameters from `defaults`.
    pub fn parse_with_defaults(expr: &str, defaults: &KernelDefaults) -> Result<Self> {
        let mut p = Parser { src: expr.as_bytes(), pos: 0, defaults };
        let k = p.sum()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        k.validate()?;
        Ok(k)
    }

    /// Whether this kernel factorizes as a product of one-dimensional kernels
    /// over the coordinates (SE and SE-ARD do).
    pub fn separable_factors(&self, dim: usize) -> Option<Vec<KernelSpec>> {
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale } => Some(
                (0..dim)
                    .map(|d| KernelSpec::se(if d == 0 { *variance } else { 1.0 }, *lengthscale))
                    .collect(),
            ),
            KernelSpec::SquaredExponentialArd { variance, lengthscales } if lengthscales.len() == dim => Some(
                lengthscales
                    .iter()
                    .enumerate()
                    .map(|(d, l)| KernelSpec::se(if d == 0 { *variance } else { 1.0 }, *l))
                    .collect(),
            ),
            _ => None,
        }
    }
}

// cos(ω0 r) transforms to π[δ(ω - ω0) + δ(ω + ω0)]; multiplying kernels
// convolves densities (with a 1/2π factor), so each cosine factor averages
// two shifted copies of the remaining density.
fn shifted_density(base: &KernelSpec, cosines: &[&KernelSpec], w: f64) -> Result<f64> {
    match cosines.split_first() {
        None => base.spectral_density(w),
        Some((KernelSpec::Cosine { variance, period }, rest)) => {
            let w0 = 2.0 * PI / period;
            let lo = shifted_density(base, rest, w - w0)?;
            let hi = shifted_density(base, rest, w + w0)?;
            Ok(0.5 * variance * (lo + hi))
        }
        Some(_) => unreachable!("partitioned on Cosine"),
    }
}

fn sq_dist(x: &[f64], x2: &[f64]) -> f64 {
    x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
}

// Lanczos approximation, only needed for the D > 2 Matérn density.
fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let a = G[1..].iter().enumerate().fold(G[0], |acc, (i, g)| acc + g / (x + i as f64 + 1.0));
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::SquaredExponential { variance, lengthscale } => {
                write!(f, "se(var={variance},len={lengthscale})")
            }
            KernelSpec::Matern52 { variance, lengthscale } => {
                write!(f, "matern52(var={variance},len={lengthscale})")
            }
            KernelSpec::Cosine { variance, period } => write!(f, "cos(var={variance},len={period})"),
            KernelSpec::SquaredExponentialArd { variance, lengthscales } => {
                write!(f, "se_ard(var={variance},len=[")?;
                for (i, l) in lengthscales.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "])")
            }
            KernelSpec::Sum(c) => {
                for (i, k) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    if matches!(k, KernelSpec::Sum(_)) {
                        write!(f, "({k})")?;
                    } else {
                        write!(f, "{k}")?;
                    }
                }
                Ok(())
            }
            KernelSpec::Product(c) => {
                for (i, k) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if matches!(k, KernelSpec::Sum(_) | KernelSpec::Product(_)) {
                        write!(f, "({k})")?;
                    } else {
                        write!(f, "{k}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses with unit defaults for omitted hyperparameters.
    fn from_str(s: &str) -> Result<Self> {
        KernelSpec::parse_with_defaults(s, &KernelDefaults::default())
    }
}

/// Values used for hyperparameters an expression leaves out.
#[derive(Debug, Clone)]
pub struct KernelDefaults {
    pub variance: f64,
    /// One entry per input dimension; isotropic families use the first.
    pub lengthscales: Vec<f64>,
    pub period: f64,
}

impl Default for KernelDefaults {
    fn default() -> Self {
        KernelDefaults { variance: 1.0, lengthscales: vec![1.0], period: 1.0 }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    defaults: &'a KernelDefaults,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::KernelParse { position: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn sum(&mut self) -> Result<KernelSpec> {
        let mut terms = vec![self.product()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            terms.push(self.product()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { KernelSpec::Sum(terms) })
    }

    fn product(&mut self) -> Result<KernelSpec> {
        let mut factors = vec![self.atom()?];
        while self.peek() == Some(b'*') {
            self.pos += 1;
            factors.push(self.atom()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { KernelSpec::Product(factors) })
    }

    fn atom(&mut self) -> Result<KernelSpec> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let k = self.sum()?;
            self.expect(b')')?;
            return Ok(k);
        }
        let start = self.pos;
        let name = self.ident();
        if name.is_empty() {
            return Err(self.error("expected a kernel name"));
        }
        let mut variance = None;
        let mut lengths: Option<Vec<f64>> = None;
        // A bare name takes every default.
        let has_args = self.peek() == Some(b'(');
        if has_args {
            self.pos += 1;
        }
        if has_args && self.peek() != Some(b')') {
            loop {
                let key_pos = self.pos;
                let key = self.ident();
                self.expect(b'=')?;
                match key.as_str() {
                    "var" | "variance" => variance = Some(self.number()?),
                    "len" | "lengthscale" | "period" => lengths = Some(self.number_list()?),
                    other => {
                        self.pos = key_pos;
                        return Err(self.error(&format!("unknown parameter '{other}'")));
                    }
                }
                if self.peek() == Some(b',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        if has_args {
            self.expect(b')')?;
        }
        let d = self.defaults;
        let variance = variance.unwrap_or(d.variance);
        let iso_len = |ls: &Option<Vec<f64>>, fallback: f64| -> std::result::Result<f64, String> {
            match ls {
                None => Ok(fallback),
                Some(v) if v.len() == 1 => Ok(v[0]),
                Some(_) => Err("isotropic kernels take a single lengthscale".into()),
            }
        };
        let lerr = |p: &Self, msg: String| Error::KernelParse { position: p.pos, message: msg };
        let default_len = d.lengthscales.first().copied().unwrap_or(1.0);
        let spec = match name.as_str() {
            "se" | "rbf" => KernelSpec::se(variance, iso_len(&lengths, default_len).map_err(|m| lerr(self, m))?),
            "matern52" | "m52" => {
                KernelSpec::matern52(variance, iso_len(&lengths, default_len).map_err(|m| lerr(self, m))?)
            }
            "cos" | "cosine" => {
                KernelSpec::cosine(variance, iso_len(&lengths, d.period).map_err(|m| lerr(self, m))?)
            }
            "se_ard" | "ard" => KernelSpec::se_ard(variance, lengths.unwrap_or_else(|| d.lengthscales.clone())),
            other => {
                self.pos = start;
                return Err(self.error(&format!("unknown kernel '{other}'")));
            }
        };
        Ok(spec)
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'e' | b'E' | b'-' | b'+')
        {
            // A '+' or '-' only belongs to the number right after an exponent marker
            // or at its start; otherwise it is the sum operator.
            let c = self.src[self.pos];
            if (c == b'+' || c == b'-')
                && self.pos != start
                && !matches!(self.src[self.pos - 1], b'e' | b'E')
            {
                break;
            }
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn number_list(&mut self) -> Result<Vec<f64>> {
        if self.peek() != Some(b'[') {
            return Ok(vec![self.number()?]);
        }
        self.pos += 1;
        let mut out = vec![self.number()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.expect(b']')?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pointwise_values() {
        let se = KernelSpec::se(1.0, 1.0);
        assert_eq!(se.eval(&[0.3], &[0.3]).unwrap(), 1.0);
        assert_relative_eq!(se.eval(&[0.0], &[1.0]).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(se.eval(&[0.0], &[1.0]).unwrap(), 0.60653, epsilon = 1e-5);
        let cos = KernelSpec::cosine(2.0, 1.0);
        assert_relative_eq!(cos.eval(&[0.0], &[1.0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(KernelSpec::matern52(1.0, 1.0).eval(&[2.0], &[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_lag_is_variance() {
        for k in [
            KernelSpec::se(2.5, 0.3),
            KernelSpec::se_ard(2.5, vec![0.3, 4.0]),
            KernelSpec::cosine(2.5, 0.3),
            KernelSpec::matern52(2.5, 0.3),
        ] {
            let dim = k.input_dim().unwrap_or(2);
            let x = vec![0.7; dim];
            assert_eq!(k.eval(&x, &x).unwrap(), 2.5);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let k = KernelSpec::se_ard(1.0, vec![1.0, 1.0]);
        assert!(matches!(k.eval(&[0.0], &[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(KernelSpec::se(1.0, 1.0).eval(&[0.0, 1.0], &[0.0]).is_err());
        let bad = KernelSpec::Sum(vec![KernelSpec::se_ard(1.0, vec![1.0]), KernelSpec::se_ard(1.0, vec![1.0, 2.0])]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(KernelSpec::se(0.0, 1.0).validate().is_err());
        assert!(KernelSpec::matern52(1.0, -1.0).validate().is_err());
        assert!(KernelSpec::Product(vec![]).validate().is_err());
    }

    #[test]
    fn gram_examples() {
        let k = KernelSpec::se(1.0, 1.0);
        let one = DMatrix::from_row_slice(1, 1, &[0.4]);
        assert_eq!(k.gram(&one, &one).unwrap()[(0, 0)], 1.0);
        let two = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let g = k.gram(&two, &two).unwrap();
        assert_relative_eq!(g[(0, 1)], 0.60653, epsilon = 1e-5);
        assert_relative_eq!(g[(1, 0)], 0.60653, epsilon = 1e-5);
        assert_eq!(g[(0, 0)], 1.0);
    }

    #[test]
    fn spectral_density_closed_forms() {
        let se = KernelSpec::se(1.0, 1.0);
        assert_relative_eq!(se.spectral_density(0.0).unwrap(), (2.0 * PI).sqrt(), epsilon = 1e-14);
        let m52 = KernelSpec::matern52(1.0, 1.0);
        assert_relative_eq!(m52.spectral_density(0.0).unwrap(), 16.0 * 5f64.powf(2.5) / 375.0, epsilon = 1e-12);
        assert_relative_eq!(m52.spectral_density(0.0).unwrap(), 2.3851, epsilon = 1e-4);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let s = se.spectral_density(i as f64 * 0.5).unwrap();
            assert!(s < prev);
            prev = s;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn spectral_density_rejects_dirac_spectra() {
        assert!(matches!(KernelSpec::cosine(1.0, 1.0).spectral_density(0.0), Err(Error::UnsupportedKernel(_))));
        let two_smooth = KernelSpec::Product(vec![KernelSpec::se(1.0, 1.0), KernelSpec::matern52(1.0, 1.0)]);
        assert!(two_smooth.spectral_density(0.0).is_err());
    }

    #[test]
    fn cosine_product_shifts_density() {
        let k: KernelSpec = "matern52(var=2,len=1.5)*cos(var=3,len=4)".parse().unwrap();
        let w0 = 2.0 * PI / 4.0;
        let m = KernelSpec::matern52(2.0, 1.5);
        for w in [0.0, 0.3, 1.7] {
            let expected = 1.5 * (m.spectral_density(w - w0).unwrap() + m.spectral_density(w + w0).unwrap());
            assert_relative_eq!(k.spectral_density(w).unwrap(), expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn ard_density_factorizes() {
        let k = KernelSpec::se_ard(2.0, vec![0.5, 3.0]);
        let a = KernelSpec::se(2.0, 0.5).spectral_density(0.7).unwrap();
        let b = KernelSpec::se(1.0, 3.0).spectral_density(-1.1).unwrap();
        assert_relative_eq!(k.spectral_density_nd(&[0.7, -1.1]).unwrap(), a * b, max_relative = 1e-14);
        let iso = KernelSpec::se(2.0, 0.5);
        let c = KernelSpec::se(1.0, 0.5).spectral_density(-1.1).unwrap();
        assert_relative_eq!(iso.spectral_density_nd(&[0.7, -1.1]).unwrap(), a * c, max_relative = 1e-13);
    }

    #[test]
    fn parse_and_display() {
        let k: KernelSpec = "matern52(var=1,len=1)*cos(var=1,len=11)".parse().unwrap();
        assert_eq!(
            k,
            KernelSpec::Product(vec![KernelSpec::matern52(1.0, 1.0), KernelSpec::cosine(1.0, 11.0)])
        );
        let k: KernelSpec = "se(var=2,len=0.5) + m52(len=3)*cos(len=11) + se_ard(len=[1,2e-1])".parse().unwrap();
        match &k {
            KernelSpec::Sum(terms) => assert_eq!(terms.len(), 3),
            _ => panic!("expected a sum"),
        }
        let back: KernelSpec = k.to_string().parse().unwrap();
        assert_eq!(back, k);
        let grouped: KernelSpec = "(se(len=1)+se(len=2))*cos(len=3)".parse().unwrap();
        assert!(matches!(grouped, KernelSpec::Product(ref f) if matches!(f[0], KernelSpec::Sum(_))));
        assert_eq!(grouped.to_string().parse::<KernelSpec>().unwrap(), grouped);
    }

    #[test]
    fn parse_errors() {
        for bad in ["matern52(var=1", "foo(var=1)", "se(var=1,bogus=2)", "se(var=-1)", "se(var=1) *", "se(len=[1,2])"] {
            let err = bad.parse::<KernelSpec>().unwrap_err();
            assert!(
                matches!(err, Error::KernelParse { .. } | Error::InvalidParameter(_)),
                "{bad}: {err}"
            );
        }
    }

    #[test]
    fn defaults_fill_missing_values() {
        let d = KernelDefaults { variance: 3.0, lengthscales: vec![2.0, 5.0], period: 7.0 };
        let k = KernelSpec::parse_with_defaults("matern52(len=4)*cos()", &d).unwrap();
        assert_eq!(k, KernelSpec::Product(vec![KernelSpec::matern52(3.0, 4.0), KernelSpec::cosine(3.0, 7.0)]));
        let k = KernelSpec::parse_with_defaults("se_ard()", &d).unwrap();
        assert_eq!(k, KernelSpec::se_ard(3.0, vec![2.0, 5.0]));
        let bare = KernelSpec::parse_with_defaults("matern52 * cos(len=4)", &d).unwrap();
        assert_eq!(bare, KernelSpec::Product(vec![KernelSpec::matern52(3.0, 2.0), KernelSpec::cosine(3.0, 4.0)]));
    }

    #[test]
    fn hyperparameter_roundtrip() {
        let k: KernelSpec = "matern52(var=1,len=2)*cos(var=3,len=4) + se_ard(var=5,len=[6,7])".parse().unwrap();
        assert_eq!(k.hyperparameters(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(k.hyperparameter_names().len(), 7);
        assert_eq!(k.hyperparameter_names()[3], "k.0.1.cos.period");
        let doubled: Vec<f64> = k.hyperparameters().iter().map(|v| 2.0 * v).collect();
        assert_eq!(k.with_hyperparameters(&doubled).unwrap().hyperparameters(), doubled);
        assert!(k.with_hyperparameters(&[1.0]).is_err());
    }

    fn arb_base() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (0.1..5.0f64, 0.1..5.0f64).prop_map(|(v, l)| KernelSpec::se(v, l)),
            (0.1..5.0f64, 0.1..5.0f64).prop_map(|(v, l)| KernelSpec::matern52(v, l)),
            (0.1..5.0f64, 0.1..5.0f64).prop_map(|(v, l)| KernelSpec::cosine(v, l)),
        ]
    }

    fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
        arb_base().prop_recursive(2, 8, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(KernelSpec::Sum),
                prop::collection::vec(inner, 2..4).prop_map(KernelSpec::Product),
            ]
        })
    }

    proptest! {
        #[test]
        fn stationarity(k in arb_kernel(), a in -5.0..5.0f64, b in -5.0..5.0f64, c in -3.0..3.0f64) {
            let v1 = k.eval(&[a], &[b]).unwrap();
            let v2 = k.eval(&[a + c], &[b + c]).unwrap();
            prop_assert!((v1 - v2).abs() <= 1e-9 * (1.0 + v1.abs()));
        }

        #[test]
        fn composition_is_exact_fold(k1 in arb_base(), k2 in arb_base(), a in -5.0..5.0f64, b in -5.0..5.0f64) {
            let s = KernelSpec::Sum(vec![k1.clone(), k2.clone()]);
            let p = KernelSpec::Product(vec![k1.clone(), k2.clone()]);
            let (e1, e2) = (k1.eval(&[a], &[b]).unwrap(), k2.eval(&[a], &[b]).unwrap());
            prop_assert_eq!(s.eval(&[a], &[b]).unwrap(), e1 + e2);
            prop_assert_eq!(p.eval(&[a], &[b]).unwrap(), e1 * e2);
        }

        #[test]
        fn gram_is_exactly_symmetric(k in arb_kernel(), xs in prop::collection::vec(-5.0..5.0f64, 1..12)) {
            let x = DMatrix::from_column_slice(xs.len(), 1, &xs);
            let g = k.gram(&x, &x).unwrap();
            prop_assert_eq!((&g - g.transpose()).amax(), 0.0);
            prop_assert_eq!(g, k.gram_symmetric(&x).unwrap());
        }

        #[test]
        fn display_parse_roundtrip(k in arb_kernel()) {
            let back: KernelSpec = k.to_string().parse().unwrap();
            prop_assert_eq!(back, k);
        }
    }
}
