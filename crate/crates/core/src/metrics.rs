//! Test-set scores. Smaller is better for all of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean squared error over the mean squared deviation of the test targets
/// from the training mean.
pub fn nmse(pred_mean: &[f64], y_test: &[f64], train_mean: f64) -> Result<f64> {
    check_len(pred_mean.len(), y_test.len())?;
    let num: f64 = y_test.iter().zip(pred_mean).map(|(y, m)| (y - m).powi(2)).sum();
    let den: f64 = y_test.iter().map(|y| (y - train_mean).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("NMSE: test targets all equal the training mean".into()));
    }
    Ok(num / den)
}

/// Mean negative log predictive density of Gaussian marginals.
pub fn mnlp(pred_mean: &[f64], pred_var: &[f64], y_test: &[f64]) -> Result<f64> {
    check_len(pred_mean.len(), y_test.len())?;
    check_len(pred_var.len(), y_test.len())?;
    let mut acc = 0.0;
    for ((y, m), v) in y_test.iter().zip(pred_mean).zip(pred_var) {
        if !(*v > 0.0) {
            return Err(Error::UndefinedMetric(format!("MNLP: non-positive variance {v}")));
        }
        acc += 0.5 * ((y - m).powi(2) / v + v.ln() + (2.0 * std::f64::consts::PI).ln());
    }
    Ok(acc / y_test.len() as f64)
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: b, got: a });
    }
    if b == 0 {
        return Err(Error::UndefinedMetric("empty test set".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub seed: u64,
    pub n_test: usize,
    pub nmse: f64,
    pub mnlp: f64,
    /// Training NLL, or −ELBO for the variational sparse GP.
    pub nll_or_neg_elbo: f64,
}

impl MetricReport {
    pub fn compute(
        model: &str,
        seed: u64,
        pred_mean: &[f64],
        pred_var: &[f64],
        y_test: &[f64],
        train_mean: f64,
        objective: f64,
    ) -> Result<Self> {
        Ok(MetricReport {
            model: model.to_string(),
            seed,
            n_test: y_test.len(),
            nmse: nmse(pred_mean, y_test, train_mean)?,
            mnlp: mnlp(pred_mean, pred_var, y_test)?,
            nll_or_neg_elbo: objective,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn nmse_examples() {
        assert_eq!(nmse(&[1.0, 2.0], &[1.0, 2.0], 0.0).unwrap(), 0.0);
        assert_eq!(nmse(&[1.5, 1.5], &[1.0, 2.0], 1.5).unwrap(), 1.0);
        assert_eq!(nmse(&[0.0, 0.0], &[0.0, 2.0], 1.0).unwrap(), 2.0);
        assert!(matches!(nmse(&[0.0], &[1.0], 1.0), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn mnlp_examples() {
        let v = 1.0 / (2.0 * std::f64::consts::PI);
        assert!(mnlp(&[0.3, 1.0], &[v, v], &[0.3, 1.0]).unwrap().abs() < 1e-15);
        assert_relative_eq!(mnlp(&[2.0], &[1.0], &[2.0]).unwrap(), 0.918_938_533_204_672_8, epsilon = 1e-15);
        assert_relative_eq!(mnlp(&[0.0], &[1.0], &[1.0]).unwrap(), 1.418_938_533_204_672_8, epsilon = 1e-15);
        assert!(mnlp(&[0.0], &[0.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn nmse_scale_invariant(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..20),
            ybar in -1.0f64..1.0,
            c in prop::sample::select(vec![-3.0, 0.5, 2.0, 1e3]),
        ) {
            let y: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let m: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(a) = nmse(&m, &y, ybar) {
                let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
                let ms: Vec<f64> = m.iter().map(|v| v * c).collect();
                let b = nmse(&ms, &ys, ybar * c).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }

        #[test]
        fn mnlp_shift_invariant(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.01f64..4.0), 1..20),
            c in -100.0f64..100.0,
        ) {
            let y: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let m: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let v: Vec<f64> = pts.iter().map(|p| p.2).collect();
            let a = mnlp(&m, &v, &y).unwrap();
            let ys: Vec<f64> = y.iter().map(|x| x + c).collect();
            let ms: Vec<f64> = m.iter().map(|x| x + c).collect();
            let b = mnlp(&ms, &v, &ys).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
