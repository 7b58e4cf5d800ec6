//! Per-repetition performance metrics and their Monte Carlo aggregation.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::datagen::Instance;
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, mat_vec};

/// Support threshold used when counting false positives and negatives.
pub const METRIC_SUPPORT_EPSILON: f64 = 1e-10;

/// Label of the dispersion statistic reported next to each mean.
pub const SE_LABEL: &str = "standard error of the mean (sample SD / sqrt(R))";

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorMetrics {
    /// `‖Xβ − Xβ*‖₂²/n`
    pub pred_error: f64,
    /// `‖β − β*‖₂`
    pub est_error: f64,
    pub false_neg: usize,
    pub false_pos: usize,
    pub refit_for_prediction: bool,
    pub refit_for_estimation: bool,
}

pub fn compute_metrics(instance: &Instance, beta: &DVector<f64>) -> Result<EstimatorMetrics> {
    let p = instance.p();
    if beta.len() != p {
        return Err(Error::DimensionMismatch(alloc::format!(
            "estimator has length {}, instance has p = {p}",
            beta.len()
        )));
    }
    let n = instance.n() as f64;
    let diff: Vec<f64> = beta.iter().zip(instance.beta_star.iter()).map(|(b, t)| b - t).collect();
    let xd = mat_vec(&instance.x, &diff);
    let pred_error = compensated_sum(xd.iter().map(|v| v * v)) / n;
    let est_error = libm::sqrt(compensated_sum(diff.iter().map(|v| v * v)));
    let mut false_neg = 0;
    let mut false_pos = 0;
    for j in 0..p {
        let truth = instance.beta_star[j] != 0.0;
        let est = beta[j].abs() > METRIC_SUPPORT_EPSILON;
        match (truth, est) {
            (true, false) => false_neg += 1,
            (false, true) => false_pos += 1,
            _ => {}
        }
    }
    Ok(EstimatorMetrics {
        pred_error,
        est_error,
        false_neg,
        false_pos,
        refit_for_prediction: false,
        refit_for_estimation: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Estimator {
    Lasso,
    LsLasso,
    ClsLasso,
    Zero,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Lasso, Estimator::LsLasso, Estimator::ClsLasso, Estimator::Zero];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Lasso => "lasso",
            Estimator::LsLasso => "ls_lasso",
            Estimator::ClsLasso => "c_ls_lasso",
            Estimator::Zero => "zero",
        }
    }
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and SE over `values` in the given order. A single value has SE 0.
pub fn mean_se(values: &[f64]) -> Result<MeanSe> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no repetitions to aggregate".into()));
    }
    let r = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / r;
    if values.len() == 1 {
        return Ok(MeanSe { mean, se: 0.0 });
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = libm::sqrt(ss / (r - 1.0));
    Ok(MeanSe { mean, se: sd / libm::sqrt(r) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub pred_error: MeanSe,
    pub est_error: MeanSe,
    pub false_neg: MeanSe,
    pub false_pos: MeanSe,
    pub ls_pred_fraction: f64,
    pub ls_est_fraction: f64,
    pub repetitions: usize,
}

impl EstimatorSummary {
    /// `(metric name, summary)` in reporting order.
    pub fn metrics(&self) -> [(&'static str, MeanSe); 4] {
        [
            ("pred_error", self.pred_error),
            ("est_error", self.est_error),
            ("false_neg", self.false_neg),
            ("false_pos", self.false_pos),
        ]
    }
}

/// Aggregates one estimator's per-repetition metrics, in repetition order.
pub fn aggregate(estimator: Estimator, reps: &[EstimatorMetrics]) -> Result<EstimatorSummary> {
    if reps.is_empty() {
        return Err(Error::EmptyInput("no repetitions to aggregate".into()));
    }
    let col = |f: fn(&EstimatorMetrics) -> f64| -> Result<MeanSe> {
        let v: Vec<f64> = reps.iter().map(f).collect();
        mean_se(&v)
    };
    let r = reps.len() as f64;
    Ok(EstimatorSummary {
        estimator,
        pred_error: col(|m| m.pred_error)?,
        est_error: col(|m| m.est_error)?,
        false_neg: col(|m| m.false_neg as f64)?,
        false_pos: col(|m| m.false_pos as f64)?,
        ls_pred_fraction: reps.iter().filter(|m| m.refit_for_prediction).count() as f64 / r,
        ls_est_fraction: reps.iter().filter(|m| m.refit_for_estimation).count() as f64 / r,
        repetitions: reps.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, ScenarioConfig};

    fn instance(s: usize) -> Instance {
        let cfg = ScenarioConfig { n: 20, p: 8, s, sigma: 0.3, kappa: 0.5, seed: 3, repetitions: 1 };
        generate_instance(&cfg, 0).unwrap()
    }

    fn metric(v: f64, pred: bool) -> EstimatorMetrics {
        EstimatorMetrics {
            pred_error: v,
            est_error: v,
            false_neg: 0,
            false_pos: 0,
            refit_for_prediction: pred,
            refit_for_estimation: false,
        }
    }

    #[test]
    fn truth_has_zero_error() {
        let inst = instance(2);
        let m = compute_metrics(&inst, &inst.beta_star).unwrap();
        assert_eq!((m.pred_error, m.est_error, m.false_neg, m.false_pos), (0.0, 0.0, 0, 0));
    }

    #[test]
    fn zero_vector_against_two_sparse_truth() {
        let inst = instance(2);
        let m = compute_metrics(&inst, &DVector::zeros(8)).unwrap();
        assert!((m.est_error - libm::sqrt(1.25)).abs() < 1e-15);
        assert!((m.est_error - 1.118).abs() < 1e-3);
        assert_eq!((m.false_neg, m.false_pos), (2, 0));
    }

    #[test]
    fn saturated_support() {
        let inst = instance(3);
        let m = compute_metrics(&inst, &DVector::from_element(8, 5.0)).unwrap();
        assert_eq!((m.false_neg, m.false_pos), (0, 5));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(compute_metrics(&instance(1), &DVector::zeros(7)).is_err());
    }

    #[test]
    fn aggregation_examples() {
        let one = aggregate(Estimator::Lasso, &[metric(1.7, false)]).unwrap();
        assert_eq!(one.pred_error, MeanSe { mean: 1.7, se: 0.0 });
        let two = aggregate(Estimator::Lasso, &[metric(1.0, false), metric(3.0, false)]).unwrap();
        assert_eq!(two.pred_error.mean, 2.0);
        assert!((two.pred_error.se - 1.0).abs() < 1e-15);
        assert!(aggregate(Estimator::Zero, &[]).is_err());
    }

    #[test]
    fn refit_fractions() {
        let reps: Vec<_> = (0..1000).map(|i| metric(0.0, i < 120)).collect();
        let s = aggregate(Estimator::ClsLasso, &reps).unwrap();
        assert_eq!(s.ls_pred_fraction, 0.12);
        assert_eq!(s.ls_est_fraction, 0.0);
    }
}
