//! Least-squares refitting on the estimated support, the sign criterion `F`,
//! and the adaptive estimator that picks between the two fits.
//!
//! `X_ŜᵀX_Ŝ` is factorized once per fit with a ridge of `10⁻⁷/n` on the
//! diagonal. The same factor yields both `β̄_Ŝ` and
//! `w = (X_ŜᵀX_Ŝ)⁻¹ sign(β̂_Ŝ)`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_shifted, gram, restricted_correlation, sign, RIDGE_NUMERATOR};
use crate::solver::Fit;

/// `|w_j|` below this is treated as having no sign.
pub const SIGN_EPSILON: f64 = 1e-14;

/// Default thresholds for prediction and estimation.
pub const C_PRED_DEFAULT: f64 = 0.4;
pub const C_EST_DEFAULT: f64 = 0.2;

/// Ridge added to the Gram matrix of an `n`-row design.
pub fn ridge_shift(n: usize) -> f64 {
    RIDGE_NUMERATOR / n as f64
}

/// Cholesky factor of `X_AᵀX_A + (10⁻⁷/n)·I`.
#[derive(Debug, Clone)]
pub struct StabilizedGram {
    factor: Cholesky<f64, Dyn>,
    support: Vec<usize>,
}

impl StabilizedGram {
    pub fn new(x: &DMatrix<f64>, support: &[usize]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let g = gram(x, support);
        let factor = cholesky_shifted(&g, ridge_shift(x.nrows()))?;
        Ok(Self { factor, support: support.to_vec() })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }

    /// Refitted coefficients on the support.
    pub fn refit_coefficients(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.solve(&restricted_correlation(x, &self.support, y.as_slice()))
    }

    /// Embeds support coefficients into a length-`p` vector.
    pub fn scatter(&self, coef: &DVector<f64>, p: usize) -> DVector<f64> {
        let mut out = DVector::zeros(p);
        for (&j, &c) in self.support.iter().zip(coef.iter()) {
            out[j] = c;
        }
        out
    }
}

/// `β̄`, `F(Ŝ)` and `w` for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitResult {
    pub beta_bar: DVector<f64>,
    pub criterion_value: f64,
    /// `w = (X_ŜᵀX_Ŝ)⁻¹ sign(β̂_Ŝ)`, ordered like `Ŝ`.
    pub sign_vector: Vec<f64>,
    pub used_ridge: bool,
}

/// Criterion value and the vector it compares against.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub value: f64,
    pub sign_vector: Vec<f64>,
}

/// Least-squares refit on `support`; zero off the support and zero for `∅`.
pub fn ls_refit(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Result<DVector<f64>> {
    if support.is_empty() {
        return Ok(DVector::zeros(x.ncols()));
    }
    let g = StabilizedGram::new(x, support)?;
    let coef = g.refit_coefficients(x, y);
    Ok(g.scatter(&coef, x.ncols()))
}

fn sign_with_floor(v: f64) -> f64 {
    if v.abs() < SIGN_EPSILON {
        0.0
    } else {
        sign(v)
    }
}

fn criterion_from(g: &StabilizedGram, fit: &Fit) -> Criterion {
    let signs = DVector::from_vec(fit.support_signs());
    let w = g.solve(&signs);
    let mismatches = signs.iter().zip(w.iter()).filter(|(s, wj)| **s != sign_with_floor(**wj)).count();
    Criterion {
        value: mismatches as f64 / signs.len() as f64,
        sign_vector: w.as_slice().to_vec(),
    }
}

/// Fraction of `Ŝ` where `sign(β̂_j)` and `sign(w_j)` disagree.
pub fn criterion_f(x: &DMatrix<f64>, fit: &Fit) -> Result<Criterion> {
    let g = StabilizedGram::new(x, &fit.support)?;
    Ok(criterion_from(&g, fit))
}

/// Refit and criterion from a single factorization. For `Ŝ = ∅` this returns
/// `β̄ = 0` and `F = 0`.
pub fn refit(x: &DMatrix<f64>, y: &DVector<f64>, fit: &Fit) -> Result<RefitResult> {
    if fit.beta_hat.len() != x.ncols() || y.len() != x.nrows() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "design {}x{}, outcome {}, coefficients {}",
            x.nrows(),
            x.ncols(),
            y.len(),
            fit.beta_hat.len()
        )));
    }
    if fit.support.is_empty() {
        return Ok(RefitResult {
            beta_bar: DVector::zeros(x.ncols()),
            criterion_value: 0.0,
            sign_vector: Vec::new(),
            used_ridge: false,
        });
    }
    let g = StabilizedGram::new(x, &fit.support)?;
    let coef = g.refit_coefficients(x, y);
    let crit = criterion_from(&g, fit);
    Ok(RefitResult {
        beta_bar: g.scatter(&coef, x.ncols()),
        criterion_value: crit.value,
        sign_vector: crit.sign_vector,
        used_ridge: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Selection {
    Refitted,
    Initial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveChoice {
    pub threshold_c: f64,
    pub selected: Selection,
    pub beta_tilde: DVector<f64>,
}

/// `β̄` when `F(Ŝ) ≤ c`, otherwise `β̂`.
pub fn c_ls_select(fit: &Fit, refit: &RefitResult, c: f64) -> AdaptiveChoice {
    debug_assert!((0.0..=1.0).contains(&c));
    if refit.criterion_value <= c {
        AdaptiveChoice { threshold_c: c, selected: Selection::Refitted, beta_tilde: refit.beta_bar.clone() }
    } else {
        AdaptiveChoice { threshold_c: c, selected: Selection::Initial, beta_tilde: fit.beta_hat.clone() }
    }
}

pub fn zero_estimator(p: usize) -> DVector<f64> {
    DVector::zeros(p)
}
