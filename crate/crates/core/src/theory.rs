//! Runtime checks of the relations between the initial and the refitted
//! estimator, and of the entrywise inverse bounds under mutual coherence.
//!
//! The gap identity `‖β̄ − β̂‖_q = ‖(X_ŜᵀX_Ŝ)⁻¹sign(β̂_Ŝ)‖_q · λ/(2g′)` is exact
//! only at an exact KKT point. Writing `e = X_Ŝᵀ(Y − Xβ̂) − λ/(2g′)·sign(β̂_Ŝ)`
//! for the KKT residual on the support, `β̄_Ŝ − β̂_Ŝ = (X_ŜᵀX_Ŝ)⁻¹(λ/(2g′)·sign + e)`
//! holds algebraically, so the two sides differ by at most `‖(X_ŜᵀX_Ŝ)⁻¹e‖_q`
//! (for `q ≥ 1`). That quantity is reported alongside the discrepancy.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::datagen::Instance;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_shifted, column, condition_number, dot, gram, mat_vec, max_abs, restricted_correlation,
};
use crate::refit::RefitResult;
use crate::solver::Fit;

/// Above this condition number the gap check falls back to the ridge-stabilized inverse.
pub const UNSTABILIZED_COND_LIMIT: f64 = 1e10;

/// Condition numbers above this are flagged as near-degenerate supports.
pub const ILL_CONDITIONED_FLAG: f64 = 1e12;

/// Order of a (quasi-)norm, `q ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub const ONE: NormOrder = NormOrder::Finite(1.0);
    pub const TWO: NormOrder = NormOrder::Finite(2.0);

    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else if q > 0.0 && q.is_finite() {
            Ok(NormOrder::Finite(q))
        } else {
            Err(Error::InvalidConfig(alloc::format!("norm order must lie in (0, inf], got {q}")))
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            NormOrder::Infinity => max_abs(v),
            NormOrder::Finite(1.0) => v.iter().map(|x| x.abs()).sum(),
            NormOrder::Finite(2.0) => libm::sqrt(dot(v, v)),
            NormOrder::Finite(q) => {
                let s: f64 = v.iter().map(|x| libm::pow(x.abs(), q)).sum();
                libm::pow(s, 1.0 / q)
            }
        }
    }

    /// `|A|^(1/q)`, i.e. the q-norm of a vector of `|A|` ones.
    pub fn ones_norm(&self, len: usize) -> f64 {
        match *self {
            NormOrder::Infinity => if len == 0 { 0.0 } else { 1.0 },
            NormOrder::Finite(q) => libm::pow(len as f64, 1.0 / q),
        }
    }
}

/// Spectrum summary of `X_ŜᵀX_Ŝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GramSpectrum {
    pub min_eigenvalue: f64,
    pub condition_number: f64,
    /// Condition number above [`ILL_CONDITIONED_FLAG`].
    pub ill_conditioned: bool,
}

pub fn gram_spectrum(x: &DMatrix<f64>, support: &[usize]) -> Result<GramSpectrum> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let (cond, min_eig) = condition_number(&gram(x, support));
    Ok(GramSpectrum {
        min_eigenvalue: min_eig,
        condition_number: cond,
        ill_conditioned: !(cond <= ILL_CONDITIONED_FLAG),
    })
}

/// Both sides of the gap identity for one norm order.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapDiagnostics {
    pub q: NormOrder,
    pub gap_norm: f64,
    pub predicted_norm: f64,
    pub relative_discrepancy: f64,
    /// `‖(X_ŜᵀX_Ŝ)⁻¹e‖_q` with `e` the KKT residual on the support.
    pub kkt_propagation: f64,
    pub condition_number: f64,
    pub stabilized: bool,
}

/// Shared work for the gap identity: one factorization serves every `q`.
#[derive(Debug, Clone)]
pub struct GapAnalysis {
    gap: Vec<f64>,
    inverse_signs: Vec<f64>,
    propagated_residual: Vec<f64>,
    scale: f64,
    condition_number: f64,
    stabilized: bool,
}

impl GapAnalysis {
    pub fn new(instance: &Instance, fit: &Fit, refit: &RefitResult) -> Result<Self> {
        let support = &fit.support;
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let x = &instance.x;
        let g = gram(x, support);
        let (cond, _) = condition_number(&g);
        let scale = fit.lambda / (2.0 * fit.gprime_at_solution);
        let signs = DVector::from_vec(fit.support_signs());
        let resid: Vec<f64> = {
            let xb = mat_vec(x, fit.beta_hat.as_slice());
            instance.y.iter().zip(&xb).map(|(y, f)| y - f).collect()
        };
        let corr = restricted_correlation(x, support, &resid);
        let kkt_err = &corr - &signs * scale;

        let exact = if cond < UNSTABILIZED_COND_LIMIT { cholesky_shifted(&g, 0.0).ok() } else { None };
        let (refit_coef, inverse_signs, propagated, stabilized) = match exact {
            Some(chol) => {
                let coef = chol.solve(&restricted_correlation(x, support, instance.y.as_slice()));
                (coef, chol.solve(&signs), chol.solve(&kkt_err), false)
            }
            None => {
                let chol = cholesky_shifted(&g, crate::refit::ridge_shift(x.nrows()))?;
                let coef = DVector::from_iterator(support.len(), support.iter().map(|&j| refit.beta_bar[j]));
                (coef, DVector::from_vec(refit.sign_vector.clone()), chol.solve(&kkt_err), true)
            }
        };
        let gap = support.iter().zip(refit_coef.iter()).map(|(&j, &b)| b - fit.beta_hat[j]).collect();
        Ok(Self {
            gap,
            inverse_signs: inverse_signs.as_slice().to_vec(),
            propagated_residual: propagated.as_slice().to_vec(),
            scale,
            condition_number: cond,
            stabilized,
        })
    }

    pub fn diagnostics(&self, q: NormOrder) -> GapDiagnostics {
        let gap_norm = q.norm(&self.gap);
        let predicted_norm = q.norm(&self.inverse_signs) * self.scale;
        let diff = (gap_norm - predicted_norm).abs();
        let relative_discrepancy = if predicted_norm > 0.0 { diff / predicted_norm } else { diff };
        GapDiagnostics {
            q,
            gap_norm,
            predicted_norm,
            relative_discrepancy,
            kkt_propagation: q.norm(&self.propagated_residual),
            condition_number: self.condition_number,
            stabilized: self.stabilized,
        }
    }
}

/// Checks `‖β̄ − β̂‖_q = ‖(X_ŜᵀX_Ŝ)⁻¹sign(β̂_Ŝ)‖_q · λ/(2g′)`.
///
/// When `cond(X_ŜᵀX_Ŝ) < 1e10` both sides use the unstabilized inverse (the
/// refit is recomputed without ridge); otherwise the stabilized `β̄` and `w`
/// from `refit` are used and the result is flagged.
pub fn verify_gap_equality(
    instance: &Instance,
    fit: &Fit,
    refit: &RefitResult,
    q: NormOrder,
) -> Result<GapDiagnostics> {
    Ok(GapAnalysis::new(instance, fit, refit)?.diagnostics(q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionBound {
    /// `‖Xβ̄ − Xβ*‖₂² − ‖Xβ̂ − Xβ*‖₂²`.
    pub pred_gap: f64,
    /// `‖w‖₁ · λσ‖X_Ŝᵀε‖_∞ / g′`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks the prediction-gap bound with slack
/// `1e-6·(1 + |bound|) + 2τ‖β̄ − β̂‖₁`, `τ` the solver's KKT residual.
pub fn verify_prediction_bound(instance: &Instance, fit: &Fit, refit: &RefitResult) -> Result<PredictionBound> {
    let eps = instance.noise.as_ref().ok_or(Error::NoiseUnavailable)?;
    if fit.support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let x = &instance.x;
    let truth = mat_vec(x, instance.beta_star.as_slice());
    let sq_dist = |beta: &DVector<f64>| -> f64 {
        mat_vec(x, beta.as_slice()).iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let pred_gap = sq_dist(&refit.beta_bar) - sq_dist(&fit.beta_hat);
    let noise_corr = max_abs(restricted_correlation(x, &fit.support, eps.as_slice()).as_slice());
    let w_l1: f64 = refit.sign_vector.iter().map(|w| w.abs()).sum();
    let bound = w_l1 * fit.lambda * instance.sigma * noise_corr / fit.gprime_at_solution;
    let gap_l1: f64 = (&refit.beta_bar - &fit.beta_hat).iter().map(|v| v.abs()).sum();
    let slack = 1e-6 * (1.0 + bound.abs()) + 2.0 * fit.kkt_max_residual * gap_l1;
    Ok(PredictionBound { pred_gap, bound, slack, holds: pred_gap <= bound + slack })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coherence {
    /// `max_{i∈A, j≠i} |X_iᵀX_j|` over all columns `j`.
    pub against_all: f64,
    /// `max_{i≠j∈A} |X_iᵀX_j|`; zero for singletons.
    pub within: f64,
}

pub fn mutual_coherence(x: &DMatrix<f64>, a: &[usize]) -> Result<Coherence> {
    if a.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut against_all = 0.0_f64;
    let mut within = 0.0_f64;
    for &i in a {
        let ci = column(x, i);
        for j in 0..x.ncols() {
            if j == i {
                continue;
            }
            let v = dot(ci, column(x, j)).abs();
            against_all = against_all.max(v);
            if a.contains(&j) {
                within = within.max(v);
            }
        }
    }
    Ok(Coherence { against_all, within })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnInverseBound {
    /// `Σ_{k≠l} |((X_AᵀX_A)⁻¹)_{kl}|`.
    pub off_diagonal_sum: f64,
    pub diagonal: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InverseBounds {
    pub n: usize,
    pub size: usize,
    pub within_coherence: f64,
    pub threshold: f64,
    /// Coherence strictly below the threshold; strict inequalities are checked.
    pub strict: bool,
    /// `1/n − 1/(n|A|)`.
    pub lower: f64,
    /// `1/n + 1/(n|A|)`.
    pub upper: f64,
    pub columns: Vec<ColumnInverseBound>,
}

impl InverseBounds {
    pub fn violations(&self) -> usize {
        self.columns.iter().filter(|c| !c.holds).count()
    }

    pub fn all_hold(&self) -> bool {
        self.violations() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InverseBoundReport {
    /// Within-set coherence exceeds `n/(2|A|)`.
    NotApplicable { within_coherence: f64, threshold: f64 },
    Checked(InverseBounds),
}

/// Entrywise bounds on `(X_AᵀX_A)⁻¹` when `|X_iᵀX_j| ≤ n/(2|A|)` inside `A`.
/// The inverse is computed without ridge.
pub fn check_inverse_bounds(x: &DMatrix<f64>, a: &[usize]) -> Result<InverseBoundReport> {
    let coh = mutual_coherence(x, a)?;
    let n = x.nrows();
    let size = a.len();
    let nf = n as f64;
    let threshold = nf / (2.0 * size as f64);
    if coh.within > threshold {
        return Ok(InverseBoundReport::NotApplicable { within_coherence: coh.within, threshold });
    }
    let strict = coh.within < threshold;
    let inv = cholesky_shifted(&gram(x, a), 0.0)?.inverse();
    let lower = 1.0 / nf - 1.0 / (nf * size as f64);
    let upper = 1.0 / nf + 1.0 / (nf * size as f64);
    // Non-strict comparisons absorb rounding in the computed inverse.
    let round = 1e-12 / nf;
    let le = |a: f64, b: f64| if strict { a < b } else { a <= b + round };
    let columns = (0..size)
        .map(|l| {
            let diagonal = inv[(l, l)];
            let off_diagonal_sum: f64 = (0..size).filter(|&k| k != l).map(|k| inv[(k, l)].abs()).sum();
            // With |A| = 1 the off-diagonal sum is empty and equals the lower bound.
            let off_ok = if size == 1 { off_diagonal_sum == 0.0 } else { le(off_diagonal_sum, lower) };
            let holds = off_ok && le(lower, diagonal) && le(diagonal, upper);
            ColumnInverseBound { off_diagonal_sum, diagonal, holds }
        })
        .collect();
    Ok(InverseBoundReport::Checked(InverseBounds {
        n,
        size,
        within_coherence: coh.within,
        threshold,
        strict,
        lower,
        upper,
        columns,
    }))
}

/// `‖(X_AᵀX_A)⁻¹ signs‖_q` against `2|A|^(1/q)/n`, available only when the
/// coherence precondition holds inside `A`.
pub fn coherent_sign_vector_bound(
    x: &DMatrix<f64>,
    a: &[usize],
    signs: &[f64],
    q: NormOrder,
) -> Result<Option<(f64, f64)>> {
    if signs.len() != a.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} signs for a set of size {}",
            signs.len(),
            a.len()
        )));
    }
    let coh = mutual_coherence(x, a)?;
    let n = x.nrows() as f64;
    if coh.within > n / (2.0 * a.len() as f64) {
        return Ok(None);
    }
    let chol = cholesky_shifted(&gram(x, a), 0.0)?;
    let w = chol.solve(&DVector::from_vec(signs.to_vec()));
    Ok(Some((q.norm(w.as_slice()), 2.0 * q.ones_norm(a.len()) / n)))
}
