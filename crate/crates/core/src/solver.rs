//! Lasso by cyclic coordinate descent, with KKT certificates.
//!
//! Objective: `‖Y − Xβ‖₂² + λ‖β‖₁` on a design whose columns satisfy
//! `(XᵀX)_jj = n`. With that normalization the exact coordinate minimizer is
//! `β_j ← soft((X_jᵀr + nβ_j)/n, λ/(2n))`.
//!
//! Convergence is declared on the KKT residual, never on coefficient change:
//! for the general criterion `g(‖Y − Xβ‖₂²) + λ‖β‖₁` a point is optimal iff
//! `(Xᵀ(Y − Xβ))_j = λ/(2g′)·sign(β_j)` on the support and
//! `|(Xᵀ(Y − Xβ))_j| ≤ λ/(2g′)` off it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_normalized, cholesky_shifted, column, dot, gram, restricted_correlation, sign};

/// Relative tolerance on `(XᵀX)_jj = n` accepted by the solver.
const NORMALIZATION_TOL: f64 = 1e-9;

/// Refresh the residual from scratch after this many incremental cycles.
const RESIDUAL_REFRESH: usize = 50;

/// Coordinate sweeps over the current support between two active-set refinements.
const ACTIVE_SWEEPS: usize = 10;

/// Supports larger than this are left to coordinate descent alone; every
/// refinement step refactors a Gram matrix of that size.
const POLISH_MAX_SUPPORT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub lambda: f64,
    /// KKT tolerance, relative to `λ/2`.
    pub tol: f64,
    /// Cap on coordinate cycles (full and active-set sweeps both count).
    pub max_iter: usize,
    /// `|β̂_j| ≤ support_epsilon` is treated as zero.
    pub support_epsilon: f64,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, tol: 1e-9, max_iter: 100_000, support_epsilon: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.support_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("support_epsilon must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Output of the initial estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub beta_hat: DVector<f64>,
    /// `Ŝ`, zero-based and sorted.
    pub support: Vec<usize>,
    pub lambda: f64,
    pub kkt_max_residual: f64,
    /// `g′(‖Y − Xβ̂‖₂²)`; identically 1 for the Lasso.
    pub gprime_at_solution: f64,
    pub iterations: usize,
}

impl Fit {
    /// `sign(β̂_Ŝ)`.
    pub fn support_signs(&self) -> Vec<f64> {
        self.support.iter().map(|&j| sign(self.beta_hat[j])).collect()
    }
}

/// `2σ√(2 ln(2p))`, the universal tuning parameter for columns of unit norm.
pub fn default_lambda(p: usize, sigma: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidConfig("p must be positive".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    Ok(2.0 * sigma * libm::sqrt(2.0 * libm::log(2.0 * p as f64)))
}

/// [`default_lambda`] carried over to columns with `(XᵀX)_jj = n`: rescaling
/// every column by `√n` multiplies the penalty by `√n` for the same fit.
pub fn scenario_lambda(n: usize, p: usize, sigma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    Ok(libm::sqrt(n as f64) * default_lambda(p, sigma)?)
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `{j : |β_j| > eps}`.
pub fn support_of(beta: &[f64], eps: f64) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| b.abs() > eps).map(|(j, _)| j).collect()
}

/// Per-coordinate KKT violations and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub max_residual: f64,
    pub per_coordinate: Vec<f64>,
}

fn kkt_from_correlations(corr: &[f64], beta: &[f64], half_lambda: f64) -> KktReport {
    let per_coordinate: Vec<f64> = corr
        .iter()
        .zip(beta)
        .map(|(&c, &b)| {
            if b != 0.0 {
                (c - half_lambda * sign(b)).abs()
            } else {
                (c.abs() - half_lambda).max(0.0)
            }
        })
        .collect();
    let max_residual = per_coordinate.iter().fold(0.0_f64, |m, &v| m.max(v));
    KktReport { max_residual, per_coordinate }
}

/// KKT audit of `beta` for the criterion with derivative `g′ = gprime_value`
/// at the solution. Violations are in the units of `Xᵀ(Y − Xβ)`.
pub fn kkt_check(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
    gprime_value: f64,
) -> Result<KktReport> {
    check_dims(x, y)?;
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, design has {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    if !(gprime_value > 0.0) {
        return Err(Error::InvalidConfig(format!("g' must be positive, got {gprime_value}")));
    }
    let resid = residual(x, y.as_slice(), beta.as_slice());
    let corr: Vec<f64> = (0..x.ncols()).map(|j| dot(column(x, j), &resid)).collect();
    Ok(kkt_from_correlations(&corr, beta.as_slice(), lambda / (2.0 * gprime_value)))
}

fn check_dims(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, outcome has length {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::DimensionMismatch("empty design".into()));
    }
    Ok(())
}

fn residual(x: &DMatrix<f64>, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (ri, xi) in r.iter_mut().zip(column(x, j)) {
                *ri -= b * xi;
            }
        }
    }
    r
}

/// Coordinate-descent state. Exposed so callers can step cycle by cycle.
#[derive(Debug, Clone)]
pub struct CoordinateDescent<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    lambda: f64,
    beta: Vec<f64>,
    resid: Vec<f64>,
    since_refresh: usize,
}

impl<'a> CoordinateDescent<'a> {
    /// Starts from `β = 0`. The design must be column-normalized.
    pub fn new(x: &'a DMatrix<f64>, y: &'a DVector<f64>, lambda: f64) -> Result<Self> {
        check_dims(x, y)?;
        check_normalized(x, NORMALIZATION_TOL)?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            x,
            y,
            lambda,
            beta: vec![0.0; x.ncols()],
            resid: y.as_slice().to_vec(),
            since_refresh: 0,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// One pass over `indices`; returns `max_j n·|Δβ_j|`, the largest change
    /// induced in any own-coordinate correlation.
    pub fn sweep<I: IntoIterator<Item = usize>>(&mut self, indices: I) -> f64 {
        let n = self.x.nrows() as f64;
        let threshold = self.lambda / (2.0 * n);
        let mut max_change = 0.0_f64;
        for j in indices {
            let col = column(self.x, j);
            let old = self.beta[j];
            let z = dot(col, &self.resid) / n + old;
            let new = soft_threshold(z, threshold);
            let delta = new - old;
            if delta != 0.0 {
                for (r, xv) in self.resid.iter_mut().zip(col) {
                    *r -= delta * xv;
                }
                self.beta[j] = new;
                max_change = max_change.max(n * delta.abs());
            }
        }
        self.since_refresh += 1;
        if self.since_refresh >= RESIDUAL_REFRESH {
            self.refresh();
        }
        max_change
    }

    /// One full cycle over all coordinates.
    pub fn cycle(&mut self) -> f64 {
        self.sweep(0..self.beta.len())
    }

    fn refresh(&mut self) {
        self.resid = residual(self.x, self.y.as_slice(), &self.beta);
        self.since_refresh = 0;
    }

    /// `‖Y − Xβ‖₂² + λ‖β‖₁` at the current iterate.
    pub fn objective(&self) -> f64 {
        let r = residual(self.x, self.y.as_slice(), &self.beta);
        dot(&r, &r) + self.lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Fresh KKT report (g′ = 1) at the current iterate.
    pub fn kkt(&mut self) -> KktReport {
        self.refresh();
        let corr: Vec<f64> = (0..self.x.ncols()).map(|j| dot(column(self.x, j), &self.resid)).collect();
        kkt_from_correlations(&corr, &self.beta, self.lambda / 2.0)
    }

    fn zero_below(&mut self, eps: f64) -> bool {
        let mut changed = false;
        for b in self.beta.iter_mut() {
            if *b != 0.0 && b.abs() <= eps {
                *b = 0.0;
                changed = true;
            }
        }
        changed
    }

    /// Active-set refinement. With `A` the current support and `s` its signs,
    /// solves `X_Aᵀ(Y − X_A d) = (λ/2)·s` and moves toward `d`. A coordinate
    /// that would cross zero on the way stops the move and leaves `A`; the
    /// objective does not increase along any of these steps. Returns true when
    /// a sign-consistent solution was reached.
    pub fn polish(&mut self) -> bool {
        let half = self.lambda / 2.0;
        let support: Vec<usize> = (0..self.beta.len()).filter(|&j| self.beta[j] != 0.0).collect();
        if support.is_empty() || support.len() > POLISH_MAX_SUPPORT.min(self.x.nrows()) {
            return false;
        }
        let full_gram = gram(self.x, &support);
        let full_xty = restricted_correlation(self.x, &support, self.y.as_slice());
        // positions into `support` still in play
        let mut keep: Vec<usize> = (0..support.len()).collect();
        while !keep.is_empty() {
            let k = keep.len();
            let g = DMatrix::from_fn(k, k, |a, b| full_gram[(keep[a], keep[b])]);
            let Ok(chol) = cholesky_shifted(&g, 0.0) else {
                break;
            };
            let rhs = DVector::from_fn(k, |a, _| full_xty[keep[a]] - half * sign(self.beta[support[keep[a]]]));
            let d = chol.solve(&rhs);
            if d.iter().any(|v| !v.is_finite()) {
                break;
            }
            let mut step = 1.0_f64;
            let mut blocking = None;
            for (&pos, &dj) in keep.iter().zip(d.iter()) {
                let bj = self.beta[support[pos]];
                if sign(dj) != sign(bj) {
                    let t = bj / (bj - dj);
                    if t < step {
                        step = t;
                        blocking = Some(support[pos]);
                    }
                }
            }
            for (&pos, &dj) in keep.iter().zip(d.iter()) {
                let j = support[pos];
                let old = self.beta[j];
                let moved = old + step * (dj - old);
                self.beta[j] = if sign(moved) == sign(old) { moved } else { 0.0 };
            }
            match blocking {
                None => {
                    self.refresh();
                    return true;
                }
                Some(j) => {
                    self.beta[j] = 0.0;
                    keep.retain(|&pos| self.beta[support[pos]] != 0.0);
                }
            }
        }
        self.refresh();
        false
    }
}

/// Solves the Lasso to KKT tolerance `tol·λ/2`.
///
/// Each round is one full coordinate cycle, a few cycles over the support, and
/// an active-set refinement ([`CoordinateDescent::polish`]); the round ends with
/// a KKT check on a freshly computed residual. Full cycles bring in coordinates
/// whose correlation exceeds `λ/2`, the refinement settles the support.
pub fn solve_lasso(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &SolverConfig) -> Result<Fit> {
    cfg.validate()?;
    let mut cd = CoordinateDescent::new(x, y, cfg.lambda)?;
    let target = cfg.tol * cfg.lambda / 2.0;
    let inner_target = 0.1 * target;
    let mut cycles = 0usize;
    let mut best = f64::INFINITY;
    let mut active: Vec<usize> = Vec::new();

    while cycles < cfg.max_iter {
        cd.cycle();
        cycles += 1;

        active.clear();
        active.extend(cd.beta().iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j));
        for _ in 0..ACTIVE_SWEEPS {
            if cycles >= cfg.max_iter {
                break;
            }
            let change = cd.sweep(active.iter().copied());
            cycles += 1;
            if change <= inner_target {
                break;
            }
        }

        cd.zero_below(cfg.support_epsilon);
        cd.polish();
        let report = cd.kkt();
        best = best.min(report.max_residual);
        if report.max_residual <= target {
            let beta_hat = DVector::from_vec(cd.beta().to_vec());
            let support = support_of(beta_hat.as_slice(), cfg.support_epsilon);
            return Ok(Fit {
                beta_hat,
                support,
                lambda: cfg.lambda,
                kkt_max_residual: report.max_residual,
                gprime_at_solution: 1.0,
                iterations: cycles,
            });
        }
    }
    Err(Error::NotConverged { cycles, best_residual: best })
}
