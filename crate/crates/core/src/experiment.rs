//! One Monte Carlo repetition, end to end: generate, solve, refit, select,
//! score and (optionally) audit. Everything here is a pure function of the
//! scenario, the repetition index and the run settings; the std crate only
//! schedules repetitions and writes files.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

use crate::datagen::{generate_instance, repetition_rng, Instance, ScenarioConfig, DESIGN_REDRAW, PRNG_ID};
use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::metrics::{aggregate, compute_metrics, Estimator, EstimatorMetrics, EstimatorSummary, SE_LABEL};
use crate::refit::{c_ls_select, refit, zero_estimator, RefitResult, Selection, C_EST_DEFAULT, C_PRED_DEFAULT};
use crate::solver::{scenario_lambda, solve_lasso, support_of, Fit, SolverConfig};
use crate::theory::{
    check_inverse_bounds, gram_spectrum, GapAnalysis, GapDiagnostics, GramSpectrum, InverseBoundReport, NormOrder,
    PredictionBound, verify_prediction_bound,
};

/// Largest relative discrepancy accepted by the gap identity check.
pub const GAP_REL_TOL: f64 = 1e-4;

/// KKT residual (relative to `λ/2`) below which the gap identity is checked.
pub const GAP_KKT_GATE: f64 = 1e-9;

/// Zero threshold for `S(β̄)`, relative to `‖β̄‖_∞`.
pub const REFIT_SUPPORT_REL_EPS: f64 = 1e-12;

/// Largest random support drawn for the inverse-bound audit.
pub const MAX_AUDIT_SUPPORT: usize = 10;

/// Stream offset separating audit draws from data draws.
const AUDIT_STREAM: u64 = 1 << 63;

/// Settings shared by every repetition of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSettings {
    /// Overrides [`scenario_lambda`] when set; taken as the penalty of `‖Y − Xβ‖₂² + λ‖β‖₁` as is.
    pub lambda: Option<f64>,
    pub c_pred: f64,
    pub c_est: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub support_epsilon: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            lambda: None,
            c_pred: C_PRED_DEFAULT,
            c_est: C_EST_DEFAULT,
            tol: 1e-9,
            max_iter: 100_000,
            support_epsilon: 1e-10,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("c_pred", self.c_pred), ("c_est", self.c_est)] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidConfig(alloc::format!("{name} must lie in [0, 1], got {c}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidConfig(alloc::format!("lambda must be positive, got {l}")));
            }
        }
        Ok(())
    }

    pub fn solver_config(&self, cfg: &ScenarioConfig) -> Result<SolverConfig> {
        let lambda = match self.lambda {
            Some(l) => l,
            None => scenario_lambda(cfg.n, cfg.p, cfg.sigma)?,
        };
        let sc = SolverConfig { lambda, tol: self.tol, max_iter: self.max_iter, support_epsilon: self.support_epsilon };
        sc.validate()?;
        Ok(sc)
    }
}

/// Instance, initial fit and refit of one repetition.
#[derive(Debug, Clone)]
pub struct SolvedRepetition {
    pub rep: u64,
    pub instance: Instance,
    pub fit: Fit,
    pub refit: RefitResult,
    pub solver: SolverConfig,
}

pub fn solve_repetition(cfg: &ScenarioConfig, rep: u64, settings: &RunSettings) -> Result<SolvedRepetition> {
    settings.validate()?;
    let solver = settings.solver_config(cfg)?;
    let instance = generate_instance(cfg, rep)?;
    let fit = solve_lasso(&instance.x, &instance.y, &solver)?;
    let refit = refit(&instance.x, &instance.y, &fit)?;
    Ok(SolvedRepetition { rep, instance, fit, refit, solver })
}

/// Scores of the four estimators for one repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepetitionOutcome {
    pub rep: u64,
    pub lasso: EstimatorMetrics,
    pub ls_lasso: EstimatorMetrics,
    pub c_ls_lasso: EstimatorMetrics,
    pub zero: EstimatorMetrics,
    pub criterion_value: f64,
    pub support_size: usize,
}

impl RepetitionOutcome {
    pub fn get(&self, e: Estimator) -> &EstimatorMetrics {
        match e {
            Estimator::Lasso => &self.lasso,
            Estimator::LsLasso => &self.ls_lasso,
            Estimator::ClsLasso => &self.c_ls_lasso,
            Estimator::Zero => &self.zero,
        }
    }
}

impl SolvedRepetition {
    /// Scores Lasso, LS Lasso, c-LS Lasso and Zero. The c-LS row takes its
    /// prediction error from the `c_pred` choice and its estimation error from
    /// the `c_est` choice.
    pub fn outcome(&self, settings: &RunSettings) -> Result<RepetitionOutcome> {
        let inst = &self.instance;
        let lasso = compute_metrics(inst, &self.fit.beta_hat)?;
        let mut ls_lasso = compute_metrics(inst, &self.refit.beta_bar)?;
        ls_lasso.refit_for_prediction = true;
        ls_lasso.refit_for_estimation = true;

        let for_pred = c_ls_select(&self.fit, &self.refit, settings.c_pred);
        let for_est = c_ls_select(&self.fit, &self.refit, settings.c_est);
        let pred_metrics = compute_metrics(inst, &for_pred.beta_tilde)?;
        let est_metrics = compute_metrics(inst, &for_est.beta_tilde)?;
        let c_ls_lasso = EstimatorMetrics {
            pred_error: pred_metrics.pred_error,
            est_error: est_metrics.est_error,
            false_neg: pred_metrics.false_neg,
            false_pos: pred_metrics.false_pos,
            refit_for_prediction: for_pred.selected == Selection::Refitted,
            refit_for_estimation: for_est.selected == Selection::Refitted,
        };
        let zero = compute_metrics(inst, &zero_estimator(inst.p()))?;
        Ok(RepetitionOutcome {
            rep: self.rep,
            lasso,
            ls_lasso,
            c_ls_lasso,
            zero,
            criterion_value: self.refit.criterion_value,
            support_size: self.fit.support.len(),
        })
    }

    /// Runs every theoretical check on this repetition.
    pub fn verify(&self, seed: u64) -> Result<VerificationRecord> {
        let fit = &self.fit;
        let half_lambda = fit.lambda / 2.0;
        let kkt_ok = fit.kkt_max_residual <= self.solver.tol * half_lambda;
        let inverse_bounds = audit_inverse_bounds(&self.instance, seed, self.rep)?;
        let mut record = VerificationRecord {
            rep: self.rep,
            support_size: fit.support.len(),
            kkt_residual: fit.kkt_max_residual,
            kkt_ok,
            support_identity: None,
            spectrum: None,
            gap: Vec::new(),
            gap_checked: false,
            gap_ok: None,
            prediction: None,
            inverse_bounds,
        };
        if fit.support.is_empty() {
            return Ok(record);
        }
        let bar = self.refit.beta_bar.as_slice();
        let refit_support = support_of(bar, REFIT_SUPPORT_REL_EPS * max_abs(bar));
        record.support_identity = Some(refit_support == fit.support);

        let spectrum = gram_spectrum(&self.instance.x, &fit.support)?;
        record.spectrum = Some(spectrum);

        let analysis = GapAnalysis::new(&self.instance, fit, &self.refit)?;
        record.gap = [NormOrder::ONE, NormOrder::TWO, NormOrder::Infinity]
            .iter()
            .map(|&q| analysis.diagnostics(q))
            .collect();
        record.gap_checked = spectrum.condition_number < crate::theory::UNSTABILIZED_COND_LIMIT
            && fit.kkt_max_residual <= GAP_KKT_GATE * half_lambda;
        if record.gap_checked {
            record.gap_ok = Some(record.gap.iter().all(|g| g.relative_discrepancy <= GAP_REL_TOL));
        }
        record.prediction = Some(verify_prediction_bound(&self.instance, fit, &self.refit)?);
        Ok(record)
    }
}

/// Scores one repetition.
pub fn run_repetition(cfg: &ScenarioConfig, rep: u64, settings: &RunSettings) -> Result<RepetitionOutcome> {
    solve_repetition(cfg, rep, settings)?.outcome(settings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InverseBoundAudit {
    pub size: usize,
    pub applicable: bool,
    pub holds: bool,
}

/// Draws a random set `A` (`1 ≤ |A| ≤ 10`) and checks the inverse-entry
/// bounds when `A` passes the coherence precondition.
pub fn audit_inverse_bounds(instance: &Instance, seed: u64, rep: u64) -> Result<InverseBoundAudit> {
    let mut rng = repetition_rng(seed, AUDIT_STREAM | rep);
    let p = instance.p();
    let size = rng.random_range(1..=MAX_AUDIT_SUPPORT.min(p));
    let mut a = sample(&mut rng, p, size).into_vec();
    a.sort_unstable();
    Ok(match check_inverse_bounds(&instance.x, &a)? {
        InverseBoundReport::NotApplicable { .. } => InverseBoundAudit { size, applicable: false, holds: true },
        InverseBoundReport::Checked(b) => InverseBoundAudit { size, applicable: true, holds: b.all_hold() },
    })
}

/// All checks for one repetition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationRecord {
    pub rep: u64,
    pub support_size: usize,
    pub kkt_residual: f64,
    pub kkt_ok: bool,
    /// `S(β̄) = Ŝ`; `None` when `Ŝ = ∅`.
    pub support_identity: Option<bool>,
    pub spectrum: Option<GramSpectrum>,
    /// Gap identity for `q = 1, 2, ∞`.
    pub gap: Vec<GapDiagnostics>,
    /// Conditioning and KKT gates passed, so the identity is enforced.
    pub gap_checked: bool,
    pub gap_ok: Option<bool>,
    pub prediction: Option<PredictionBound>,
    pub inverse_bounds: InverseBoundAudit,
}

/// Pass/fail counts for one check.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckTally {
    pub checked: usize,
    pub failures: usize,
    /// Largest observed value of the check's residual statistic.
    pub worst: f64,
}

impl CheckTally {
    fn record(&mut self, ok: bool, value: f64) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
        }
        self.worst = if self.checked == 1 { value } else { self.worst.max(value) };
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationSummary {
    pub repetitions: usize,
    pub empty_supports: usize,
    /// Worst: number of mismatched indices is not tracked; reports 1 per failure.
    pub support_identity: CheckTally,
    /// Worst: largest relative discrepancy over `q ∈ {1, 2, ∞}`.
    pub gap_equality: CheckTally,
    pub gap_skipped: usize,
    /// Worst: largest `pred_gap − bound`.
    pub prediction_bound: CheckTally,
    /// Worst: largest KKT residual relative to `λ/2`.
    pub kkt: CheckTally,
    /// Worst: smallest eigenvalue of `X_ŜᵀX_Ŝ`, negated.
    pub full_rank: CheckTally,
    pub ill_conditioned: usize,
    pub inverse_bounds: CheckTally,
    pub inverse_bounds_not_applicable: usize,
}

impl VerificationSummary {
    pub fn from_records(records: &[VerificationRecord], lambda: f64) -> Self {
        let mut s = VerificationSummary { repetitions: records.len(), ..Default::default() };
        for r in records {
            s.kkt.record(r.kkt_ok, r.kkt_residual / (lambda / 2.0));
            if r.inverse_bounds.applicable {
                s.inverse_bounds.record(r.inverse_bounds.holds, 0.0);
            } else {
                s.inverse_bounds_not_applicable += 1;
            }
            let Some(identity) = r.support_identity else {
                s.empty_supports += 1;
                continue;
            };
            s.support_identity.record(identity, if identity { 0.0 } else { 1.0 });
            if let Some(sp) = r.spectrum {
                s.full_rank.record(sp.min_eigenvalue > 0.0, -sp.min_eigenvalue);
                if sp.ill_conditioned {
                    s.ill_conditioned += 1;
                }
            }
            match r.gap_ok {
                Some(ok) => {
                    let worst = r.gap.iter().fold(0.0_f64, |m, g| m.max(g.relative_discrepancy));
                    s.gap_equality.record(ok, worst);
                }
                None => s.gap_skipped += 1,
            }
            if let Some(pb) = r.prediction {
                s.prediction_bound.record(pb.holds, pb.pred_gap - pb.bound);
            }
        }
        s
    }

    /// Violations of checks that must never fail.
    pub fn hard_failures(&self) -> usize {
        self.support_identity.failures
            + self.gap_equality.failures
            + self.prediction_bound.failures
            + self.kkt.failures
            + self.full_rank.failures
            + self.inverse_bounds.failures
    }
}

/// Aggregated results of one scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub setting: String,
    pub scenario: ScenarioConfig,
    pub solver: SolverConfig,
    pub c_pred: f64,
    pub c_est: f64,
    pub prng: String,
    pub design_redraw: String,
    pub dispersion: String,
    pub repetitions_requested: usize,
    pub repetitions_used: usize,
    /// Repetitions dropped because the solver did not converge.
    pub excluded_repetitions: Vec<u64>,
    pub rows: Vec<EstimatorSummary>,
}

impl ExperimentReport {
    pub fn row(&self, e: Estimator) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator == e)
    }
}

/// Builds the report from outcomes listed in repetition order.
pub fn summarize(
    setting: &str,
    cfg: &ScenarioConfig,
    settings: &RunSettings,
    outcomes: &[RepetitionOutcome],
    excluded: Vec<u64>,
) -> Result<ExperimentReport> {
    let solver = settings.solver_config(cfg)?;
    let rows = Estimator::ALL
        .iter()
        .map(|&e| {
            let reps: Vec<EstimatorMetrics> = outcomes.iter().map(|o| *o.get(e)).collect();
            aggregate(e, &reps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        setting: setting.to_string(),
        scenario: *cfg,
        solver,
        c_pred: settings.c_pred,
        c_est: settings.c_est,
        prng: PRNG_ID.to_string(),
        design_redraw: DESIGN_REDRAW.to_string(),
        dispersion: SE_LABEL.to_string(),
        repetitions_requested: cfg.repetitions,
        repetitions_used: outcomes.len(),
        excluded_repetitions: excluded,
        rows,
    })
}
