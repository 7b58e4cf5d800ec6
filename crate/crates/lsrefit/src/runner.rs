//! Schedules repetitions across threads and joins them in repetition order.
//!
//! Each repetition draws from its own RNG stream, so results do not depend
//! on how rayon schedules the work.

use lsrefit_core::experiment::{solve_repetition, summarize, RepetitionOutcome, RunSettings, VerificationRecord};
use lsrefit_core::{Error as CoreError, ExperimentReport, ScenarioConfig, VerificationSummary};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AppError, Result};

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub report: ExperimentReport,
    pub outcomes: Vec<RepetitionOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationRun {
    pub setting: String,
    pub scenario: ScenarioConfig,
    pub lambda: f64,
    pub excluded_repetitions: Vec<u64>,
    pub summary: VerificationSummary,
    pub records: Vec<VerificationRecord>,
}

impl VerificationRun {
    pub fn passed(&self) -> bool {
        self.summary.hard_failures() == 0
    }
}

struct Joined<T> {
    values: Vec<T>,
    excluded: Vec<u64>,
}

/// Runs `task` for every repetition; non-converged repetitions are excluded
/// and counted, any other error aborts the run.
fn for_each_repetition<T, F>(cfg: &ScenarioConfig, task: F) -> Result<Joined<T>>
where
    T: Send,
    F: Fn(u64) -> lsrefit_core::Result<T> + Sync,
{
    let results: Vec<(u64, lsrefit_core::Result<T>)> =
        (0..cfg.repetitions as u64).into_par_iter().map(|rep| (rep, task(rep))).collect();
    let mut values = Vec::with_capacity(results.len());
    let mut excluded = Vec::new();
    for (rep, r) in results {
        match r {
            Ok(v) => values.push(v),
            Err(CoreError::NotConverged { .. }) => excluded.push(rep),
            Err(e) => return Err(e.into()),
        }
    }
    if values.is_empty() {
        return Err(AppError::Validation(format!(
            "no repetition converged ({} excluded)",
            excluded.len()
        )));
    }
    Ok(Joined { values, excluded })
}

fn check(cfg: &ScenarioConfig, settings: &RunSettings) -> Result<()> {
    cfg.validate().map_err(|e| AppError::Validation(e.to_string()))?;
    settings.validate().map_err(|e| AppError::Validation(e.to_string()))?;
    Ok(())
}

pub fn simulate(name: &str, cfg: &ScenarioConfig, settings: &RunSettings) -> Result<SimulationRun> {
    check(cfg, settings)?;
    let joined = for_each_repetition(cfg, |rep| solve_repetition(cfg, rep, settings)?.outcome(settings))?;
    let report = summarize(name, cfg, settings, &joined.values, joined.excluded)?;
    Ok(SimulationRun { report, outcomes: joined.values })
}

pub fn verify(name: &str, cfg: &ScenarioConfig, settings: &RunSettings) -> Result<VerificationRun> {
    check(cfg, settings)?;
    let joined = for_each_repetition(cfg, |rep| solve_repetition(cfg, rep, settings)?.verify(cfg.seed))?;
    verification_run(name, cfg, settings, joined.values, joined.excluded)
}

fn verification_run(
    name: &str,
    cfg: &ScenarioConfig,
    settings: &RunSettings,
    records: Vec<VerificationRecord>,
    excluded: Vec<u64>,
) -> Result<VerificationRun> {
    let lambda = settings.solver_config(cfg)?.lambda;
    Ok(VerificationRun {
        setting: name.to_string(),
        scenario: *cfg,
        lambda,
        excluded_repetitions: excluded,
        summary: VerificationSummary::from_records(&records, lambda),
        records,
    })
}

/// Simulation and verification from a single solve per repetition.
pub fn simulate_and_verify(
    name: &str,
    cfg: &ScenarioConfig,
    settings: &RunSettings,
) -> Result<(SimulationRun, VerificationRun)> {
    check(cfg, settings)?;
    let joined = for_each_repetition(cfg, |rep| {
        let solved = solve_repetition(cfg, rep, settings)?;
        Ok((solved.outcome(settings)?, solved.verify(cfg.seed)?))
    })?;
    let (outcomes, records): (Vec<_>, Vec<_>) = joined.values.into_iter().unzip();
    let report = summarize(name, cfg, settings, &outcomes, joined.excluded.clone())?;
    let verification = verification_run(name, cfg, settings, records, joined.excluded)?;
    Ok((SimulationRun { report, outcomes }, verification))
}
