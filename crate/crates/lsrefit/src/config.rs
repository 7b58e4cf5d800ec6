//! Scenario and settings files.

use std::fs;
use std::path::Path;

use lsrefit_core::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Seed of the built-in settings.
pub const BUILTIN_SEED: u64 = 2013;

/// Repetitions of the built-in settings.
pub const BUILTIN_REPETITIONS: usize = 100;

/// A scenario with a display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: ScenarioConfig,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

pub fn parse_scenario(text: &str) -> std::result::Result<ScenarioConfig, serde_json::Error> {
    serde_json::from_str(text)
}

/// Loads and validates a scenario JSON document.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let cfg = parse_scenario(&read(path)?).map_err(|source| AppError::Json { path: path.to_path_buf(), source })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Setting name derived from a scenario file name.
pub fn scenario_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string()
}

pub fn setting_name(cfg: &ScenarioConfig) -> String {
    format!("n{}_p{}_sigma{}_s{}_kappa{}", cfg.n, cfg.p, cfg.sigma, cfg.s, cfg.kappa)
}

/// The six standard settings, in table order.
pub fn builtin_settings() -> Vec<NamedScenario> {
    const ROWS: [(usize, usize, f64, usize, f64); 6] = [
        (1000, 1000, 0.3, 2, 0.0),
        (100, 1000, 0.3, 2, 0.9),
        (100, 1000, 0.3, 20, 0.9),
        (100, 1000, 0.1, 10, 0.9),
        (1000, 1000, 0.1, 20, 0.5),
        (100, 1000, 1.0, 60, 0.9),
    ];
    ROWS.iter()
        .map(|&(n, p, sigma, s, kappa)| {
            let scenario = ScenarioConfig { n, p, s, sigma, kappa, seed: BUILTIN_SEED, repetitions: BUILTIN_REPETITIONS };
            NamedScenario { name: setting_name(&scenario), scenario }
        })
        .collect()
}

/// Loads `builtin` or a JSON array of named scenarios. Empty lists are rejected.
pub fn load_settings(source: &str) -> Result<Vec<NamedScenario>> {
    let settings = if source == "builtin" {
        builtin_settings()
    } else {
        let path = Path::new(source);
        serde_json::from_str::<Vec<NamedScenario>>(&read(path)?)
            .map_err(|source| AppError::Json { path: path.to_path_buf(), source })?
    };
    validate_settings(&settings)?;
    Ok(settings)
}

pub fn validate_settings(settings: &[NamedScenario]) -> Result<()> {
    if settings.is_empty() {
        return Err(AppError::Validation("settings list is empty".into()));
    }
    for s in settings {
        s.scenario
            .validate()
            .map_err(|e| AppError::Validation(format!("setting {}: {e}", s.name)))?;
    }
    Ok(())
}
