//! Command-line surface: `simulate`, `verify` and `table`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsrefit_core::{RunSettings, ScenarioConfig};
use serde::Serialize;

use crate::config::{load_scenario, load_settings, scenario_name};
use crate::error::{AppError, Result};
use crate::output::{render_table, report_csv, write_bytes, write_json};
use crate::runner::{simulate, verify, SimulationRun};

#[derive(Debug, Parser)]
#[command(name = "lsrefit", version, about = "Lasso, least-squares refitting and the sign criterion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo comparison of Lasso, LS Lasso, c-LS Lasso and Zero on one scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Audit the refit relations, KKT conditions and inverse bounds on one scenario.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run several scenarios (a JSON list or `builtin`) and emit a combined table.
    Table {
        #[arg(long)]
        settings: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Overrides {
    #[arg(long = "reps")]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "c-pred")]
    pub c_pred: Option<f64>,
    #[arg(long = "c-est")]
    pub c_est: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = *cfg;
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg
    }

    pub fn settings(&self) -> Result<RunSettings> {
        let mut s = RunSettings::default();
        if let Some(c) = self.c_pred {
            s.c_pred = c;
        }
        if let Some(c) = self.c_est {
            s.c_est = c;
        }
        s.lambda = self.lambda;
        s.validate().map_err(|e| AppError::Validation(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Simulate,
    Verify,
    Table,
}

/// What was asked for and what was written.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: CommandKind,
    /// Scenario path, settings path, or `builtin`.
    pub input: String,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: CommandKind, input: impl Into<String>, common: &Common) -> Self {
        Self {
            command,
            input: input.into(),
            out_dir: common.out.clone(),
            overrides: common.overrides.clone(),
            artifacts: Vec::new(),
        }
    }

    fn emit(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.artifacts.push(path.clone());
        path
    }

    fn finish(&mut self) -> Result<()> {
        let path = self.emit("manifest.json");
        write_json(&path, self)
    }
}

fn load_one(manifest: &RunManifest) -> Result<(String, ScenarioConfig, RunSettings)> {
    let path = Path::new(&manifest.input);
    let cfg = manifest.overrides.apply(&load_scenario(path)?);
    cfg.validate().map_err(|e| AppError::Validation(e.to_string()))?;
    Ok((scenario_name(path), cfg, manifest.overrides.settings()?))
}

/// Writes `<name>.csv` and the `<name>.json` metadata sidecar.
pub fn run_simulate(manifest: &mut RunManifest) -> Result<SimulationRun> {
    let (name, cfg, settings) = load_one(manifest)?;
    let run = simulate(&name, &cfg, &settings)?;
    let csv_path = manifest.emit(&format!("{name}.csv"));
    write_bytes(&csv_path, &report_csv(&[&run.report])?)?;
    let json_path = manifest.emit(&format!("{name}.json"));
    write_json(&json_path, &run.report)?;
    manifest.finish()?;
    print!("{}", render_table(&[&run.report]));
    Ok(run)
}

/// Writes `<name>.verify.json`; any hard failure becomes an invariant error.
pub fn run_verify(manifest: &mut RunManifest) -> Result<crate::runner::VerificationRun> {
    let (name, cfg, settings) = load_one(manifest)?;
    let run = verify(&name, &cfg, &settings)?;
    let path = manifest.emit(&format!("{name}.verify.json"));
    write_json(&path, &run)?;
    manifest.finish()?;
    let s = &run.summary;
    println!("setting {name}: {} repetitions, {} with empty support", s.repetitions, s.empty_supports);
    for (label, t) in [
        ("support identity", &s.support_identity),
        ("gap equality", &s.gap_equality),
        ("prediction bound", &s.prediction_bound),
        ("kkt", &s.kkt),
        ("full rank", &s.full_rank),
        ("inverse bounds", &s.inverse_bounds),
    ] {
        println!("  {label:<17} checked {:>5}  failures {:>3}  worst {:.3e}", t.checked, t.failures, t.worst);
    }
    println!(
        "  gap checks skipped {}, ill-conditioned supports {}, inverse-bound sets not applicable {}",
        s.gap_skipped, s.ill_conditioned, s.inverse_bounds_not_applicable
    );
    if !run.passed() {
        return Err(AppError::Invariant(format!("{} hard check failures in {name}", s.hard_failures())));
    }
    Ok(run)
}

/// Writes `table.csv`, `table.json` and `table.txt` for all settings.
pub fn run_table(manifest: &mut RunManifest) -> Result<Vec<SimulationRun>> {
    let settings_list = load_settings(&manifest.input)?;
    let settings = manifest.overrides.settings()?;
    let mut runs = Vec::with_capacity(settings_list.len());
    for named in &settings_list {
        let cfg = manifest.overrides.apply(&named.scenario);
        runs.push(simulate(&named.name, &cfg, &settings)?);
    }
    let reports: Vec<_> = runs.iter().map(|r| &r.report).collect();
    let csv_path = manifest.emit("table.csv");
    write_bytes(&csv_path, &report_csv(&reports)?)?;
    let json_path = manifest.emit("table.json");
    write_json(&json_path, &reports)?;
    let text = render_table(&reports);
    let txt_path = manifest.emit("table.txt");
    write_bytes(&txt_path, text.as_bytes())?;
    manifest.finish()?;
    print!("{text}");
    Ok(runs)
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario, common } => {
            let mut m = RunManifest::new(CommandKind::Simulate, scenario.to_string_lossy(), &common);
            run_simulate(&mut m).map(|_| ())
        }
        Command::Verify { scenario, common } => {
            let mut m = RunManifest::new(CommandKind::Verify, scenario.to_string_lossy(), &common);
            run_verify(&mut m).map(|_| ())
        }
        Command::Table { settings, common } => {
            let mut m = RunManifest::new(CommandKind::Table, settings, &common);
            run_table(&mut m).map(|_| ())
        }
    }
}
