//! Lasso with least-squares refitting on the estimated support.
//!
//! The crate covers the whole estimation pipeline used to study when
//! refitting helps: synthetic correlated designs ([`datagen`]), the Lasso by
//! coordinate descent with KKT certificates ([`solver`]), the refitted and
//! adaptive estimators ([`refit`]), runtime checks of the refit/initial
//! relations ([`theory`]), performance metrics ([`metrics`]) and the
//! per-repetition pipeline tying them together ([`experiment`]).
//!
//! `no_std` with `alloc`; enable `std` for `std::error::Error` integration and
//! `serde` for (de)serialization of configurations and reports.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod refit;
pub mod solver;
pub mod theory;

pub use datagen::{generate_beta, generate_design, generate_instance, Instance, ScenarioConfig};
pub use error::{Error, Result};
pub use experiment::{
    run_repetition, solve_repetition, summarize, ExperimentReport, RepetitionOutcome, RunSettings,
    VerificationRecord, VerificationSummary,
};
pub use metrics::{aggregate, compute_metrics, Estimator, EstimatorMetrics, EstimatorSummary};
pub use refit::{c_ls_select, criterion_f, ls_refit, refit, zero_estimator, AdaptiveChoice, RefitResult, Selection};
pub use solver::{default_lambda, kkt_check, scenario_lambda, solve_lasso, Fit, KktReport, SolverConfig};
pub use theory::{
    check_inverse_bounds, mutual_coherence, verify_gap_equality, verify_prediction_bound, GapDiagnostics, NormOrder,
};
