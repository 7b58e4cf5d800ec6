//! Experiment runner for Lasso least-squares refitting studies: scenario
//! files, parallel Monte Carlo repetitions, CSV/JSON reports and the
//! `lsrefit` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use error::{AppError, Result};
