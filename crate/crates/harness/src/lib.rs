//! Monte Carlo harness for joint-typicality support recovery: sweep
//! configuration, parallel execution, result tables and reports.

pub mod config;
pub mod emit;
pub mod error;
pub mod reports;
pub mod runner;

pub use error::{HarnessError, Result};
