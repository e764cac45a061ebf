//! File formats, parallel drivers and command pipelines for the `qfft` tool.
//!
//! The numerical work lives in [`qfft_core`]; this crate adds JSON and CSV
//! IO with 1-based mode labels, atomic artifact writes, rayon-backed Monte
//! Carlo and multistart fitting, and the [`run`] entry point used by the
//! binary.

pub mod cli;
pub mod error;
pub mod files;
pub mod formats;
pub mod parallel;
pub mod run;
pub mod tables;

pub use error::{AppError, Result};
pub use run::{run, Command, RunConfig, RunOutput};
