//! Command-line front end for [`openwindow`]: reads a TOML run
//! configuration, runs solves, sweeps and audits, and writes CSV tables
//! plus a manifest that can be fed back in to repeat the run.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod table;

pub use config::{Command, RunConfig};
pub use error::CliError;
pub use manifest::Manifest;
pub use run::{run, Outcome, MANIFEST_FILE};
