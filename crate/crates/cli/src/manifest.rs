//! Run manifest: the resolved configuration plus solver diagnostics.
//!
//! Written as TOML with the same sections as a config file, so it can be
//! passed back through `--config` to repeat the run.

use std::collections::BTreeMap;

use openwindow::analysis::PointDiagnostics;
use openwindow::{ClosedSolution, EconParams, GridSpec, OpenSolution, SolveSummary, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Output, RunConfig, RunSection};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub label: String,
    pub model: String,
    #[serde(flatten)]
    pub summary: SolveSummary,
}

impl SolveRecord {
    pub fn new(label: &str, model: &str, summary: SolveSummary) -> Self {
        Self {
            label: label.to_string(),
            model: model.to_string(),
            summary,
        }
    }

    /// Records for an open solve followed by its closed solve.
    pub fn pair(label: &str, open: &OpenSolution, closed: &ClosedSolution) -> [Self; 2] {
        Self::point(label, &PointDiagnostics::of(open, closed))
    }

    pub fn point(label: &str, d: &PointDiagnostics) -> [Self; 2] {
        [Self::new(label, "open", d.open), Self::new(label, "closed", d.closed)]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub files: Vec<String>,
    /// Scalar results worth seeing without opening the CSVs.
    pub summary: BTreeMap<String, f64>,
    pub solves: Vec<SolveRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunSection,
    pub params: EconParams,
    pub grid: GridSpec,
    pub solver: SolverSettings,
    pub experiment: Experiment,
    pub output: Output,
    pub diagnostics: Diagnostics,
}

impl Manifest {
    pub fn new(config: &RunConfig, diagnostics: Diagnostics) -> Self {
        Self {
            run: config.run.clone(),
            params: config.params,
            grid: config.grid,
            solver: config.solver,
            experiment: config.experiment.clone(),
            output: config.output.clone(),
            diagnostics,
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("manifest encoding: {e}")))
    }
}
