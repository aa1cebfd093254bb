//! Run configuration, read from a TOML file with one section per concern.
//!
//! Every section and key is optional and falls back to the baseline. Unknown
//! keys are rejected. A `[diagnostics]` section is accepted and ignored so
//! that a run manifest can be fed back in as a config.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use openwindow::{EconParams, GridSpec, ModelError, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveOpen,
    SolveClosed,
    Window,
    SweepSize,
    SweepPhi,
    SweepQb,
    PhiCompare,
    Develop,
    Audit,
    AllFigures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveOpen => "solve-open",
            Command::SolveClosed => "solve-closed",
            Command::Window => "window",
            Command::SweepSize => "sweep-size",
            Command::SweepPhi => "sweep-phi",
            Command::SweepQb => "sweep-qb",
            Command::PhiCompare => "phi-compare",
            Command::Develop => "develop",
            Command::Audit => "audit",
            Command::AllFigures => "all-figures",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Used when no command is given on the command line.
    pub command: Option<Command>,
    pub seedless: bool,
}

/// Command-specific inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    /// Rival quality for the single-window, sweep and comparison commands.
    pub q_b: f64,
    /// Firm sizes for the size sweep.
    pub m_values: Vec<f64>,
    /// Ecosystem efficiencies for the efficiency sweep.
    pub phi_values: Vec<f64>,
    /// Rival qualities for the rival-quality sweep.
    pub qb_values: Vec<f64>,
    pub phi_low: f64,
    pub phi_high: f64,
    /// Firm sizes for the development value.
    pub develop_m: Vec<f64>,
    /// Rival qualities for the development value.
    pub develop_qb: Vec<f64>,
    pub n_quadrature: usize,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            q_b: 100.0,
            m_values: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            phi_values: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0],
            qb_values: (2..=10).map(|i| 25.0 * i as f64).collect(),
            phi_low: 0.1,
            phi_high: 0.5,
            develop_m: vec![0.1, 0.2, 0.4],
            develop_qb: (1..=20).map(|i| 25.0 * i as f64).collect(),
            n_quadrature: 101,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Overridden by `--out`.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub params: EconParams,
    pub grid: GridSpec,
    pub solver: SolverSettings,
    pub experiment: Experiment,
    pub output: Output,
    #[serde(skip_serializing)]
    pub diagnostics: Option<toml::Value>,
}

fn invalid(field: &'static str, value: f64, reason: &'static str) -> CliError {
    CliError::Invalid(ModelError::InvalidParam { field, value, reason })
}

fn check_list(field: &'static str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("experiment.{field} must not be empty")));
    }
    if let Some(w) = values.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(invalid(field, w[1], "list must be strictly increasing"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every value a command could touch, before anything is solved.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(CliError::Invalid)?;
        self.grid.validate().map_err(CliError::Invalid)?;
        self.solver.validate().map_err(CliError::Invalid)?;
        let e = &self.experiment;
        let g = &self.grid;
        let on_grid = |field: &'static str, q: f64| {
            if g.q_index(q).is_some() {
                Ok(())
            } else {
                Err(invalid(field, q, "must be a node of the quality grid"))
            }
        };
        on_grid("q_b", e.q_b)?;
        check_list("m_values", &e.m_values)?;
        check_list("phi_values", &e.phi_values)?;
        check_list("qb_values", &e.qb_values)?;
        check_list("develop_m", &e.develop_m)?;
        check_list("develop_qb", &e.develop_qb)?;
        for &m in e.m_values.iter().chain(&e.develop_m) {
            self.params.with_m(m).validate().map_err(CliError::Invalid)?;
        }
        for &phi in e.phi_values.iter().chain([&e.phi_low, &e.phi_high]) {
            self.params.with_phi(phi).validate().map_err(CliError::Invalid)?;
        }
        if e.phi_low > e.phi_high {
            return Err(invalid("phi_low", e.phi_low, "must not exceed phi_high"));
        }
        for &q in &e.qb_values {
            if !(q > 0.0) {
                return Err(invalid("qb_values", q, "must be positive"));
            }
            on_grid("qb_values", q)?;
        }
        for &q in &e.develop_qb {
            if !(q >= g.q_min && q <= g.q_max) {
                return Err(invalid("develop_qb", q, "must lie on the quality range"));
            }
        }
        if e.n_quadrature < 2 {
            return Err(invalid("n_quadrature", e.n_quadrature as f64, "must be at least 2"));
        }
        Ok(())
    }
}
