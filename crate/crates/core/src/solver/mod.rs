//! Value function iteration for the open-model and closed-model Bellman
//! equations.
//!
//! Both solvers follow the same pattern: every per-state quantity that does
//! not depend on the value table (flow profits, next-period qualities and
//! their interpolation brackets) is tabulated once, then the Bellman
//! operator is applied until the sup-norm change drops below the tolerance.
//! Each sweep reads only the previous table and writes each state's own
//! slot, so the result does not depend on how rayon splits the work.

mod closed;
mod open;

pub use closed::{bellman_closed, solve_closed, ClosedSolution, ClosedStep, Continuation, Decision};
pub use open::{bellman_open, solve_open, OpenSolution};

use serde::{Deserialize, Serialize};

use crate::economics::{firm_static_compute_raw, theta};
use crate::error::{ModelError, Result};
use crate::params::{EconParams, GridSpec, SolverSettings};

/// Upper end of the closed-model compute grid: `k_adapt_factor * K*(q_max)`,
/// where `K*` is the one-period optimal aggregate compute of the firm.
pub fn adaptive_k_max(q_max: f64, p: &EconParams, grid: &GridSpec) -> f64 {
    grid.k_adapt_factor * firm_static_compute_raw(q_max, theta(p), p)
}

/// Convergence and boundary diagnostics collected during a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Sup-norm change after each sweep.
    pub residual_history: Vec<f64>,
    /// Sweeps (after the first) whose change grew instead of shrinking.
    pub contraction_violations: usize,
    /// States whose optimal transition hit the quality ceiling.
    pub clamped_transitions: usize,
    /// States whose optimal compute sits on the top of the compute grid.
    pub saturated_states: usize,
    /// Top of the compute grid used.
    pub k_max: f64,
}

/// Scalar outcome of one solve, without the residual history.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub residual: f64,
    pub contraction_violations: usize,
    pub clamped_transitions: usize,
    pub saturated_states: usize,
    pub k_max: f64,
}

impl SolveSummary {
    pub(crate) fn new(iterations: usize, residual: f64, d: &SolveDiagnostics) -> Self {
        Self {
            iterations,
            residual,
            contraction_violations: d.contraction_violations,
            clamped_transitions: d.clamped_transitions,
            saturated_states: d.saturated_states,
            k_max: d.k_max,
        }
    }
}

/// Runs `sweep` from `init` until the sup-norm change is at most `settings.tol`.
///
/// Returns the final table, the sweep count and the residual history.
pub(crate) fn iterate<F>(
    init: Vec<f64>,
    settings: &SolverSettings,
    what: &'static str,
    mut sweep: F,
) -> Result<(Vec<f64>, usize, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut current = init;
    let mut next = vec![0.0; current.len()];
    let mut history = Vec::new();
    for it in 1..=settings.max_iter {
        sweep(&current, &mut next);
        let residual = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(residual);
        std::mem::swap(&mut current, &mut next);
        if residual.is_nan() {
            break;
        }
        if residual <= settings.tol {
            return Ok((current, it, history));
        }
    }
    Err(ModelError::NotConverged {
        what,
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Counts sweeps whose change exceeded the previous one.
pub(crate) fn contraction_violations(history: &[f64], scale: f64) -> usize {
    let slack = 1e-12 * (1.0 + scale);
    history.windows(2).skip(1).filter(|w| w[1] > w[0] + slack).count()
}

#[inline]
pub(crate) fn is_top_node(k: f64, k_max: f64) -> bool {
    k_max > 0.0 && k >= k_max
}

pub(crate) fn validate_inputs(p: &EconParams, grid: &GridSpec, settings: &SolverSettings) -> Result<()> {
    p.validate()?;
    grid.validate()?;
    settings.validate()
}
