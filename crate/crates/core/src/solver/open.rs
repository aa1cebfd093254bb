use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{contraction_violations, is_top_node, iterate, validate_inputs, SolveDiagnostics, SolveSummary};
use crate::economics::{compute_mass_raw, firm_profit_raw, theta};
use crate::error::Result;
use crate::interp::{Bracket, QualityAxis};
use crate::params::{EconParams, GridSpec, Interpolation, SolverSettings};

/// Converged value of an open-sourced model, one entry per quality node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSolution {
    pub q_grid: Vec<f64>,
    pub value: Vec<f64>,
    /// Optimal internal compute `K_A` per node.
    pub policy_k: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub diagnostics: SolveDiagnostics,
    pub params: EconParams,
    pub grid: GridSpec,
    pub interpolation: Interpolation,
}

impl OpenSolution {
    /// Value at an arbitrary quality in range, read with the solve's interpolation mode.
    pub fn value_at(&self, q: f64) -> f64 {
        let q = q.clamp(self.grid.q_min, self.grid.q_max);
        QualityAxis::from_grid(&self.grid)
            .bracket(q, self.interpolation)
            .apply(&self.value)
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary::new(self.iterations, self.residual, &self.diagnostics)
    }
}

/// One compute choice at one state, independent of the value table.
#[derive(Debug, Clone, Copy)]
struct Choice {
    k: f64,
    reward: f64,
    q_next: f64,
    clamped: bool,
}

fn choices<'a>(
    q: f64,
    p: &EconParams,
    grid: &GridSpec,
    th: f64,
    k_grid: &'a [f64],
) -> impl Iterator<Item = Choice> + 'a {
    let external = compute_mass_raw(q, p.m, 1.0, p);
    let (psi, phi, alpha, q_max) = (p.psi, p.phi, p.alpha, grid.q_max);
    k_grid.iter().map(move |&k| {
        let raw = q + psi * k + phi * external;
        Choice {
            k,
            reward: firm_profit_raw(q, k, th, alpha),
            q_next: raw.min(q_max),
            clamped: raw > q_max,
        }
    })
}

/// Best choice given a continuation read; ties keep the smaller compute.
#[inline]
fn best<I, F>(choices: I, beta: f64, mut continuation: F) -> (f64, Choice)
where
    I: Iterator<Item = Choice>,
    F: FnMut(&Choice) -> f64,
{
    let mut best_v = f64::NEG_INFINITY;
    let mut best_c = None;
    for c in choices {
        let v = c.reward + beta * continuation(&c);
        if v > best_v {
            best_v = v;
            best_c = Some(c);
        }
    }
    (best_v, best_c.expect("compute grid is never empty"))
}

/// One application of the open-model Bellman operator at quality `q`:
/// maximize `Pi^F(q, K) + beta * value_in(q')` over the open compute grid,
/// with `q' = min(q + psi K + phi K_ext(q), q_max)`.
///
/// Returns the maximized value and the maximizing compute.
pub fn bellman_open(value_in: impl Fn(f64) -> f64, q: f64, p: &EconParams, grid: &GridSpec) -> (f64, f64) {
    let k_grid = grid.k_grid_open();
    let (v, c) = best(choices(q, p, grid, theta(p), &k_grid), p.beta, |c| value_in(c.q_next));
    (v, c.k)
}

/// Solves the open-model Bellman equation by value function iteration from a zero guess.
pub fn solve_open(p: &EconParams, grid: &GridSpec, settings: &SolverSettings) -> Result<OpenSolution> {
    validate_inputs(p, grid, settings)?;
    let axis = QualityAxis::from_grid(grid);
    let q_grid = grid.q_grid();
    let k_grid = grid.k_grid_open();
    let th = theta(p);
    let mode = settings.interpolation;

    let table: Vec<Vec<(Choice, Bracket)>> = q_grid
        .iter()
        .map(|&q| {
            choices(q, p, grid, th, &k_grid)
                .map(|c| (c, axis.bracket(c.q_next, mode)))
                .collect()
        })
        .collect();

    let mut policy = vec![0usize; q_grid.len()];
    let (value, iterations, history) = iterate(vec![0.0; q_grid.len()], settings, "open-model VFI", |prev, out| {
        out.par_iter_mut()
            .zip(policy.par_iter_mut())
            .zip(table.par_iter())
            .for_each(|((slot, pol), row)| {
                let mut best_v = f64::NEG_INFINITY;
                for (j, (c, br)) in row.iter().enumerate() {
                    let v = c.reward + p.beta * br.apply(prev);
                    if v > best_v {
                        best_v = v;
                        *pol = j;
                    }
                }
                *slot = best_v;
            });
    })?;

    let policy_k: Vec<f64> = policy.iter().map(|&j| k_grid[j]).collect();
    let clamped = policy.iter().zip(&table).filter(|(&j, row)| row[j].0.clamped).count();
    let saturated = policy_k.iter().filter(|&&k| is_top_node(k, grid.k_max_open)).count();
    if saturated > 0 {
        warn!(
            "open-model policy sits on the compute bound {} at {saturated} states",
            grid.k_max_open
        );
    }
    let scale = value.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let diagnostics = SolveDiagnostics {
        contraction_violations: contraction_violations(&history, scale),
        residual_history: history,
        clamped_transitions: clamped,
        saturated_states: saturated,
        k_max: grid.k_max_open,
    };
    Ok(OpenSolution {
        q_grid,
        value,
        policy_k,
        iterations,
        residual: *diagnostics.residual_history.last().unwrap(),
        diagnostics,
        params: *p,
        grid: *grid,
        interpolation: mode,
    })
}
