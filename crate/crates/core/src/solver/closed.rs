use std::fmt;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    adaptive_k_max, contraction_violations, is_top_node, iterate, validate_inputs, OpenSolution, SolveDiagnostics,
    SolveSummary,
};
use crate::economics::{api_demand_raw, compute_mass_raw, firm_profit_raw, indifference_price_raw, theta};
use crate::error::{ModelError, Result};
use crate::interp::{Bracket, QualityAxis};
use crate::params::{linspace, EconParams, GridSpec, Interpolation, SolverSettings};

/// What the firm does with its model at a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    KeepClosed,
    OpenSource,
    /// Abandon the own model for the rival open model (only where `q_a < q_b`).
    #[serde(rename = "switch-to-B")]
    SwitchToB,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::KeepClosed => "keep-closed",
            Decision::OpenSource => "open-source",
            Decision::SwitchToB => "switch-to-B",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which branch of `max{V^O(q'), V^C(q', q_b')}` the optimal controls lead to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Continuation {
    Open,
    Closed,
}

/// Converged closed-model solution over the `(q_a, q_b)` grid.
///
/// Tables are row-major in `q_a`: entry `a * n + b` belongs to
/// `(q_grid[a], q_grid[b])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSolution {
    pub q_grid: Vec<f64>,
    pub value: Vec<f64>,
    pub policy_k: Vec<f64>,
    pub policy_p: Vec<f64>,
    pub decision: Vec<Decision>,
    /// Continuation branch selected by the optimal controls.
    pub continuation: Vec<Continuation>,
    pub iterations: usize,
    pub residual: f64,
    pub diagnostics: SolveDiagnostics,
    /// Open-model values on the same grid, kept for comparisons.
    pub open_value: Vec<f64>,
    pub params: EconParams,
    pub grid: GridSpec,
    pub interpolation: Interpolation,
}

impl ClosedSolution {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary::new(self.iterations, self.residual, &self.diagnostics)
    }

    pub fn n(&self) -> usize {
        self.q_grid.len()
    }

    #[inline]
    pub fn idx(&self, a: usize, b: usize) -> usize {
        a * self.n() + b
    }

    pub fn value_at_node(&self, a: usize, b: usize) -> f64 {
        self.value[self.idx(a, b)]
    }

    pub fn decision_at(&self, a: usize, b: usize) -> Decision {
        self.decision[self.idx(a, b)]
    }

    /// Firm value `max{V^O, V^C}` at a grid state with `q_a >= q_b`.
    pub fn model_value_at_node(&self, a: usize, b: usize) -> f64 {
        self.open_value[a].max(self.value_at_node(a, b))
    }

    /// `V^C` at an arbitrary in-range state, read with the solve's interpolation mode.
    pub fn value_at(&self, q_a: f64, q_b: f64) -> f64 {
        let axis = QualityAxis::from_grid(&self.grid);
        let clamp = |q: f64| q.clamp(self.grid.q_min, self.grid.q_max);
        read_table(
            &self.value,
            self.n(),
            axis.bracket(clamp(q_a), self.interpolation),
            axis.bracket(clamp(q_b), self.interpolation),
        )
    }
}

#[inline]
fn read_table(table: &[f64], n: usize, ba: Bracket, bb: Bracket) -> f64 {
    let r0 = ba.lo * n;
    let low = bb.apply(&table[r0..r0 + n]);
    if ba.w == 0.0 {
        low
    } else {
        let high = bb.apply(&table[r0 + n..r0 + 2 * n]);
        low + ba.w * (high - low)
    }
}

/// Result of one closed-model Bellman update at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedStep {
    pub value: f64,
    pub k: f64,
    pub price: f64,
    pub decision: Decision,
    pub continuation: Continuation,
}

#[derive(Debug, Clone, Copy)]
struct ComputeNode {
    k: f64,
    reward: f64,
    q_next: f64,
    br: Bracket,
    open_next: f64,
    clamped: bool,
}

#[derive(Debug, Clone, Copy)]
struct PriceNode {
    price: f64,
    revenue: f64,
    qb_next: f64,
    br: Bracket,
    clamped: bool,
}

struct Setup<'a> {
    p: &'a EconParams,
    grid: &'a GridSpec,
    axis: QualityAxis,
    mode: Interpolation,
    theta: f64,
    k_grid: Vec<f64>,
    open: &'a OpenSolution,
}

impl<'a> Setup<'a> {
    fn new(open: &'a OpenSolution, p: &'a EconParams, grid: &'a GridSpec, mode: Interpolation) -> Self {
        let k_max = adaptive_k_max(grid.q_max, p, grid);
        Self {
            p,
            grid,
            axis: QualityAxis::from_grid(grid),
            mode,
            theta: theta(p),
            k_grid: linspace(0.0, k_max, grid.n_k_closed),
            open,
        }
    }

    fn k_max(&self) -> f64 {
        *self.k_grid.last().unwrap()
    }

    /// Compute choices at own quality `q_a`; a closed model grows only through internal compute.
    fn compute_nodes(&self, q_a: f64) -> Vec<ComputeNode> {
        self.k_grid
            .iter()
            .map(|&k| {
                let raw = q_a + self.p.psi * k;
                let q_next = raw.min(self.grid.q_max);
                ComputeNode {
                    k,
                    reward: firm_profit_raw(q_a, k, self.theta, self.p.alpha),
                    q_next,
                    br: self.axis.bracket(q_next, self.mode),
                    open_next: self.open.value_at(q_next),
                    clamped: raw > self.grid.q_max,
                }
            })
            .collect()
    }

    /// Price choices at `(q_a, q_b)`: `n_p` equal segments of `[0, P_m]`, where
    /// `P_m` leaves the producer at `x = m` indifferent. With `q_a < q_b` nobody
    /// buys the API and only the free price remains.
    fn price_nodes(&self, q_a: f64, q_b: f64) -> Vec<PriceNode> {
        let p = self.p;
        let node = |price: f64, revenue: f64, rival_compute: f64| {
            let raw = q_b + p.phi * rival_compute;
            let qb_next = raw.min(self.grid.q_max);
            PriceNode {
                price,
                revenue,
                qb_next,
                br: self.axis.bracket(qb_next, self.mode),
                clamped: raw > self.grid.q_max,
            }
        };
        if q_a < q_b {
            return vec![node(0.0, 0.0, compute_mass_raw(q_b, p.m, 1.0, p))];
        }
        let cap = indifference_price_raw(p.m, q_a, q_b, p);
        let segments = self.grid.n_p;
        (0..=segments)
            .map(|j| {
                let price = if j == segments {
                    cap
                } else {
                    cap * j as f64 / segments as f64
                };
                let demand = api_demand_raw(q_a, q_b, price, p);
                let revenue = if price > 0.0 { price * demand } else { 0.0 };
                node(price, revenue, compute_mass_raw(q_b, p.m + demand, 1.0, p))
            })
            .collect()
    }

    fn switch_value(&self, q_b: f64) -> f64 {
        self.open.value_at(q_b) - self.p.c_switch * q_b
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    ki: usize,
    pj: usize,
    continuation: Continuation,
}

/// Joint maximization over compute and price. Ties keep the earlier
/// (smaller) compute and price; `V^O = V^C` continues as open.
#[inline]
fn maximize<F>(ks: &[ComputeNode], ps: &[PriceNode], beta: f64, mut closed_next: F) -> Best
where
    F: FnMut(&ComputeNode, usize, &PriceNode) -> f64,
{
    let mut best = Best {
        value: f64::NEG_INFINITY,
        ki: 0,
        pj: 0,
        continuation: Continuation::Closed,
    };
    for (ki, k) in ks.iter().enumerate() {
        for (pj, pn) in ps.iter().enumerate() {
            let vc = closed_next(k, pj, pn);
            let (w, cont) = if k.q_next >= pn.qb_next && k.open_next >= vc {
                (k.open_next, Continuation::Open)
            } else {
                (vc, Continuation::Closed)
            };
            let v = k.reward + pn.revenue + beta * w;
            if v > best.value {
                best = Best {
                    value: v,
                    ki,
                    pj,
                    continuation: cont,
                };
            }
        }
    }
    best
}

fn finish_step(
    setup: &Setup<'_>,
    q_a: f64,
    q_b: f64,
    open_here: f64,
    best: Best,
    ks: &[ComputeNode],
    ps: &[PriceNode],
) -> ClosedStep {
    let mut step = ClosedStep {
        value: best.value,
        k: ks[best.ki].k,
        price: ps[best.pj].price,
        decision: Decision::KeepClosed,
        continuation: best.continuation,
    };
    if q_a < q_b {
        let switch = setup.switch_value(q_b);
        if switch >= step.value {
            step.value = switch;
            step.decision = Decision::SwitchToB;
        }
    } else if open_here >= step.value {
        step.decision = Decision::OpenSource;
    }
    step
}

/// One application of the closed-model Bellman operator at `(q_a, q_b)`.
///
/// Maximizes `Pi^F + Pi^A + beta * max{V^O(q'), value_in(q', q_b')}` over the
/// adaptive compute grid and the state's price grid, with `q' = q_a + psi K`
/// and `q_b' = q_b + phi K_B`, both capped at `q_max`. Opening next period
/// requires `q' >= q_b'`. Below the rival (`q_a < q_b`) the firm may instead
/// switch to the rival model for `V^O(q_b) - c_switch * q_b`.
///
/// `V^O` is read from `open` with the open solution's interpolation mode.
pub fn bellman_closed(
    open: &OpenSolution,
    value_in: impl Fn(f64, f64) -> f64,
    q_a: f64,
    q_b: f64,
    p: &EconParams,
    grid: &GridSpec,
) -> ClosedStep {
    let setup = Setup::new(open, p, grid, open.interpolation);
    let ks = setup.compute_nodes(q_a);
    let ps = setup.price_nodes(q_a, q_b);
    let best = maximize(&ks, &ps, p.beta, |k, _, pn| value_in(k.q_next, pn.qb_next));
    finish_step(&setup, q_a, q_b, open.value_at(q_a), best, &ks, &ps)
}

/// Solves the closed-model Bellman equation on the full `(q_a, q_b)` grid,
/// taking the converged open-model solution as given.
pub fn solve_closed(
    open: &OpenSolution,
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
) -> Result<ClosedSolution> {
    validate_inputs(p, grid, settings)?;
    if open.grid.q_grid() != grid.q_grid() {
        return Err(ModelError::InvalidGrid {
            field: "n_q",
            reason: "open solution was computed on a different quality grid".to_string(),
        });
    }
    let setup = Setup::new(open, p, grid, settings.interpolation);
    if !(setup.k_max() > 0.0) {
        return Err(ModelError::InvalidGrid {
            field: "k_adapt_factor",
            reason: "adaptive compute bound is zero".to_string(),
        });
    }
    let q_grid = grid.q_grid();
    let n = q_grid.len();
    let computes: Vec<Vec<ComputeNode>> = q_grid.iter().map(|&q| setup.compute_nodes(q)).collect();
    let prices: Vec<Vec<PriceNode>> = q_grid
        .iter()
        .flat_map(|&qa| q_grid.iter().map(move |&qb| (qa, qb)))
        .map(|(qa, qb)| setup.price_nodes(qa, qb))
        .collect();
    let switch: Vec<f64> = q_grid.iter().map(|&qb| setup.switch_value(qb)).collect();

    // Row-wise sweep; each worker owns whole rows of the output.
    // For one state, reading V^C at (q', q_b') factors into a read along q_b
    // for each price node on the few rows q' can reach, then a lerp in q_a.
    // `rows` caches the first part: rows[(r - first_row) * n_prices + j].
    let sweep_state = |prev: &[f64], a: usize, b: usize, rows: &mut Vec<f64>| -> (f64, Best) {
        let ks = &computes[a];
        let ps = &prices[a * n + b];
        let first_row = ks[0].br.lo;
        let last_row = ks.iter().map(|k| k.br.lo + usize::from(k.br.w != 0.0)).max().unwrap();
        let np = ps.len();
        rows.clear();
        for r in first_row..=last_row {
            let row = &prev[r * n..(r + 1) * n];
            rows.extend(ps.iter().map(|pn| pn.br.apply(row)));
        }
        let best = maximize(ks, ps, p.beta, |k, j, _| {
            let base = (k.br.lo - first_row) * np + j;
            let low = rows[base];
            if k.br.w == 0.0 {
                low
            } else {
                low + k.br.w * (rows[base + np] - low)
            }
        });
        let value = if a < b { best.value.max(switch[b]) } else { best.value };
        (value, best)
    };

    let (value, iterations, history) = iterate(vec![0.0; n * n], settings, "closed-model VFI", |prev, out| {
        out.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
            let mut rows = Vec::new();
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = sweep_state(prev, a, b, &mut rows).0;
            }
        });
    })?;

    // Policies come from one more application of the operator to the
    // converged table; values and decisions are the reported table's.
    let steps: Vec<ClosedStep> = (0..n * n)
        .into_par_iter()
        .map(|s| {
            let (a, b) = (s / n, s % n);
            let (_, best) = sweep_state(&value, a, b, &mut Vec::new());
            let mut step = finish_step(
                &setup,
                q_grid[a],
                q_grid[b],
                open.value[a],
                best,
                &computes[a],
                &prices[s],
            );
            step.value = value[s];
            step.decision = if a < b {
                if switch[b] >= value[s] {
                    Decision::SwitchToB
                } else {
                    Decision::KeepClosed
                }
            } else if open.value[a] >= value[s] {
                Decision::OpenSource
            } else {
                Decision::KeepClosed
            };
            step
        })
        .collect();

    let k_max = setup.k_max();
    let mut clamped = 0;
    let mut saturated = 0;
    for (s, step) in steps.iter().enumerate() {
        if step.decision == Decision::SwitchToB {
            continue;
        }
        let a = s / n;
        let k_node = computes[a].iter().find(|c| c.k == step.k).unwrap();
        let p_node = prices[s].iter().find(|c| c.price == step.price).unwrap();
        if k_node.clamped || p_node.clamped {
            clamped += 1;
        }
        if is_top_node(step.k, k_max) {
            saturated += 1;
        }
    }
    if saturated > 0 {
        warn!("closed-model policy sits on the adaptive compute bound {k_max:.6} at {saturated} states; raise k_adapt_factor");
    }
    let scale = value.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let residual = *history.last().unwrap();
    Ok(ClosedSolution {
        q_grid,
        policy_k: steps.iter().map(|s| s.k).collect(),
        policy_p: steps.iter().map(|s| s.price).collect(),
        decision: steps.iter().map(|s| s.decision).collect(),
        continuation: steps.iter().map(|s| s.continuation).collect(),
        value,
        iterations,
        residual,
        diagnostics: SolveDiagnostics {
            contraction_violations: contraction_violations(&history, scale),
            residual_history: history,
            clamped_transitions: clamped,
            saturated_states: saturated,
            k_max,
        },
        open_value: open.value.clone(),
        params: *p,
        grid: *grid,
        interpolation: settings.interpolation,
    })
}
