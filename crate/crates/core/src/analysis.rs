//! Results extracted from converged solutions: open-source windows,
//! parameter sweeps, the value of developing a new model, and audits of the
//! threshold and price-cap properties of the optimal policy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{indifference_price_raw, revenue_max_price_raw};
use crate::error::{ModelError, Result};
use crate::params::{linspace, EconParams, GridSpec, SolverSettings};
use crate::solver::{solve_closed, solve_open, ClosedSolution, Continuation, Decision, OpenSolution, SolveSummary};

/// Open-source window for one rival quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub q_b: f64,
    /// Largest `q_a >= q_b` at which the firm open-sources (`q_b` if none).
    pub q_star: f64,
    pub abs_width: f64,
    /// `abs_width / q_b`, or 0 when `q_b = 0`.
    pub rel_width: f64,
    /// False when the open-source region along `q_a` is not a single interval
    /// starting at `q_b`.
    pub contiguous: bool,
}

/// Solves the open model and then the closed model on the same grid.
pub fn solve_model(
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
) -> Result<(OpenSolution, ClosedSolution)> {
    let open = solve_open(p, grid, settings)?;
    let closed = solve_closed(&open, p, grid, settings)?;
    Ok((open, closed))
}

fn column_index(closed: &ClosedSolution, q_b: f64) -> Result<usize> {
    closed
        .grid
        .q_index(q_b)
        .ok_or_else(|| ModelError::Analysis(format!("q_b = {q_b} is not a node of the quality grid")))
}

/// Grid states `q_a >= q_b` in column `b` where opening beats keeping closed.
fn open_flags(closed: &ClosedSolution, b: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
    (b..closed.n()).map(move |a| (a, closed.decision_at(a, b) == Decision::OpenSource))
}

/// Reads the threshold `q*` off the decision map along `q_a >= q_b`.
pub fn open_source_window(closed: &ClosedSolution, q_b: f64) -> Result<WindowResult> {
    let b = column_index(closed, q_b)?;
    let mut last_open = None;
    let mut seen_closed = false;
    let mut contiguous = true;
    for (a, open) in open_flags(closed, b) {
        if open {
            if seen_closed {
                contiguous = false;
            }
            last_open = Some(a);
        } else {
            seen_closed = true;
        }
    }
    let q_b = closed.q_grid[b];
    let q_star = last_open.map_or(q_b, |a| closed.q_grid[a]);
    let abs_width = q_star - q_b;
    Ok(WindowResult {
        q_b,
        q_star,
        abs_width,
        rel_width: if q_b > 0.0 { abs_width / q_b } else { 0.0 },
        contiguous,
    })
}

/// Convergence summaries of the two solves behind one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub open: SolveSummary,
    pub closed: SolveSummary,
}

impl PointDiagnostics {
    pub fn of(open: &OpenSolution, closed: &ClosedSolution) -> Self {
        Self {
            open: open.summary(),
            closed: closed.summary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub window: WindowResult,
    pub diagnostics: PointDiagnostics,
}

/// Window widths across a list of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.value).collect()
    }

    pub fn abs_widths(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.window.abs_width).collect()
    }
}

fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(ModelError::Analysis(format!("{name} sweep needs at least one value")));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModelError::Analysis(format!(
            "{name} values must be strictly increasing"
        )));
    }
    Ok(())
}

/// Re-solves the model from scratch at each parameter value; points are
/// solved concurrently and returned in input order.
fn sweep_with(
    name: &str,
    values: &[f64],
    grid: &GridSpec,
    settings: &SolverSettings,
    q_b: f64,
    make: impl Fn(f64) -> EconParams + Sync,
) -> Result<SweepResult> {
    check_increasing(name, values)?;
    if grid.q_index(q_b).is_none() {
        return Err(ModelError::Analysis(format!(
            "q_b = {q_b} is not a node of the quality grid"
        )));
    }
    for &v in values {
        make(v).validate()?;
    }
    let points = values
        .par_iter()
        .map(|&v| {
            let p = make(v);
            let (open, closed) = solve_model(&p, grid, settings)?;
            Ok(SweepPoint {
                value: v,
                window: open_source_window(&closed, q_b)?,
                diagnostics: PointDiagnostics::of(&open, &closed),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: name.to_string(),
        points,
    })
}

/// Window width at `q_b` as a function of firm size `m`.
pub fn sweep_firm_size(
    m_values: &[f64],
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
    q_b: f64,
) -> Result<SweepResult> {
    sweep_with("m", m_values, grid, settings, q_b, |m| p.with_m(m))
}

/// Window width at `q_b` as a function of ecosystem efficiency `phi`.
pub fn sweep_phi(
    phi_values: &[f64],
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
    q_b: f64,
) -> Result<SweepResult> {
    sweep_with("phi", phi_values, grid, settings, q_b, |phi| p.with_phi(phi))
}

/// Absolute and relative window widths across rival qualities, from one solve.
pub fn sweep_qb(qb_values: &[f64], closed: &ClosedSolution, open: &OpenSolution) -> Result<SweepResult> {
    check_increasing("q_b", qb_values)?;
    if let Some(&q) = qb_values.iter().find(|&&q| !(q > 0.0)) {
        return Err(ModelError::Analysis(format!(
            "q_b sweep values must be positive, got {q}"
        )));
    }
    let diagnostics = PointDiagnostics::of(open, closed);
    let points = qb_values
        .iter()
        .map(|&q_b| {
            Ok(SweepPoint {
                value: q_b,
                window: open_source_window(closed, q_b)?,
                diagnostics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: "q_b".to_string(),
        points,
    })
}

/// Firm value `max{V^O, V^C}` under two ecosystem efficiencies, and the
/// quality above which the less efficient ecosystem is worth more.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiComparison {
    pub q_b: f64,
    pub phi_low: f64,
    pub phi_high: f64,
    /// Quality nodes `q_a >= q_b`.
    pub q_a: Vec<f64>,
    pub value_low: Vec<f64>,
    pub value_high: Vec<f64>,
    /// Smallest `q_a >= q_b` where the low-`phi` value exceeds the high-`phi` value.
    pub crossing: Option<f64>,
    pub low: (OpenSolution, ClosedSolution),
    pub high: (OpenSolution, ClosedSolution),
}

/// `(q_a, value_low, value_high, crossing)` along one rival-quality column.
pub type CrossingColumns = (Vec<f64>, Vec<f64>, Vec<f64>, Option<f64>);

/// Compares the firm's model value column at `q_b` under two solved economies.
pub fn value_crossing(low: &ClosedSolution, high: &ClosedSolution, q_b: f64) -> Result<CrossingColumns> {
    if low.q_grid != high.q_grid {
        return Err(ModelError::Analysis(
            "solutions use different quality grids".to_string(),
        ));
    }
    let b = column_index(low, q_b)?;
    let q_a: Vec<f64> = low.q_grid[b..].to_vec();
    let value_low: Vec<f64> = (b..low.n()).map(|a| low.model_value_at_node(a, b)).collect();
    let value_high: Vec<f64> = (b..high.n()).map(|a| high.model_value_at_node(a, b)).collect();
    let crossing = q_a
        .iter()
        .zip(value_low.iter().zip(&value_high))
        .find(|(_, (lo, hi))| lo > hi)
        .map(|(&q, _)| q);
    Ok((q_a, value_low, value_high, crossing))
}

pub fn phi_value_crossing(
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
    q_b: f64,
    phi_low: f64,
    phi_high: f64,
) -> Result<PhiComparison> {
    if phi_low > phi_high {
        return Err(ModelError::Analysis(format!(
            "phi_low ({phi_low}) must not exceed phi_high ({phi_high})"
        )));
    }
    let (low, high) = rayon::join(
        || solve_model(&p.with_phi(phi_low), grid, settings),
        || solve_model(&p.with_phi(phi_high), grid, settings),
    );
    let (low, high) = (low?, high?);
    let (q_a, value_low, value_high, crossing) = value_crossing(&low.1, &high.1, q_b)?;
    Ok(PhiComparison {
        q_b,
        phi_low,
        phi_high,
        q_a,
        value_low,
        value_high,
        crossing,
        low,
        high,
    })
}

/// Expected value of developing a new model against a rival of quality `q_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentResult {
    pub q_b: f64,
    pub m: f64,
    pub expected_value: f64,
    pub n_quadrature: usize,
    /// Quadrature nodes whose quality `lambda^u q_b` exceeded `q_max` and were capped.
    pub clamped_nodes: usize,
}

/// `E[max{V^O, V^C}(lambda^u q_b, q_b)] - c_D q_b` with `u ~ U[0, 1]`, by the
/// trapezoid rule on `n_quadrature` equally spaced nodes.
pub fn development_value(
    q_b: f64,
    open: &OpenSolution,
    closed: &ClosedSolution,
    p: &EconParams,
    n_quadrature: usize,
) -> Result<DevelopmentResult> {
    if n_quadrature < 2 {
        return Err(ModelError::Analysis(
            "development quadrature needs at least 2 nodes".to_string(),
        ));
    }
    let g = &closed.grid;
    if !(q_b >= g.q_min && q_b <= g.q_max) {
        return Err(ModelError::OutOfRange {
            value: q_b,
            lo: g.q_min,
            hi: g.q_max,
        });
    }
    let mut clamped_nodes = 0;
    let values: Vec<f64> = linspace(0.0, 1.0, n_quadrature)
        .into_iter()
        .map(|u| {
            let raw = p.lambda_dev.powf(u) * q_b;
            if raw > g.q_max {
                clamped_nodes += 1;
            }
            let q = raw.min(g.q_max);
            open.value_at(q).max(closed.value_at(q, q_b))
        })
        .collect();
    if clamped_nodes > 0 {
        log::debug!("development value at q_b = {q_b}: {clamped_nodes} quadrature nodes capped at q_max");
    }
    let h = 1.0 / (n_quadrature - 1) as f64;
    let inner: f64 = values[1..n_quadrature - 1].iter().sum();
    let mean = h * (0.5 * values[0] + inner + 0.5 * values[n_quadrature - 1]);
    Ok(DevelopmentResult {
        q_b,
        m: p.m,
        expected_value: mean - p.c_dev * q_b,
        n_quadrature,
        clamped_nodes,
    })
}

/// Development value over a grid of firm sizes and rival qualities. Firm
/// sizes are solved concurrently; output is ordered by `m`, then `q_b`.
pub fn sweep_development(
    m_values: &[f64],
    qb_values: &[f64],
    p: &EconParams,
    grid: &GridSpec,
    settings: &SolverSettings,
    n_quadrature: usize,
) -> Result<Vec<DevelopmentResult>> {
    check_increasing("m", m_values)?;
    check_increasing("q_b", qb_values)?;
    let per_m = m_values
        .par_iter()
        .map(|&m| {
            let pm = p.with_m(m);
            let (open, closed) = solve_model(&pm, grid, settings)?;
            qb_values
                .iter()
                .map(|&q_b| development_value(q_b, &open, &closed, &pm, n_quadrature))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_m.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proposition {
    /// Open-sourcing happens on a single interval of `q_a` starting at `q_b`.
    Threshold,
    /// The API price never exceeds the one-period revenue maximizer and
    /// equals it when the firm will open next period.
    PriceCap,
}

impl Proposition {
    pub fn label(self) -> &'static str {
        match self {
            Proposition::Threshold => "threshold",
            Proposition::PriceCap => "price-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub proposition: Proposition,
    pub q_a: f64,
    pub q_b: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub threshold_states_checked: usize,
    pub price_states_checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn count(&self, which: Proposition) -> usize {
        self.violations.iter().filter(|v| v.proposition == which).count()
    }
}

/// Checks the threshold property column by column and the price cap state
/// by state. Violations are returned as data.
pub fn audit_propositions(closed: &ClosedSolution, open: &OpenSolution, p: &EconParams) -> AuditReport {
    let n = closed.n();
    let q = &closed.q_grid;
    let mut report = AuditReport::default();

    for b in 0..n {
        let mut seen_closed = None;
        for a in b..n {
            report.threshold_states_checked += 1;
            let gap = closed.value_at_node(a, b) - open.value[a];
            if gap <= 0.0 {
                if let Some(first_closed) = seen_closed {
                    report.violations.push(Violation {
                        proposition: Proposition::Threshold,
                        q_a: q[a],
                        q_b: q[b],
                        detail: format!(
                            "open-source again after keep-closed at q_a = {}; V^C - V^O = {gap:.6e}",
                            q[first_closed]
                        ),
                    });
                }
            } else if seen_closed.is_none() {
                seen_closed = Some(a);
            }
        }
    }

    for a in 0..n {
        for b in 0..a {
            let s = closed.idx(a, b);
            if closed.decision[s] == Decision::SwitchToB {
                continue;
            }
            report.price_states_checked += 1;
            let cap = indifference_price_raw(p.m, q[a], q[b], p);
            let step = cap / closed.grid.n_p as f64;
            let p_star = revenue_max_price_raw(q[a], q[b], p);
            let price = closed.policy_p[s];
            let slack = 1e-9 * (1.0 + p_star);
            let detail = match closed.continuation[s] {
                Continuation::Closed if price > p_star + step + slack => Some(format!(
                    "keep-closed continuation with price {price:.6} above P* = {p_star:.6} + step {step:.6}"
                )),
                Continuation::Open if (price - p_star).abs() > step + slack => Some(format!(
                    "open continuation with price {price:.6} away from P* = {p_star:.6} by more than step {step:.6}"
                )),
                _ => None,
            };
            if let Some(detail) = detail {
                report.violations.push(Violation {
                    proposition: Proposition::PriceCap,
                    q_a: q[a],
                    q_b: q[b],
                    detail,
                });
            }
        }
    }
    report
}
