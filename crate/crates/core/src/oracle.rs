//! Brute-force reference computations for validating the solver on tiny
//! instances.
//!
//! Backward induction here is written with plain nested loops and
//! nearest-node continuation, sharing only the static model formulas with
//! the solver. Compare against solver runs in [`Interpolation::Nearest`]
//! mode.
//!
//! [`Interpolation::Nearest`]: crate::params::Interpolation::Nearest

use crate::economics::{
    api_demand, api_profit, external_compute_b, external_compute_open, firm_profit, firm_static_compute,
    indifference_price, optimal_compute,
};
use crate::error::{ModelError, Result};
use crate::params::{EconParams, GridSpec, ProducerLocation, Quality};
use crate::solver::OpenSolution;

pub const MAX_ORACLE_QUALITY_NODES: usize = 21;
pub const MAX_ORACLE_COMPUTE_NODES: usize = 20;
pub const MAX_ORACLE_PRICE_SEGMENTS: usize = 20;

/// Truncated horizon for backward induction.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonSpec {
    pub horizon: usize,
    /// Value after the last period, one entry per state; `None` means zero.
    pub terminal: Option<Vec<f64>>,
}

impl FiniteHorizonSpec {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            terminal: None,
        }
    }

    /// Smallest horizon with `beta^T * bound < tol`.
    pub fn for_tolerance(beta: f64, bound: f64, tol: f64) -> Self {
        let mut horizon = 1;
        let mut tail = beta * bound;
        while tail >= tol && horizon < 100_000 {
            tail *= beta;
            horizon += 1;
        }
        Self::new(horizon)
    }
}

fn check_limits(grid: &GridSpec, n_k: usize) -> Result<()> {
    grid.validate()?;
    for (field, value, limit) in [
        ("n_q", grid.n_q, MAX_ORACLE_QUALITY_NODES),
        ("n_k", n_k, MAX_ORACLE_COMPUTE_NODES),
        ("n_p", grid.n_p, MAX_ORACLE_PRICE_SEGMENTS),
    ] {
        if value > limit {
            return Err(ModelError::OracleGridTooLarge { field, value, limit });
        }
    }
    Ok(())
}

fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        v.push(if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) / (n - 1) as f64 * i as f64
        });
    }
    v
}

fn nearest(q: f64, grid: &GridSpec) -> usize {
    let step = (grid.q_max - grid.q_min) / (grid.n_q - 1) as f64;
    let idx = ((q - grid.q_min) / step + 0.5).floor();
    (idx.max(0.0) as usize).min(grid.n_q - 1)
}

fn quality(q: f64) -> Quality {
    Quality::new(q).expect("grid qualities are non-negative")
}

fn terminal(spec: &FiniteHorizonSpec, len: usize) -> Result<Vec<f64>> {
    if spec.horizon == 0 {
        return Err(ModelError::Analysis("finite horizon must be at least 1".to_string()));
    }
    match &spec.terminal {
        None => Ok(vec![0.0; len]),
        Some(t) if t.len() == len => Ok(t.clone()),
        Some(t) => Err(ModelError::Analysis(format!(
            "terminal table has {} entries, expected {len}",
            t.len()
        ))),
    }
}

/// Open-model value after `spec.horizon` periods of backward induction.
pub fn finite_horizon_open(p: &EconParams, grid: &GridSpec, spec: &FiniteHorizonSpec) -> Result<Vec<f64>> {
    p.validate()?;
    check_limits(grid, grid.n_k_open)?;
    let qs = nodes(grid.q_min, grid.q_max, grid.n_q);
    let ks = nodes(0.0, grid.k_max_open, grid.n_k_open);
    let mut next = terminal(spec, qs.len())?;
    for _ in 0..spec.horizon {
        let mut current = vec![f64::NEG_INFINITY; qs.len()];
        for (i, &q) in qs.iter().enumerate() {
            let external = external_compute_open(quality(q), p);
            for &k in &ks {
                let q_next = (q + p.psi * k + p.phi * external).min(grid.q_max);
                let v = firm_profit(quality(q), k, p) + p.beta * next[nearest(q_next, grid)];
                if v > current[i] {
                    current[i] = v;
                }
            }
        }
        next = current;
    }
    Ok(next)
}

/// Closed-model value (row-major in `q_a`) after `spec.horizon` periods,
/// with the open/closed choice and the switch option embedded. `open`
/// supplies `V^O`, read at the nearest node.
pub fn finite_horizon_closed(
    p: &EconParams,
    grid: &GridSpec,
    open: &OpenSolution,
    spec: &FiniteHorizonSpec,
) -> Result<Vec<f64>> {
    p.validate()?;
    check_limits(grid, grid.n_k_closed)?;
    let qs = nodes(grid.q_min, grid.q_max, grid.n_q);
    let n = qs.len();
    if open.value.len() != n {
        return Err(ModelError::Analysis("open solution grid mismatch".to_string()));
    }
    let k_top = grid.k_adapt_factor * firm_static_compute(quality(grid.q_max), p);
    let ks = nodes(0.0, k_top, grid.n_k_closed);
    let at_m = ProducerLocation::new(p.m)?;
    let vo = &open.value;

    let mut next = terminal(spec, n * n)?;
    for _ in 0..spec.horizon {
        let mut current = vec![f64::NEG_INFINITY; n * n];
        for a in 0..n {
            for b in 0..n {
                let (qa, qb) = (qs[a], qs[b]);
                // (revenue, rival compute) for each price choice
                let mut options = Vec::new();
                if qa >= qb {
                    let cap = indifference_price(at_m, quality(qa), quality(qb), p)?;
                    for j in 0..=grid.n_p {
                        let price = if j == grid.n_p {
                            cap
                        } else {
                            cap * j as f64 / grid.n_p as f64
                        };
                        let demand = api_demand(quality(qa), quality(qb), price, p)?;
                        let revenue = api_profit(quality(qa), quality(qb), price, p)?;
                        options.push((revenue, external_compute_b(quality(qb), p.m + demand, p)?));
                    }
                } else {
                    options.push((0.0, external_compute_open(quality(qb), p)));
                }
                let mut best = f64::NEG_INFINITY;
                for &k in &ks {
                    let qa_next = (qa + p.psi * k).min(grid.q_max);
                    let ia = nearest(qa_next, grid);
                    for &(revenue, rival_compute) in &options {
                        let qb_next = (qb + p.phi * rival_compute).min(grid.q_max);
                        let closed = next[ia * n + nearest(qb_next, grid)];
                        let cont = if qa_next >= qb_next { closed.max(vo[ia]) } else { closed };
                        let v = firm_profit(quality(qa), k, p) + revenue + p.beta * cont;
                        if v > best {
                            best = v;
                        }
                    }
                }
                if qa < qb {
                    best = best.max(vo[b] - p.c_switch * qb);
                }
                current[a * n + b] = best;
            }
        }
        next = current;
    }
    Ok(next)
}

/// Trapezoid quadrature of the firm's producer-level profit
/// `int_0^m [exp(-gamma x) (q k(x))^alpha - k(x)] dx` on `n_x` nodes.
pub fn per_producer_profit_quadrature(q: f64, k_alloc: impl Fn(f64) -> f64, p: &EconParams, n_x: usize) -> f64 {
    let xs = nodes(0.0, p.m, n_x.max(2));
    let f = |x: f64| {
        let k = k_alloc(x);
        (-p.gamma * x).exp() * (q * k).powf(p.alpha) - k
    };
    let h = p.m / (xs.len() - 1) as f64;
    let mut sum = 0.5 * (f(xs[0]) + f(xs[xs.len() - 1]));
    for &x in &xs[1..xs.len() - 1] {
        sum += f(x);
    }
    h * sum
}

/// Split of aggregate compute `k_total` across the firm's producers that
/// equalizes marginal profit: `k(x) = k0 exp(-gamma x / (1 - alpha))`.
pub fn equal_marginal_allocation(k_total: f64, p: &EconParams) -> impl Fn(f64) -> f64 {
    let s = 1.0 - p.alpha;
    let k0 = k_total * p.gamma / (s * (1.0 - (-p.gamma * p.m / s).exp()));
    let gamma = p.gamma;
    move |x| k0 * (-gamma * x / s).exp()
}

/// Best attainable producer-level profit of the firm when every internal
/// producer picks its own optimal compute, by quadrature on `n_x` nodes.
pub fn max_internal_profit_quadrature(q: f64, p: &EconParams, n_x: usize) -> f64 {
    let pp = *p;
    per_producer_profit_quadrature(
        q,
        move |x| optimal_compute(ProducerLocation::new(x).unwrap(), quality(q), &pp),
        p,
        n_x,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::theta;
    use crate::params::{Interpolation, SolverSettings};
    use crate::solver::{solve_closed, solve_open};

    fn tiny() -> GridSpec {
        GridSpec {
            q_max: 100.0,
            n_q: 11,
            k_max_open: 6.0,
            n_k_open: 10,
            n_k_closed: 10,
            n_p: 5,
            ..GridSpec::default()
        }
    }

    fn nearest_settings() -> SolverSettings {
        SolverSettings {
            interpolation: Interpolation::Nearest,
            ..SolverSettings::default()
        }
    }

    #[test]
    fn rejects_large_grids() {
        let g = GridSpec::default();
        assert!(matches!(
            finite_horizon_open(&EconParams::baseline(), &g, &FiniteHorizonSpec::new(1)),
            Err(ModelError::OracleGridTooLarge { field: "n_q", .. })
        ));
        let g = GridSpec { n_k_open: 21, ..tiny() };
        assert!(finite_horizon_open(&EconParams::baseline(), &g, &FiniteHorizonSpec::new(1)).is_err());
        assert!(finite_horizon_open(&EconParams::baseline(), &tiny(), &FiniteHorizonSpec::new(0)).is_err());
    }

    #[test]
    fn one_period_is_static_maximization() {
        let p = EconParams::baseline();
        let g = tiny();
        let v = finite_horizon_open(&p, &g, &FiniteHorizonSpec::new(1)).unwrap();
        for (i, q) in g.q_grid().into_iter().enumerate() {
            let best = g
                .k_grid_open()
                .into_iter()
                .map(|k| firm_profit(quality(q), k, &p))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(v[i], best);
        }
    }

    #[test]
    fn closed_one_period_is_static_maximization() {
        let p = EconParams::baseline();
        let g = tiny();
        // With a worthless open option the last period is purely static.
        let mut open = solve_open(&p, &g, &nearest_settings()).unwrap();
        open.value.iter_mut().for_each(|v| *v = 0.0);
        let v = finite_horizon_closed(&p, &g, &open, &FiniteHorizonSpec::new(1)).unwrap();
        let q = g.q_grid();
        let ks = nodes(
            0.0,
            g.k_adapt_factor * firm_static_compute(quality(100.0), &p),
            g.n_k_closed,
        );
        let (a, b) = (7, 3);
        let cap = indifference_price(ProducerLocation::new(p.m).unwrap(), quality(q[a]), quality(q[b]), &p).unwrap();
        let mut best = f64::NEG_INFINITY;
        for &k in &ks {
            for j in 0..=g.n_p {
                let price = if j == g.n_p { cap } else { cap * j as f64 / g.n_p as f64 };
                let r = api_profit(quality(q[a]), quality(q[b]), price, &p).unwrap();
                best = best.max(firm_profit(quality(q[a]), k, &p) + r);
            }
        }
        assert!((v[a * 11 + b] - best).abs() < 1e-12, "{} vs {best}", v[a * 11 + b]);
    }

    #[test]
    fn fixed_point_terminal_is_preserved() {
        let p = EconParams::baseline().with_beta(0.5);
        let g = tiny();
        let sol = solve_open(&p, &g, &nearest_settings()).unwrap();
        let spec = FiniteHorizonSpec {
            horizon: 7,
            terminal: Some(sol.value.clone()),
        };
        let v = finite_horizon_open(&p, &g, &spec).unwrap();
        for (a, b) in v.iter().zip(&sol.value) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_oracle_matches_solver_with_zero_rival_column() {
        let p = EconParams::baseline().with_beta(0.5);
        let g = tiny();
        let s = nearest_settings();
        let open = solve_open(&p, &g, &s).unwrap();
        let closed = solve_closed(&open, &p, &g, &s).unwrap();
        let bound = closed.value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spec = FiniteHorizonSpec::for_tolerance(p.beta, bound, s.tol);
        let oracle = finite_horizon_closed(&p, &g, &open, &spec).unwrap();
        for a in 0..g.n_q {
            let i = a * g.n_q;
            assert!((oracle[i] - closed.value[i]).abs() < 10.0 * s.tol);
        }
    }

    #[test]
    fn quadrature_matches_reduced_profit() {
        let p = EconParams::baseline();
        assert_eq!(per_producer_profit_quadrature(100.0, |_| 0.0, &p, 1000), 0.0);
        let k = firm_static_compute(quality(100.0), &p);
        let quad = per_producer_profit_quadrature(100.0, equal_marginal_allocation(k, &p), &p, 1000);
        let reduced = firm_profit(quality(100.0), k, &p);
        assert!(((quad - reduced) / reduced).abs() < 1e-3);
        let uniform = per_producer_profit_quadrature(100.0, |_| k / p.m, &p, 1000);
        assert!(uniform < reduced);
    }

    #[test]
    fn theta_reduction_matches_producer_optimum() {
        let p = EconParams::baseline();
        let q = 100.0;
        let k = firm_static_compute(quality(q), &p);
        let reduced = theta(&p) * (q * k).powf(p.alpha) - k;
        let direct = max_internal_profit_quadrature(q, &p, 1000);
        assert!(((reduced - direct) / direct).abs() < 1e-3);
    }
}
