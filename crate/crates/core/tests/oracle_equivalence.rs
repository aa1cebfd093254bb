use openwindow::oracle::{finite_horizon_closed, finite_horizon_open, FiniteHorizonSpec};
use openwindow::{solve_closed, solve_open, EconParams, GridSpec, Interpolation, SolverSettings};
use proptest::prelude::*;

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

fn nearest() -> SolverSettings {
    SolverSettings {
        interpolation: Interpolation::Nearest,
        ..SolverSettings::default()
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sup-norm gaps between solver and backward induction for the open and
/// closed models.
fn gaps(p: &EconParams, g: &GridSpec) -> (f64, f64) {
    let s = nearest();
    let open = solve_open(p, g, &s).unwrap();
    let closed = solve_closed(&open, p, g, &s).unwrap();
    let bound = closed
        .value
        .iter()
        .chain(&open.value)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        + 1.0;
    let spec = FiniteHorizonSpec::for_tolerance(p.beta, bound, s.tol);
    let vo = finite_horizon_open(p, g, &spec).unwrap();
    let vc = finite_horizon_closed(p, g, &open, &spec).unwrap();
    (sup(&vo, &open.value), sup(&vc, &closed.value))
}

#[test]
fn baseline_discounting() {
    let p = EconParams::baseline();
    let (open, closed) = gaps(&p, &tiny());
    assert!(open < 1e-5, "open gap {open}");
    assert!(closed < 1e-5, "closed gap {closed}");
}

#[test]
fn short_memory() {
    let p = EconParams::baseline().with_beta(0.5);
    let (open, closed) = gaps(&p, &tiny());
    assert!(open < 1e-5 && closed < 1e-5, "{open} {closed}");
}

#[test]
fn coarse_grid_with_small_firm() {
    let p = EconParams::baseline().with_m(0.05).with_phi(0.9);
    let g = GridSpec {
        n_q: 6,
        n_k_closed: 4,
        n_p: 2,
        ..tiny()
    };
    let (open, closed) = gaps(&p, &g);
    assert!(open < 1e-5 && closed < 1e-5, "{open} {closed}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn agrees_across_parameters(
        beta in 0.1f64..0.9,
        m in 0.05f64..0.9,
        phi in 0.05f64..1.0,
        psi in 0.1f64..1.0,
        c_switch in 0.0f64..1.0,
    ) {
        let p = EconParams { beta, m, phi, psi, c_switch, ..EconParams::baseline() };
        let (open, closed) = gaps(&p, &tiny());
        prop_assert!(open < 1e-5, "open gap {}", open);
        prop_assert!(closed < 1e-5, "closed gap {}", closed);
    }
}
