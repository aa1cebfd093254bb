//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 3 to 11 run at the baseline parameters on the full 101-node
//! quality grid.

use std::fs;
use std::path::Path;
use std::time::Instant;

use openwindow::analysis::{
    audit_propositions, open_source_window, phi_value_crossing, solve_model, sweep_development, sweep_firm_size,
    sweep_phi, sweep_qb, Proposition,
};
use openwindow::economics::{api_demand, api_profit, firm_profit, firm_static_compute, indifference_price};
use openwindow::oracle::{
    equal_marginal_allocation, finite_horizon_closed, finite_horizon_open, per_producer_profit_quadrature,
    FiniteHorizonSpec,
};
use openwindow::{
    adaptive_k_max, solve_closed, solve_open, ClosedSolution, Decision, EconParams, GridSpec, Interpolation,
    OpenSolution, ProducerLocation, Quality, SolverSettings,
};
use openwindow_cli::{run, Command, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 10.0 * TOL;
const STATIC_TOL: f64 = 1e-6;
const DUALITY_TOL: f64 = 1e-8;
const DUALITY_STATES: usize = 1000;
const THETA_REL_TOL: f64 = 1e-3;
const Q_B: f64 = 100.0;
const M_SWEEP: [f64; 10] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const PHI_SWEEP: [f64; 10] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0];
const QB_SWEEP: [f64; 9] = [50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 250.0];
const REL_WIDTH_SPREAD: f64 = 0.5;
const DEVELOP_M: [f64; 3] = [0.1, 0.2, 0.4];
const DEVELOP_MID: (f64, f64) = (125.0, 375.0);

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn q(x: f64) -> Quality {
    Quality::new(x).unwrap()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Verdict {
    let grid = GridSpec {
        q_max: 100.0,
        n_q: 11,
        k_max_open: 6.0,
        n_k_open: 10,
        n_k_closed: 10,
        n_p: 5,
        ..GridSpec::default()
    };
    let settings = SolverSettings {
        interpolation: Interpolation::Nearest,
        ..SolverSettings::default()
    };
    let cases = [
        EconParams::baseline(),
        EconParams::baseline().with_beta(0.5),
        EconParams::baseline().with_m(0.6).with_phi(0.9),
        EconParams::baseline().with_phi(0.1),
    ];
    let (mut worst_open, mut worst_closed) = (0.0f64, 0.0f64);
    for p in &cases {
        let open = solve_open(p, &grid, &settings).map_err(|e| e.to_string())?;
        let closed = solve_closed(&open, p, &grid, &settings).map_err(|e| e.to_string())?;
        let bound = closed
            .value
            .iter()
            .chain(&open.value)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            + 1.0;
        let spec = FiniteHorizonSpec::for_tolerance(p.beta, bound, TOL);
        let vo = finite_horizon_open(p, &grid, &spec).map_err(|e| e.to_string())?;
        let vc = finite_horizon_closed(p, &grid, &open, &spec).map_err(|e| e.to_string())?;
        worst_open = worst_open.max(sup(&vo, &open.value));
        worst_closed = worst_closed.max(sup(&vc, &closed.value));
    }
    check(
        worst_open <= ORACLE_TOL && worst_closed <= ORACLE_TOL,
        format!(
            "{} parameter sets, sup gap open {worst_open:.2e}, closed {worst_closed:.2e} (limit {ORACLE_TOL:.0e})",
            cases.len()
        ),
    )
}

fn closed_form_checks() -> Verdict {
    let p = EconParams::baseline().with_beta(0.0);
    let grid = GridSpec::default();
    let s = SolverSettings::default();
    let open = solve_open(&p, &grid, &s).map_err(|e| e.to_string())?;
    let closed = solve_closed(&open, &p, &grid, &s).map_err(|e| e.to_string())?;
    let best_k = |qa: f64, ks: &[f64]| {
        ks.iter()
            .map(|&k| firm_profit(q(qa), k, &p))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let open_ks = grid.k_grid_open();
    let mut static_gap = 0.0f64;
    for (i, &qa) in open.q_grid.iter().enumerate() {
        static_gap = static_gap.max((open.value[i] - best_k(qa, &open_ks)).abs());
    }
    let top = adaptive_k_max(grid.q_max, &p, &grid);
    let closed_ks: Vec<f64> = (0..grid.n_k_closed)
        .map(|i| top * i as f64 / (grid.n_k_closed - 1) as f64)
        .collect();
    let at_m = ProducerLocation::new(p.m).unwrap();
    let qs = &closed.q_grid;
    for a in 0..closed.n() {
        for b in 0..closed.n() {
            let expected = if a >= b {
                let cap = indifference_price(at_m, q(qs[a]), q(qs[b]), &p).unwrap();
                let revenue = (0..=grid.n_p)
                    .map(|j| api_profit(q(qs[a]), q(qs[b]), cap * j as f64 / grid.n_p as f64, &p).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                best_k(qs[a], &closed_ks) + revenue
            } else {
                best_k(qs[a], &closed_ks).max(open.value[b] - p.c_switch * qs[b])
            };
            static_gap = static_gap.max((closed.value_at_node(a, b) - expected).abs());
        }
    }

    let p = EconParams::baseline();
    let mut rng = ChaCha8Rng::seed_from_u64(20_261_015);
    let mut duality_gap = 0.0f64;
    for _ in 0..DUALITY_STATES {
        let qb = rng.gen_range(0.0..400.0);
        let qa = qb + rng.gen_range(0.5..300.0);
        let cut = rng.gen_range(p.m + 1e-4..1.0);
        let price = indifference_price(ProducerLocation::new(cut).unwrap(), q(qa), q(qb), &p).unwrap();
        let demand = api_demand(q(qa), q(qb), price, &p).unwrap();
        duality_gap = duality_gap.max((demand - (cut - p.m)).abs());
    }

    let mut theta_gap = 0.0f64;
    for &qa in &[10.0, 100.0, 400.0] {
        let k_star = firm_static_compute(q(qa), &p);
        for k in [0.5 * k_star, k_star, 2.0 * k_star] {
            let quad = per_producer_profit_quadrature(qa, equal_marginal_allocation(k, &p), &p, grid.n_x);
            let reduced = firm_profit(q(qa), k, &p);
            theta_gap = theta_gap.max(((quad - reduced) / reduced).abs());
        }
    }
    check(
        static_gap <= STATIC_TOL && duality_gap <= DUALITY_TOL && theta_gap <= THETA_REL_TOL,
        format!(
            "static gap {static_gap:.2e} (limit {STATIC_TOL:.0e}), duality gap {duality_gap:.2e} over {DUALITY_STATES} states \
             (limit {DUALITY_TOL:.0e}), Theta quadrature rel gap {theta_gap:.2e} (limit {THETA_REL_TOL:.0e})"
        ),
    )
}

struct Baseline {
    p: EconParams,
    grid: GridSpec,
    settings: SolverSettings,
    open: OpenSolution,
    closed: ClosedSolution,
}

fn proposition(base: &Baseline, which: Proposition) -> Verdict {
    let audit = audit_propositions(&base.closed, &base.open, &base.p);
    let checked = match which {
        Proposition::Threshold => audit.threshold_states_checked,
        Proposition::PriceCap => audit.price_states_checked,
    };
    let n = audit.count(which);
    check(n == 0, format!("{n} violations over {checked} states"))
}

fn window_shape(base: &Baseline) -> Verdict {
    let w = open_source_window(&base.closed, Q_B).map_err(|e| e.to_string())?;
    let qs = &base.closed.q_grid;
    let b = base.grid.q_index(Q_B).unwrap();
    let mut misplaced = 0;
    for (a, &qa) in qs.iter().enumerate().skip(b) {
        let open = base.closed.decision_at(a, b) == Decision::OpenSource;
        if open != (qa <= w.q_star) {
            misplaced += 1;
        }
    }
    check(
        w.abs_width > 0.0 && misplaced == 0,
        format!(
            "q_B = {Q_B}: q* = {}, width {}, {misplaced} misplaced decisions",
            w.q_star, w.abs_width
        ),
    )
}

fn firm_size_shape(base: &Baseline) -> Verdict {
    let sweep = sweep_firm_size(&M_SWEEP, &base.p, &base.grid, &base.settings, Q_B).map_err(|e| e.to_string())?;
    let w = sweep.abs_widths();
    let noise = base.grid.q_step();
    let peak = (0..w.len()).fold(0, |best, i| if w[i] > w[best] { i } else { best });
    let interior = peak > 0 && peak + 1 < w.len() && w[peak] > w[0] && w[peak] > w[w.len() - 1];
    let rising = w[..=peak].windows(2).all(|p| p[1] >= p[0] - noise);
    let falling = w[peak..].windows(2).all(|p| p[1] <= p[0] + noise);
    check(
        interior && rising && falling,
        format!("widths {w:?} over m = {M_SWEEP:?}, peak at m = {}", M_SWEEP[peak]),
    )
}

fn phi_shape(base: &Baseline) -> Verdict {
    let sweep = sweep_phi(&PHI_SWEEP, &base.p, &base.grid, &base.settings, Q_B).map_err(|e| e.to_string())?;
    let w = sweep.abs_widths();
    check(
        w.windows(2).all(|p| p[1] >= p[0]) && w[0] == 0.0,
        format!("widths {w:?} over phi = {PHI_SWEEP:?}"),
    )
}

fn rival_quality_shape(base: &Baseline) -> Verdict {
    let sweep = sweep_qb(&QB_SWEEP, &base.closed, &base.open).map_err(|e| e.to_string())?;
    let abs = sweep.abs_widths();
    let rel: Vec<f64> = sweep.points.iter().map(|p| p.window.rel_width).collect();
    let hi = rel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = rel.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if hi > 0.0 { (hi - lo) / hi } else { f64::INFINITY };
    check(
        abs.windows(2).all(|p| p[1] >= p[0]) && spread < REL_WIDTH_SPREAD,
        format!(
            "abs widths {abs:?} over q_B = {QB_SWEEP:?}; relative width in [{lo:.4}, {hi:.4}], spread {spread:.3} (limit {REL_WIDTH_SPREAD})"
        ),
    )
}

fn phi_crossing_shape(base: &Baseline) -> Verdict {
    let cmp = phi_value_crossing(&base.p, &base.grid, &base.settings, Q_B, 0.1, 0.5).map_err(|e| e.to_string())?;
    let Some(crossing) = cmp.crossing else {
        return Err("the phi = 0.1 value never exceeds the phi = 0.5 value".to_string());
    };
    let mut misordered = 0;
    for i in 0..cmp.q_a.len() {
        let (lo, hi) = (cmp.value_low[i], cmp.value_high[i]);
        let ok = if cmp.q_a[i] < crossing { hi > lo } else { lo > hi };
        if !ok {
            misordered += 1;
        }
    }
    let q_star_high = open_source_window(&cmp.high.1, Q_B).map_err(|e| e.to_string())?.q_star;
    let q_star_low = open_source_window(&cmp.low.1, Q_B).map_err(|e| e.to_string())?.q_star;
    let q_star = q_star_high.max(q_star_low);
    check(
        misordered == 0 && crossing > q_star,
        format!("crossing at q_A = {crossing}, q* = {q_star}, {misordered} misordered nodes"),
    )
}

fn development_shape(base: &Baseline) -> Verdict {
    let qbs: Vec<f64> = (1..=20).map(|i| 25.0 * i as f64).collect();
    let dev =
        sweep_development(&DEVELOP_M, &qbs, &base.p, &base.grid, &base.settings, 101).map_err(|e| e.to_string())?;
    let at = |mi: usize, bi: usize| dev[mi * qbs.len() + bi].expected_value;
    let mut m_breaks = 0;
    for bi in 0..qbs.len() {
        for mi in 1..DEVELOP_M.len() {
            if at(mi, bi) < at(mi - 1, bi) {
                m_breaks += 1;
            }
        }
    }
    let mid: Vec<usize> = (0..qbs.len())
        .filter(|&i| qbs[i] >= DEVELOP_MID.0 && qbs[i] <= DEVELOP_MID.1)
        .collect();
    let mut qb_breaks = 0;
    for mi in 0..DEVELOP_M.len() {
        for pair in mid.windows(2) {
            if at(mi, pair[1]) >= at(mi, pair[0]) {
                qb_breaks += 1;
            }
        }
    }
    check(
        m_breaks == 0 && qb_breaks == 0,
        format!(
            "m = {DEVELOP_M:?}: {m_breaks} decreases in m, {qb_breaks} non-decreases in q_B over [{}, {}]",
            DEVELOP_MID.0, DEVELOP_MID.1
        ),
    )
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = RunConfig::default();
    let wide = std::thread::available_parallelism().map_or(8, |n| n.get()).max(8);
    let mut outputs = Vec::new();
    for (name, threads) in [("serial", 1), ("parallel", wide)] {
        let out = tmp.path().join(name);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| run(Command::AllFigures, &config, &out))
            .map_err(|e| e.to_string())?;
        outputs.push(read_csvs(&out));
    }
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    check(
        outputs[0] == outputs[1] && names.len() == 6,
        format!("all-figures on 1 and {wide} threads, files {names:?}"),
    )
}

fn main() {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, verdict: Verdict| {
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {tag}: {name}: {detail}");
    };

    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "closed-form checks", closed_form_checks());

    let p = EconParams::baseline();
    let grid = GridSpec::default();
    let settings = SolverSettings::default();
    let base = match solve_model(&p, &grid, &settings) {
        Ok((open, closed)) => Baseline {
            p,
            grid,
            settings,
            open,
            closed,
        },
        Err(e) => {
            for (id, name) in (3..=10).zip([
                "threshold",
                "price cap",
                "fig 6",
                "fig 8",
                "fig C.2",
                "fig C.1",
                "fig 7",
                "fig 9",
            ]) {
                report(id, name, Err(format!("baseline solve failed: {e}")));
            }
            report(11, "determinism", determinism());
            std::process::exit(1);
        }
    };
    report(3, "threshold property", proposition(&base, Proposition::Threshold));
    report(4, "price cap property", proposition(&base, Proposition::PriceCap));
    report(5, "window at q_B = 100", window_shape(&base));
    report(6, "window width across firm size", firm_size_shape(&base));
    report(7, "window width across ecosystem efficiency", phi_shape(&base));
    report(8, "window width across rival quality", rival_quality_shape(&base));
    report(9, "value crossing between ecosystems", phi_crossing_shape(&base));
    report(10, "development value", development_shape(&base));
    report(11, "determinism of all-figures", determinism());

    println!(
        "acceptance: {} of 11 criteria failed ({:.0} s)",
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
