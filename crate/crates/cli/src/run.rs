//! Command execution. Everything is computed in memory first and only then
//! written, so a failed solve leaves no files behind.

use std::fs;
use std::path::{Path, PathBuf};

use openwindow::analysis::{
    audit_propositions, open_source_window, phi_value_crossing, solve_model, sweep_development, sweep_firm_size,
    sweep_phi, sweep_qb, DevelopmentResult, SweepResult, WindowResult,
};
use openwindow::{solve_open, ClosedSolution, OpenSolution};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::manifest::{Diagnostics, Manifest, SolveRecord};
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// What a finished run wrote.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

#[derive(Default)]
struct Report {
    tables: Vec<Table>,
    diagnostics: Diagnostics,
}

impl Report {
    fn solved(&mut self, label: &str, open: &OpenSolution, closed: &ClosedSolution) {
        self.diagnostics.solves.extend(SolveRecord::pair(label, open, closed));
    }

    fn note(&mut self, key: impl Into<String>, value: f64) {
        self.diagnostics.summary.insert(key.into(), value);
    }
}

/// Validates `config`, runs `command` and writes its CSVs plus a manifest into `out`.
pub fn run(command: Command, config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    config.validate()?;
    let mut config = config.clone();
    config.run.command = Some(command);
    let mut report = compute(command, &config)?;
    report.diagnostics.files = report.tables.iter().map(|t| t.name.clone()).collect();
    let manifest = Manifest::new(&config, report.diagnostics);
    let mut payload = Vec::with_capacity(report.tables.len() + 1);
    for t in &report.tables {
        payload.push((t.name.clone(), t.to_bytes()?));
    }
    payload.push((MANIFEST_FILE.to_string(), manifest.to_toml()?.into_bytes()));
    let files = write_all(out, &payload)?;
    Ok(Outcome { files, manifest })
}

fn write_all(out: &Path, payload: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut written = Vec::new();
    for (name, bytes) in payload {
        let path = out.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in written.iter().chain([&path]) {
                let _ = fs::remove_file(p);
            }
            return Err(CliError::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

fn compute(command: Command, c: &RunConfig) -> Result<Report, CliError> {
    let mut r = Report::default();
    let (p, g, s, e) = (&c.params, &c.grid, &c.solver, &c.experiment);
    match command {
        Command::SolveOpen => {
            let open = solve_open(p, g, s)?;
            r.diagnostics
                .solves
                .push(SolveRecord::new("baseline", "open", open.summary()));
            r.tables.push(open_table(&open));
        }
        Command::SolveClosed => {
            let (open, closed) = solve_model(p, g, s)?;
            r.solved("baseline", &open, &closed);
            r.tables.push(open_table(&open));
            r.tables.push(closed_table(&closed));
        }
        Command::Window => {
            let (open, closed) = solve_model(p, g, s)?;
            r.solved("baseline", &open, &closed);
            let w = open_source_window(&closed, e.q_b)?;
            note_window(&mut r, "window", &w);
            let mut t = window_table("window.csv");
            window_row(&mut t, e.q_b, &w);
            r.tables.push(t);
            r.tables.push(decision_table("fig6.csv", &open, &closed, e.q_b)?);
        }
        Command::SweepSize => {
            let sweep = sweep_firm_size(&e.m_values, p, g, s, e.q_b)?;
            r.tables.push(sweep_table("sweep_size.csv", &mut r.diagnostics, &sweep));
        }
        Command::SweepPhi => {
            let sweep = sweep_phi(&e.phi_values, p, g, s, e.q_b)?;
            r.tables.push(sweep_table("sweep_phi.csv", &mut r.diagnostics, &sweep));
        }
        Command::SweepQb => {
            let (open, closed) = solve_model(p, g, s)?;
            r.solved("baseline", &open, &closed);
            let sweep = sweep_qb(&e.qb_values, &closed, &open)?;
            r.tables
                .push(sweep_table("sweep_qb.csv", &mut Diagnostics::default(), &sweep));
        }
        Command::PhiCompare => {
            let t = phi_compare(&mut r, c, "phi_compare.csv")?;
            r.tables.push(t);
        }
        Command::Develop => {
            let dev = sweep_development(&e.develop_m, &e.develop_qb, p, g, s, e.n_quadrature)?;
            r.tables.push(develop_table("develop.csv", &dev));
        }
        Command::Audit => {
            let (open, closed) = solve_model(p, g, s)?;
            r.solved("baseline", &open, &closed);
            let audit = audit_propositions(&closed, &open, p);
            r.note("audit.threshold_states_checked", audit.threshold_states_checked as f64);
            r.note("audit.price_states_checked", audit.price_states_checked as f64);
            r.note("audit.violations", audit.violations.len() as f64);
            let mut t = Table::new("audit.csv", &["proposition", "q_a", "q_b", "detail"]);
            for v in &audit.violations {
                t.push(vec![
                    v.proposition.label().into(),
                    v.q_a.into(),
                    v.q_b.into(),
                    v.detail.clone().into(),
                ]);
            }
            r.tables.push(t);
        }
        Command::AllFigures => {
            let (open, closed) = solve_model(p, g, s)?;
            r.solved("baseline", &open, &closed);
            let w = open_source_window(&closed, e.q_b)?;
            note_window(&mut r, "fig6", &w);
            r.tables.push(decision_table("fig6.csv", &open, &closed, e.q_b)?);
            let fig7 = phi_compare(&mut r, c, "fig7.csv")?;
            r.tables.push(fig7);
            let sizes = sweep_firm_size(&e.m_values, p, g, s, e.q_b)?;
            r.tables.push(sweep_table("fig8.csv", &mut r.diagnostics, &sizes));
            let dev = sweep_development(&e.develop_m, &e.develop_qb, p, g, s, e.n_quadrature)?;
            r.tables.push(develop_table("fig9.csv", &dev));
            let rivals = sweep_qb(&e.qb_values, &closed, &open)?;
            r.tables
                .push(sweep_table("figC1.csv", &mut Diagnostics::default(), &rivals));
            let phis = sweep_phi(&e.phi_values, p, g, s, e.q_b)?;
            r.tables.push(sweep_table("figC2.csv", &mut r.diagnostics, &phis));
        }
    }
    Ok(r)
}

fn open_table(open: &OpenSolution) -> Table {
    let mut t = Table::new("open_value.csv", &["q", "value", "policy_k"]);
    for i in 0..open.q_grid.len() {
        t.push(vec![
            open.q_grid[i].into(),
            open.value[i].into(),
            open.policy_k[i].into(),
        ]);
    }
    t
}

fn closed_table(closed: &ClosedSolution) -> Table {
    let mut t = Table::new(
        "closed_value.csv",
        &["q_a", "q_b", "value", "policy_k", "policy_p", "decision"],
    );
    let q = &closed.q_grid;
    for a in 0..closed.n() {
        for b in 0..closed.n() {
            let s = closed.idx(a, b);
            t.push(vec![
                q[a].into(),
                q[b].into(),
                closed.value[s].into(),
                closed.policy_k[s].into(),
                closed.policy_p[s].into(),
                closed.decision[s].as_str().into(),
            ]);
        }
    }
    t
}

/// Closed and open values along `q_a` at a fixed rival quality.
fn decision_table(name: &str, open: &OpenSolution, closed: &ClosedSolution, q_b: f64) -> Result<Table, CliError> {
    let b = closed
        .grid
        .q_index(q_b)
        .ok_or_else(|| CliError::Config(format!("q_b = {q_b} is not a node of the quality grid")))?;
    let mut t = Table::new(name, &["q_a", "q_b", "value_closed", "value_open", "decision"]);
    for a in 0..closed.n() {
        t.push(vec![
            closed.q_grid[a].into(),
            closed.q_grid[b].into(),
            closed.value_at_node(a, b).into(),
            open.value[a].into(),
            closed.decision_at(a, b).as_str().into(),
        ]);
    }
    Ok(t)
}

fn window_table(name: &str) -> Table {
    Table::new(name, &["parameter", "q_b", "q_star", "abs_width", "rel_width"])
}

fn window_row(t: &mut Table, parameter: f64, w: &WindowResult) {
    t.push(vec![
        parameter.into(),
        w.q_b.into(),
        w.q_star.into(),
        w.abs_width.into(),
        w.rel_width.into(),
    ]);
}

fn note_window(r: &mut Report, key: &str, w: &WindowResult) {
    r.note(format!("{key}.q_star"), w.q_star);
    r.note(format!("{key}.abs_width"), w.abs_width);
    r.note(format!("{key}.contiguous"), if w.contiguous { 1.0 } else { 0.0 });
}

/// One row per sweep point; the `parameter` column holds the swept value.
fn sweep_table(name: &str, diagnostics: &mut Diagnostics, sweep: &SweepResult) -> Table {
    let mut t = window_table(name);
    for pt in &sweep.points {
        window_row(&mut t, pt.value, &pt.window);
        let label = format!("{}={}", sweep.parameter, pt.value);
        diagnostics.solves.extend(SolveRecord::point(&label, &pt.diagnostics));
    }
    t
}

fn develop_table(name: &str, dev: &[DevelopmentResult]) -> Table {
    let mut t = Table::new(name, &["q_b", "m", "expected_value"]);
    for d in dev {
        t.push(vec![d.q_b.into(), d.m.into(), d.expected_value.into()]);
    }
    t
}

fn phi_compare(r: &mut Report, c: &RunConfig, name: &str) -> Result<Table, CliError> {
    let e = &c.experiment;
    let cmp = phi_value_crossing(&c.params, &c.grid, &c.solver, e.q_b, e.phi_low, e.phi_high)?;
    r.solved(&format!("phi={}", e.phi_low), &cmp.low.0, &cmp.low.1);
    r.solved(&format!("phi={}", e.phi_high), &cmp.high.0, &cmp.high.1);
    if let Some(q) = cmp.crossing {
        r.note("phi_compare.crossing", q);
    }
    let mut t = Table::new(name, &["q_a", "q_b", "value_phi_low", "value_phi_high"]);
    for i in 0..cmp.q_a.len() {
        t.push(vec![
            cmp.q_a[i].into(),
            cmp.q_b.into(),
            cmp.value_low[i].into(),
            cmp.value_high[i].into(),
        ]);
    }
    Ok(t)
}
