//! Runs a scenario and assembles its tables. Rows are kept in grid order, so
//! the worker pool never changes the bytes written.

use cfnet::quantum::{
    chi_sweep, circuit_steady_state, drive_strength_sweep, k_delta_s_map, k_sweep, mode_populations, solve_g2, Cavity,
    G2Result, SweepPoint,
};
use cfnet::semiclassical::{hysteresis, steady_roots_with, MeanFieldOptions, Regime};
use cfnet::validation::{diagnostics, render_report, run_all};
use cfnet::weak_drive::{
    first_order_p1, g2_closed_form, g2_from_occupations, occupations, solve_amplitudes, solve_amplitudes_with,
    LossModel, Occupations,
};
use cfnet::CircuitParams;
use rayon::prelude::*;

use crate::config::{Experiment, Scenario};
use crate::output::{num, policy_str, PlotSpec, RunOutput, Table};

const G2_COLUMNS: [&str; 6] = ["g2", "mean_photon", "dim_a", "dim_c", "converged", "residual"];

fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m").replace('.', "p")
}

fn trace_name(base: &str, parts: &[String]) -> String {
    if parts.is_empty() {
        base.to_string()
    } else {
        format!("{base}_{}", parts.join("_"))
    }
}

fn g2_cells(r: &G2Result) -> Vec<String> {
    vec![
        num(r.g2),
        num(r.mean_photon),
        r.truncation[0].to_string(),
        r.truncation[1].to_string(),
        r.converged.to_string(),
        num(r.residual),
    ]
}

fn g2_key(s: &Scenario, cavity: Cavity) -> String {
    format!("cavity={};truncation={}", cavity.as_str(), policy_str(&s.truncation))
}

fn count_unconverged(t: &mut Table, col: usize) {
    let n = t.rows.iter().filter(|r| r[col] == "false").count();
    if n > 0 {
        t.meta("unconverged_rows", n);
    }
}

fn max_residual(t: &mut Table, col: usize) {
    let worst = t.rows.iter().filter_map(|r| r[col].parse::<f64>().ok()).fold(0.0f64, f64::max);
    if !t.rows.is_empty() {
        t.meta("max_residual", num(worst));
    }
}

pub fn run(s: &Scenario) -> RunOutput {
    let mut out = RunOutput::default();
    match s.experiment {
        Experiment::Bistability => bistability(s, &mut out),
        Experiment::Hysteresis => hysteresis_traces(s, &mut out),
        Experiment::G2Ksweep => g2_ksweep(s, &mut out),
        Experiment::G2Map => g2_map(s, &mut out),
        Experiment::G2DriveSweep => g2_drive_sweep(s, &mut out),
        Experiment::G2ChiSweep => g2_chi_sweep(s, &mut out),
        Experiment::WeakDriveCompare => weak_drive_compare(s, &mut out),
        Experiment::Validate => validate(&mut out),
    }
    out
}

fn grid<'a>(g: &'a Option<Vec<f64>>, what: &str) -> &'a [f64] {
    g.as_deref().unwrap_or_else(|| panic!("scenario without a {what} grid"))
}

fn bistability(s: &Scenario, out: &mut RunOutput) {
    let opts = MeanFieldOptions { p1_form: s.p1_form, drive_phase: 0.0 };
    let key = format!("p1_form={}", s.p1_form_str());
    let mut t = Table::new(s.name.clone(), vec!["epsilon", "root_index", "C0_sq", "A0_sq", "stable", "params_hash"]);
    let mut window: Option<(f64, f64)> = None;
    let mut rates = None;
    for &eps in grid(&s.grids.epsilon, "epsilon") {
        let p = s.params.clone().with_epsilon(eps);
        let h = out.point(&p, &key);
        match steady_roots_with(&p, &opts) {
            Ok(r) => {
                rates.get_or_insert((r.p1, r.p2, r.threshold_eps_sq, r.regime));
                if r.regime == Regime::BistableAtThisDrive {
                    window = Some((window.map_or(eps, |w| w.0), eps));
                }
                for (i, root) in r.roots.iter().enumerate() {
                    t.rows.push(vec![
                        format!("{eps:?}"),
                        i.to_string(),
                        num(root.x),
                        num(root.a0_sq),
                        root.stable.to_string(),
                        h.clone(),
                    ]);
                }
            }
            Err(e) => out.fail(&t.name, format!("epsilon={eps:?}"), h, e),
        }
    }
    t.meta("p1_form", s.p1_form_str());
    if let Some((p1, p2, thr, regime)) = rates {
        t.meta("p1", num(p1));
        t.meta("p2", num(p2));
        t.meta("threshold_eps_sq", num(thr));
        t.meta("bistable_capable", regime.is_bistable_capable());
    }
    t.meta("three_root_window", window.map_or("none".into(), |(a, b)| format!("epsilon in [{a:?}, {b:?}]")));
    t.plot = Some(PlotSpec { x: 0, y: vec![3], log_y: false, markers: true });
    out.tables.push(t);
}

fn hysteresis_traces(s: &Scenario, out: &mut RunOutput) {
    let eps = grid(&s.grids.epsilon, "epsilon");
    let mut t = Table::new(s.name.clone(), vec!["epsilon", "A0_sq_up", "A0_sq_down", "C0_sq_up", "C0_sq_down", "params_hash"]);
    t.meta("dynamics", "amplitude equations, continuation from the previous point");
    let hashes: Vec<String> = eps.iter().map(|&e| out.point(&s.params.clone().with_epsilon(e), "relax")).collect();
    match hysteresis(&s.params, eps) {
        Ok(h) => {
            for ((u, d), hash) in h.up.iter().zip(&h.down).zip(hashes) {
                t.rows.push(vec![format!("{:?}", u.epsilon), num(u.a0_sq), num(d.a0_sq), num(u.c0_sq), num(d.c0_sq), hash]);
            }
            let open: Vec<f64> = h.gaps().into_iter().filter(|g| g.1 > 1e-6).map(|g| g.0).collect();
            t.meta(
                "hysteresis_window",
                match (open.first(), open.last()) {
                    (Some(a), Some(b)) => format!("epsilon in [{a:?}, {b:?}]"),
                    _ => "none".into(),
                },
            );
        }
        Err(e) => {
            let at = match e {
                cfnet::Error::NoConvergence { epsilon, .. } | cfnet::Error::Diverged { epsilon } => {
                    format!("epsilon={epsilon:?}")
                }
                _ => "epsilon grid".into(),
            };
            let h = out.point(&s.params, "relax");
            out.fail(&t.name, at, h, e);
        }
    }
    t.plot = Some(PlotSpec { x: 0, y: vec![1, 2], log_y: false, markers: false });
    out.tables.push(t);
}

fn delta_s_traces(s: &Scenario) -> Vec<f64> {
    s.grids.delta_s.clone().unwrap_or_else(|| vec![s.params.delta_s])
}

fn weak_drive_g2(p: &CircuitParams) -> Option<f64> {
    let o = occupations(&solve_amplitudes(p).ok()?);
    g2_from_occupations(o.p1, o.p2).ok()
}

fn g2_ksweep(s: &Scenario, out: &mut RunOutput) {
    let ks = grid(&s.grids.k, "k");
    let traces = delta_s_traces(s);
    for &ds in &traces {
        for &cavity in &s.cavities {
            let mut parts = Vec::new();
            if traces.len() > 1 {
                parts.push(format!("ds{}", tag(ds)));
            }
            if s.cavities.len() > 1 {
                parts.push(cavity.as_str().to_string());
            }
            let name = trace_name(&s.name, &parts);
            let mut cols = vec!["K", "g2_numeric", "g2_analytic", "g2_weak_table"];
            cols.extend(&G2_COLUMNS[1..]);
            cols.push("params_hash");
            let mut t = Table::new(name, cols);
            t.meta("delta_s", format!("{ds:?}"));
            t.meta("cavity", cavity.as_str());
            if cavity == Cavity::C {
                t.meta("g2_analytic", "closed form and amplitude table describe cavity a only; left empty");
            }
            let base = s.params.clone().with_delta_s(ds);
            let points = match k_sweep(&base, ks, cavity, &s.truncation) {
                Ok(p) => p,
                Err(e) => {
                    let h = out.point(&base, &g2_key(s, cavity));
                    out.fail(&t.name, "K grid", h, e);
                    out.tables.push(t);
                    continue;
                }
            };
            for pt in points {
                let h = out.point(&pt.params, &g2_key(s, cavity));
                match pt.result {
                    Ok(r) => {
                        let (analytic, table) = if cavity == Cavity::A {
                            (
                                g2_closed_form(&pt.params, pt.at).ok().map(num).unwrap_or_default(),
                                weak_drive_g2(&pt.params).map(num).unwrap_or_default(),
                            )
                        } else {
                            (String::new(), String::new())
                        };
                        let mut row = vec![format!("{:?}", pt.at), num(r.g2), analytic, table];
                        row.extend(g2_cells(&r).into_iter().skip(1));
                        row.push(h);
                        t.rows.push(row);
                    }
                    Err(e) => out.fail(&t.name, format!("K={:?}", pt.at), h, e),
                }
            }
            count_unconverged(&mut t, 7);
            max_residual(&mut t, 8);
            let y = if cavity == Cavity::A { vec![1, 2] } else { vec![1] };
            t.plot = Some(PlotSpec { x: 0, y, log_y: true, markers: false });
            out.tables.push(t);
        }
    }
}

fn push_g2_rows<X>(
    s: &Scenario,
    out: &mut RunOutput,
    t: &mut Table,
    cavity: Cavity,
    points: Vec<SweepPoint<X>>,
    lead: impl Fn(&X) -> Vec<String>,
) {
    for pt in points {
        let h = out.point(&pt.params, &g2_key(s, cavity));
        match pt.result {
            Ok(r) => {
                let mut row = lead(&pt.at);
                row.extend(g2_cells(&r));
                row.push(h);
                t.rows.push(row);
            }
            Err(e) => out.fail(&t.name, lead(&pt.at).join(","), h, e),
        }
    }
}

fn g2_columns(lead: &[&'static str]) -> Vec<&'static str> {
    let mut c = lead.to_vec();
    c.extend(G2_COLUMNS);
    c.push("params_hash");
    c
}

fn g2_map(s: &Scenario, out: &mut RunOutput) {
    let ks = grid(&s.grids.k, "k");
    let ds = grid(&s.grids.delta_s, "delta_s");
    for &cavity in &s.cavities {
        let parts = if s.cavities.len() > 1 { vec![cavity.as_str().to_string()] } else { Vec::new() };
        let mut t = Table::new(trace_name(&s.name, &parts), g2_columns(&["K", "delta_s"]));
        t.meta("cavity", cavity.as_str());
        t.meta("order", "K varies fastest");
        match k_delta_s_map(&s.params, ks, ds, cavity, &s.truncation) {
            Ok(points) => push_g2_rows(s, out, &mut t, cavity, points, |(k, d)| vec![format!("{k:?}"), format!("{d:?}")]),
            Err(e) => {
                let h = out.point(&s.params, &g2_key(s, cavity));
                out.fail(&t.name, "grid", h, e);
            }
        }
        count_unconverged(&mut t, 6);
        max_residual(&mut t, 7);
        out.tables.push(t);
    }
}

fn g2_drive_sweep(s: &Scenario, out: &mut RunOutput) {
    let eps = grid(&s.grids.epsilon, "epsilon");
    let traces = delta_s_traces(s);
    let ks: Vec<Option<f64>> = match &s.grids.k {
        Some(k) => k.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    for &ds in &traces {
        for &k in &ks {
            for &cavity in &s.cavities {
                let mut parts = Vec::new();
                if traces.len() > 1 {
                    parts.push(format!("ds{}", tag(ds)));
                }
                if let (Some(k), true) = (k, ks.len() > 1) {
                    parts.push(format!("k{}", tag(k)));
                }
                if s.cavities.len() > 1 {
                    parts.push(cavity.as_str().to_string());
                }
                let mut base = s.params.clone().with_delta_s(ds);
                if let Some(k) = k {
                    base = base.with_k(k);
                }
                let mut t = Table::new(trace_name(&s.name, &parts), g2_columns(&["epsilon"]));
                t.meta("delta_s", format!("{ds:?}"));
                t.meta("delta", format!("{:?}", base.delta));
                t.meta("cavity", cavity.as_str());
                let points = drive_strength_sweep(&base, eps, cavity, &s.truncation);
                push_g2_rows(s, out, &mut t, cavity, points, |e| vec![format!("{e:?}")]);
                count_unconverged(&mut t, 5);
                max_residual(&mut t, 6);
                t.plot = Some(PlotSpec { x: 0, y: vec![1], log_y: true, markers: false });
                out.tables.push(t);
            }
        }
    }
}

fn g2_chi_sweep(s: &Scenario, out: &mut RunOutput) {
    let (g, omega) = s.qubit_coupling.expect("chi sweep scenario carries the qubit coupling");
    let grid = grid(&s.grids.delta_qt, "delta_qT");
    for &cavity in &s.cavities {
        let parts = if s.cavities.len() > 1 { vec![cavity.as_str().to_string()] } else { Vec::new() };
        let mut cols = vec!["delta_qT", "chi", "rabi_ratio", "dispersive_ratio", "validity_warning"];
        cols.extend(G2_COLUMNS);
        cols.push("params_hash");
        let mut t = Table::new(trace_name(&s.name, &parts), cols);
        t.meta("qubit", format!("g {g:?}, Omega {omega:?}"));
        t.meta("K", format!("{:?}", s.params.k()));
        t.meta("cavity", cavity.as_str());
        for cp in chi_sweep(&s.params, g, omega, grid, cavity, &s.truncation) {
            let at = format!("delta_qT={:?}", cp.delta_qt);
            match (cp.kerr, cp.point) {
                (Ok(kerr), Some(pt)) => {
                    let key = format!("{};qubit=g {g:?} Omega {omega:?} delta_qT {:?}", g2_key(s, cavity), cp.delta_qt);
                    let h = out.point(&pt.params, &key);
                    match pt.result {
                        Ok(r) => {
                            let mut row = vec![
                                format!("{:?}", cp.delta_qt),
                                num(kerr.chi),
                                num(kerr.rabi_ratio),
                                num(kerr.dispersive_ratio),
                                kerr.warning.to_string(),
                            ];
                            row.extend(g2_cells(&r));
                            row.push(h);
                            t.rows.push(row);
                        }
                        Err(e) => out.fail(&t.name, at, h, e),
                    }
                }
                (Err(e), _) => {
                    let h = out.point(&s.params, &format!("qubit=g {g:?} Omega {omega:?} delta_qT {:?}", cp.delta_qt));
                    out.fail(&t.name, at, h, e);
                }
                (Ok(_), None) => unreachable!("a derived chi always comes with a point"),
            }
        }
        count_unconverged(&mut t, 9);
        max_residual(&mut t, 10);
        t.plot = Some(PlotSpec { x: 1, y: vec![5], log_y: true, markers: false });
        out.tables.push(t);
    }
}

struct CompareRow {
    k: f64,
    params: CircuitParams,
    quantum: cfnet::Result<(G2Result, Vec<f64>)>,
    table: cfnet::Result<Occupations>,
    collective: cfnet::Result<Occupations>,
    drive_warning: bool,
}

fn weak_drive_compare(s: &Scenario, out: &mut RunOutput) {
    let ks = grid(&s.grids.k, "k");
    for &ds in &delta_s_traces(s) {
        let parts = if delta_s_traces(s).len() > 1 { vec![format!("ds{}", tag(ds))] } else { Vec::new() };
        let mut t = Table::new(
            trace_name(&s.name, &parts),
            vec![
                "K",
                "g2_numeric",
                "g2_weak_table",
                "g2_analytic",
                "g2_weak_collective",
                "P1_quantum",
                "P2_quantum",
                "P1_table",
                "P2_table",
                "P1_collective",
                "P2_collective",
                "P1_first_order",
                "drive_warning",
                "params_hash",
            ],
        );
        t.meta("delta_s", format!("{ds:?}"));
        t.meta("cavity", "a");
        let base = s.params.clone().with_delta_s(ds);
        let rows: Vec<CompareRow> = ks
            .par_iter()
            .map(|&k| {
                let p = base.clone().with_k(k);
                let quantum = solve_g2(&p, Cavity::A, &s.truncation).and_then(|r| {
                    let ss = circuit_steady_state(&p, r.truncation)?;
                    Ok((r, mode_populations(&ss.rho, Cavity::A)?))
                });
                let table = solve_amplitudes(&p);
                let drive_warning = table.as_ref().is_ok_and(|t| t.drive_warning);
                CompareRow {
                    k,
                    quantum,
                    table: table.map(|t| occupations(&t)),
                    collective: solve_amplitudes_with(&p, LossModel::CollectiveDissipator).map(|t| occupations(&t)),
                    drive_warning,
                    params: p,
                }
            })
            .collect();
        let g2 = |o: &Occupations| g2_from_occupations(o.p1, o.p2).ok().map(num).unwrap_or_default();
        for r in rows {
            let h = out.point(&r.params, &g2_key(s, Cavity::A));
            let at = format!("K={:?}", r.k);
            let (q, pops) = match r.quantum {
                Ok(x) => x,
                Err(e) => {
                    out.fail(&t.name, at, h, e);
                    continue;
                }
            };
            let (table, collective) = match (r.table, r.collective) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    out.fail(&t.name, at, h, e);
                    continue;
                }
            };
            t.rows.push(vec![
                format!("{:?}", r.k),
                num(q.g2),
                g2(&table),
                g2_closed_form(&r.params, r.k).ok().map(num).unwrap_or_default(),
                g2(&collective),
                num(pops.get(1).copied().unwrap_or(0.0)),
                num(pops.get(2).copied().unwrap_or(0.0)),
                num(table.p1),
                num(table.p2),
                num(collective.p1),
                num(collective.p2),
                num(first_order_p1(&r.params)),
                r.drive_warning.to_string(),
                h,
            ]);
        }
        t.plot = Some(PlotSpec { x: 0, y: vec![1, 2, 3, 4], log_y: true, markers: false });
        out.tables.push(t);
    }
}

fn validate(out: &mut RunOutput) {
    let checks = run_all();
    let sections = diagnostics();
    out.criteria_failed = checks.iter().filter(|c| !c.passed).count();
    let mut t = Table::new("validation".into(), vec!["criterion", "name", "passed"]);
    for c in &checks {
        t.rows.push(vec![c.id.to_string(), c.name.to_string(), c.passed.to_string()]);
    }
    out.tables.push(t);
    out.report = Some(render_report(&checks, &sections));
}
