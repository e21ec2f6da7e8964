//! Acceptance checks and the diagnostic report shared by the test suite and
//! the command-line `validate` command.

use std::fmt::Write as _;
use std::time::Instant;

use faer::{c64, Mat};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::circuit::{
    build_circuit, collective_coupling, kerr_from_qubit, linear_drift, rotating_frame_hamiltonian, CircuitParams,
};
use crate::error::Result;
use crate::fock::{FockOperator, ModeSpace};
use crate::quantum::{
    build_liouvillian, circuit_liouvillian, photon_statistics_for_mode, solve_g2, steady_state, Cavity,
    TruncationPolicy,
};
use crate::semiclassical::{
    drive_sweep_with, hysteresis, intensity_cubic_residual, reduced_rates, MeanFieldOptions, P1Form, Regime,
};
use crate::slh::{series, SlhTriple};
use crate::weak_drive::{
    first_order_p1, g2_closed_form, g2_from_occupations, leading_order_occupations, occupations, printed_fixture,
    solve_amplitudes, solve_amplitudes_with, LossModel,
};

/// Seed for every randomized draw in the suite.
pub const SEED: u64 = 0x5eed_c0de;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn outcome(id: usize, name: &'static str, start: Instant, r: Result<(bool, String)>) -> CheckOutcome {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// χ=10, Δ_s=50, γ=2, γ_f=2.5, κ=1, ε=0.1, K=1.
pub fn fig4_params() -> CircuitParams {
    CircuitParams {
        gamma: 2.0,
        gamma_f: 2.5,
        kappa: 1.0,
        chi: 10.0,
        delta_s: 50.0,
        delta: 0.0,
        epsilon: 0.1,
        qubit: None,
    }
}

/// γ=6, γ_f=8, κ=3, χ=10, Δ_s=100, Δ=4.9.
pub fn fig3_params() -> CircuitParams {
    CircuitParams {
        gamma: 6.0,
        gamma_f: 8.0,
        kappa: 3.0,
        chi: 10.0,
        delta_s: 100.0,
        delta: 4.9,
        epsilon: 0.0,
        qubit: None,
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn rel_diff(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().min(y.abs())
}

/// Worst pairwise relative difference between quantum, weak-drive table and
/// closed-form g2 over the grid, with the K at which it occurs.
pub fn triangle_deviation(p: &CircuitParams, k_grid: &[f64]) -> Result<(f64, f64)> {
    let mut worst = (0.0, f64::NAN);
    for &k in k_grid {
        let q = p.clone().with_k(k);
        let quantum = solve_g2(&q, Cavity::A, &TruncationPolicy::default())?.g2;
        let o = occupations(&solve_amplitudes(&q)?);
        let table = g2_from_occupations(o.p1, o.p2)?;
        let closed = g2_closed_form(&q, k)?;
        let d = rel_diff(quantum, table).max(rel_diff(quantum, closed)).max(rel_diff(table, closed));
        if d > worst.0 {
            worst = (d, k);
        }
    }
    Ok(worst)
}

pub fn criterion_1() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let grid = linspace(0.5, 1.5, 21);
        let (d1, k1) = triangle_deviation(&fig4_params(), &grid)?;
        let (d2, k2) = triangle_deviation(&fig4_params().with_epsilon(0.01), &grid)?;
        let runtime = start.elapsed().as_secs_f64();
        let ok = d1 < 0.20 && d2 < 0.05 && runtime < 120.0;
        Ok((
            ok,
            format!(
                "eps=0.1: worst pairwise {:.2}% at K={k1:.2} (limit 20%); eps=0.01: worst {:.2}% at K={k2:.2} (limit 5%)",
                100.0 * d1,
                100.0 * d2
            ),
        ))
    })();
    outcome(1, "triangle consistency", start, r)
}

/// Grid minimum of quantum g2 over `k_grid`, as `(K, g2)`.
fn g2_minimum(p: &CircuitParams, k_grid: &[f64], cavity: Cavity) -> Result<((f64, f64), Vec<f64>)> {
    let mut values = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        values.push(solve_g2(&p.clone().with_k(k), cavity, &TruncationPolicy::default())?.g2);
    }
    let (i, &g) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty grid");
    Ok(((k_grid[i], g), values))
}

pub fn criterion_2() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let grid = linspace(0.0, 3.0, 31);
        let step = grid[1] - grid[0];
        let k1 = grid.iter().position(|k| (k - 1.0).abs() < 1e-12).expect("K=1 on grid");
        let mut ok = true;
        let mut detail = String::new();
        for ds in [50.0, 10.0] {
            let ((kmin, gmin), values) = g2_minimum(&fig4_params().with_delta_s(ds), &grid, Cavity::A)?;
            let at_one = values[k1];
            let pass = (kmin - 1.0).abs() <= step + 1e-12 && at_one < 1.0;
            ok &= pass;
            let _ = write!(detail, "Ds={ds}: min g2={gmin:.3e} at K={kmin:.2}, g2(K=1)={at_one:.3e}; ");
        }
        Ok((ok, detail.trim_end_matches("; ").to_string()))
    })();
    outcome(2, "antibunching dip at K=1", start, r)
}

pub fn criterion_3() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let p = fig4_params().with_delta_s(10.0).with_k(2.0);
        let q = solve_g2(&p, Cavity::A, &TruncationPolicy::default())?;
        let closed = g2_closed_form(&p, 2.0)?;
        Ok((q.g2 < 1.0, format!("Ds/chi=1, K=2: quantum g2={:.4} (closed form, not asserted: {closed:.4})", q.g2)))
    })();
    outcome(3, "two-photon resonance blockade", start, r)
}

pub fn criterion_4() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let mut ok = true;
        let mut detail = String::new();
        for ds in [10.0, 30.0, 50.0] {
            let p = fig4_params().with_delta_s(ds).with_k(1.0);
            let weak = solve_g2(&p.clone().with_epsilon(0.1), Cavity::A, &TruncationPolicy::default())?;
            let strong = solve_g2(&p.with_epsilon(2.0), Cavity::A, &TruncationPolicy::default())?;
            let near = (strong.g2 - 1.0).abs() <= 0.15;
            let trend = (strong.g2 - 1.0).abs() < (weak.g2 - 1.0).abs();
            ok &= near && trend;
            let _ = write!(
                detail,
                "Ds={ds}: g2(0.1)={:.4}, g2(2)={:.4} [within 0.15: {}, trend: {}]; ",
                weak.g2,
                strong.g2,
                if near { "yes" } else { "no" },
                if trend { "yes" } else { "no" }
            );
        }
        Ok((ok, detail.trim_end_matches("; ").to_string()))
    })();
    outcome(4, "classical limit with growing drive", start, r)
}

/// ε grid for the bistability scan.
pub fn bistability_grid() -> Vec<f64> {
    linspace(0.0, 1.5, 301)
}

pub fn criterion_5() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let p = fig3_params();
        let grid = bistability_grid();
        let resolution = grid[1] - grid[0];
        let printed = MeanFieldOptions::default();
        let consistent = MeanFieldOptions { p1_form: P1Form::Consistent, ..Default::default() };
        let mut ok = true;
        let mut detail = String::new();

        let rates = reduced_rates(&p, P1Form::Printed)?;
        let anchors = (rates.p1 - 1.337).abs() < 1e-3 && (rates.p2 - 5.104).abs() < 1e-3;
        ok &= anchors;
        let _ = write!(detail, "p1={:.4}, p2={:.4}; ", rates.p1, rates.p2);

        // Window, onset and threshold use the printed p1. Stability labels and
        // hysteresis are statements about fixed points of the amplitude
        // equations, which only the consistent p1 produces.
        let mut consistent_window = None;
        for (label, opts) in [("printed", printed), ("consistent", consistent)] {
            let sweep = drive_sweep_with(&p, &grid, &opts)?;
            let Some((lo, hi)) = sweep.window else {
                ok = false;
                let _ = write!(detail, "{label}: no 3-root window; ");
                continue;
            };
            let inside: Vec<_> = sweep.rows.iter().filter(|r| r.positive_roots() == 3).collect();
            let classified = inside.iter().all(|r| r.stable_roots() == 2);
            let contiguous = sweep
                .rows
                .iter()
                .filter(|r| r.epsilon >= lo && r.epsilon <= hi)
                .all(|r| r.positive_roots() == 3);
            // no window point may fall below the threshold by more than one grid step
            let onset_ok = (lo + resolution).powi(2) > sweep.threshold_eps_sq;
            let regime_ok = inside.iter().all(|r| r.regime == Regime::BistableAtThisDrive);
            if label == "printed" {
                ok &= contiguous && onset_ok && regime_ok;
            } else {
                ok &= contiguous && classified;
                consistent_window = Some((lo, hi));
            }
            let _ = write!(
                detail,
                "{label}: window eps^2 in [{:.3}, {:.3}], threshold {:.3}, 2 stable + 1 unstable throughout: {}; ",
                lo * lo,
                hi * hi,
                sweep.threshold_eps_sq,
                if classified { "yes" } else { "no" }
            );
        }

        if let Some((lo, hi)) = consistent_window {
            let hgrid = linspace(0.5, 1.25, 76);
            let h = hysteresis(&p, &hgrid)?;
            let mut worst_outside = 0.0f64;
            let mut least_inside = f64::INFINITY;
            for (eps, gap) in h.gaps() {
                if eps >= lo - 1e-12 && eps <= hi + 1e-12 {
                    least_inside = least_inside.min(gap);
                } else if eps < lo - resolution || eps > hi + resolution {
                    worst_outside = worst_outside.max(gap);
                }
            }
            let traces = least_inside > 1e-6 && worst_outside <= 1e-6;
            ok &= traces;
            let _ = write!(
                detail,
                "hysteresis gap inside >= {least_inside:.3e}, outside <= {worst_outside:.1e}"
            );
        }
        let runtime = start.elapsed().as_secs_f64();
        ok &= runtime < 60.0;
        Ok((ok, detail))
    })();
    outcome(5, "bistability window and hysteresis", start, r)
}

pub fn criterion_6() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let p = CircuitParams { delta: 1.0, ..fig3_params() };
        let sweep = drive_sweep_with(&p, &bistability_grid(), &MeanFieldOptions::default())?;
        let mono = sweep.p2 <= 3f64.sqrt() * sweep.p1;
        let single = sweep.rows.iter().filter(|r| r.epsilon > 0.0).all(|r| r.positive_roots() == 1);
        let regime = sweep.rows.iter().all(|r| r.regime == Regime::Monostable);
        Ok((
            mono && single && regime,
            format!(
                "Delta=1: p2={:.3} vs sqrt3*p1={:.3}; one positive root at every eps>0: {}",
                sweep.p2,
                3f64.sqrt() * sweep.p1,
                if single { "yes" } else { "no" }
            ),
        ))
    })();
    outcome(6, "monostable control", start, r)
}

/// `(g, Ω, Δ_qT grid)` for the Kerr-strength trend, descending in `Δ_qT`.
pub fn qubit_grid() -> (f64, f64, Vec<f64>) {
    (2000.0, 2000.0, vec![40000.0, 35000.0, 30000.0, 25000.0, 20000.0])
}

pub fn criterion_7() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let (g, omega, grid) = qubit_grid();
        let base = fig4_params().with_k(1.0);
        let mut values = Vec::new();
        let mut detail = String::new();
        for &dq in &grid {
            let kerr = kerr_from_qubit(g, omega, dq)?;
            let mut p = base.clone();
            p.chi = kerr.chi;
            p = p.with_k(1.0);
            let g2 = solve_g2(&p, Cavity::A, &TruncationPolicy::default())?.g2;
            let _ = write!(detail, "DqT={dq}: chi={:.3} g2={g2:.4e}; ", kerr.chi);
            values.push(g2);
        }
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        Ok((decreasing, detail.trim_end_matches("; ").to_string()))
    })();
    outcome(7, "Kerr-strength trend", start, r)
}

fn random_unitary(rng: &mut StdRng, n: usize) -> Mat<c64> {
    // Gram–Schmidt on a random complex matrix
    let mut m = Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    for j in 0..n {
        for k in 0..j {
            let mut dot = c64::new(0.0, 0.0);
            for i in 0..n {
                dot += m[(i, k)].conj() * m[(i, j)];
            }
            for i in 0..n {
                let v = m[(i, k)];
                m[(i, j)] -= dot * v;
            }
        }
        let norm = (0..n).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            m[(i, j)] /= norm;
        }
    }
    m
}

fn random_operator(rng: &mut StdRng, space: &ModeSpace) -> FockOperator {
    let n = space.total_dim();
    let m = Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    FockOperator::from_matrix(space.clone(), m).expect("dimensions match")
}

fn random_hermitian(rng: &mut StdRng, space: &ModeSpace) -> FockOperator {
    let x = random_operator(rng, space);
    (&x + &x.adjoint()).scale(c64::new(0.5, 0.0))
}

/// A random SLH triple on `space` with `channels` channels.
pub fn random_triple(rng: &mut StdRng, space: &ModeSpace, channels: usize) -> SlhTriple {
    let s = random_unitary(rng, channels);
    let l = (0..channels).map(|_| random_operator(rng, space)).collect();
    SlhTriple::new(s, l, random_hermitian(rng, space)).expect("random triple is valid")
}

/// Random circuit parameters in a range where the truncation `(3,3)` is
/// adequate for the steady-state invariants.
pub fn random_params(rng: &mut StdRng) -> CircuitParams {
    CircuitParams {
        gamma: rng.gen_range(0.0..5.0),
        gamma_f: rng.gen_range(0.0..5.0),
        kappa: rng.gen_range(0.2..3.0),
        chi: rng.gen_range(-10.0..10.0),
        delta_s: rng.gen_range(-50.0..50.0),
        delta: rng.gen_range(-10.0..10.0),
        epsilon: rng.gen_range(0.0..0.5),
        qubit: None,
    }
}

/// χ = 0 reference used by the algebraic suite: a linear network, so g2 = 1.
pub fn linear_network_g2() -> Result<f64> {
    let p = CircuitParams { chi: 0.0, ..fig4_params() };
    Ok(solve_g2(&p, Cavity::A, &TruncationPolicy::fixed([6, 6]))?.g2)
}

/// Steady state of a single damped mode in a thermal bath with occupation `nth`.
pub fn thermal_g2(nth: f64, dim: usize) -> Result<f64> {
    let s = ModeSpace::new(&[dim])?;
    let a = FockOperator::annihilator(&s, 0)?;
    let jumps = [&a * (nth + 1.0).sqrt(), &a.adjoint() * nth.sqrt()];
    let ss = steady_state(&build_liouvillian(&FockOperator::number(&s, 0)?, &jumps)?)?;
    Ok(photon_statistics_for_mode(&ss.rho, 0)?.g2)
}

/// Linear cavity `H = Δc†c − ε(c† + c)`, `L = √κ c`: returns
/// `(⟨c⟩, ⟨c†c⟩, α)` with `α = iε/(iΔ + κ/2)`.
pub fn linear_cavity(delta: f64, kappa: f64, eps: f64, dim: usize) -> Result<(c64, f64, c64)> {
    let s = ModeSpace::new(&[dim])?;
    let c = FockOperator::annihilator(&s, 0)?;
    let h = &(&FockOperator::number(&s, 0)? * delta) - &(&(&c + &c.adjoint()) * eps);
    let ss = steady_state(&build_liouvillian(&h, &[&c * kappa.sqrt()])?)?;
    let mean = crate::fock::expectation(&ss.rho, &c)?;
    let n = crate::fock::expectation(&ss.rho, &FockOperator::number(&s, 0)?)?.re;
    let alpha = c64::new(0.0, eps) / c64::new(0.5 * kappa, delta);
    Ok((mean, n, alpha))
}

pub fn criterion_8() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let mut rng = StdRng::seed_from_u64(SEED);
        let mut detail = String::new();
        let mut ok = true;

        // SLH algebra
        let space = ModeSpace::two_mode(2, 2)?;
        let (mut assoc, mut unit, mut herm) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..50 {
            let ch = rng.gen_range(1..=2);
            let (g1, g2, g3) =
                (random_triple(&mut rng, &space, ch), random_triple(&mut rng, &space, ch), random_triple(&mut rng, &space, ch));
            let left = series(&series(&g1, &g2)?, &g3)?;
            let right = series(&g1, &series(&g2, &g3)?)?;
            assoc = assoc.max(left.max_abs_diff(&right)?);
            unit = unit.max(left.unitarity_error());
            herm = herm.max(left.hamiltonian().hermiticity_error());
        }
        let slh_ok = assoc < 1e-12 && unit < 1e-12 && herm < 1e-12;
        ok &= slh_ok;
        let _ = write!(detail, "series assoc {assoc:.1e}, unitarity {unit:.1e}, hermiticity {herm:.1e}; ");

        // network assembly against the closed-form Hamiltonian and coupling
        let cspace = ModeSpace::two_mode(3, 3)?;
        let mut circuit = 0.0f64;
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let net = build_circuit(&p, &cspace)?;
            let h = rotating_frame_hamiltonian(&p, &cspace)?;
            let l = collective_coupling(&p, &cspace)?;
            circuit = circuit.max(net.hamiltonian().max_abs_diff(&h)?).max(net.coupling()[0].max_abs_diff(&l)?);
        }
        ok &= circuit < 1e-12;
        let _ = write!(detail, "build_circuit vs closed form {circuit:.1e}; ");

        // Liouvillian and steady-state invariants
        let mut trace = 0.0f64;
        let mut worst_ratio = 0.0f64;
        let mut min_eig = f64::INFINITY;
        let mut failures = 0usize;
        for _ in 0..100 {
            let p = random_params(&mut rng);
            let l = circuit_liouvillian(&p, &cspace)?;
            trace = trace.max(l.trace_preservation_error());
            match steady_state(&l) {
                Ok(ss) => {
                    worst_ratio = worst_ratio.max(ss.residual / ss.liouvillian_norm);
                    min_eig = min_eig.min(ss.min_eigenvalue);
                }
                Err(_) => failures += 1,
            }
        }
        ok &= trace < 1e-12 && failures == 0;
        let _ = write!(
            detail,
            "trace preservation {trace:.1e}, residual/|L| <= {worst_ratio:.1e}, min eig {min_eig:.1e}, failed draws {failures}; "
        );

        let lin = linear_network_g2()?;
        ok &= (lin - 1.0).abs() < 1e-4;
        let _ = write!(detail, "chi=0 g2 {lin:.6}; ");

        // [a, a†] = I − N|N−1⟩⟨N−1| on each mode
        let mut comm = 0.0f64;
        for mode in 0..2 {
            let a = FockOperator::annihilator(&cspace, mode)?;
            let lhs = a.commutator(&a.adjoint())?;
            let n = cspace.dims()[mode];
            let edge = Mat::from_fn(n, n, |i, j| {
                if i == j && i == n - 1 {
                    c64::new(n as f64, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            });
            let rhs = &FockOperator::identity(&cspace) - &FockOperator::embed(&cspace, mode, &edge)?;
            comm = comm.max(lhs.max_abs_diff(&rhs)?);
        }
        ok &= comm < 1e-12;
        let _ = write!(detail, "truncated commutator {comm:.1e}; ");

        let (mean, _, alpha) = linear_cavity(0.7, 1.0, 0.3, 16)?;
        let s = ModeSpace::new(&[16])?;
        let coh = {
            let c = FockOperator::annihilator(&s, 0)?;
            let h = &(&FockOperator::number(&s, 0)? * 0.7) - &(&(&c + &c.adjoint()) * 0.3);
            let ss = steady_state(&build_liouvillian(&h, &[c])?)?;
            photon_statistics_for_mode(&ss.rho, 0)?.g2
        };
        let fock = photon_statistics_for_mode(&FockOperator::projector(&s, &[1])?, 0)?.g2;
        let thermal = thermal_g2(1.0, 16)?;
        let anchors = (coh - 1.0).abs() < 1e-6 && fock == 0.0 && (thermal - 2.0).abs() < 0.02;
        ok &= anchors && (mean - alpha).norm() < 1e-8;
        let _ = write!(detail, "g2 anchors coherent {coh:.8}, Fock {fock}, thermal {thermal:.4}");

        let runtime = start.elapsed().as_secs_f64();
        ok &= runtime < 60.0;
        Ok((ok, detail))
    })();
    outcome(8, "algebraic suite", start, r)
}

pub fn criterion_9() -> CheckOutcome {
    let start = Instant::now();
    let r = (|| {
        let (mean, n, alpha) = linear_cavity(0.7, 1.0, 0.3, 16)?;
        let d1 = (mean - alpha).norm();
        let d2 = (n - alpha.norm_sqr()).abs();
        Ok((d1 < 1e-8 && d2 < 1e-8, format!("|<c> - alpha| = {d1:.1e}, |<n> - |alpha|^2| = {d2:.1e}")))
    })();
    outcome(9, "linear-cavity oracle", start, r)
}

/// Every criterion, in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportSection {
    pub title: &'static str,
    pub lines: Vec<String>,
}

/// Diagnostics that are reported but not asserted.
pub fn diagnostics() -> Vec<ReportSection> {
    vec![
        section("p1 expression", p1_forms()),
        section("mean-field drift from the network", drift_terms()),
        section("weak-drive leading orders", leading_orders()),
        section("weak-drive populations against the quantum steady state", populations()),
        section("closed form near K = 2", near_two()),
        section("printed amplitude equations", fixture()),
    ]
}

fn section(title: &'static str, r: Result<Vec<String>>) -> ReportSection {
    ReportSection { title, lines: r.unwrap_or_else(|e| vec![format!("error: {e}")]) }
}

fn p1_forms() -> Result<Vec<String>> {
    let p = fig3_params();
    let printed = reduced_rates(&p, P1Form::Printed)?;
    let consistent = reduced_rates(&p, P1Form::Consistent)?;
    let mut lines = vec![
        format!("printed factor (4*sqrt(g)+sqrt(gf))^2: p1 = {:.4}", printed.p1),
        format!("consistent factor (sqrt(g)+sqrt(gf))^2: p1 = {:.4}", consistent.p1),
        format!("p2 = {:.4}, |A0|^2/|C0|^2 = {:.4e}", printed.p2, printed.a0_ratio),
    ];
    // a root of the printed cubic is not a fixed point of the amplitude equations
    let eps = 0.9;
    let q = p.clone().with_epsilon(eps);
    for (label, form) in [("printed", P1Form::Printed), ("consistent", P1Form::Consistent)] {
        let res = crate::semiclassical::steady_roots_with(&q, &MeanFieldOptions { p1_form: form, ..Default::default() })?;
        let worst = res
            .roots
            .iter()
            .map(|r| crate::semiclassical::mean_field_rhs(&r.state, &q).norm())
            .fold(0.0, f64::max);
        let cubic = res
            .roots
            .iter()
            .map(|r| intensity_cubic_residual(r.x, q.chi, res.p1, res.p2, eps).abs())
            .fold(0.0, f64::max);
        lines.push(format!(
            "{label}: eps={eps}, {} roots, cubic residual {cubic:.1e}, |amplitude rhs| at roots {worst:.3e}",
            res.roots.len()
        ));
    }
    Ok(lines)
}

fn drift_terms() -> Result<Vec<String>> {
    let p = fig3_params().with_epsilon(0.7);
    let space = ModeSpace::two_mode(3, 3)?;
    let d = linear_drift(&build_circuit(&p, &space)?)?;
    let expected = [
        [c64::new(-0.5 * p.gamma_total(), -p.delta_s), c64::new(-(p.kappa * p.gamma_f).sqrt(), 0.0)],
        [c64::new(-(p.kappa * p.gamma).sqrt(), 0.0), c64::new(-0.5 * p.kappa, -p.delta)],
    ];
    let names = [["A <- A", "A <- C"], ["C <- A", "C <- C"]];
    let mut lines = Vec::new();
    for j in 0..2 {
        for k in 0..2 {
            lines.push(format!(
                "{}: network {:.6}, amplitude equations {:.6}, difference {:.1e}",
                names[j][k],
                d.matrix[j][k],
                expected[j][k],
                (d.matrix[j][k] - expected[j][k]).norm()
            ));
        }
    }
    lines.push(format!("drive on C: {:.6} (expected i*eps = {:.6})", d.forcing[1], c64::new(0.0, p.epsilon)));
    Ok(lines)
}

fn leading_orders() -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for k in [0.5, 1.0, 1.5] {
        let p = fig4_params().with_epsilon(0.01).with_k(k);
        let full = occupations(&solve_amplitudes(&p)?);
        let printed = leading_order_occupations(&p);
        let first = first_order_p1(&p);
        lines.push(format!(
            "K={k}: P1 full {:.4e}, printed leading order {:.4e} (ratio {:.3}), |G eps/(D~ Ds~)|^2 {:.4e} (ratio {:.4}); P2 full {:.4e}, printed {:.4e}",
            full.p1,
            printed.p1,
            printed.p1 / full.p1,
            first,
            first / full.p1,
            full.p2,
            printed.p2
        ));
    }
    Ok(lines)
}

fn populations() -> Result<Vec<String>> {
    let p = fig4_params().with_epsilon(0.05).with_k(1.0);
    let ss = crate::quantum::circuit_steady_state(&p, [4, 4])?;
    let pops = crate::quantum::mode_populations(&ss.rho, Cavity::A)?;
    let mut lines = vec![format!("quantum: P(n_a=1) = {:.4e}, P(n_a=2) = {:.4e}", pops[1], pops[2])];
    for (label, model) in [("complex detunings", LossModel::ComplexDetunings), ("collective dissipator", LossModel::CollectiveDissipator)] {
        let o = occupations(&solve_amplitudes_with(&p, model)?);
        lines.push(format!(
            "{label}: P1 = {:.4e} (ratio {:.4}), P2 = {:.4e} (ratio {:.4}), g2 = {:.4e}",
            o.p1,
            o.p1 / pops[1],
            o.p2,
            o.p2 / pops[2],
            g2_from_occupations(o.p1, o.p2)?
        ));
    }
    Ok(lines)
}

fn near_two() -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for ds in [50.0, 10.0] {
        for k in [1.8, 1.9, 2.0, 2.1, 2.2] {
            let p = fig4_params().with_delta_s(ds).with_k(k);
            let q = solve_g2(&p, Cavity::A, &TruncationPolicy::default())?;
            let closed = g2_closed_form(&p, k)?;
            lines.push(format!(
                "Ds={ds} K={k}: quantum {:.4e}, closed form {:.4e}, ratio {:.3}",
                q.g2,
                closed,
                closed / q.g2
            ));
        }
    }
    Ok(lines)
}

fn fixture() -> Result<Vec<String>> {
    let f = printed_fixture(&fig4_params().with_k(1.3))?;
    let mut lines: Vec<String> = f.rows.iter().map(|(l, d)| format!("{l}: max coefficient difference {d:.1e}")).collect();
    lines.push(format!("duplicated: {:?}; basis rows without a printed equation: {:?}", f.duplicated, f.missing_rows));
    Ok(lines)
}

/// Plain-text report: one line per criterion, then the diagnostics.
pub fn render_report(checks: &[CheckOutcome], sections: &[ReportSection]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(s, "{}", c.line());
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(s, "{passed}/{} criteria passed", checks.len());
    for sec in sections {
        let _ = writeln!(s, "\n## {}", sec.title);
        for l in &sec.lines {
            let _ = writeln!(s, "{l}");
        }
    }
    s
}
