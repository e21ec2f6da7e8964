use cfnet::fock::{expectation, FockOperator, ModeSpace};
use cfnet::quantum::{
    build_liouvillian, circuit_liouvillian, circuit_steady_state, drive_strength_sweep, k_delta_s_map, k_sweep,
    lindblad_rhs, photon_statistics, photon_statistics_for_mode, solve_g2, Cavity, TruncationPolicy, POSITIVITY_FLOOR,
};
use cfnet::validation::{fig4_params, linear_cavity, linear_network_g2, random_params, thermal_g2, SEED};
use cfnet::{c64, CircuitParams, Error};
use faer::Mat;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn fig4_steady_state_meets_invariants() {
    let ss = circuit_steady_state(&fig4_params(), [4, 4]).unwrap();
    assert!(ss.residual < 1e-9 * ss.liouvillian_norm.max(1.0));
    assert!(ss.trace_error < 1e-10);
    assert!(ss.hermiticity_error < 1e-10);
    assert!(ss.min_eigenvalue > POSITIVITY_FLOOR);
    let n = ss.mean_occupations();
    assert!(n.iter().all(|x| *x > 0.0 && *x < 1.0), "{n:?}");
}

#[test]
fn random_parameters_meet_invariants() {
    let mut rng = StdRng::seed_from_u64(SEED);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        if p.epsilon == 0.0 {
            continue;
        }
        let ss = circuit_steady_state(&p, [3, 3]).unwrap_or_else(|e| panic!("{p:?}: {e}"));
        assert!(ss.trace_error < 1e-10);
        assert!(ss.min_eigenvalue > POSITIVITY_FLOOR);
        let l = circuit_liouvillian(&p, &ModeSpace::two_mode(3, 3).unwrap()).unwrap();
        assert!(l.trace_preservation_error() < 1e-10 * l.norm().max(1.0));
    }
}

#[test]
fn superoperator_matches_operator_form() {
    let mut rng = StdRng::seed_from_u64(SEED ^ 1);
    let s = ModeSpace::two_mode(3, 2).unwrap();
    let p = CircuitParams { epsilon: 0.7, ..fig4_params() };
    let l = circuit_liouvillian(&p, &s).unwrap();
    let n = s.total_dim();
    let x = Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = FockOperator::from_matrix(s.clone(), &x * x.adjoint()).unwrap();
    let direct = lindblad_rhs(l.hamiltonian(), l.jumps(), &rho).unwrap();
    assert!(l.apply(&rho).unwrap().max_abs_diff(&direct).unwrap() < 1e-10 * l.norm());
}

#[test]
fn coherent_thermal_and_fock_anchors() {
    let (mean, n, alpha) = linear_cavity(0.7, 1.0, 0.3, 12).unwrap();
    assert!((mean - alpha).norm() < 1e-8);
    assert!((n - alpha.norm_sqr()).abs() < 1e-8);

    let g2 = thermal_g2(0.2, 30).unwrap();
    assert!((g2 - 2.0).abs() < 1e-3, "thermal g2 {g2}");

    let s = ModeSpace::new(&[6]).unwrap();
    for k in 2..5usize {
        let rho = FockOperator::projector(&s, &[k]).unwrap();
        let stats = photon_statistics_for_mode(&rho, 0).unwrap();
        assert!((stats.g2 - (k as f64 - 1.0) / k as f64).abs() < 1e-14);
        assert!((expectation(&rho, &FockOperator::number(&s, 0).unwrap()).unwrap().re - k as f64).abs() < 1e-14);
    }
}

#[test]
fn linear_network_is_coherent() {
    let g2 = linear_network_g2().unwrap();
    assert!((g2 - 1.0).abs() < 1e-4, "g2 {g2}");
}

#[test]
fn controller_cavity_is_antibunched_at_matching_detuning() {
    let grid: Vec<f64> = (0..11).map(|i| 0.5 + 0.1 * i as f64).collect();
    let rows = k_sweep(&fig4_params(), &grid, Cavity::C, &TruncationPolicy::fixed([4, 4])).unwrap();
    let g2: Vec<f64> = rows.iter().map(|r| r.result.as_ref().unwrap().g2).collect();
    let best = (0..g2.len()).min_by(|&i, &j| g2[i].total_cmp(&g2[j])).unwrap();
    assert!((grid[best] - 1.0).abs() < 1e-9, "minimum at K = {} ({g2:?})", grid[best]);
    assert!(g2[best] < 1.0);
}

#[test]
fn matching_line_is_antibunched_for_every_detuning() {
    let ds: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
    let rows = k_delta_s_map(&fig4_params(), &[1.0], &ds, Cavity::A, &TruncationPolicy::default()).unwrap();
    assert_eq!(rows.len(), ds.len());
    for r in &rows {
        let g = r.result.as_ref().unwrap();
        assert!(g.g2 < 1.0, "Δs {}: g2 {}", r.at.1, g.g2);
    }
}

#[test]
fn undriven_point_is_an_error_row() {
    let rows = drive_strength_sweep(&fig4_params(), &[0.0, 0.1], Cavity::A, &TruncationPolicy::fixed([3, 3]));
    assert!(matches!(rows[0].result, Err(Error::VacuumState(_))));
    assert!(rows[1].result.is_ok());
}

#[test]
fn k_sweep_needs_kerr() {
    let p = CircuitParams { chi: 0.0, ..fig4_params() };
    assert!(matches!(
        k_sweep(&p, &[1.0], Cavity::A, &TruncationPolicy::default()),
        Err(Error::InvalidParameter { field: "chi", .. })
    ));
}

#[test]
fn hitting_the_cap_is_flagged() {
    let policy = TruncationPolicy { max_per_mode: 4, ..TruncationPolicy::starting_at([4, 4]) };
    let r = solve_g2(&fig4_params(), Cavity::A, &policy).unwrap();
    assert!(!r.converged);
    assert_eq!(r.truncation, [4, 4]);

    let r = solve_g2(&fig4_params(), Cavity::A, &TruncationPolicy::default()).unwrap();
    assert!(r.converged);
    assert!(r.truncation_change < 0.01);
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let s = ModeSpace::new(&[2]).unwrap();
    let a = FockOperator::annihilator(&s, 0).unwrap();
    let ss = cfnet::quantum::steady_state(&build_liouvillian(&FockOperator::zeros(&s), &[a]).unwrap());
    let ss = ss.unwrap();
    assert!((ss.rho.get(0, 0).re - 1.0).abs() < 1e-12);
    let p = CircuitParams { epsilon: 0.0, ..fig4_params() };
    let vac = circuit_steady_state(&p, [3, 3]).unwrap();
    assert!(matches!(photon_statistics(&vac.rho, Cavity::A), Err(Error::VacuumState(_))));
}
