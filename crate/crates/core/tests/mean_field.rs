use cfnet::c64;
use cfnet::semiclassical::{
    drive_sweep_with, hysteresis, intensity_cubic_residual, mean_field_rhs, mean_field_rhs_with_phase, reduced_rates,
    relax, steady_roots_with, MeanFieldOptions, MeanFieldState, P1Form, RelaxOptions,
};
use cfnet::validation::{bistability_grid, fig3_params, linspace};
use cfnet::CircuitParams;
use proptest::prelude::*;

const CONSISTENT: MeanFieldOptions = MeanFieldOptions { p1_form: P1Form::Consistent, drive_phase: 0.0 };

fn discriminant(chi: f64, p1: f64, p2: f64, eps: f64) -> f64 {
    let (a, b, c, d) = (4.0 * chi * chi, -4.0 * p2 * chi, p1 * p1 + p2 * p2, -eps * eps);
    18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * a * c.powi(3) - 27.0 * a * a * d * d
}

fn scaled(p: &CircuitParams, s: f64) -> CircuitParams {
    CircuitParams {
        gamma: p.gamma * s,
        gamma_f: p.gamma_f * s,
        kappa: p.kappa * s,
        chi: p.chi * s,
        delta_s: p.delta_s * s,
        delta: p.delta * s,
        epsilon: p.epsilon * s,
        qubit: None,
    }
}

fn drive_params() -> impl Strategy<Value = CircuitParams> {
    (0.1..1.5f64).prop_map(|eps| fig3_params().with_epsilon(eps))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn consistent_roots_are_fixed_points(p in drive_params()) {
        let r = steady_roots_with(&p, &CONSISTENT).unwrap();
        prop_assert!(r.roots.len() == 1 || r.roots.len() == 3);
        for root in &r.roots {
            prop_assert!(mean_field_rhs(&root.state, &p).norm() < 1e-8);
            let resid = intensity_cubic_residual(root.x, p.chi, r.p1, r.p2, p.epsilon);
            prop_assert!(resid.abs() < 1e-9 * (p.epsilon * p.epsilon).max(1.0));
            let ratio = reduced_rates(&p, P1Form::Consistent).unwrap().a0_ratio;
            prop_assert!((root.a0_sq - ratio * root.x).abs() < 1e-10 * root.a0_sq.max(1e-12));
        }
    }

    #[test]
    fn drive_phase_only_rotates_the_state(p in drive_params(), phi in 0.0..std::f64::consts::TAU) {
        let r = steady_roots_with(&p, &CONSISTENT).unwrap();
        let rotated = steady_roots_with(&p, &MeanFieldOptions { drive_phase: phi, ..CONSISTENT }).unwrap();
        prop_assert_eq!(r.roots.len(), rotated.roots.len());
        let w = c64::from_polar(1.0, phi);
        for (x, y) in r.roots.iter().zip(&rotated.roots) {
            prop_assert!((x.x - y.x).abs() < 1e-10 * x.x.max(1e-12));
            prop_assert_eq!(x.stable, y.stable);
            let turned = MeanFieldState { a: x.state.a * w, c: x.state.c * w };
            prop_assert!(mean_field_rhs_with_phase(&turned, &p, phi).norm() < 1e-8);
        }
    }

    #[test]
    fn three_roots_exactly_when_discriminant_positive(eps in 0.0..1.5f64) {
        let p = fig3_params().with_epsilon(eps);
        for form in [P1Form::Printed, P1Form::Consistent] {
            let r = steady_roots_with(&p, &MeanFieldOptions { p1_form: form, drive_phase: 0.0 }).unwrap();
            let disc = discriminant(p.chi, r.p1, r.p2, eps);
            let scale = (p.chi.powi(4) * (r.p1 * r.p1 + r.p2 * r.p2).powi(3)).max(1.0);
            prop_assume!(disc.abs() > 1e-9 * scale);
            prop_assert_eq!(r.positive_roots() == 3, disc > 0.0);
        }
    }
}

#[test]
fn uniform_rescaling_leaves_intensity_unchanged() {
    for eps in [0.3, 0.8, 1.2] {
        let p = fig3_params().with_epsilon(eps);
        let base = steady_roots_with(&p, &CONSISTENT).unwrap();
        for s in [0.5, 2.0] {
            let r = steady_roots_with(&scaled(&p, s), &CONSISTENT).unwrap();
            assert_eq!(r.roots.len(), base.roots.len());
            for (x, y) in base.roots.iter().zip(&r.roots) {
                assert!((x.x - y.x).abs() < 1e-9 * x.x, "eps {eps} s {s}: {} vs {}", x.x, y.x);
                assert_eq!(x.stable, y.stable);
            }
        }
    }
}

#[test]
fn window_edges_match_discriminant_sign_changes() {
    let grid = bistability_grid();
    let sweep = drive_sweep_with(&fig3_params(), &grid, &CONSISTENT).unwrap();
    let (lo, hi) = sweep.window.expect("Fig 3 parameters are bistable");
    let inside: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&e| discriminant(fig3_params().chi, sweep.p1, sweep.p2, e) > 0.0)
        .collect();
    assert_eq!(inside.first().copied(), Some(lo));
    assert_eq!(inside.last().copied(), Some(hi));
}

#[test]
fn monostable_hysteresis_traces_coincide() {
    let p = CircuitParams { delta: 0.0, ..fig3_params() };
    let rates = reduced_rates(&p, P1Form::Consistent).unwrap();
    assert!(rates.p2 <= 3f64.sqrt() * rates.p1.abs());
    let h = hysteresis(&p, &linspace(0.05, 1.5, 30)).unwrap();
    for (eps, gap) in h.gaps() {
        assert!(gap <= 1e-6, "eps {eps}: gap {gap}");
    }
}

#[test]
fn perturbed_unstable_root_flows_to_a_stable_one() {
    let p = fig3_params().with_epsilon(0.9);
    let r = steady_roots_with(&p, &CONSISTENT).unwrap();
    assert_eq!(r.roots.len(), 3);
    let unstable = r.roots.iter().find(|x| !x.stable).expect("middle branch is unstable");
    let kick = MeanFieldState { a: unstable.state.a * 1.01, c: unstable.state.c * 1.01 };
    let end = relax(&p, kick, &RelaxOptions::default()).unwrap();
    let hit = r.roots.iter().filter(|x| x.stable).any(|x| (x.x - end.state.c.norm_sqr()).abs() < 1e-6 * x.x.max(1e-9));
    assert!(hit, "relaxed to |C|² = {}", end.state.c.norm_sqr());
}

#[test]
fn hysteresis_points_sit_on_stable_roots() {
    let p = fig3_params();
    let h = hysteresis(&p, &linspace(0.5, 1.25, 31)).unwrap();
    for pt in h.up.iter().chain(&h.down) {
        let r = steady_roots_with(&p.clone().with_epsilon(pt.epsilon), &CONSISTENT).unwrap();
        let hit = r.roots.iter().filter(|x| x.stable).any(|x| (x.x - pt.c0_sq).abs() < 1e-6 * x.x.max(1e-9));
        assert!(hit, "eps {}: |C|² = {}", pt.epsilon, pt.c0_sq);
    }
    assert!(h.gaps().iter().any(|(_, g)| *g > 1e-6));
}

#[test]
fn printed_and_consistent_differ_only_in_p1() {
    let p = fig3_params();
    let a = reduced_rates(&p, P1Form::Printed).unwrap();
    let b = reduced_rates(&p, P1Form::Consistent).unwrap();
    assert_eq!(a.p2, b.p2);
    assert_eq!(a.a0_ratio, b.a0_ratio);
    assert!((a.p1 - b.p1).abs() > 0.1);
}
