use cfnet::c64;
use cfnet::fock::{FockOperator, ModeSpace};
use cfnet::slh::{direct_feedback, series, SlhTriple};
use cfnet::validation::random_triple;
use faer::Mat;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn operator(space: &ModeSpace, entries: &[(f64, f64)]) -> FockOperator {
    let n = space.total_dim();
    FockOperator::from_matrix(space.clone(), Mat::from_fn(n, n, |i, j| {
        let (re, im) = entries[(i * n + j) % entries.len()];
        c64::new(re, im)
    }))
    .unwrap()
}

fn entries(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_reverses_products(x in entries(36), y in entries(36)) {
        let s = ModeSpace::two_mode(2, 3).unwrap();
        let (a, b) = (operator(&s, &x), operator(&s, &y));
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        prop_assert_eq!(a.adjoint().adjoint().max_abs_diff(&a).unwrap(), 0.0);
    }

    #[test]
    fn embedding_is_a_homomorphism(x in entries(9), y in entries(9), mode in 0usize..2) {
        let s = ModeSpace::two_mode(3, 3).unwrap();
        let local = |e: &[(f64, f64)]| Mat::from_fn(3, 3, |i, j| c64::new(e[3 * i + j].0, e[3 * i + j].1));
        let (mx, my) = (local(&x), local(&y));
        let product = FockOperator::embed(&s, mode, &(&mx * &my)).unwrap();
        let separate = &FockOperator::embed(&s, mode, &mx).unwrap() * &FockOperator::embed(&s, mode, &my).unwrap();
        prop_assert!(product.max_abs_diff(&separate).unwrap() < 1e-12);
    }

    #[test]
    fn different_modes_commute(x in entries(4), y in entries(9)) {
        let s = ModeSpace::two_mode(2, 3).unwrap();
        let ea = FockOperator::embed(&s, 0, &Mat::from_fn(2, 2, |i, j| c64::new(x[2 * i + j].0, x[2 * i + j].1))).unwrap();
        let ec = FockOperator::embed(&s, 1, &Mat::from_fn(3, 3, |i, j| c64::new(y[3 * i + j].0, y[3 * i + j].1))).unwrap();
        prop_assert!(ea.commutator(&ec).unwrap().norm() < 1e-12);
    }

    #[test]
    fn occupation_index_roundtrip(da in 2usize..6, dc in 2usize..6, k in 0usize..1000) {
        let s = ModeSpace::two_mode(da, dc).unwrap();
        let idx = k % s.total_dim();
        prop_assert_eq!(s.index_of(&s.occupations(idx)).unwrap(), idx);
    }

    #[test]
    fn series_is_associative_and_preserves_structure(seed in any::<u64>(), channels in 1usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = ModeSpace::two_mode(2, 2).unwrap();
        let g: Vec<SlhTriple> = (0..3).map(|_| random_triple(&mut rng, &s, channels)).collect();
        let left = series(&series(&g[0], &g[1]).unwrap(), &g[2]).unwrap();
        let right = series(&g[0], &series(&g[1], &g[2]).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
        prop_assert!(left.unitarity_error() < 1e-12);
        prop_assert!(left.hamiltonian().hermiticity_error() < 1e-12);
    }

    #[test]
    fn feedback_equals_cascade_into_own_coupling(seed in any::<u64>(), channels in 1usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = ModeSpace::two_mode(2, 2).unwrap();
        let g = random_triple(&mut rng, &s, channels);
        let echo = SlhTriple::new(g.scattering().clone(), g.coupling().to_vec(), FockOperator::zeros(&s)).unwrap();
        let fb = direct_feedback(&g).unwrap();
        let cascade = series(&g, &echo).unwrap();
        prop_assert!(fb.max_abs_diff(&cascade).unwrap() < 1e-12);
    }
}

#[test]
fn identity_is_a_two_sided_unit() {
    let mut rng = StdRng::seed_from_u64(7);
    let s = ModeSpace::two_mode(2, 3).unwrap();
    let g = random_triple(&mut rng, &s, 2);
    let id = SlhTriple::identity(&s, 2).unwrap();
    assert!(series(&id, &g).unwrap().max_abs_diff(&g).unwrap() < 1e-15);
    assert!(series(&g, &id).unwrap().max_abs_diff(&g).unwrap() < 1e-15);
}
