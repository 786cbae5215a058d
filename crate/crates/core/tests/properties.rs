use moco_core::cones::brute_lmo;
use moco_core::sdp::{
    adjoint_dense, sketch_update, DenseMeasurements, MeasurementOperator, SketchState,
};
use moco_core::vector::dot;
use moco_core::{delta_schedule, solve, Cone, ConicProgram, MomentumMode, Quadratic, SolverConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn cone_and_gradient() -> impl Strategy<Value = (Cone, Vec<f64>)> {
    prop_oneof![
        (1usize..8).prop_flat_map(|d| (
            Just(Cone::Orthant(d)),
            prop::collection::vec(-5.0..5.0f64, d)
        )),
        (1usize..8).prop_flat_map(|d| (
            Just(Cone::SecondOrder(d)),
            prop::collection::vec(-5.0..5.0f64, d)
        )),
        (1usize..5).prop_flat_map(|n| (
            Just(Cone::PsdDense(n)),
            prop::collection::vec(-5.0..5.0f64, n * n)
        )),
        (2usize..6).prop_flat_map(|n| (
            Just(Cone::PsdOperator(n)),
            prop::collection::vec(-5.0..5.0f64, n * n)
        )),
    ]
    .prop_map(|(cone, mut g)| {
        if let Cone::PsdDense(n) | Cone::PsdOperator(n) = cone {
            let m = DMatrix::from_column_slice(n, n, &g);
            let s = (&m + m.transpose()) * 0.5;
            g = s.as_slice().to_vec();
        }
        (cone, g)
    })
}

proptest! {
    #[test]
    fn lmo_is_feasible_and_normalized((cone, g) in cone_and_gradient()) {
        let lmo = cone.lmo(&g).unwrap();
        prop_assert!(cone.contains(&lmo.v));
        let nrm = cone.norm(&lmo.v).unwrap();
        prop_assert!(nrm <= 1.0 + 1e-9);
        prop_assert!(nrm < 1e-12 || (nrm - 1.0).abs() <= 1e-9);
        prop_assert!((dot(&g, &lmo.v) - lmo.value).abs() <= 1e-8 * (1.0 + lmo.value.abs()));
    }

    #[test]
    fn lmo_value_is_minus_dual_distance((cone, g) in cone_and_gradient()) {
        let lmo = cone.lmo(&g).unwrap();
        let dist = cone.dual_distance(&g).unwrap();
        prop_assert!((lmo.value + dist).abs() <= 1e-7 * (1.0 + dist), "{} vs {}", lmo.value, dist);
    }

    #[test]
    fn cones_are_self_dual((cone, g) in cone_and_gradient()) {
        // g ∈ K  ⇔  dist(g, K*) = 0  ⇔  the LMO returns 0
        let dist = cone.dual_distance(&g).unwrap();
        if cone.contains(&g) {
            prop_assert!(dist <= 1e-8);
        } else {
            prop_assert!(dist > 0.0);
        }
    }

    #[test]
    fn brute_force_never_beats_lmo(d in 1usize..4, g in prop::collection::vec(-3.0..3.0f64, 3)) {
        for cone in [Cone::Orthant(d), Cone::SecondOrder(d)] {
            let exact = cone.lmo(&g[..d]).unwrap();
            let brute = brute_lmo(&cone, &g[..d], 2000).unwrap();
            prop_assert!(exact.value <= brute.value + 1e-12);
        }
    }

    #[test]
    fn momentum_weights_average(k in 0usize..10_000) {
        let d = delta_schedule(k, MomentumMode::Moco);
        prop_assert!(d > 0.0 && d <= 1.0);
        prop_assert_eq!(delta_schedule(k, MomentumMode::Cd), 1.0);
    }

    #[test]
    fn adjoint_identity(
        n in 2usize..6,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mats: Vec<DMatrix<f64>> = (0..4)
            .map(|_| {
                let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                (&a + a.transpose()) * 0.5
            })
            .collect();
        let op = DenseMeasurements::new(n, mats);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; 4];
        op.gram(&u, &mut g);
        let mut gu = vec![0.0; n];
        op.adjoint_matvec(&a, &u, &mut gu);
        // ⟨G(uuᵀ), a⟩ = uᵀ G*(a) u
        prop_assert!((dot(&g, &a) - dot(&u, &gu)).abs() <= 1e-12);
        let dense = adjoint_dense(&op, &a);
        prop_assert!((&dense - dense.transpose()).norm() <= 1e-12);
    }

    #[test]
    fn sketch_follows_dense_iterate(
        steps in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64, prop::collection::vec(-1.0..1.0f64, 5)), 1..40),
        seed in any::<u64>(),
    ) {
        let mut s = SketchState::new(5, 3, seed);
        let mut x = DMatrix::<f64>::zeros(5, 5);
        for (eta, theta, q) in &steps {
            sketch_update(&mut s, *eta, *theta, q);
            let qv = DVector::from_column_slice(q);
            x = x * *eta + &qv * qv.transpose() * *theta;
        }
        let diff = (&x * s.omega() - s.sketch()).norm();
        prop_assert!(diff <= 1e-10 * (1.0 + x.norm() * s.omega().norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn orthant_solutions_satisfy_kkt(
        q_seed in any::<u64>(),
        d in 2usize..6,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(q_seed);
        let a = DMatrix::<f64>::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let q = &a * a.transpose() + DMatrix::identity(d, d);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = Quadratic::new(q.as_slice().to_vec(), b, 0.0);
        let p = ConicProgram::new(f, Cone::Orthant(d)).unwrap();
        let cfg = SolverConfig { max_iters: 3000, tol_eps: 1e-14, ..SolverConfig::default() };
        let out = solve(&p, &cfg).unwrap();
        let (cs, dual_res) = moco_core::kkt_residuals(&p, &out.final_point).unwrap();
        prop_assert!(out.final_point.iter().all(|v| *v >= 0.0));
        prop_assert!(dual_res <= 1e-4, "{dual_res}");
        prop_assert!(cs.abs() <= 1e-6, "{cs}");
    }
}
