use proptest::prelude::*;
use qsdyn::eigensolver::eigen3;
use qsdyn::equilibria::{
    classify_analytic, critical_mutation_rates, eigen_unstable_dominance, existing_fixed_points, fixed_point,
    fixed_point_full_coexistence, fixed_point_mutator_coexistence, EquilibriumError, EquilibriumKind, Stability,
};
use qsdyn::model::{jacobian, vector_field, ModelParams};

fn params() -> impl Strategy<Value = ModelParams> {
    (0.01..3.0f64, 0.01..3.0f64, 0.01..3.0f64, 0.01..0.99f64, 0.01..0.99f64)
        .prop_map(|(f0, f1, f2, q, qp)| ModelParams::new(f0, f1, f2, q, qp).unwrap())
}

fn products(f0q: f64, f1qp: f64) -> ModelParams {
    ModelParams::from_products(f0q, f1qp, 0.42, 0.7, 0.3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn existing_points_are_stationary_simplex_points(p in params()) {
        for e in existing_fixed_points(&p) {
            let r = vector_field(&p, &e.coords).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(r <= 1e-10, "{:?} residual {r}", e.kind);
            prop_assert!((e.coords.sum() - 1.0).abs() <= 1e-12);
            for c in e.coords.to_array() {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn full_coexistence_eigenvalues_satisfy_jacobian_identities(p in params()) {
        let Ok(e) = fixed_point_full_coexistence(&p) else { return Ok(()) };
        let a = jacobian(&p, &e.coords);
        let direct = eigen3(&a);
        for (x, y) in e.eigenvalues.iter().zip(&direct.values) {
            prop_assert!((x - y).norm() <= 1e-9 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn at_most_one_attractor(p in params()) {
        let attractors = existing_fixed_points(&p).into_iter().filter(|e| e.stability == Stability::Attractor).count();
        prop_assert!(attractors <= 1);
    }
}

#[test]
fn transcritical_exchange_along_f1qp() {
    // the line f0Q = 0.63 crosses f0Q = f1Qp at 0.63 with both above f2
    let below = products(0.63, 0.62);
    let above = products(0.63, 0.64);
    let sign_pattern = |p: &ModelParams, kind| {
        let e = fixed_point(p, kind).unwrap();
        e.eigenvalues.iter().map(|v| v.re > 0.0).collect::<Vec<_>>()
    };
    for kind in [EquilibriumKind::FullCoexistence, EquilibriumKind::MutatorCoexistence] {
        let (a, b) = (sign_pattern(&below, kind), sign_pattern(&above, kind));
        let flips = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        assert_eq!(flips, 1, "{kind:?}: {a:?} -> {b:?}");
    }
    assert_eq!(classify_analytic(&below).unwrap().kind, EquilibriumKind::FullCoexistence);
    assert_eq!(classify_analytic(&above).unwrap().kind, EquilibriumKind::MutatorCoexistence);
    let at = products(0.63, 0.63);
    let full = fixed_point_full_coexistence(&at).unwrap();
    let mutator = fixed_point_mutator_coexistence(&at).unwrap();
    assert!(full.coords.distance(&mutator.coords) < 1e-14);
}

#[test]
fn phase_diagram_landmarks() {
    assert_eq!(classify_analytic(&products(0.21, 0.21)).unwrap().kind, EquilibriumKind::UnstableDominance);
    assert_eq!(classify_analytic(&products(0.21, 0.63)).unwrap().kind, EquilibriumKind::MutatorCoexistence);
    let green = classify_analytic(&products(0.63, 0.21)).unwrap();
    assert_eq!(green.kind, EquilibriumKind::FullCoexistence);
    let want = [0.318_181_818_181_818, 0.204_545_454_545_454_5, 0.477_272_727_272_727_3];
    for (c, w) in green.coords.to_array().iter().zip(want) {
        assert!((c - w).abs() < 1e-12);
    }
    assert!(matches!(classify_analytic(&products(0.63, 0.63)), Err(EquilibriumError::Degenerate(_))));
}

#[test]
fn critical_rates_bound_unstable_dominance() {
    let p = ModelParams::new(0.9, 0.7, 0.42, 0.7, 0.3).unwrap();
    let (mu0c, mu1c) = critical_mutation_rates(&p);
    assert!((mu0c - (1.0 - 0.42 / 0.9)).abs() < 1e-15);
    assert!((mu1c - 0.4).abs() < 1e-15);
    for (mu0, mu1) in [(mu0c + 0.01, mu1c + 0.01), (mu0c - 0.01, mu1c + 0.01), (mu0c + 0.01, mu1c - 0.01)] {
        let q = ModelParams::new(0.9, 0.7, 0.42, 1.0 - mu0, 1.0 - mu1).unwrap();
        let attracts = eigen_unstable_dominance(&q).iter().all(|v| *v < 0.0);
        assert_eq!(attracts, mu0 > mu0c && mu1 > mu1c);
    }
}
