//! Randomized properties.

use std::sync::Arc;

use levy_ito::weakfn::{key_bound_check, Affine, CallPayoff, SmoothExp};
use levy_ito::{extend_reflect, ito_rhs, LevyMeasure, LevyModel, Mollifier, PathSimulator};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ito_identity_exact_for_smooth_functions(
        lambda in 0.1f64..5.0,
        std in 0.01f64..1.0,
        gamma in -1.0f64..1.0,
        x0 in -1.0f64..1.0,
        seed in 0u64..1_000,
    ) {
        let model = LevyModel::pure_jump(LevyMeasure::compound_poisson_normal(lambda, 0.0, std).unwrap(), gamma).unwrap();
        let path = PathSimulator::new(&model, 0.0, 1.0).unwrap().path(x0, seed, 0);
        let d = ito_rhs(&SmoothExp, &path, 1.0, 1e-10).unwrap();
        prop_assert!(d.residual.abs() <= 1e-9, "residual {}", d.residual);
    }

    #[test]
    fn ito_identity_for_kinked_payoff(
        gamma in -1.0f64..1.0,
        strike in -0.5f64..0.5,
        seed in 0u64..1_000,
    ) {
        let model = LevyModel::pure_jump(LevyMeasure::compound_poisson_normal(2.0, 0.0, 0.3).unwrap(), gamma).unwrap();
        let path = PathSimulator::new(&model, 0.0, 1.0).unwrap().path(0.0, seed, 1);
        let d = ito_rhs(&CallPayoff { strike }, &path, 1.0, 1e-10).unwrap();
        prop_assert!(d.residual.abs() <= 1e-9 + d.quad_error_estimate);
    }

    #[test]
    fn affine_drift_integral_is_exact(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in -2.0f64..2.0,
        gamma in -1.0f64..1.0,
        seed in 0u64..1_000,
    ) {
        let model = LevyModel::pure_jump(LevyMeasure::zero(), gamma).unwrap();
        let path = PathSimulator::new(&model, 0.0, 1.0).unwrap().path(0.3, seed, 0);
        let d = ito_rhs(&Affine { a, b, c }, &path, 1.0, 1e-12).unwrap();
        prop_assert!((d.time_integral - b).abs() <= 1e-12);
        prop_assert!((d.drift_integral - c * gamma).abs() <= 1e-12);
        prop_assert_eq!(d.n_jumps, 0);
    }

    #[test]
    fn mollifier_has_unit_mass(eps in 1e-3f64..2.0, dim in 1usize..=2) {
        let m = Mollifier::new(eps, dim).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn key_bound_holds_for_reflected_payoff(
        eps in 0.01f64..0.5,
        dim in 1usize..=2,
        t in 0.0f64..1.0,
        x in -1.0f64..1.0,
    ) {
        let f = extend_reflect(Arc::new(CallPayoff { strike: 0.1 }));
        let m = Mollifier::new(eps, dim).unwrap();
        prop_assert!(key_bound_check(&f, &m, t, x).unwrap().holds);
    }
}

#[test]
fn ito_identity_through_oscillating_breakpoint() {
    use levy_ito::weakfn::XsqSinInv;
    let model = LevyModel::pure_jump(LevyMeasure::compound_poisson_normal(1.0, 0.0, 0.3).unwrap(), 0.4).unwrap();
    let sim = PathSimulator::new(&model, 0.0, 1.0).unwrap();
    for i in 0..20 {
        let path = sim.path(-0.2, 5, i);
        let d = ito_rhs(&XsqSinInv, &path, 1.0, 1e-9).unwrap();
        assert!(
            d.residual.abs() <= 1e-9 + d.quad_error_estimate,
            "path {i}: {}",
            d.residual
        );
    }
}
