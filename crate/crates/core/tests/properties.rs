use proptest::prelude::*;

use su_steer::controller::{auxiliary_rhs, feedback_a, FeedbackGains};
use su_steer::integrator::IntegratorConfig;
use su_steer::planner::{build_path, compute_g};
use su_steer::reference::{
    integrate_reference, regularity_check, sample_reference, FourierControl,
};
use su_steer::spin_model::SpinModel;
use su_steer::su_core::{
    fidelity, generator_hi, generator_hr, numerical_rank, unitary_eigendecomposition,
    ComplexMatrix, SuElement, UnitaryMatrix, C64,
};

fn su_element(n: usize, entries: &[(f64, f64)]) -> SuElement {
    let m = ComplexMatrix::from_fn(n, |i, j| {
        let (re, im) = entries[i * n + j];
        C64::new(re, im)
    });
    SuElement::project(&m)
}

fn arb_su(n: usize, scale: f64) -> impl Strategy<Value = SuElement> {
    prop::collection::vec((-scale..scale, -scale..scale), n * n)
        .prop_map(move |e| su_element(n, &e))
}

fn arb_unitary(n: usize) -> impl Strategy<Value = UnitaryMatrix> {
    arb_su(n, 3.0).prop_map(|a| a.exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_lands_in_su_n(n in 2usize..6, seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36), t in -10.0f64..10.0) {
        let a = su_element(n, &seed[..n * n]).scale(t);
        let x = a.exp();
        prop_assert!(x.unitarity_residual() <= 1e-10);
        prop_assert!(x.det_residual() <= 1e-10);
    }

    #[test]
    fn fidelity_is_linear(x in arb_unitary(4), y in arb_unitary(4), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut comb = x.as_matrix().scale(a);
        comb.axpy(b, y.as_matrix());
        let lhs = fidelity(&comb);
        let rhs = a * x.fidelity() + b * y.fidelity();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn distance_identity_and_bounds(x in arb_unitary(4), y in arb_unitary(4)) {
        let d = x.as_matrix().distance(y.as_matrix());
        let v = x.adjoint().compose(&y).fidelity();
        prop_assert!((d * d - (8.0 - 2.0 * v)).abs() <= 1e-10);
        prop_assert!((-4.0 - 1e-12..=4.0 + 1e-12).contains(&v));
    }

    #[test]
    fn eigendecomposition_reconstructs(x in arb_unitary(4)) {
        let eig = unitary_eigendecomposition(&x).unwrap();
        prop_assert!(eig.reconstruct().distance(x.as_matrix()) <= 1e-10);
        prop_assert!(eig.phases.iter().sum::<f64>().abs() <= 1e-10);
        prop_assert!(eig.power(1.0).distance(x.as_matrix()) <= 1e-10);
    }

    #[test]
    fn rank_ignores_scaling(vs in prop::collection::vec(arb_su(3, 1.0), 1..6), s in prop::sample::select(vec![1e-3, 0.5, 7.0, 1e3])) {
        let scaled: Vec<SuElement> = vs.iter().map(|v| v.scale(s)).collect();
        prop_assert_eq!(numerical_rank(&vs, 1e-8).unwrap(), numerical_rank(&scaled, 1e-8).unwrap());
    }

    #[test]
    fn fourier_controls_are_odd_and_periodic(seed in any::<u64>(), t in 0.0f64..3.0, period in 0.5f64..4.0) {
        let fc = FourierControl::random(3, 4, 2.0, period, seed).unwrap();
        let again = FourierControl::random(3, 4, 2.0, period, seed).unwrap();
        prop_assert_eq!(&fc, &again);
        let (a, b, c) = (fc.eval(t), fc.eval(-t), fc.eval(t + period));
        for k in 0..3 {
            prop_assert!((a[k] + b[k]).abs() <= 1e-12);
            prop_assert!((a[k] - c[k]).abs() <= 1e-10);
        }
    }

    #[test]
    fn path_steps_stay_in_the_basin(x in arb_unitary(4)) {
        let crit = compute_g(4).unwrap();
        let path = build_path(&x, &crit, 0.1).unwrap();
        prop_assert!(path.waypoints.first().unwrap().as_matrix().distance(x.as_matrix()) <= 1e-9);
        prop_assert!(path.waypoints.last().unwrap().as_matrix().distance(&ComplexMatrix::identity(4)) <= 1e-9);
        for w in path.waypoints.windows(2) {
            prop_assert!(w[0].unitarity_residual() <= 1e-10 && w[0].det_residual() <= 1e-10);
            prop_assert!(w[1].adjoint().compose(&w[0]).fidelity() > crit.delta + 0.1);
        }
    }

    #[test]
    fn recombined_controls_are_real(u6 in prop::collection::vec(-10.0f64..10.0, 6), t in -20.0f64..20.0) {
        let model = SpinModel::default();
        for z in model.recombine_controls_complex(&u6, t) {
            prop_assert!(z.im.abs() <= 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rank_is_monotone_in_truncation(seed in any::<u64>()) {
        let gens = vec![generator_hr(1, 2, 2).unwrap(), generator_hi(1, 2, 2).unwrap()];
        let fc = FourierControl::random(2, 2, 1.5, 1.0, seed).unwrap();
        let mut last = 0;
        for j_max in 0..=4 {
            let rank = regularity_check(&fc, &gens, j_max, 1e-8).unwrap().rank;
            prop_assert!(rank >= last);
            last = rank;
        }
    }

    #[test]
    fn reference_samples_and_feedback_are_well_formed(seed in any::<u64>(), t in 0.0f64..5.0, w in arb_unitary(2)) {
        let gens = vec![generator_hr(1, 2, 2).unwrap(), generator_hi(1, 2, 2).unwrap()];
        let fc = FourierControl::random(2, 3, 1.0, 1.0, seed).unwrap();
        let r = integrate_reference(&fc, &gens, &IntegratorConfig::with_step(5e-3)).unwrap();
        let goal = UnitaryMatrix::identity(2);
        let x = sample_reference(&r, &goal, t).unwrap();
        prop_assert!(x.unitarity_residual() <= 1e-10 && x.det_residual() <= 1e-10);
        let gains = FeedbackGains::new(vec![1.0, 2.0]).unwrap();
        let g = auxiliary_rhs(t, &w, &r, &goal, &gains).unwrap();
        prop_assert!(g.as_matrix().skew_residual() <= 1e-12);
        prop_assert!(g.as_matrix().trace().norm() <= 1e-12);
        // V' = sum a_k^2 along the auxiliary flow
        let vdot = fidelity(&(w.as_matrix() * g.as_matrix()));
        let sum: f64 = (0..2).map(|k| feedback_a(t, &w, k, &r, &goal, &gains).unwrap().powi(2)).sum();
        prop_assert!((vdot - sum).abs() <= 1e-10 * (1.0 + sum));
    }
}
