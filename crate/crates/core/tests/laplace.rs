use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use vofrac::laplace::{dehoog, engine_discrepancy, invert, invert_double, invert_point, talbot, talbot_complex};
use vofrac::order::log_grid;
use vofrac::{ContourPlan, Error, Method, OrderFunction};

#[test]
fn elementary_pairs() {
    let plan = ContourPlan::default();
    let ts = log_grid(0.01, 20.0, 25);
    let exp = invert(&|s: Complex64| 1.0 / (s + 0.7), &plan, &ts).unwrap();
    let ramp = invert(&|s: Complex64| 1.0 / (s * s), &plan, &ts).unwrap();
    let root = invert(&|s: Complex64| 1.0 / s.sqrt(), &plan, &ts).unwrap();
    for (i, &t) in ts.iter().enumerate() {
        assert!((exp.values()[i] - (-0.7 * t).exp()).abs() < 1e-9, "t = {t}");
        assert!((ramp.values()[i] - t).abs() < 1e-8 * t.max(1.0), "t = {t}");
        assert!((root.values()[i] - 1.0 / (PI * t).sqrt()).abs() < 1e-8 * root.values()[i].max(1.0), "t = {t}");
    }
}

#[test]
fn engines_agree_on_relaxation_transform() {
    let order = OrderFunction::exp_transition(0.7, 0.9, 1.0).unwrap();
    let f = |s: Complex64| {
        let p = order.power_sa_unchecked(s);
        p / (s * (1.0 + p))
    };
    let d = engine_discrepancy(&f, &log_grid(0.01, 50.0, 20));
    assert!(d < 1e-7, "discrepancy {d:e}");
    let dh = invert(&f, &ContourPlan::dehoog(), &[0.5, 2.0]).unwrap();
    assert!((dh.values()[0] - talbot(&f, 0.5, 24)).abs() < 1e-7);
}

#[test]
fn full_contour_is_real_for_real_transforms() {
    let f = |s: Complex64| 1.0 / (s * s + 1.0);
    let v = talbot_complex(&f, 2.0, 24);
    assert!(v.im.abs() < 1e-10);
    assert!((v.re - 2f64.sin()).abs() < 1e-8);
}

#[test]
fn window_and_domain_errors() {
    let plan = ContourPlan::default().with_window(0.1, 10.0);
    let f = |s: Complex64| 1.0 / (s + 1.0);
    assert!(matches!(invert(&f, &plan, &[0.05, 1.0]), Err(Error::Domain(_))));
    assert!(matches!(invert_point(&f, &plan, 0.0), Err(Error::Domain(_))));
    assert!(ContourPlan::default().with_target(0.5).validate().is_err());
}

#[test]
fn missed_target_reports_best_attempt() {
    // a jump at t = 1 cannot be resolved by a smooth contour rule
    let f = |s: Complex64| (-s).exp() / s;
    match invert_point(&f, &ContourPlan::dehoog().with_target(1e-12), 1.0) {
        Err(Error::InversionFailure { estimate, target, .. }) => assert!(estimate > target),
        other => panic!("expected an inversion failure, got {other:?}"),
    }
}

#[test]
fn double_inversion_of_product() {
    let f = |s1: Complex64, s2: Complex64| 1.0 / ((s1 + 1.0) * (s2 + 2.0));
    let pts = [(0.5, 1.0), (2.0, 0.3)];
    let vals = invert_double(&f, &ContourPlan::double_default(), &pts).unwrap();
    for (&(a, b), v) in pts.iter().zip(&vals) {
        assert!((v.value - (-a - 2.0 * b).exp()).abs() < 1e-6);
    }
}

#[test]
fn double_inversion_budget() {
    let plan = ContourPlan { method: Method::DeHoog, nodes: 120, ..ContourPlan::double_default() };
    let f = |s1: Complex64, s2: Complex64| 1.0 / (s1 * s2);
    assert!(matches!(invert_double(&f, &plan, &[(1.0, 1.0)]), Err(Error::Budget(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inversion_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, t in 0.05f64..10.0) {
        let f = |s: Complex64| 1.0 / (s + 1.0);
        let g = |s: Complex64| 1.0 / (s * s + 4.0);
        let h = |s: Complex64| a * f(s) + b * g(s);
        let lhs = talbot(&h, t, 24);
        let rhs = a * talbot(&f, t, 24) + b * talbot(&g, t, 24);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn time_scaling(c in 0.2f64..5.0, t in 0.05f64..5.0) {
        // L{f(ct)}(s) = F(s/c)/c
        let order = OrderFunction::constant(0.6).unwrap();
        let f = |s: Complex64| { let p = order.power_sa_unchecked(s); p / (s * (1.0 + p)) };
        let scaled = |s: Complex64| f(s / c) / c;
        prop_assert!((talbot(&scaled, t, 24) - talbot(&f, c * t, 24)).abs() < 1e-9);
    }

    #[test]
    fn dehoog_matches_exponential(a in 0.0f64..3.0, t in 0.05f64..10.0) {
        let v = dehoog(&|s: Complex64| 1.0 / (s + a), t, 20);
        prop_assert!((v - (-a * t).exp()).abs() < 1e-9);
    }
}
