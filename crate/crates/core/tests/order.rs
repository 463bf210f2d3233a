use num_complex::Complex64;
use proptest::prelude::*;

use vofrac::order::{log_grid, peak_constants};
use vofrac::quad::adaptive_semi_infinite;
use vofrac::OrderFunction;

fn orders() -> impl Strategy<Value = OrderFunction> {
    prop_oneof![
        (0.05f64..1.0).prop_map(|a| OrderFunction::constant(a).unwrap()),
        (0.05f64..0.95, 0.05f64..0.95, 0.1f64..10.0)
            .prop_map(|(a, b, c)| OrderFunction::exp_transition(a, b, c).unwrap()),
        (0.05f64..0.95, 0.05f64..0.95, 0.1f64..3.0, 0.2f64..4.0)
            .prop_map(|(a, b, c1, d)| OrderFunction::exp_transition_return(a, b, c1, c1 + d).unwrap()),
    ]
}

#[test]
fn rejects_bad_parameters() {
    assert!(OrderFunction::constant(0.0).is_err());
    assert!(OrderFunction::constant(1.2).is_err());
    assert!(OrderFunction::exp_transition(1.0, 0.5, 1.0).is_err());
    assert!(OrderFunction::exp_transition(0.5, 0.5, -1.0).is_err());
    assert!(OrderFunction::exp_transition_return(0.6, 0.8, 2.0, 2.0).is_err());
    assert!(peak_constants(0.0, 1.0).is_err());
}

#[test]
fn peak_reaches_alpha2() {
    let o = OrderFunction::exp_transition_return(0.6, 0.8, 0.2, 2.0).unwrap();
    let p = o.peak().unwrap();
    assert!((o.alpha_of_t(p.t_peak) - 0.8).abs() < 1e-12);
    let grid = log_grid(1e-3, 1e3, 400);
    assert!(grid.iter().all(|&t| o.alpha_of_t(t) <= 0.8 + 1e-12));
}

#[test]
fn branch_point_and_poles_rejected() {
    let o = OrderFunction::exp_transition(0.7, 0.9, 1.0).unwrap();
    assert!(o.power_sa(Complex64::new(0.0, 0.0)).is_err());
    assert!(o.symbol_sa(Complex64::new(-1.0, 0.0)).is_err());
    assert!(o.symbol_sa(Complex64::new(f64::NAN, 0.0)).is_err());
}

#[test]
fn json_round_trip() {
    let o = OrderFunction::exp_transition_return(0.6, 0.8, 0.2, 2.0).unwrap();
    let text = serde_json::to_string(&o).unwrap();
    assert_eq!(serde_json::from_str::<OrderFunction>(&text).unwrap(), o);
    assert!(serde_json::from_str::<OrderFunction>(r#"{"kind":"constant","alpha":0.5,"extra":1}"#).is_err());
    assert!(
        serde_json::from_str::<OrderFunction>(r#"{"kind":"exp_transition","alpha1":0.5,"alpha2":1.5,"c":1}"#).is_err()
    );
}

#[test]
fn reference_parameters_are_bernstein_on_the_grid() {
    let grid = log_grid(1e-6, 1e6, 121);
    for o in [
        OrderFunction::constant(0.5).unwrap(),
        OrderFunction::exp_transition(0.7, 0.9, 1.0).unwrap(),
        OrderFunction::exp_transition_return(0.6, 0.8, 0.2, 2.0).unwrap(),
    ] {
        assert!(o.bernstein_check(&grid, 4, 1e-8).passed(), "{o:?}");
    }
}

#[test]
fn abrupt_transition_is_flagged() {
    let o = OrderFunction::exp_transition(0.05, 0.95, 100.0).unwrap();
    let r = o.bernstein_check(&log_grid(1e-6, 1e6, 121), 4, 1e-8);
    assert!(!r.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_is_laplace_transform_of_order(o in orders(), s in 0.05f64..20.0) {
        // sA(s) = s ∫₀^∞ e^{−st} α(t) dt
        let (integral, _) = adaptive_semi_infinite(|t| (-s * t).exp() * o.alpha_of_t(t), 0.0, 1e-13, 1e-12);
        let sa = o.sa_unchecked(Complex64::new(s, 0.0));
        prop_assert!((s * integral - sa.re).abs() < 1e-8, "s = {s}: {} vs {}", s * integral, sa.re);
        prop_assert!(sa.im.abs() < 1e-15);
    }

    #[test]
    fn symbol_limits(o in orders()) {
        let big = o.sa_unchecked(Complex64::new(1e12, 0.0)).re;
        let small = o.sa_unchecked(Complex64::new(1e-12, 0.0)).re;
        prop_assert!((big - o.alpha_initial()).abs() < 1e-9);
        prop_assert!((small - o.alpha_final()).abs() < 1e-9);
    }

    #[test]
    fn schwarz_reflection(o in orders(), re in 0.01f64..50.0, im in -50.0f64..50.0) {
        let s = Complex64::new(re, im);
        let a = o.power_sa_unchecked(s.conj());
        let b = o.power_sa_unchecked(s).conj();
        prop_assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn order_stays_in_unit_interval(o in orders(), t in 0.0f64..1e4) {
        let a = o.alpha_of_t(t);
        prop_assert!(a > 0.0 && a < 1.0 || (o.is_constant() && a <= 1.0));
    }
}
