#![allow(clippy::excessive_precision)]

use proptest::prelude::*;

use vofrac::order::log_grid;
use vofrac::relaxation::{solve, tail_exponent, thm1_diagnostics};
use vofrac::{ContourPlan, Error, OrderFunction};

#[test]
fn half_order_relaxation() {
    // E_{1/2}(−√t) at t = 0.04, 1 and 6.25
    let sol = solve(&OrderFunction::constant(0.5).unwrap(), 1.0, &ContourPlan::default(), &[0.04, 1.0, 6.25]).unwrap();
    let expected = [0.8090195199015807418, 0.4275835761558070044, 0.2108063640611435807];
    for (u, e) in sol.u.values().iter().zip(expected) {
        assert!((u - e).abs() < 1e-10, "{u} vs {e}");
    }
    assert!(sol.warnings.is_empty());
}

#[test]
fn classical_order_is_exponential() {
    let ts = [0.1, 1.0, 3.0];
    let sol = solve(&OrderFunction::constant(1.0).unwrap(), 2.0, &ContourPlan::default(), &ts).unwrap();
    for ((t, u), du) in ts.iter().zip(sol.u.values()).zip(sol.du.values()) {
        assert!((u - (-2.0 * t).exp()).abs() < 1e-10);
        assert!((du + 2.0 * (-2.0 * t).exp()).abs() < 1e-9);
    }
}

#[test]
fn derivative_matches_finite_differences() {
    let order = OrderFunction::exp_transition_return(0.6, 0.8, 0.2, 2.0).unwrap();
    let plan = ContourPlan::default();
    for t in [0.3f64, 1.0, 4.0] {
        let h = 1e-4 * t;
        let sol = solve(&order, 1.0, &plan, &[t - h, t, t + h]).unwrap();
        let u = sol.u.values();
        let fd = (u[2] - u[0]) / (2.0 * h);
        assert!((sol.du.values()[1] - fd).abs() < 1e-6 * fd.abs().max(1.0), "t = {t}");
    }
}

#[test]
fn power_law_tail() {
    let order = OrderFunction::exp_transition(0.9, 0.6, 1.0).unwrap();
    let sol = solve(&order, 1.0, &ContourPlan::default(), &log_grid(1e-2, 1e5, 71)).unwrap();
    let slope = tail_exponent(&sol).unwrap();
    assert!((slope + 0.6).abs() < 0.01, "slope {slope}");
    let short = solve(&order, 1.0, &ContourPlan::default(), &log_grid(1e-2, 1.0, 11)).unwrap();
    assert!(matches!(tail_exponent(&short), Err(Error::InsufficientDecay(_))));
}

#[test]
fn diagnostics_for_smooth_transition() {
    let order = OrderFunction::exp_transition(0.7, 0.9, 1.0).unwrap();
    let report = thm1_diagnostics(&order, 1.0, &ContourPlan::default()).unwrap();
    assert!(report.inversion_converged());
    assert!(report.survival_ok());
    assert!(report.initial_gap < 0.05);
}

#[test]
fn csv_layout() {
    let sol = solve(&OrderFunction::constant(0.8).unwrap(), 1.0, &ContourPlan::default(), &[0.5, 1.0]).unwrap();
    let csv = sol.to_csv();
    assert_eq!(csv.lines().next(), Some("t,u,du"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn rejects_bad_inputs() {
    let order = OrderFunction::constant(0.5).unwrap();
    let plan = ContourPlan::default();
    assert!(matches!(solve(&order, 0.0, &plan, &[1.0]), Err(Error::InvalidParameter(_))));
    assert!(matches!(solve(&order, 1.0, &plan, &[0.0, 1.0]), Err(Error::Domain(_))));
    assert!(matches!(solve(&order, 1.0, &plan, &[]), Err(Error::Domain(_))));
}

#[test]
fn abrupt_transition_breaks_monotonicity() {
    let order = OrderFunction::exp_transition(0.9, 0.3, 1.0).unwrap();
    let report = thm1_diagnostics(&order, 1.0, &ContourPlan::default()).unwrap();
    assert!(!report.bernstein.passed());
    assert!(report.inversion_converged());
    assert!(!report.survival_ok());
    let sol = solve(&order, 1.0, &ContourPlan::default(), &log_grid(1e-2, 1e2, 25)).unwrap();
    assert!(sol.warnings.iter().any(|w| w.contains("increases")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bernstein_order_gives_a_survival_function(
        a1 in 0.3f64..0.95, delta in -0.15f64..0.15, c in 0.2f64..5.0, lambda in 0.2f64..5.0,
    ) {
        let a2 = (a1 + delta).clamp(0.3, 0.95);
        let order = OrderFunction::exp_transition(a1, a2, c).unwrap();
        let report = thm1_diagnostics(&order, lambda, &ContourPlan::default()).unwrap();
        if report.bernstein.passed() && report.inversion_converged() {
            prop_assert!(report.survival_ok(), "min u {:e}, rise {:e}, max du {:e}", report.min_u, report.max_increase, report.max_du);
        }
    }
}
