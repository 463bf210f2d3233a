//! Thin wrappers over `statrs` gamma-family functions.

use statrs::function::gamma as sg;

pub fn gamma(x: f64) -> f64 {
    sg::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

/// Reciprocal gamma, exactly zero at the poles 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / sg::gamma(x)
    }
}

pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgamma_vanishes_at_poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!((rgamma(-0.5) - 1.0 / (-2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn beta_matches_gamma_ratio() {
        assert!((beta(1.0, 2.0) - 0.5).abs() < 1e-14);
        assert!((beta(0.5, 0.5) - std::f64::consts::PI).abs() < 1e-12);
    }
}
