//! One- and three-parameter (Prabhakar) Mittag-Leffler functions on the real
//! line.
//!
//! `ml1` on the negative axis uses three regimes:
//!
//! * `|x| ≤ 1`: Taylor series (no cancellation);
//! * `1 < |x| < 50`: the real integral representation
//!   `E_α(−z) = sin(απ)/(απ) ∫₀^∞ e^{−v^{1/α}} z / (v² + 2zv cos απ + z²) dv`;
//! * `|x| ≥ 50`: the asymptotic expansion `Σ_{k≥1} (−1)^{k+1} z^{−k}/Γ(1−αk)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{invert_point, ContourPlan};
use crate::quad::{adaptive, adaptive_semi_infinite};
use crate::special::{ln_gamma, rgamma};

const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_LIMIT: f64 = 50.0;

/// Parameters `(α, β, γ)` of `E^γ_{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param(format!("Mittag-Leffler alpha must lie in (0, 2], got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("Mittag-Leffler beta and gamma must be positive, got {beta}, {gamma}")));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn one(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0)
    }
}

/// `E_α(x)` for `α ∈ (0, 1]`, `x ≤ 0`.
pub fn ml1(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("ml1 needs alpha in (0, 1], got {alpha}")));
    }
    if !(x <= 0.0) {
        return Err(Error::domain(format!("ml1 is evaluated on x <= 0 only, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(x.exp());
    }
    let z = -x;
    let value = if z <= SERIES_LIMIT {
        series(alpha, 1.0, 1.0, x).0
    } else if z < ASYMPTOTIC_LIMIT {
        integral_representation(alpha, z)
    } else {
        asymptotic(alpha, z)
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Relaxation form `E_α(−λ t^α)`.
pub fn ml_relaxation(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    ml1(alpha, -lambda * t.powf(alpha))
}

/// Returns `(sum, largest term magnitude)`; the sum is NaN when the series
/// has not converged within the term budget.
fn series(alpha: f64, beta: f64, gamma: f64, x: f64) -> (f64, f64) {
    // term_j = (γ)_j x^j / (j! Γ(αj + β)), accumulated in log space
    let ln_x = x.abs().ln();
    let mut ln_coeff = 0.0;
    let mut sum = rgamma(beta);
    let mut largest = sum.abs();
    let mut small_run = 0;
    for j in 1..2000 {
        let jf = j as f64;
        ln_coeff += ((gamma + jf - 1.0) / jf).ln() + ln_x;
        let sign = if x < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * (ln_coeff - ln_gamma(alpha * jf + beta)).exp();
        sum += term;
        largest = largest.max(term.abs());
        if !sum.is_finite() {
            break;
        }
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            small_run += 1;
            if small_run >= 3 {
                return (sum, largest);
            }
        } else {
            small_run = 0;
        }
    }
    (if sum.is_finite() { f64::NAN } else { sum }, largest)
}

fn integral_representation(alpha: f64, z: f64) -> f64 {
    let (sin_ap, cos_ap) = (alpha * PI).sin_cos();
    let kernel = |v: f64| {
        let decay = (-v.powf(1.0 / alpha)).exp();
        decay * z / (v * v + 2.0 * z * v * cos_ap + z * z)
    };
    // the Lorentzian-like factor peaks near v = z when α is close to 1
    let (head, _) = adaptive(kernel, 0.0, z, 1e-16, 1e-14, 4000);
    let (tail, _) = adaptive_semi_infinite(kernel, z, 1e-16, 1e-14);
    sin_ap / (alpha * PI) * (head + tail)
}

fn asymptotic(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0_f64;
    let mut zpow = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        zpow /= z;
        let term = zpow * rgamma(1.0 - alpha * k as f64) * if k % 2 == 1 { 1.0 } else { -1.0 };
        if term == 0.0 {
            continue;
        }
        if term.abs() > prev || term.abs() < 1e-18 * sum.abs() {
            break;
        }
        sum += term;
        prev = term.abs();
    }
    sum
}

/// Prabhakar function `E^γ_{α,β}(x)`.
///
/// Uses the power series while its cancellation loss stays small, and for
/// negative arguments with `α ≤ 1` falls back to inverting
/// `s^{αγ−β}/(s^α − x)^γ` at `t = 1`. Large positive arguments whose value
/// overflows give a range error.
pub fn ml3(params: MlParams, x: f64) -> Result<f64> {
    let MlParams { alpha, beta, gamma } = params;
    if !x.is_finite() {
        return Err(Error::domain(format!("ml3 needs a finite argument, got {x}")));
    }
    if x == 0.0 {
        return Ok(rgamma(beta));
    }
    let (sum, largest) = series(alpha, beta, gamma, x);
    if x > 0.0 && !sum.is_finite() {
        return Err(Error::Range(format!(
            "E^{gamma}_{{{alpha},{beta}}}({x}) overflows or its series does not converge"
        )));
    }
    // log-gamma leaves each term with a relative error near 1e-13
    if x > 0.0 || (sum.is_finite() && largest * 1e-13 <= 1e-10 * sum.abs()) {
        return Ok(sum);
    }
    if alpha > 1.0 {
        return Err(Error::Range(format!(
            "E^{gamma}_{{{alpha},{beta}}}({x}): series loses precision and alpha > 1 has no inversion fallback"
        )));
    }
    let transform = move |s: Complex64| s.powf(alpha * gamma - beta) / (s.powf(alpha) - x).powf(gamma);
    let plan = ContourPlan::talbot().with_target(1e-10);
    Ok(invert_point(&transform, &plan, 1.0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erfc;

    #[test]
    fn exponential_case() {
        assert!((ml1(1.0, -2.0).unwrap() - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(ml1(0.4, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn half_order_closed_form() {
        // E_{1/2}(−z) = e^{z²} erfc(z)
        for z in [0.3f64, 1.0, 2.5, 6.0, 20.0] {
            let expected = (z * z).exp() * erfc(z);
            let got = ml1(0.5, -z).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected.max(1e-3), "z = {z}: {got} vs {expected}");
        }
    }

    #[test]
    fn half_order_asymptotic_regime() {
        // e^{z²} erfc(z) = (1/(z√π)) Σ (−1)^k (2k−1)!! / (2z²)^k
        for z in [80.0f64, 300.0] {
            let mut sum = 0.0;
            let mut term = 1.0;
            for k in 0..12 {
                sum += term;
                term *= -(2.0 * k as f64 + 1.0) / (2.0 * z * z);
            }
            let expected = sum / (z * std::f64::consts::PI.sqrt());
            let got = ml1(0.5, -z).unwrap();
            assert!((got - expected).abs() < 1e-14, "z = {z}: {got} vs {expected}");
        }
    }

    #[test]
    fn regimes_join_continuously() {
        for alpha in [0.2, 0.5, 0.9, 0.99] {
            for edge in [SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
                let lo = ml1(alpha, -edge * (1.0 - 1e-13)).unwrap();
                let hi = ml1(alpha, -edge * (1.0 + 1e-13)).unwrap();
                assert!((lo - hi).abs() < 1e-10, "alpha = {alpha}, edge = {edge}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn near_exponential_order() {
        // α close to one approaches exp, uniformly on moderate arguments
        for z in [0.5f64, 3.0, 10.0] {
            let v = ml1(0.999_999, -z).unwrap();
            assert!((v - (-z).exp()).abs() < 1e-4, "z = {z}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ml1(0.0, -1.0).is_err());
        assert!(ml1(1.5, -1.0).is_err());
        assert!(ml1(0.5, 1.0).is_err());
        assert!(MlParams::new(2.5, 1.0, 1.0).is_err());
        assert!(MlParams::new(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn prabhakar_reductions() {
        let p = MlParams::new(1.0, 2.0, 1.0).unwrap();
        assert!((ml3(p, 1.0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        let one = MlParams::one(0.6).unwrap();
        for x in [-0.5, -3.0, -12.0, -40.0] {
            assert!((ml3(one, x).unwrap() - ml1(0.6, x).unwrap()).abs() < 1e-8, "x = {x}");
        }
        assert!(matches!(ml3(MlParams::one(0.5).unwrap(), 1e6), Err(Error::Range(_))));
    }
}
