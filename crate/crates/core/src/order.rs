//! Order functions α(t) with closed-form Laplace transforms.
//!
//! Everything downstream works with the symbol `sA(s)`, where `A` is the
//! Laplace transform of α. For the three supported families:
//!
//! * constant: `sA(s) = α`
//! * exponential transition: `sA(s) = (α₂c + α₁s)/(c + s)`, i.e.
//!   `α(t) = α₂ + (α₁ - α₂)e^{-ct}`, moving from α₁ at t = 0 to α₂ as t → ∞
//! * transition with return: `sA(s) = α₁ + s(α₂ - α₁)/(F_c(s + c₁)(s + c₂))`,
//!   i.e. `α(t) = α₁ + (α₂ - α₁)(e^{-c₁t} - e^{-c₂t})/(F_c(c₂ - c₁))`, which
//!   leaves α₁, reaches α₂ at `t_peak` and returns to α₁.
//!
//! The exponential-transition time law is written here as the inverse
//! transform of its `sA(s)`. The form `α₁ + (α₁ - α₂)e^{-ct}` that circulates
//! for this family does not match that symbol (its limits are 2α₁ - α₂ and
//! α₁), so the symbol is taken as authoritative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normaliser and extremum time of the transition-with-return family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConstants {
    pub f_c: f64,
    pub t_peak: f64,
}

/// `F_c = [(c₁/c₂)^{c₁/(c₂-c₁)} - (c₁/c₂)^{c₂/(c₂-c₁)}]/(c₂ - c₁)` and
/// `t_peak = log(c₂/c₁)/(c₂ - c₁)`.
pub fn peak_constants(c1: f64, c2: f64) -> Result<PeakConstants> {
    if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
        return Err(Error::param(format!("rates must be positive, got c1={c1}, c2={c2}")));
    }
    if c1 == c2 {
        return Err(Error::DegenerateRates(c1));
    }
    let d = c2 - c1;
    let ratio = c1 / c2;
    let f_c = (ratio.powf(c1 / d) - ratio.powf(c2 / d)) / d;
    let t_peak = (c2 / c1).ln() / d;
    Ok(PeakConstants { f_c, t_peak })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(try_from = "OrderSpec")]
pub enum OrderFunction {
    Constant { alpha: f64 },
    ExpTransition { alpha1: f64, alpha2: f64, c: f64 },
    ExpTransitionReturn { alpha1: f64, alpha2: f64, c1: f64, c2: f64 },
}

/// Unvalidated mirror of [`OrderFunction`] used for deserialisation.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum OrderSpec {
    Constant { alpha: f64 },
    ExpTransition { alpha1: f64, alpha2: f64, c: f64 },
    ExpTransitionReturn { alpha1: f64, alpha2: f64, c1: f64, c2: f64 },
}

impl TryFrom<OrderSpec> for OrderFunction {
    type Error = Error;

    fn try_from(spec: OrderSpec) -> Result<Self> {
        match spec {
            OrderSpec::Constant { alpha } => Self::constant(alpha),
            OrderSpec::ExpTransition { alpha1, alpha2, c } => Self::exp_transition(alpha1, alpha2, c),
            OrderSpec::ExpTransitionReturn { alpha1, alpha2, c1, c2 } => {
                Self::exp_transition_return(alpha1, alpha2, c1, c2)
            }
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive, got {v}")))
    }
}

impl OrderFunction {
    /// Constant order. `alpha = 1` is admitted as the classical (Poisson) limit.
    pub fn constant(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self::Constant { alpha })
    }

    pub fn exp_transition(alpha1: f64, alpha2: f64, c: f64) -> Result<Self> {
        open_unit("alpha1", alpha1)?;
        open_unit("alpha2", alpha2)?;
        positive("c", c)?;
        Ok(Self::ExpTransition { alpha1, alpha2, c })
    }

    pub fn exp_transition_return(alpha1: f64, alpha2: f64, c1: f64, c2: f64) -> Result<Self> {
        open_unit("alpha1", alpha1)?;
        open_unit("alpha2", alpha2)?;
        peak_constants(c1, c2)?;
        Ok(Self::ExpTransitionReturn { alpha1, alpha2, c1, c2 })
    }

    /// `α' = lim_{s→∞} sA(s) = lim_{t→0⁺} α(t)`.
    pub fn alpha_initial(&self) -> f64 {
        match *self {
            Self::Constant { alpha } => alpha,
            Self::ExpTransition { alpha1, .. } | Self::ExpTransitionReturn { alpha1, .. } => alpha1,
        }
    }

    /// `α'' = lim_{s→0⁺} sA(s) = lim_{t→∞} α(t)`.
    pub fn alpha_final(&self) -> f64 {
        match *self {
            Self::Constant { alpha } => alpha,
            Self::ExpTransition { alpha2, .. } => alpha2,
            Self::ExpTransitionReturn { alpha1, .. } => alpha1,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    pub fn peak(&self) -> Option<PeakConstants> {
        match *self {
            Self::ExpTransitionReturn { c1, c2, .. } => peak_constants(c1, c2).ok(),
            _ => None,
        }
    }

    fn check_point(&self, s: Complex64) -> Result<()> {
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::domain(format!("non-finite s = {s}")));
        }
        if s.norm() == 0.0 {
            return Err(Error::domain("s = 0 is a branch point"));
        }
        let poles: &[f64] = match self {
            Self::Constant { .. } => &[],
            Self::ExpTransition { c, .. } => std::slice::from_ref(c),
            Self::ExpTransitionReturn { c1, c2, .. } => &[*c1, *c2][..],
        };
        for &c in poles {
            if (s + c).norm() <= 1e-14 * c.max(1.0) {
                return Err(Error::domain(format!("s = {s} is a pole of sA(s)")));
            }
        }
        Ok(())
    }

    /// The exponent `sA(s)`, checked for the branch point and poles.
    pub fn symbol_sa(&self, s: Complex64) -> Result<Complex64> {
        self.check_point(s)?;
        Ok(self.sa_unchecked(s))
    }

    /// `s^{sA(s)}` on the principal branch.
    pub fn power_sa(&self, s: Complex64) -> Result<Complex64> {
        self.check_point(s)?;
        Ok(self.power_sa_unchecked(s))
    }

    /// Hot-path variant of [`symbol_sa`](Self::symbol_sa) used inside
    /// inversion engines, whose contours never touch the singular set.
    #[inline]
    pub fn sa_unchecked(&self, s: Complex64) -> Complex64 {
        match *self {
            Self::Constant { alpha } => Complex64::new(alpha, 0.0),
            Self::ExpTransition { alpha1, alpha2, c } => (alpha2 * c + alpha1 * s) / (s + c),
            Self::ExpTransitionReturn { alpha1, alpha2, c1, c2 } => {
                let f_c = peak_constants(c1, c2).map(|p| p.f_c).unwrap_or(f64::NAN);
                alpha1 + s * (alpha2 - alpha1) / (f_c * (s + c1) * (s + c2))
            }
        }
    }

    #[inline]
    pub fn power_sa_unchecked(&self, s: Complex64) -> Complex64 {
        (self.sa_unchecked(s) * s.ln()).exp()
    }

    /// `s^{sA(s) + shift}` computed from a single logarithm.
    #[inline]
    pub fn power_sa_shifted(&self, s: Complex64, shift: f64) -> Complex64 {
        ((self.sa_unchecked(s) + shift) * s.ln()).exp()
    }

    /// `α(t)` in the time domain.
    pub fn alpha_of_t(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { alpha } => alpha,
            Self::ExpTransition { alpha1, alpha2, c } => alpha2 + (alpha1 - alpha2) * (-c * t).exp(),
            Self::ExpTransitionReturn { alpha1, alpha2, c1, c2 } => {
                let f_c = peak_constants(c1, c2).map(|p| p.f_c).unwrap_or(f64::NAN);
                alpha1 + (alpha2 - alpha1) * ((-c1 * t).exp() - (-c2 * t).exp()) / (f_c * (c2 - c1))
            }
        }
    }

    /// Numerical Bernstein diagnostic for `g(s) = s^{sA(s)}`.
    ///
    /// For each real `s` in `grid` and each order `n = 1..=max_order`, the
    /// n-th derivative is obtained from the Cauchy integral on a circle of
    /// radius `s/2` (trapezoidal rule, spectrally accurate since `g` is
    /// analytic off the negative real axis) and normalised by
    /// `n!|g(s)|/sⁿ`. A Bernstein function has `(-1)^{n-1} g⁽ⁿ⁾ ≥ 0`.
    pub fn bernstein_check(&self, grid: &[f64], max_order: usize, tol: f64) -> BernsteinReport {
        const POINTS: usize = 64;
        let mut min_scaled = vec![f64::INFINITY; max_order];
        let mut violations = Vec::new();
        for &s in grid {
            let g0 = self.power_sa_unchecked(Complex64::new(s, 0.0)).re;
            let rho = 0.5 * s;
            let samples: Vec<(Complex64, Complex64)> = (0..POINTS)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / POINTS as f64;
                    let e = Complex64::from_polar(1.0, theta);
                    (e, self.power_sa_unchecked(Complex64::new(s, 0.0) + rho * e))
                })
                .collect();
            for n in 1..=max_order {
                let sum: Complex64 = samples.iter().map(|(e, g)| g * e.powi(-(n as i32))).sum();
                // g^{(n)}(s) * rho^n / n!  ==  mean of g * e^{-inθ}
                let coeff = sum.re / POINTS as f64;
                // scale to s^n g^{(n)} / (n! g) = coeff * 2^n / g
                let scaled = coeff * 2f64.powi(n as i32) / g0.abs();
                let signed = if n % 2 == 1 { scaled } else { -scaled };
                if signed < min_scaled[n - 1] {
                    min_scaled[n - 1] = signed;
                }
                if signed < -tol {
                    violations.push(BernsteinViolation { s, order: n, value: signed });
                }
            }
        }
        BernsteinReport { min_scaled, violations, tol }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinViolation {
    pub s: f64,
    pub order: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    /// Minimum over the grid of `(-1)^{n-1} sⁿ g⁽ⁿ⁾/(n! g)` for n = 1, 2, ...
    pub min_scaled: Vec<f64>,
    pub violations: Vec<BernsteinViolation>,
    pub tol: f64,
}

impl BernsteinReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Log-spaced grid with `n` points between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| if i == n - 1 { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() }).collect()
}
