//! The Scarpi kernel pair `φ_A = L⁻¹{s^{sA(s)−1}}`, `ψ_A = L⁻¹{s^{−sA(s)}}`
//! and the variable-order derivative and integral built on them.
//!
//! Both kernels are weakly singular at the origin (`φ_A ~ t^{−α′}`,
//! `ψ_A ~ t^{α′−1}`). Convolutions are split at `t/2` and each half is mapped
//! with `τ = h·w^p`, `p = 1/(1−e)`, which cancels an endpoint singularity of
//! exponent `e`; the smooth remainder goes to Gauss-Legendre. Kernel values at
//! quadrature nodes come from direct inversion.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace::{invert, invert_point, ContourPlan};
use crate::order::OrderFunction;
use crate::quad::{gauss32, GaussLegendre};
use crate::sampled::{fmt12, SampledFunction};

/// Number of Gauss-Legendre sub-panels on each half of a convolution.
const PANELS: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct KernelPair {
    pub phi: SampledFunction,
    pub psi: SampledFunction,
    pub order: OrderFunction,
    pub plan: ContourPlan,
}

fn phi_transform(order: &OrderFunction) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
    move |s| order.power_sa_shifted(s, -1.0)
}

fn psi_transform(order: &OrderFunction) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
    move |s| (-order.sa_unchecked(s) * s.ln()).exp()
}

/// Sample `φ_A` and `ψ_A` on `grid`.
///
/// The classical order `α ≡ 1` has `φ = δ`; its pair stores `φ ≡ 0` and the
/// operators fall back to the ordinary derivative and integral.
pub fn kernels(order: &OrderFunction, plan: &ContourPlan, grid: &[f64]) -> Result<KernelPair> {
    if grid.is_empty() || grid[0] <= 0.0 {
        return Err(Error::domain("kernel grid must be non-empty and exclude t = 0"));
    }
    let (phi, psi) = if order.alpha_initial() >= 1.0 {
        (
            SampledFunction::new(grid.to_vec(), vec![0.0; grid.len()])?,
            SampledFunction::new(grid.to_vec(), vec![1.0; grid.len()])?,
        )
    } else {
        (invert(&phi_transform(order), plan, grid)?, invert(&psi_transform(order), plan, grid)?)
    };
    Ok(KernelPair { phi, psi, order: *order, plan: *plan })
}

impl KernelPair {
    fn classical(&self) -> bool {
        self.order.alpha_initial() >= 1.0
    }

    fn point_plan(&self) -> ContourPlan {
        ContourPlan { spot_check: false, ..self.plan }
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.phi.t_max() * (1.0 + 1e-12) {
            return Err(Error::domain(format!("t = {t} outside the kernel grid (0, {}]", self.phi.t_max())));
        }
        Ok(())
    }

    /// `φ_A(t)` by direct inversion.
    pub fn phi_at(&self, t: f64) -> Result<f64> {
        Ok(invert_point(&phi_transform(&self.order), &self.point_plan(), t)?.value)
    }

    /// `ψ_A(t)` by direct inversion.
    pub fn psi_at(&self, t: f64) -> Result<f64> {
        if self.classical() {
            return Ok(1.0);
        }
        Ok(invert_point(&psi_transform(&self.order), &self.point_plan(), t)?.value)
    }

    /// Singularity exponents of `φ_A` and `ψ_A` at the origin.
    pub fn exponents(&self) -> (f64, f64) {
        let a = self.order.alpha_initial();
        (a, 1.0 - a)
    }

    /// `t, phi, psi` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,phi,psi\n");
        for ((t, p), q) in self.phi.grid().iter().zip(self.phi.values()).zip(self.psi.values()) {
            out.push_str(&format!("{},{},{}\n", fmt12(*t), fmt12(*p), fmt12(*q)));
        }
        out
    }
}

/// Integral of `g` over `[0, h]` where `g(τ) ~ τ^{−e}` at the origin.
fn graded_panel(rule: &GaussLegendre, h: f64, e: f64, g: &mut impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let p = if e > 0.0 { 1.0 / (1.0 - e) } else { 1.0 };
    let mut total = 0.0;
    for k in 0..PANELS {
        let (w0, w1) = (k as f64 / PANELS as f64, (k + 1) as f64 / PANELS as f64);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = w0 + (w1 - w0) * x;
            let tau = h * u.powf(p);
            let jac = h * p * u.powf(p - 1.0) * (w1 - w0);
            total += w * jac * g(tau)?;
        }
    }
    Ok(total)
}

/// `∫₀^t a(τ) b(t−τ) dτ` for `a(τ) ~ τ^{−ea}` and `b(τ) ~ τ^{−eb}` near 0.
pub fn split_convolution(
    a: impl Fn(f64) -> Result<f64>,
    ea: f64,
    b: impl Fn(f64) -> Result<f64>,
    eb: f64,
    t: f64,
) -> Result<f64> {
    if !(ea < 1.0 && eb < 1.0) {
        return Err(Error::param(format!("convolution exponents must be below 1, got {ea}, {eb}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let rule = gauss32();
    let h = 0.5 * t;
    let left = graded_panel(rule, h, ea, &mut |tau| Ok(a(tau)? * b(t - tau)?))?;
    let right = graded_panel(rule, h, eb, &mut |sigma| Ok(a(t - sigma)? * b(sigma)?))?;
    Ok(left + right)
}

/// `(φ_A ∗ ψ_A)(t) − 1`; zero for a Sonine pair.
pub fn sonine_residual(pair: &KernelPair, t: f64) -> Result<f64> {
    pair.check_t(t)?;
    if pair.classical() {
        return Ok(0.0);
    }
    let (ep, eq) = pair.exponents();
    Ok(split_convolution(|x| pair.phi_at(x), ep, |x| pair.psi_at(x), eq, t)? - 1.0)
}

/// `D^{α(t)} f(t) = ∫₀^t φ_A(t−τ) f′(τ) dτ` given `f′` with `f′(τ) ~ τ^{−e}`.
pub fn vo_derivative(
    fprime: impl Fn(f64) -> Result<f64>,
    fprime_exponent: f64,
    pair: &KernelPair,
    t: f64,
) -> Result<f64> {
    pair.check_t(t)?;
    if pair.classical() {
        return fprime(t);
    }
    split_convolution(fprime, fprime_exponent, |x| pair.phi_at(x), pair.exponents().0, t)
}

/// `I^{α(t)} f(t) = ∫₀^t ψ_A(t−τ) f(τ) dτ` given `f(τ) ~ τ^{−e}`.
pub fn vo_integral(f: impl Fn(f64) -> Result<f64>, f_exponent: f64, pair: &KernelPair, t: f64) -> Result<f64> {
    pair.check_t(t)?;
    split_convolution(f, f_exponent, |x| pair.psi_at(x), pair.exponents().1, t)
}

/// [`vo_derivative`] for a sampled function covering `[0, t]`, differentiated
/// through its monotone cubic interpolant.
pub fn vo_derivative_sampled(f: &SampledFunction, pair: &KernelPair, t: f64) -> Result<f64> {
    if f.t_min() > 0.0 || t > f.t_max() {
        return Err(Error::domain(format!("sampled function must cover [0, {t}]")));
    }
    vo_derivative(|x| f.derivative(x), 0.0, pair, t)
}

/// [`vo_integral`] for a sampled function covering `[0, t]`.
pub fn vo_integral_sampled(f: &SampledFunction, pair: &KernelPair, t: f64) -> Result<f64> {
    if f.t_min() > 0.0 || t > f.t_max() {
        return Err(Error::domain(format!("sampled function must cover [0, {t}]")));
    }
    vo_integral(|x| f.eval(x), 0.0, pair, t)
}

/// `D I f (t)` for smooth `f`, using `(I f)′(τ) = ψ_A(τ) f(0) + (ψ_A ∗ f′)(τ)`.
pub fn derivative_of_integral(
    f: impl Fn(f64) -> f64,
    fprime: impl Fn(f64) -> f64,
    pair: &KernelPair,
    t: f64,
) -> Result<f64> {
    let f0 = f(0.0);
    let eq = pair.exponents().1;
    let integral_prime = |tau: f64| -> Result<f64> {
        let conv = split_convolution(|x| pair.psi_at(x), eq, |x| Ok(fprime(x)), 0.0, tau)?;
        Ok(pair.psi_at(tau)? * f0 + conv)
    };
    let exponent = if f0 != 0.0 { eq } else { 0.0 };
    vo_derivative(integral_prime, exponent, pair, t)
}

/// `I D f (t)` for smooth `f`; equals `f(t) − f(0)`.
pub fn integral_of_derivative(fprime: impl Fn(f64) -> f64, pair: &KernelPair, t: f64) -> Result<f64> {
    let ep = pair.exponents().0;
    let d = |tau: f64| -> Result<f64> {
        if pair.classical() {
            return Ok(fprime(tau));
        }
        split_convolution(|x| Ok(fprime(x)), 0.0, |x| pair.phi_at(x), ep, tau)
    };
    vo_integral(d, 0.0, pair, t)
}
