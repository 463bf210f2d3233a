//! Continuous-time random walk `Y_A(t) = Σ_{i ≤ N_A(t)} X_i` with symmetric
//! jumps, and its scaling limit `c^{−α″/β} Y_A(ct)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::ContourPlan;
use crate::mittag_leffler::ml1;
use crate::order::OrderFunction;
use crate::quad::adaptive;
use crate::renewal::{count_with, path_rng, Sampler};
use crate::sampled::fmt12;
use crate::special::gamma;

/// Expected events per path above which a simulation is refused.
pub const CTRW_EVENT_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpLaw {
    /// `N(0, 2)`, so that `f̂(κ) = e^{−κ²}`; requires `β = 2`.
    Gaussian,
    /// Symmetric Pareto `|X| > x_m` with tail index `β < 2`, scaled so that
    /// `f̂(κ) = 1 − |κ|^β + o(|κ|^β)`.
    ParetoSymmetric,
    /// Exact symmetric stable law with `f̂(κ) = e^{−|κ|^β}`.
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtrwConfig {
    pub order: OrderFunction,
    pub lambda: f64,
    pub beta: f64,
    /// Rescaling constant `c`.
    pub scale: f64,
    pub jump: JumpLaw,
}

impl CtrwConfig {
    pub fn new(order: OrderFunction, lambda: f64, beta: f64, scale: f64, jump: JumpLaw) -> Result<Self> {
        let cfg = Self { order, lambda, beta, scale, jump };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("rate lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta > 0.0 && self.beta <= 2.0) {
            return Err(Error::param(format!("stability index beta must lie in (0, 2], got {}", self.beta)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param(format!("scale c must be positive, got {}", self.scale)));
        }
        match self.jump {
            JumpLaw::Gaussian if self.beta != 2.0 => Err(Error::param("gaussian jumps require beta = 2")),
            JumpLaw::ParetoSymmetric if self.beta >= 2.0 => Err(Error::param("pareto jumps require beta < 2")),
            _ => Ok(()),
        }
    }

    /// Exponent `α″/β` of the spatial rescaling.
    pub fn space_exponent(&self) -> f64 {
        self.order.alpha_final() / self.beta
    }

    /// Jump characteristic function `f̂_X(κ)`.
    pub fn jump_chf(&self, kappa: f64) -> f64 {
        let k = kappa.abs();
        match self.jump {
            JumpLaw::Gaussian => (-k * k).exp(),
            JumpLaw::Stable => (-k.powf(self.beta)).exp(),
            JumpLaw::ParetoSymmetric => pareto_chf(self.beta, k),
        }
    }

    /// Limit characteristic function `E_{α″}(−λt^{α″}|κ|^β)`.
    pub fn limit_chf(&self, t: f64, kappa: f64) -> Result<f64> {
        let a = self.order.alpha_final();
        ml1(a, -self.lambda * t.powf(a) * kappa.abs().powf(self.beta))
    }
}

/// `x_m^β` for the symmetric Pareto law with `f̂(κ) = 1 − |κ|^β + o(|κ|^β)`.
pub fn pareto_scale_pow(beta: f64) -> f64 {
    if (beta - 1.0).abs() < 1e-12 {
        2.0 / PI
    } else {
        1.0 / (gamma(1.0 - beta) * (PI * beta / 2.0).cos())
    }
}

/// `f̂(κ) = 1 − |κ|^β + β a^β ∫₀^a (1 − cos u) u^{−β−1} du`, `a = |κ| x_m`.
fn pareto_chf(beta: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    let a = k * pareto_scale_pow(beta).powf(1.0 / beta);
    let b = a.min(1.0);
    // the integrand behaves like u^{1−β} at the origin, so [0, b] uses the series
    let mut head = 0.0;
    let mut term = 1.0;
    for j in 1..30 {
        term *= -b * b / ((2 * j - 1) * 2 * j) as f64;
        let next = -term * b.powf(-beta) / (2.0 * j as f64 - beta);
        head += next;
        if next.abs() < 1e-17 * head.abs() {
            break;
        }
    }
    if a > b {
        let (tail, _) = adaptive(|u| 2.0 * (0.5 * u).sin().powi(2) * u.powf(-beta - 1.0), b, a, 1e-15, 1e-13, 4000);
        head += tail;
    }
    1.0 - k.powf(beta) + beta * a.powf(beta) * head
}

/// `L{f̂_{Y_A}(κ, ·)}(s) = s^{sA−1}/(s^{sA} + λ[1 − f̂_X(κ)])`.
pub fn chf_lt(cfg: &CtrwConfig, kappa: f64, s: Complex64) -> Result<Complex64> {
    let p = cfg.order.power_sa(s)?;
    Ok(p / (s * (p + cfg.lambda * (1.0 - cfg.jump_chf(kappa)))))
}

/// Symmetric `β`-stable draw with `E e^{iκX} = e^{−|κ|^β}`
/// (Chambers-Mallows-Stuck).
pub fn sample_stable_jump<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.sample::<f64, _>(Open01) - 0.5);
    let w: f64 = Exp1.sample(rng);
    if beta == 1.0 {
        return v.tan();
    }
    (beta * v).sin() / v.cos().powf(1.0 / beta) * (((1.0 - beta) * v).cos() / w).powf((1.0 - beta) / beta)
}

/// Symmetric Pareto draw with tail index `β`.
pub fn sample_pareto_jump<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let x_m = pareto_scale_pow(beta).powf(1.0 / beta);
    let u: f64 = rng.sample(Open01);
    let magnitude = x_m * u.powf(-1.0 / beta);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Sum of `n` i.i.d. jumps.
fn jump_sum<R: Rng + ?Sized>(cfg: &CtrwConfig, n: u64, rng: &mut R) -> f64 {
    if n == 0 {
        return 0.0;
    }
    match cfg.jump {
        JumpLaw::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            (2.0 * n as f64).sqrt() * z
        }
        JumpLaw::Stable => (n as f64).powf(1.0 / cfg.beta) * sample_stable_jump(cfg.beta, rng),
        JumpLaw::ParetoSymmetric => (0..n).map(|_| sample_pareto_jump(cfg.beta, rng)).sum(),
    }
}

/// Rough upper bound on the mean number of renewals on `[0, h]`.
fn expected_events(cfg: &CtrwConfig, h: f64) -> f64 {
    [cfg.order.alpha_initial(), cfg.order.alpha_final()]
        .iter()
        .map(|&a| cfg.lambda * h.powf(a) / gamma(1.0 + a))
        .fold(0.0, f64::max)
}

/// A CTRW configuration together with its interarrival sampler.
#[derive(Debug, Clone)]
pub struct Ctrw {
    pub cfg: CtrwConfig,
    sampler: Sampler,
}

impl Ctrw {
    pub fn new(cfg: CtrwConfig, plan: &ContourPlan) -> Result<Self> {
        cfg.validate()?;
        let sampler = Sampler::new(&cfg.order, cfg.lambda, plan)?;
        Ok(Self { cfg, sampler })
    }

    /// Samples of `c^{−α″/β} Y_A(ct)` for the configured scale `c`.
    pub fn simulate(&self, t: f64, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
        self.simulate_at_scale(self.cfg.scale, t, n_paths, seed)
    }

    pub fn simulate_at_scale(&self, c: f64, t: f64, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
        if !(t > 0.0 && t.is_finite()) || !(c > 0.0) {
            return Err(Error::param(format!("need t > 0 and c > 0, got t = {t}, c = {c}")));
        }
        let horizon = c * t;
        let expected = expected_events(&self.cfg, horizon);
        if expected > CTRW_EVENT_BUDGET {
            return Err(Error::Budget(format!(
                "about {expected:.3e} renewals per path on [0, {horizon}] exceeds {CTRW_EVENT_BUDGET:.0e}"
            )));
        }
        let factor = c.powf(-self.cfg.space_exponent());
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, i);
                let n = count_with(&self.sampler, &[horizon], horizon, &mut rng)?[0];
                Ok(factor * jump_sum(&self.cfg, n, &mut rng))
            })
            .collect()
    }
}

/// Samples of `c^{−α″/β} Y_A(ct)`.
pub fn simulate_ctrw(cfg: &CtrwConfig, t: f64, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
    Ctrw::new(*cfg, &ContourPlan::default())?.simulate(t, n_paths, seed)
}

/// Empirical characteristic function `(mean cos κY, mean sin κY)`.
pub fn empirical_chf(samples: &[f64], kappa: f64) -> Complex64 {
    let n = samples.len() as f64;
    let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), &y| {
        let (sn, cs) = (kappa * y).sin_cos();
        (c + cs, s + sn)
    });
    Complex64::new(c / n, s / n)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub c: f64,
    pub kappa: f64,
    pub emp_re: f64,
    pub emp_im: f64,
    pub limit: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub t: f64,
    pub n_paths: usize,
    pub rows: Vec<LimitRow>,
    /// `(c, sup_κ |emp − limit|)` along the ladder.
    pub sup_distance: Vec<(f64, f64)>,
    /// `n^{−1/2}`.
    pub noise_floor: f64,
}

impl LimitReport {
    /// Distances never grow by more than twice the noise floor along the ladder.
    pub fn non_increasing(&self) -> bool {
        self.sup_distance.windows(2).all(|w| w[1].1 <= w[0].1 + 2.0 * self.noise_floor)
    }

    pub fn final_distance(&self) -> f64 {
        self.sup_distance.last().map_or(f64::NAN, |d| d.1)
    }

    /// Largest `|Im|` of the empirical chf.
    pub fn max_imaginary(&self) -> f64 {
        self.rows.iter().map(|r| r.emp_im.abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,kappa,emp_re,emp_im,limit,abs_err\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt12(r.c),
                fmt12(r.kappa),
                fmt12(r.emp_re),
                fmt12(r.emp_im),
                fmt12(r.limit),
                fmt12(r.abs_err)
            ));
        }
        out
    }
}

/// Empirical chf of `c^{−α″/β} Y_A(ct)` against `E_{α″}(−λt^{α″}|κ|^β)` for
/// each `c` of an increasing ladder. Rung `i` uses the stream seed `seed + i`.
pub fn limit_experiment(
    cfg: &CtrwConfig,
    t: f64,
    kappas: &[f64],
    c_ladder: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<LimitReport> {
    if c_ladder.is_empty() || c_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("c ladder must be non-empty and strictly increasing"));
    }
    if n_paths == 0 {
        return Err(Error::param("need at least one path"));
    }
    let walk = Ctrw::new(*cfg, &ContourPlan::default())?;
    let limits: Vec<f64> = kappas.iter().map(|&k| cfg.limit_chf(t, k)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut sup_distance = Vec::new();
    for (i, &c) in c_ladder.iter().enumerate() {
        let samples = walk.simulate_at_scale(c, t, n_paths, seed.wrapping_add(i as u64))?;
        let mut sup: f64 = 0.0;
        for (&kappa, &limit) in kappas.iter().zip(&limits) {
            let emp = empirical_chf(&samples, kappa);
            let abs_err = (emp - limit).norm();
            sup = sup.max(abs_err);
            rows.push(LimitRow { c, kappa, emp_re: emp.re, emp_im: emp.im, limit, abs_err });
        }
        sup_distance.push((c, sup));
    }
    Ok(LimitReport { t, n_paths, rows, sup_distance, noise_floor: 1.0 / (n_paths as f64).sqrt() })
}
