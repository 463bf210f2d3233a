//! The renewal process `N_A` whose interarrival times have survival function
//! `u_A`: distributions and moments by inversion, and Monte Carlo paths.
//!
//! Paths are generated from interarrival samples only. The process admits no
//! time-change representation through an inverse subordinator, so there is no
//! shortcut around sampling `Z_A` one epoch at a time.

use num_complex::Complex64;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{vo_derivative, KernelPair};
use crate::laplace::{invert, invert_point, invert_with_fallback, ContourPlan};
use crate::order::{log_grid, OrderFunction};
use crate::relaxation::{self, tail_model, RelaxationSolution};
use crate::sampled::{SampledFunction, TailPolicy};
use crate::special::gamma;

/// Partial-sum level at which the pmf series is truncated.
pub const PMF_TAIL: f64 = 1e-6;
/// Largest count index used by pmf truncation.
pub const PMF_K_CAP: usize = 200;
/// Events allowed on a single path before the simulation gives up.
pub const PATH_EVENT_CAP: usize = 10_000_000;

const SAMPLER_POINTS: usize = 2000;
const SAMPLER_HEAD: f64 = 1e-4;
const SAMPLER_TAIL_LEVEL: f64 = 0.01;
/// Relative agreement with the Tauberian model required at the stitch point.
const SAMPLER_TAIL_MATCH: f64 = 0.05;

/// Inverse-transform sampler for `Z_A` with `P(Z_A > t) = u_A(t)`.
///
/// Between `u = 1 − 1e−4` and the tail stitch (where `u ≤ 0.01` and the
/// Tauberian model is within 5%), `ln t` is interpolated linearly in `ln u`
/// on 2000 log-spaced points. Above the grid the small-time expansion
/// `1 − u ≈ λt^{α′}/Γ(1+α′)` is inverted; below it the tail model's shape,
/// stitched continuously at the last grid point.
#[derive(Debug, Clone)]
pub struct Sampler {
    ln_t: Vec<f64>,
    ln_u: Vec<f64>,
    alpha_initial: f64,
    lambda: f64,
    tail: TailPolicy,
}

impl Sampler {
    pub fn new(order: &OrderFunction, lambda: f64, plan: &ContourPlan) -> Result<Self> {
        let a0 = order.alpha_initial();
        let t_lo = (SAMPLER_HEAD * gamma(1.0 + a0) / lambda).powf(1.0 / a0);
        let tail = tail_model(order, lambda);
        let mut t_hi = match tail {
            TailPolicy::PowerLaw { exponent, coefficient } => (SAMPLER_TAIL_LEVEL / coefficient).powf(1.0 / exponent),
            TailPolicy::Exponential { rate, .. } => (1.0 / SAMPLER_TAIL_LEVEL).ln() / rate,
            TailPolicy::None => unreachable!("tail_model always returns a model"),
        }
        .max(2.0 * t_lo);
        let plan = ContourPlan { spot_check: false, ..*plan };
        let u = relaxation::u_transform(order, lambda);
        for _ in 0..40 {
            let v = invert_point(&u, &plan, t_hi)?.value;
            let model = tail_value(tail, t_hi);
            if v <= SAMPLER_TAIL_LEVEL && (v - model).abs() <= SAMPLER_TAIL_MATCH * model {
                break;
            }
            t_hi *= 1.5;
        }
        let grid = log_grid(t_lo, t_hi, SAMPLER_POINTS);
        let mut ln_u = Vec::with_capacity(grid.len());
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let v = invert_point(&u, &plan, t)?.value;
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("u_A({t}) = {v} is not a valid survival probability")));
            }
            // enforce strict monotonicity against inversion noise
            let lv = v.ln().min(prev - 1e-15);
            ln_u.push(lv);
            prev = lv;
        }
        let last = (*grid.last().unwrap(), ln_u.last().unwrap().exp());
        let model = tail_value(tail, last.0);
        if (last.1 - model).abs() > 0.1 * model {
            return Err(Error::param(format!(
                "tail model {model:.4e} does not match u_A({}) = {:.4e} within 10%",
                last.0, last.1
            )));
        }
        Ok(Self { ln_t: grid.iter().map(|t| t.ln()).collect(), ln_u, alpha_initial: a0, lambda, tail })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.ln_t[0].exp(), self.ln_t.last().unwrap().exp())
    }

    /// Survival level at the tail stitch.
    pub fn tail_level(&self) -> f64 {
        self.ln_u.last().unwrap().exp()
    }

    /// `u_A⁻¹(level)` for a survival level in `(0, 1)`.
    pub fn quantile(&self, level: f64) -> f64 {
        let lu = level.ln();
        let n = self.ln_u.len();
        if lu >= self.ln_u[0] {
            return ((1.0 - level) * gamma(1.0 + self.alpha_initial) / self.lambda).powf(1.0 / self.alpha_initial);
        }
        if lu <= self.ln_u[n - 1] {
            let (t_n, u_n) = (self.ln_t[n - 1].exp(), self.ln_u[n - 1].exp());
            return match self.tail {
                TailPolicy::PowerLaw { exponent, .. } => t_n * (level / u_n).powf(1.0 / exponent),
                TailPolicy::Exponential { rate, .. } => t_n - (level / u_n).ln() / rate,
                TailPolicy::None => t_n,
            };
        }
        // ln_u is strictly decreasing
        let i = self.ln_u.partition_point(|&x| x > lu).clamp(1, n - 1);
        let (u0, u1) = (self.ln_u[i - 1], self.ln_u[i]);
        let w = (lu - u0) / (u1 - u0);
        (self.ln_t[i - 1] + w * (self.ln_t[i] - self.ln_t[i - 1])).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let level: f64 = rng.sample(Open01);
        self.quantile(level)
    }
}

fn tail_value(tail: TailPolicy, t: f64) -> f64 {
    match tail {
        TailPolicy::PowerLaw { exponent, coefficient } => coefficient * t.powf(exponent),
        TailPolicy::Exponential { rate, coefficient } => coefficient * (-rate * t).exp(),
        TailPolicy::None => f64::NAN,
    }
}

#[derive(Debug, Clone)]
pub struct RenewalModel {
    pub sol: RelaxationSolution,
    pub lambda: f64,
    pub sampler: Sampler,
}

impl RenewalModel {
    /// Builds `u_A` on `grid` and the interarrival sampler.
    pub fn new(order: &OrderFunction, lambda: f64, plan: &ContourPlan, grid: &[f64]) -> Result<Self> {
        let sol = relaxation::solve(order, lambda, plan, grid)?;
        let sampler = Sampler::new(order, lambda, plan)?;
        Ok(Self { sol, lambda, sampler })
    }

    /// Model with a default grid `[1e-4, 1e3]`.
    pub fn with_defaults(order: &OrderFunction, lambda: f64) -> Result<Self> {
        let plan = ContourPlan::default();
        Self::new(order, lambda, &plan, &log_grid(1e-4, 1e3, 200))
    }

    pub fn order(&self) -> &OrderFunction {
        &self.sol.order
    }

    /// `p̃_k(s) = λ^k s^{sA−1}/(λ+s^{sA})^{k+1}`.
    pub fn pmf_transform(&self, k: usize) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
        let (order, lambda) = (self.sol.order, self.lambda);
        move |s| {
            let p = order.power_sa_unchecked(s);
            let d = lambda + p;
            (lambda / d).powu(k as u32) * p / (s * d)
        }
    }

    /// Transform of `p_k′` for `k ≥ 1`: `λ^k s^{sA}/(λ+s^{sA})^{k+1}`.
    pub fn pmf_derivative_transform(&self, k: usize) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
        let (order, lambda) = (self.sol.order, self.lambda);
        move |s| {
            let p = order.power_sa_unchecked(s);
            let d = lambda + p;
            if k == 0 {
                -lambda / d
            } else {
                (lambda / d).powu(k as u32) * p / d
            }
        }
    }

    /// `P(T_k ≤ t)` transform: `λ^k/(s(λ+s^{sA})^k)`.
    pub fn epoch_cdf_transform(&self, k: usize) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
        let (order, lambda) = (self.sol.order, self.lambda);
        move |s| (lambda / (lambda + order.power_sa_unchecked(s))).powu(k as u32) / s
    }

    /// `r!λ^r/s^{r·sA+1}`.
    pub fn factorial_moment_transform(&self, r: usize) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
        let (order, lambda) = (self.sol.order, self.lambda);
        let scale = (1..=r).map(|j| j as f64 * lambda).product::<f64>();
        move |s| scale * (-(order.sa_unchecked(s) * r as f64 + 1.0) * s.ln()).exp()
    }

    /// `s^{sA−1}/(λ(1−u)+s^{sA})`.
    pub fn pgf_transform(&self, u: f64) -> impl Fn(Complex64) -> Complex64 + Sync + '_ {
        let (order, lambda) = (self.sol.order, self.lambda);
        move |s| {
            let p = order.power_sa_unchecked(s);
            p / (s * (lambda * (1.0 - u) + p))
        }
    }
}

/// `P(N_A(t) = k)` on `ts`. For large `k` the Talbot contour sees heavy
/// cancellation, so failed points are retried with de Hoog.
pub fn pmf(model: &RenewalModel, k: usize, ts: &[f64], plan: &ContourPlan) -> Result<SampledFunction> {
    invert_with_fallback(&model.pmf_transform(k), plan, ts)
}

/// Truncated pmf table: `p_0..p_K` where `K` is the smallest index whose
/// partial sum exceeds `1 − 1e−6` at every `t`, capped at 200.
#[derive(Debug, Clone, Serialize)]
pub struct PmfTable {
    pub ts: Vec<f64>,
    /// `rows[k][i] = p_k(ts[i])`.
    pub rows: Vec<Vec<f64>>,
    /// Per-time truncation index.
    pub k_of_t: Vec<usize>,
}

impl PmfTable {
    pub fn partial_sums(&self) -> Vec<f64> {
        (0..self.ts.len()).map(|i| self.rows.iter().map(|r| r[i]).sum()).collect()
    }

    pub fn to_csv(&self) -> String {
        use crate::sampled::fmt12;
        let mut out = String::from("t");
        for k in 0..self.rows.len() {
            out.push_str(&format!(",p{k}"));
        }
        out.push('\n');
        for (i, t) in self.ts.iter().enumerate() {
            out.push_str(&fmt12(*t));
            for r in &self.rows {
                out.push(',');
                out.push_str(&fmt12(r[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Computes `p_0..p_{k_min}` and continues until the truncation rule holds.
pub fn pmf_table(model: &RenewalModel, ts: &[f64], k_min: usize, plan: &ContourPlan) -> Result<PmfTable> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut sums = vec![0.0; ts.len()];
    let mut k_of_t = vec![usize::MAX; ts.len()];
    for k in 0..=PMF_K_CAP {
        let row = pmf(model, k, ts, plan)?.values().to_vec();
        for (i, v) in row.iter().enumerate() {
            sums[i] += v;
            if k_of_t[i] == usize::MAX && sums[i] > 1.0 - PMF_TAIL {
                k_of_t[i] = k;
            }
        }
        rows.push(row);
        if k >= k_min && k_of_t.iter().all(|&x| x != usize::MAX) {
            break;
        }
    }
    for k in k_of_t.iter_mut() {
        if *k == usize::MAX {
            *k = PMF_K_CAP;
        }
    }
    Ok(PmfTable { ts: ts.to_vec(), rows, k_of_t })
}

/// `|D^{α(t)} p_k(t) + λ(p_k(t) − p_{k−1}(t))|`, with `p_{−1} ≡ 0`.
pub fn pmf_residual(model: &RenewalModel, k: usize, t: f64, pair: &KernelPair) -> Result<f64> {
    let plan = ContourPlan { spot_check: false, ..pair.plan };
    let dtr = model.pmf_derivative_transform(k);
    let a0 = model.order().alpha_initial();
    // p_k ~ t^{kα′} near zero, so p_k′ ~ t^{kα′−1}
    let exponent = if k == 0 { 1.0 - a0 } else { (1.0 - k as f64 * a0).max(0.0) };
    let dp = |x: f64| Ok(invert_point(&dtr, &plan, x)?.value);
    let d = vo_derivative(dp, exponent, pair, t)?;
    let pk = invert_point(&model.pmf_transform(k), &plan, t)?.value;
    let pkm1 = if k == 0 { 0.0 } else { invert_point(&model.pmf_transform(k - 1), &plan, t)?.value };
    Ok((d + model.lambda * (pk - pkm1)).abs())
}

/// `E[N(N−1)…(N−r+1)]` on `ts`.
pub fn factorial_moment(model: &RenewalModel, r: usize, ts: &[f64], plan: &ContourPlan) -> Result<SampledFunction> {
    if r == 0 {
        return Err(Error::param("factorial moment order must be at least 1"));
    }
    invert(&model.factorial_moment_transform(r), plan, ts)
}

/// Probability generating function `E[u^{N_A(t)}]` on `ts`.
pub fn pgf(model: &RenewalModel, u: f64, ts: &[f64], plan: &ContourPlan) -> Result<SampledFunction> {
    if !(u > -1.0 && u < 1.0) {
        return Err(Error::domain(format!("pgf argument must lie in (-1, 1), got {u}")));
    }
    invert(&model.pgf_transform(u), plan, ts)
}

/// `P(T_k ≤ t)` on `ts`.
pub fn epoch_cdf(model: &RenewalModel, k: usize, ts: &[f64], plan: &ContourPlan) -> Result<SampledFunction> {
    invert(&model.epoch_cdf_transform(k), plan, ts)
}

/// One interarrival draw.
pub fn sample_interarrival<R: Rng + ?Sized>(model: &RenewalModel, rng: &mut R) -> f64 {
    model.sampler.sample(rng)
}

/// Per-path random stream derived from `(seed, path_index)`.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalPath {
    pub seed: u64,
    pub path_index: u64,
    /// Epochs up to the horizon followed by the first one beyond it.
    pub epochs: Vec<f64>,
    pub horizon: f64,
}

impl RenewalPath {
    /// `N_A(t)` for `t ≤ horizon`.
    pub fn count(&self, t: f64) -> usize {
        self.epochs.partition_point(|&e| e <= t)
    }
}

fn generate_path(sampler: &Sampler, horizon: f64, seed: u64, index: u64) -> Result<RenewalPath> {
    let mut rng = path_rng(seed, index);
    let mut epochs = Vec::new();
    let mut t = 0.0;
    while t <= horizon {
        if epochs.len() >= PATH_EVENT_CAP {
            return Err(Error::Budget(format!("path {index} exceeded {PATH_EVENT_CAP} events before t = {horizon}")));
        }
        t += sampler.sample(&mut rng);
        epochs.push(t);
    }
    Ok(RenewalPath { seed, path_index: index, epochs, horizon })
}

/// `n_paths` independent paths on `[0, horizon]`, reproducible from `seed`
/// regardless of the worker count.
pub fn simulate(model: &RenewalModel, horizon: f64, n_paths: usize, seed: u64) -> Result<Vec<RenewalPath>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    (0..n_paths as u64).into_par_iter().map(|i| generate_path(&model.sampler, horizon, seed, i)).collect()
}

/// Counts `N_A(t)` at each of the sorted `times` for `n_paths` paths, without
/// storing epochs. Row `i` belongs to path `i`.
pub fn simulate_counts(model: &RenewalModel, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) || !(times[0] >= 0.0) {
        return Err(Error::param("count times must be non-empty, non-negative and sorted"));
    }
    let horizon = *times.last().unwrap();
    (0..n_paths as u64).into_par_iter().map(|i| count_path(&model.sampler, times, horizon, seed, i)).collect()
}

pub(crate) fn count_path(sampler: &Sampler, times: &[f64], horizon: f64, seed: u64, index: u64) -> Result<Vec<u64>> {
    count_with(sampler, times, horizon, &mut path_rng(seed, index))
}

/// Counts at the sorted `times`, drawing interarrivals from `rng`.
pub fn count_with<R: Rng + ?Sized>(sampler: &Sampler, times: &[f64], horizon: f64, rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; times.len()];
    let mut t = sampler.sample(rng);
    let mut n = 0u64;
    let mut j = 0;
    while j < times.len() {
        while j < times.len() && t > times[j] {
            counts[j] = n;
            j += 1;
        }
        if t > horizon {
            break;
        }
        n += 1;
        if n as usize > PATH_EVENT_CAP {
            return Err(Error::Budget(format!("a path exceeded {PATH_EVENT_CAP} events before t = {horizon}")));
        }
        t += sampler.sample(rng);
    }
    Ok(counts)
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanProbe {
    /// `(n, running mean of the first n draws)`.
    pub checkpoints: Vec<(usize, f64)>,
    /// Last checkpoint mean over first checkpoint mean.
    pub growth_ratio: f64,
}

/// Running sample mean of `Z_A` at `n = 10³, 10⁴, …, n_max`.
pub fn mean_divergence_probe(model: &RenewalModel, n: usize, seed: u64) -> Result<MeanProbe> {
    if n < 10_000 {
        return Err(Error::param(format!("mean probe needs at least 1e4 draws, got {n}")));
    }
    let mut rng = path_rng(seed, 0);
    let mut marks: Vec<usize> =
        std::iter::successors(Some(1000usize), |m| Some(m * 10)).take_while(|&m| m <= n).collect();
    if *marks.last().unwrap() != n {
        marks.push(n);
    }
    let mut sum = 0.0;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut next = 0;
    for i in 1..=n {
        sum += model.sampler.sample(&mut rng);
        if i == marks[next] {
            checkpoints.push((i, sum / i as f64));
            next += 1;
        }
    }
    let growth_ratio = checkpoints.last().unwrap().1 / checkpoints[0].1;
    Ok(MeanProbe { checkpoints, growth_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_pmf() {
        let order = OrderFunction::constant(1.0).unwrap();
        let model = RenewalModel::with_defaults(&order, 1.0).unwrap();
        let p2 = pmf(&model, 2, &[1.0], &ContourPlan::default()).unwrap();
        assert!((p2.values()[0] - (-1f64).exp() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_sampler_quantiles() {
        let order = OrderFunction::constant(1.0).unwrap();
        let model = RenewalModel::with_defaults(&order, 2.0).unwrap();
        for level in [0.99999, 0.9, 0.5, 0.1, 0.02, 1e-3, 1e-6] {
            let t = model.sampler.quantile(level);
            assert!((t - (-level.ln() / 2.0)).abs() < 1e-4 * t.max(1e-3), "level = {level}");
        }
    }

    #[test]
    fn count_path_matches_full_path() {
        let order = OrderFunction::exp_transition(0.7, 0.9, 1.0).unwrap();
        let model = RenewalModel::with_defaults(&order, 1.0).unwrap();
        let times = [0.5, 1.0, 5.0];
        for i in 0..50 {
            let path = generate_path(&model.sampler, 5.0, 7, i).unwrap();
            let counts = count_path(&model.sampler, &times, 5.0, 7, i).unwrap();
            for (t, c) in times.iter().zip(&counts) {
                assert_eq!(path.count(*t) as u64, *c);
            }
        }
    }
}
