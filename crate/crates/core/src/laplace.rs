//! Numerical inverse Laplace transforms for functions analytic off the
//! negative real axis.
//!
//! Two engines are provided:
//!
//! * fixed Talbot: trapezoidal rule on the contour `s(θ) = rθ(cot θ + i)`,
//!   `r = 2M/(5t)`, one contour per time point;
//! * de Hoog: Fourier series on the Bromwich line `Re s = γ` accelerated by
//!   the quotient-difference continued fraction.
//!
//! In double precision the fixed Talbot error bottoms out near M ≈ 20-30 and
//! grows again beyond that (the factor `e^{rt} = e^{0.4M}` amplifies
//! rounding), so the a posteriori error estimate compares M against 5M/6
//! nodes and escalation grows M by half at a time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampled::SampledFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "talbot-fixed")]
    TalbotFixed,
    #[serde(rename = "dehoog-epsilon")]
    DeHoog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourPlan {
    pub method: Method,
    pub nodes: usize,
    pub target_rel_err: f64,
    pub t_window: (f64, f64),
    /// Cross-check the other engine on the first, middle and last point.
    #[serde(default = "default_true")]
    pub spot_check: bool,
}

fn default_true() -> bool {
    true
}

/// Largest node count tried while refining; beyond this rounding dominates.
const TALBOT_MAX_NODES: usize = 64;
const DEHOOG_MAX_NODES: usize = 64;
/// `nodes²` guardrail for double inversions.
pub const DOUBLE_NODE_BUDGET: usize = 10_000;

impl Default for ContourPlan {
    fn default() -> Self {
        Self { method: Method::TalbotFixed, nodes: 24, target_rel_err: 1e-8, t_window: (1e-12, 1e12), spot_check: true }
    }
}

impl ContourPlan {
    pub fn new(method: Method, nodes: usize, target_rel_err: f64, t_window: (f64, f64)) -> Result<Self> {
        let plan = Self { method, nodes, target_rel_err, t_window, spot_check: true };
        plan.validate()?;
        Ok(plan)
    }

    pub fn talbot() -> Self {
        Self::default()
    }

    pub fn dehoog() -> Self {
        Self { method: Method::DeHoog, nodes: 20, ..Self::default() }
    }

    /// De Hoog plan for double inversions. The target is loose because
    /// kinks along `t₁ = t₂` limit the attainable accuracy there.
    pub fn double_default() -> Self {
        Self { method: Method::DeHoog, nodes: 32, target_rel_err: 1e-3, ..Self::default() }
    }

    pub fn with_window(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_window = (t_min, t_max);
        self
    }

    pub fn with_target(mut self, target_rel_err: f64) -> Self {
        self.target_rel_err = target_rel_err;
        self
    }

    pub fn without_spot_check(mut self) -> Self {
        self.spot_check = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::param(format!("plan needs at least 8 nodes, got {}", self.nodes)));
        }
        if !(self.target_rel_err > 1e-14 && self.target_rel_err < 1e-2) {
            return Err(Error::param(format!("target_rel_err must lie in (1e-14, 1e-2), got {}", self.target_rel_err)));
        }
        let (lo, hi) = self.t_window;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::param(format!("t_window must satisfy 0 < t_min <= t_max, got ({lo}, {hi})")));
        }
        Ok(())
    }

    /// The same plan on the other engine at its default node count.
    pub fn other_engine(&self) -> Self {
        match self.method {
            Method::TalbotFixed => Self { method: Method::DeHoog, nodes: 20, ..*self },
            Method::DeHoog => Self { method: Method::TalbotFixed, nodes: 24, ..*self },
        }
    }

    fn max_nodes(&self) -> usize {
        match self.method {
            Method::TalbotFixed => TALBOT_MAX_NODES,
            Method::DeHoog => DEHOOG_MAX_NODES,
        }
        .max(self.nodes)
    }
}

/// Fixed Talbot evaluation of a real-valued inverse at one point.
pub fn talbot<F: Fn(Complex64) -> Complex64 + ?Sized>(f: &F, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut sum = 0.5 * ((r * t).exp() * f(Complex64::new(r, 0.0))).re;
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m as f64 * sum
}

/// Fixed Talbot on the full contour, for transforms without real symmetry.
pub fn talbot_complex<F: Fn(Complex64) -> Complex64 + ?Sized>(f: &F, t: f64, m: usize) -> Complex64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut sum = (r * t).exp() * f(Complex64::new(r, 0.0));
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = 1.0 / theta.tan();
        let sigma = theta + (theta * cot - 1.0) * cot;
        let s = Complex64::new(r * theta * cot, r * theta);
        let sc = s.conj();
        sum += (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        sum += (sc * t).exp() * f(sc) * Complex64::new(1.0, -sigma);
    }
    sum * (r / (2.0 * m as f64))
}

fn dehoog_tolerance(m: usize) -> f64 {
    10f64.powf(-(m as f64 / 2.0 + 2.0)).clamp(1e-16, 1e-8)
}

/// Nodes `p_k = γ + iπk/T`, `k = 0..2M`, used by [`dehoog`] at time `t`.
fn dehoog_nodes(t: f64, m: usize) -> (f64, f64, Vec<Complex64>) {
    let big_t = 2.0 * t;
    let gamma = -dehoog_tolerance(m).ln() / (2.0 * big_t);
    let nodes = (0..=2 * m).map(|k| Complex64::new(gamma, PI * k as f64 / big_t)).collect();
    (big_t, gamma, nodes)
}

/// De Hoog, Knight & Stokes evaluation of a real-valued inverse at one point.
pub fn dehoog<F: Fn(Complex64) -> Complex64 + ?Sized>(f: &F, t: f64, m: usize) -> f64 {
    let (_, _, nodes) = dehoog_nodes(t, m);
    let fp: Vec<Complex64> = nodes.iter().map(|&p| f(p)).collect();
    dehoog_from_samples(&fp, t, m)
}

fn dehoog_from_samples(fp: &[Complex64], t: f64, m: usize) -> f64 {
    let n = 2 * m + 1;
    debug_assert_eq!(fp.len(), n);
    let (big_t, gamma, _) = dehoog_nodes(t, m);
    let scale = fp.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return if scale == 0.0 { 0.0 } else { f64::NAN };
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut e = vec![vec![zero; m + 1]; n];
    let mut q = vec![vec![zero; m]; 2 * m];
    q[0][0] = fp[1] / (fp[0] * 0.5);
    for i in 1..2 * m {
        q[i][0] = fp[i + 1] / fp[i];
    }
    for r in 1..=m {
        let mr = 2 * (m - r) + 1;
        for i in 0..mr {
            e[i][r] = q[i + 1][r - 1] - q[i][r - 1] + e[i + 1][r - 1];
        }
        if r != m {
            let rq = r + 1;
            let mr = 2 * (m - rq) + 3;
            for i in 0..mr {
                q[i][rq - 1] = q[i + 1][rq - 2] * e[i + 1][rq - 1] / e[i][rq - 1];
            }
        }
    }
    let mut d = vec![zero; n];
    d[0] = fp[0] * 0.5;
    for r in 1..=m {
        d[2 * r - 1] = -q[0][r - 1];
        d[2 * r] = -e[0][r];
    }
    let mut a = vec![zero; n + 1];
    let mut b = vec![zero; n + 1];
    a[1] = d[0];
    b[0] = Complex64::new(1.0, 0.0);
    b[1] = Complex64::new(1.0, 0.0);
    let z = Complex64::from_polar(1.0, PI * t / big_t);
    for i in 1..2 * m {
        a[i + 1] = a[i] + d[i] * a[i - 1] * z;
        b[i + 1] = b[i] + d[i] * b[i - 1] * z;
    }
    let brem = (1.0 + (d[2 * m - 1] - d[2 * m]) * z) * 0.5;
    let rem = brem * ((1.0 + d[2 * m] * z / (brem * brem)).sqrt() - 1.0);
    a[n] = a[2 * m] + rem * a[2 * m - 1];
    b[n] = b[2 * m] + rem * b[2 * m - 1];
    (gamma * t).exp() / big_t * (a[n] / b[n]).re
}

fn engine_eval<F: Fn(Complex64) -> Complex64 + ?Sized>(method: Method, f: &F, t: f64, m: usize) -> f64 {
    match method {
        Method::TalbotFixed => talbot(f, t, m),
        Method::DeHoog => dehoog(f, t, m),
    }
}

fn refined(m: usize) -> usize {
    m + m / 2
}

/// Reference node count for the error estimate. Comparing against fewer
/// nodes bounds the error of the coarser value, which stays clear of the
/// rounding growth that larger Talbot contours suffer.
fn coarsened(m: usize) -> usize {
    (5 * m / 6).max(8)
}

fn scaled_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() / b.abs().max(1.0);
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

/// One inverted value and its a posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub estimate: f64,
    pub nodes: usize,
}

/// Invert at a single time, refining the node count until the estimate
/// (relative to `max(|f|, 1)`) meets the plan's target.
pub fn invert_point<F: Fn(Complex64) -> Complex64 + ?Sized>(f: &F, plan: &ContourPlan, t: f64) -> Result<PointValue> {
    let best = invert_point_best(f, plan, t)?;
    if best.estimate <= plan.target_rel_err {
        Ok(best)
    } else {
        Err(Error::InversionFailure { t, estimate: best.estimate, target: plan.target_rel_err, nodes: best.nodes })
    }
}

/// Escalates like [`invert_point`] but returns the most accurate attempt even
/// when the target is missed.
pub fn invert_point_best<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    plan: &ContourPlan,
    t: f64,
) -> Result<PointValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    let mut m = plan.nodes;
    let mut best: Option<PointValue> = None;
    loop {
        let value = engine_eval(plan.method, f, t, m);
        let reference = engine_eval(plan.method, f, t, coarsened(m));
        let estimate = scaled_diff(reference, value);
        let candidate = PointValue { value, estimate, nodes: m };
        if best.is_none_or(|b| estimate < b.estimate) {
            best = Some(candidate);
        }
        if estimate <= plan.target_rel_err {
            return Ok(candidate);
        }
        let next = refined(m);
        if next > plan.max_nodes() {
            return Ok(best.expect("at least one attempt"));
        }
        m = next;
    }
}

/// Inverse transform on a time grid.
pub fn invert<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    plan: &ContourPlan,
    ts: &[f64],
) -> Result<SampledFunction> {
    Ok(invert_with_estimates(f, plan, ts)?.0)
}

/// As [`invert`], also returning the per-point error estimates.
pub fn invert_with_estimates<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    plan: &ContourPlan,
    ts: &[f64],
) -> Result<(SampledFunction, Vec<f64>)> {
    plan.validate()?;
    let (lo, hi) = plan.t_window;
    if let Some(&t) = ts.iter().find(|&&t| !(t > 0.0) || t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12)) {
        return Err(Error::domain(format!("t = {t} outside the plan window ({lo}, {hi}) or not positive")));
    }
    let mut values = Vec::with_capacity(ts.len());
    let mut estimates = Vec::with_capacity(ts.len());
    for &t in ts {
        let p = invert_point(f, plan, t)?;
        values.push(p.value);
        estimates.push(p.estimate);
    }
    if plan.spot_check && !ts.is_empty() {
        let other = plan.other_engine();
        for idx in [0, ts.len() / 2, ts.len() - 1] {
            let v = engine_eval(other.method, f, ts[idx], other.nodes);
            let d = scaled_diff(v, values[idx]);
            if d > 10.0 * plan.target_rel_err {
                return Err(Error::InversionFailure {
                    t: ts[idx],
                    estimate: d,
                    target: 10.0 * plan.target_rel_err,
                    nodes: plan.nodes,
                });
            }
        }
    }
    Ok((SampledFunction::new(ts.to_vec(), values)?, estimates))
}

/// Per-point inversion that retries a failed point with the other engine.
/// Each accepted value passed its own refinement estimate; there is no
/// cross-engine spot check.
pub fn invert_with_fallback<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    plan: &ContourPlan,
    ts: &[f64],
) -> Result<SampledFunction> {
    plan.validate()?;
    let (lo, hi) = plan.t_window;
    if let Some(&t) = ts.iter().find(|&&t| !(t > 0.0) || t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12)) {
        return Err(Error::domain(format!("t = {t} outside the plan window ({lo}, {hi}) or not positive")));
    }
    let other = plan.other_engine();
    let values = ts
        .iter()
        .map(|&t| match invert_point(f, plan, t) {
            Ok(p) => Ok(p.value),
            Err(e @ Error::InversionFailure { .. }) => invert_point(f, &other, t).map(|p| p.value).map_err(|_| e),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(ts.to_vec(), values)
}

/// Largest scaled disagreement between the two engines over `ts`.
pub fn engine_discrepancy<F: Fn(Complex64) -> Complex64 + ?Sized>(f: &F, ts: &[f64]) -> f64 {
    ts.iter().map(|&t| scaled_diff(talbot(f, t, 24), dehoog(f, t, 20))).fold(0.0, f64::max)
}

fn dehoog_double_at<F>(f2: &F, t1: f64, t2: f64, m: usize) -> f64
where
    F: Fn(Complex64, Complex64) -> Complex64 + ?Sized,
{
    let (_, _, outer_nodes) = dehoog_nodes(t1, m);
    let (_, _, inner_nodes) = dehoog_nodes(t2, m);
    // For each outer node s₁ the inner time function g(t₂; s₁) is complex:
    // its real and imaginary parts are the inverses of the Schwarz-symmetric
    // parts (G(s) ± conj G(conj s))/2 (the second divided by i).
    let outer: Vec<Complex64> = outer_nodes
        .iter()
        .map(|&s1| {
            let (re_samples, im_samples): (Vec<Complex64>, Vec<Complex64>) = inner_nodes
                .iter()
                .map(|&s2| {
                    let g = f2(s1, s2);
                    let gc = f2(s1, s2.conj()).conj();
                    ((g + gc) * 0.5, (g - gc) * Complex64::new(0.0, -0.5))
                })
                .unzip();
            let re = dehoog_from_samples(&re_samples, t2, m);
            let im = if s1.im == 0.0 { 0.0 } else { dehoog_from_samples(&im_samples, t2, m) };
            Complex64::new(re, im)
        })
        .collect();
    dehoog_from_samples(&outer, t1, m)
}

/// Double inverse Laplace transform at points `(t₁, t₂)`.
///
/// Both variables run on de Hoog Bromwich lines so that `Re(s₁ + s₂) > 0`
/// and transforms containing `(s₁ + s₂)^{…}` never meet their branch cut;
/// the plan's method is therefore ignored and only its node count and
/// target are used. Returns values and per-point error estimates.
pub fn invert_double<F>(f2: &F, plan: &ContourPlan, pts: &[(f64, f64)]) -> Result<Vec<PointValue>>
where
    F: Fn(Complex64, Complex64) -> Complex64 + ?Sized,
{
    plan.validate()?;
    let m = plan.nodes;
    let fine = refined(m);
    if fine * fine > DOUBLE_NODE_BUDGET {
        return Err(Error::Budget(format!(
            "double inversion with {fine}² node pairs exceeds the budget of {DOUBLE_NODE_BUDGET}"
        )));
    }
    pts.iter()
        .map(|&(t1, t2)| {
            if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
                return Err(Error::domain(format!("double inversion needs positive times, got ({t1}, {t2})")));
            }
            let coarse = dehoog_double_at(f2, t1, t2, m);
            let refined_value = dehoog_double_at(f2, t1, t2, fine);
            let estimate = scaled_diff(coarse, refined_value);
            if estimate > plan.target_rel_err {
                return Err(Error::InversionFailure { t: t1.min(t2), estimate, target: plan.target_rel_err, nodes: m });
            }
            Ok(PointValue { value: refined_value, estimate, nodes: fine })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn heaviside_and_exponential() {
        let plan = ContourPlan::default();
        let one = |s: Complex64| s.inv();
        let f = invert(&one, &plan, &[0.01, 1.0, 100.0]).unwrap();
        for v in f.values() {
            assert!((v - 1.0).abs() < 1e-10);
        }
        let expo = |s: Complex64| (s + 1.0).inv();
        let v = invert_point(&expo, &plan, 1.0).unwrap();
        assert!((v.value - (-1f64).exp()).abs() < 1e-10);
        assert!(v.estimate <= plan.target_rel_err);
    }

    #[test]
    fn dehoog_matches_known_transforms() {
        let f = |s: Complex64| (s * s + 1.0).inv(); // sin t
        for t in [0.3, 1.0, 4.0] {
            assert!((dehoog(&f, t, 20) - t.sin()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn rejects_nonpositive_time_and_window() {
        let plan = ContourPlan::default().with_window(0.1, 10.0);
        let one = |s: Complex64| s.inv();
        assert!(matches!(invert(&one, &plan, &[0.0]), Err(Error::Domain(_))));
        assert!(matches!(invert(&one, &plan, &[20.0]), Err(Error::Domain(_))));
        assert!(matches!(invert_point(&one, &plan, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn plan_validation() {
        assert!(ContourPlan::new(Method::TalbotFixed, 4, 1e-8, (1.0, 2.0)).is_err());
        assert!(ContourPlan::new(Method::TalbotFixed, 24, 1e-20, (1.0, 2.0)).is_err());
        assert!(ContourPlan::new(Method::TalbotFixed, 24, 1e-8, (2.0, 1.0)).is_err());
        assert!(ContourPlan::new(Method::DeHoog, 16, 1e-6, (1e-3, 1e3)).is_ok());
    }

    #[test]
    fn unreachable_target_reports_failure() {
        // a jump at t = 1 cannot be resolved by either engine
        let plan = ContourPlan::default().with_target(1e-13);
        let shifted = |s: Complex64| (-s).exp() / s;
        match invert_point(&shifted, &plan, 1.0) {
            Err(Error::InversionFailure { t, .. }) => assert_eq!(t, 1.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn complex_contour_recovers_complex_functions() {
        // L^{-1}{1/(s - i)} = e^{it}
        let f = |s: Complex64| (s - Complex64::new(0.0, 1.0)).inv();
        let v = talbot_complex(&f, 1.3, 24);
        assert!((v - Complex64::from_polar(1.0, 1.3)).norm() < 1e-9);
        // real transform: imaginary residue vanishes
        let g = |s: Complex64| (s + c(2.0)).inv();
        assert!(talbot_complex(&g, 0.7, 24).im.abs() < 1e-12);
    }

    #[test]
    fn double_inversion_of_simple_products() {
        let plan = ContourPlan::double_default().with_target(1e-6);
        let f = |a: Complex64, b: Complex64| (a * b).inv();
        let v = invert_double(&f, &plan, &[(1.0, 2.0)]).unwrap();
        assert!((v[0].value - 1.0).abs() < 1e-8);
        let g = |a: Complex64, b: Complex64| ((a + 1.0) * b * b).inv();
        let v = invert_double(&g, &plan, &[(1.0, 2.0)]).unwrap();
        assert!((v[0].value - 2.0 * (-1f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn double_budget_guardrail() {
        let plan = ContourPlan { nodes: 200, ..ContourPlan::double_default() };
        let f = |a: Complex64, b: Complex64| (a * b).inv();
        assert!(matches!(invert_double(&f, &plan, &[(1.0, 1.0)]), Err(Error::Budget(_))));
    }
}
