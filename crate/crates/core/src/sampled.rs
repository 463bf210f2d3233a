use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Extrapolation beyond the last grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailPolicy {
    None,
    /// `coefficient * t^exponent` is the asymptotic model. Evaluation past
    /// the grid uses `v_N (t/t_N)^exponent`, i.e. the model's shape stitched
    /// continuously to the last sample.
    PowerLaw {
        exponent: f64,
        coefficient: f64,
    },
    /// `coefficient * exp(-rate t)`, stitched the same way. Covers the
    /// classical exponential limit where no power law exists.
    Exponential {
        rate: f64,
        coefficient: f64,
    },
}

/// A function sampled on a strictly increasing time grid, interpolated with
/// monotone piecewise-cubic Hermite (Fritsch-Carlson) splines.
#[derive(Debug, Clone, Serialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
    tail: TailPolicy,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::param(format!(
                "grid ({}) and values ({}) must be non-empty and equally long",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] < 0.0 || !grid.iter().all(|t| t.is_finite()) {
            return Err(Error::param("grid must be finite and non-negative"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("grid must be strictly increasing"));
        }
        let slopes = pchip_slopes(&grid, &values);
        Ok(Self { grid, values, slopes, tail: TailPolicy::None })
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Result<Self> {
        let (t_n, v_n) = (*self.grid.last().unwrap(), *self.values.last().unwrap());
        let model = match tail {
            TailPolicy::None => None,
            TailPolicy::PowerLaw { exponent, coefficient } => {
                if !(exponent < 0.0) {
                    return Err(Error::param(format!("power-law tail exponent must be negative, got {exponent}")));
                }
                Some(coefficient * t_n.powf(exponent))
            }
            TailPolicy::Exponential { rate, coefficient } => {
                if !(rate > 0.0) {
                    return Err(Error::param(format!("exponential tail rate must be positive, got {rate}")));
                }
                Some(coefficient * (-rate * t_n).exp())
            }
        };
        if let Some(m) = model {
            if !((v_n - m).abs() <= 0.1 * m.abs()) {
                return Err(Error::param(format!(
                    "last sample {v_n:.6e} at t = {t_n} is not within 10% of the tail model {m:.6e}"
                )));
            }
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> TailPolicy {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn locate(&self, t: f64) -> usize {
        // index i with grid[i] <= t < grid[i+1], clamped to the last interval
        match self.grid.binary_search_by(|g| g.total_cmp(&t)) {
            Ok(i) => i.min(self.grid.len().saturating_sub(2)),
            Err(i) => (i - 1).min(self.grid.len().saturating_sub(2)),
        }
    }

    fn tail_value(&self, t: f64) -> Option<f64> {
        let (t_n, v_n) = (self.t_max(), *self.values.last().unwrap());
        match self.tail {
            TailPolicy::None => None,
            TailPolicy::PowerLaw { exponent, .. } => Some(v_n * (t / t_n).powf(exponent)),
            TailPolicy::Exponential { rate, .. } => Some(v_n * (-rate * (t - t_n)).exp()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.t_min() || t.is_nan() {
            return Err(Error::domain(format!("t = {t} below the sampled range [{}, ..]", self.t_min())));
        }
        if t > self.t_max() {
            return self
                .tail_value(t)
                .ok_or_else(|| Error::domain(format!("t = {t} beyond the sampled range and no tail policy")));
        }
        if self.grid.len() == 1 {
            return Ok(self.values[0]);
        }
        let i = self.locate(t);
        Ok(self.hermite(i, t).0)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        if t < self.t_min() || t > self.t_max() || self.grid.len() < 2 {
            return Err(Error::domain(format!("derivative requested outside [{}, {}]", self.t_min(), self.t_max())));
        }
        let i = self.locate(t);
        Ok(self.hermite(i, t).1)
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
        (value, deriv)
    }

    /// CSV with a `t,<name>` header; 12 significant digits.
    pub fn to_csv(&self, name: &str) -> String {
        let mut out = format!("t,{name}\n");
        for (t, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt12(*t), fmt12(*v));
        }
        out
    }
}

/// Fixed 12-significant-digit scientific formatting used by all tables.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SampledFunction::new(vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(SampledFunction::new(vec![-1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(SampledFunction::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn interpolates_smooth_function() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = grid.iter().map(|t| (-t).exp()).collect();
        let f = SampledFunction::new(grid, values).unwrap();
        for t in [0.013, 1.234, 7.77] {
            assert!((f.eval(t).unwrap() - (-t).exp()).abs() < 1e-5);
            assert!((f.derivative(t).unwrap() + (-t).exp()).abs() < 1e-3);
        }
        assert!(f.eval(11.0).is_err());
    }

    #[test]
    fn power_law_tail_is_continuous() {
        let grid = vec![1.0, 2.0, 4.0];
        let values: Vec<f64> = grid.iter().map(|t: &f64| 0.5 * t.powf(-0.7)).collect();
        let f = SampledFunction::new(grid, values)
            .unwrap()
            .with_tail(TailPolicy::PowerLaw { exponent: -0.7, coefficient: 0.5 })
            .unwrap();
        assert!((f.eval(4.0).unwrap() - f.eval(4.0 + 1e-12).unwrap()).abs() < 1e-12);
        assert!((f.eval(100.0).unwrap() - 0.5 * 100f64.powf(-0.7)).abs() < 1e-14);
    }

    #[test]
    fn tail_mismatch_rejected() {
        let f = SampledFunction::new(vec![1.0, 2.0], vec![1.0, 0.9]).unwrap();
        assert!(f.with_tail(TailPolicy::PowerLaw { exponent: -0.5, coefficient: 0.1 }).is_err());
    }

    #[test]
    fn csv_has_header_and_fixed_format() {
        let f = SampledFunction::new(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let csv = f.to_csv("u");
        assert_eq!(csv, "t,u\n1.00000000000e0,5.00000000000e-1\n2.00000000000e0,2.50000000000e-1\n");
    }

    proptest! {
        #[test]
        fn pchip_preserves_monotonicity(mut ys in proptest::collection::vec(0.0f64..1.0, 3..40)) {
            ys.sort_by(|a, b| b.total_cmp(a));
            let grid: Vec<f64> = (0..ys.len()).map(|i| (i as f64).powf(1.3)).collect();
            let f = SampledFunction::new(grid.clone(), ys).unwrap();
            let mut prev = f64::INFINITY;
            let last = *grid.last().unwrap();
            for k in 0..=500 {
                let v = f.eval((last * k as f64 / 500.0).min(last)).unwrap();
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }
    }
}
