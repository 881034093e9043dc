//! Uniform time grids and the trapezoid weights used by every time quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_k = k h`, `k = 0..n`, with `h = t_max / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TimeGrid {
    t_max: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    t_max: f64,
    points: usize,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.t_max, raw.points)
    }
}

impl From<TimeGrid> for RawGrid {
    fn from(g: TimeGrid) -> Self {
        RawGrid {
            t_max: g.t_max,
            points: g.n,
        }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("time grid needs at least 3 points, got {n}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::domain(format!("t_max must be finite and positive, got {t_max}")));
        }
        Ok(TimeGrid { t_max, n })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_max / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.t_max
        } else {
            k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Trapezoid weights for an integral over `[0, t_k]` (`k + 1` nodes).
    /// For `k = 0` the single weight is zero.
    pub fn trapezoid_weights(&self, k: usize) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; k + 1];
        w[0] = 0.5 * h;
        w[k] = if k == 0 { 0.0 } else { 0.5 * h };
        w
    }

    /// Locates `t` as `(k, f)` with `t = t_k + f h`, `0 <= f <= 1`, `k + 1 < n`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let tol = 1e-12 * self.t_max;
        if !(t >= -tol && t <= self.t_max + tol) {
            return Err(Error::domain(format!(
                "time {t} lies outside the grid range [0, {}]",
                self.t_max
            )));
        }
        let x = (t / self.step()).max(0.0);
        let k = (x.floor() as usize).min(self.n - 2);
        Ok((k, (x - k as f64).clamp(0.0, 1.0)))
    }

    /// Grid with the same span and twice the resolution (`2n - 1` points).
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            t_max: self.t_max,
            n: 2 * self.n - 1,
        }
    }
}

/// Cumulative trapezoid integral of samples `f(t_k)`; `out[0] = 0`.
pub fn cumulative_trapezoid(samples: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in samples.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}
