//! Survival curves `n ↦ P(T > n)` with their error accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Dp,
    Mc,
    ClosedForm,
    BruteForce,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Dp => "dp",
            Provenance::Mc => "mc",
            Provenance::ClosedForm => "closed_form",
            Provenance::BruteForce => "brute_force",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// `values[n] = P(T > n)` for `n = 0..=N`.
    pub values: Vec<f64>,
    /// Per-`n` confidence intervals, for sampled curves.
    pub ci: Option<Vec<(f64, f64)>>,
    /// Per-`n` bound on the error introduced by truncating the models.
    pub leak_bound: Vec<f64>,
    pub provenance: Provenance,
}

impl SurvivalCurve {
    pub fn new(values: Vec<f64>, leak_bound: Vec<f64>, provenance: Provenance) -> Self {
        debug_assert_eq!(values.len(), leak_bound.len());
        Self { values, ci: None, leak_bound, provenance }
    }

    /// Evaluates `f` at `n = 0..=horizon`.
    pub fn closed_form(horizon: usize, f: impl Fn(usize) -> f64) -> Self {
        Self::new((0..=horizon).map(f).collect(), vec![0.0; horizon + 1], Provenance::ClosedForm)
    }

    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn tail(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn leak(&self, n: usize) -> f64 {
        self.leak_bound.get(n).copied().unwrap_or(0.0)
    }

    /// Checks range and monotonicity; sampled curves get their interval
    /// width as slack.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("empty survival curve".into()));
        }
        if let Some(ci) = &self.ci {
            if ci.len() != self.values.len() {
                return Err(Error::InvalidArgument("confidence intervals do not match the curve".into()));
            }
        }
        for (n, v) in self.values.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(v) {
                return Err(Error::InvalidArgument(format!("tail({n}) = {v} outside [0, 1]")));
            }
        }
        for n in 1..self.values.len() {
            let slack = match &self.ci {
                Some(ci) => (ci[n].1 - ci[n].0) + (ci[n - 1].1 - ci[n - 1].0),
                None => 1e-12 + self.leak(n) + self.leak(n - 1),
            };
            if self.values[n] > self.values[n - 1] + slack {
                return Err(Error::InvalidArgument(format!("tail increases at n = {n}")));
            }
        }
        Ok(())
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // the endpoints are exact at the edges; rounding would otherwise leave
    // them a few ulps inside
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}
