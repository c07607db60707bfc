//! Products of more than two towers, one pair at a time.
//!
//! At a simultaneous return both factors restart fresh, so successive values
//! of `T` are independent and share one law. The pair therefore behaves like
//! a single tower whose return time is `T`, and that tower can be paired with
//! the next factor.

use serde::Serialize;

use super::{product_tail_dp, ProductModel};
use crate::error::{Error, Result};
use crate::tower::TowerModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldPolicy {
    /// Mixing-window fraction `φ`.
    pub fraction: f64,
    /// Horizon used to pick `n₀`.
    pub window_horizon: usize,
    /// Horizon of the DP that produces each intermediate law.
    pub dp_horizon: usize,
    pub leak_budget: f64,
    pub cell_budget: usize,
    /// Polynomial tail exponent of each input factor, if polynomial.
    pub exponents: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldStep {
    /// Factors folded so far, counting from the left.
    pub factors: usize,
    pub n0: usize,
    pub c: f64,
    pub leak: f64,
    pub mean_return: f64,
    /// Tail exponent tracked for the folded factor, if polynomial.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub model: TowerModel<f64>,
    pub steps: Vec<FoldStep>,
    /// The last pair folded, for further analysis of its `T`.
    pub last_pair: Option<ProductModel<f64>>,
}

/// Exponent of the folded tail: a polynomial factor of exponent `α` leaves
/// `T` with exponent `α - 1`.
fn folded_exponent(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) | (None, Some(x)) => Some(x - 1.0),
        (Some(x), Some(y)) => Some(x.min(y) - 1.0),
    }
}

/// Folds left to right until one tower remains.
pub fn fold(models: &[TowerModel<f64>], policy: &FoldPolicy) -> Result<FoldOutcome> {
    let (head, rest) = models.split_first().ok_or(Error::EmptyComponents)?;
    if !policy.exponents.is_empty() && policy.exponents.len() != models.len() {
        return Err(Error::InvalidArgument("one exponent entry per factor is required".into()));
    }
    let exponent_of = |i: usize| policy.exponents.get(i).copied().flatten();
    let mut acc = head.clone();
    let mut acc_exponent = exponent_of(0);
    let mut steps = Vec::new();
    let mut last_pair = None;
    for (k, next) in rest.iter().enumerate() {
        let exponent = folded_exponent(acc_exponent, exponent_of(k + 1));
        if let Some(e) = exponent {
            if e <= 1.0 {
                return Err(Error::FoldNotIntegrable(format!(
                    "folding factor {} leaves tail exponent {e}, so T has no finite mean; \
                     polynomial tails need α > ℓ = {}",
                    k + 2,
                    models.len()
                )));
            }
        }
        let pair = ProductModel::new(acc, next.clone(), policy.fraction, policy.window_horizon)?;
        let out = product_tail_dp(&pair, policy.dp_horizon, policy.cell_budget)?;
        let n = policy.dp_horizon;
        let leak = out.tail[n];
        if leak > policy.leak_budget {
            return Err(Error::TruncationTooLossy { leak, budget: policy.leak_budget });
        }
        let mut cols: Vec<(usize, f64)> =
            out.stop.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(k, p)| (k, *p)).collect();
        if leak > 0.0 {
            cols.push((n + 1, leak));
        }
        acc = TowerModel::with_leak(cols, leak)?;
        acc_exponent = exponent;
        steps.push(FoldStep {
            factors: k + 2,
            n0: pair.n0(),
            c: pair.c(),
            leak,
            mean_return: acc.mean_return_f64(),
            exponent,
        });
        last_pair = Some(pair);
    }
    Ok(FoldOutcome { model: acc, steps, last_pair })
}
