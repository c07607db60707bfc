//! Explicit upper bounds on `P(T > n)` and the check that they dominate a
//! computed tail.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::SurvivalCurve;
use crate::error::{Error, Result};

/// A bound evaluated at one `n`, with its pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub n: usize,
    pub value: f64,
    /// Summand for `i = 1, 2, ...`.
    pub terms: Vec<f64>,
    /// The `(1 - ε₀)^{...}` term.
    pub remainder: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Polynomial-case bound:
///
/// ```text
/// K Σ_{i <= ½[n/n₀]} i (1-ε₀)^{i-3} M̄_{[n/i]-n₀}  +  mass (1-ε₀)^{½[n/n₀] - 1}
/// ```
///
/// For `i ∈ {1, 2}` the factor `(1-ε₀)^{i-3}` exceeds one; the summand is
/// the larger of the literal one and `K M̄_{[n/2]-n₀}`, the separate bound for
/// the first two steps. With `ε₀ = 1` those two summands are undefined and
/// dropped.
pub fn estm_rhs(
    n: usize,
    k: f64,
    eps0: f64,
    n0: usize,
    mbar: &dyn Fn(i64) -> f64,
    mass: f64,
) -> Result<BoundValue> {
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε₀ must lie in (0, 1], got {eps0}")));
    }
    if n0 == 0 {
        return Err(Error::InvalidArgument("n₀ must be at least 1".into()));
    }
    let q = 1.0 - eps0;
    let blocks = n / n0;
    let i_max = blocks / 2;
    let mut notes = Vec::new();
    let mut terms = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        let literal = if q == 0.0 && i < 3 {
            None
        } else {
            Some(k * i as f64 * q.powi(i as i32 - 3) * mbar((n / i) as i64 - n0 as i64))
        };
        let term = match (i, literal) {
            (1 | 2, Some(l)) => l.max(k * mbar((n / 2) as i64 - n0 as i64)),
            (_, Some(l)) => l,
            (_, None) => {
                notes.push(format!("ε₀ = 1: summand i = {i} dropped"));
                0.0
            }
        };
        terms.push(term);
    }
    let remainder = mass * q.powf(0.5 * blocks as f64 - 1.0);
    let value = terms.iter().sum::<f64>() + remainder;
    Ok(BoundValue { n, value, terms, remainder, notes })
}

/// `M̄(i, n) = max over k ∈ A(i) of M̄_{n-Σk-n₀} Π_j M̄_{k_j-n₀}`, for all
/// `i <= i_max`, `n <= n_max`.
///
/// The product over the first `i - 1` gaps depends on `n` only through
/// `s = Σ k_j`, so its maximum `f_i(s)` is tabulated once by a max-product
/// recursion and `M̄(i, n) = max_s f_i(s) M̄_{n-s-n₀}`. Everything is held in
/// logs.
#[derive(Debug, Clone)]
pub struct MaxProductTable {
    n0: usize,
    /// `log_mbar[k + n₀] = ln M̄_k` for `k >= -n₀`.
    log_mbar: Vec<f64>,
    /// `log_f[i - 1][s]`.
    log_f: Vec<Vec<f64>>,
}

impl MaxProductTable {
    pub fn new(mbar: &dyn Fn(i64) -> f64, n0: usize, i_max: usize, n_max: usize) -> Result<Self> {
        if n0 == 0 || i_max == 0 {
            return Err(Error::InvalidArgument("n₀ and i_max must be at least 1".into()));
        }
        let log_mbar: Vec<f64> = (-(n0 as i64)..=n_max as i64).map(|k| mbar(k).ln()).collect();
        let lm = |k: i64| log_mbar[(k + n0 as i64) as usize];
        let mut log_f = Vec::with_capacity(i_max);
        let mut f = vec![f64::NEG_INFINITY; n_max + 1];
        f[0] = 0.0;
        log_f.push(f.clone());
        for _ in 1..i_max {
            let mut g = vec![f64::NEG_INFINITY; n_max + 1];
            for s in 0..=n_max {
                if f[s] == f64::NEG_INFINITY {
                    continue;
                }
                for kk in n0..=n_max - s {
                    let v = f[s] + lm(kk as i64 - n0 as i64);
                    if v > g[s + kk] {
                        g[s + kk] = v;
                    }
                }
            }
            log_f.push(g.clone());
            f = g;
        }
        Ok(Self { n0, log_mbar, log_f })
    }

    pub fn i_max(&self) -> usize {
        self.log_f.len()
    }

    /// `ln M̄(i, n)`; `-∞` when `A(i)` is empty.
    pub fn log_value(&self, i: usize, n: usize) -> f64 {
        let f = &self.log_f[i - 1];
        let lm = |k: i64| self.log_mbar[(k + self.n0 as i64) as usize];
        (0..=n.min(f.len() - 1))
            .filter(|&s| f[s] > f64::NEG_INFINITY)
            .map(|s| f[s] + lm(n as i64 - s as i64 - self.n0 as i64))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `M̄(i, n)` by walking every tuple of `A(i)`.
pub fn max_product_by_enumeration(mbar: &dyn Fn(i64) -> f64, n0: usize, i: usize, n: usize) -> f64 {
    let mut best: f64 = 0.0;
    crate::tails::for_each_composition(n, i, n0, |ks| {
        let s: usize = ks.iter().sum();
        let v = ks.iter().fold(mbar(n as i64 - s as i64 - n0 as i64), |acc, &k| acc * mbar(k as i64 - n0 as i64));
        best = best.max(v);
    });
    best
}

/// Where `M̄(i, n)` comes from in [`stnexp_rhs`].
pub enum MaxProductSource<'a> {
    Exact(&'a MaxProductTable),
    /// `ln M̄(i, n) <= i ln C - τ (n - i n₀)`, valid for tails bounded by
    /// `C' e^{-τ n}` with `C = C' / (1 - e^{-τ})`.
    Exponential { c: f64, tau: f64, n0: usize },
}

impl MaxProductSource<'_> {
    fn log_value(&self, i: usize, n: usize) -> Result<f64> {
        match self {
            Self::Exact(t) => {
                if i > t.i_max() {
                    return Err(Error::EnumerationBound(format!("M̄({i}, n) beyond the tabulated i <= {}", t.i_max())));
                }
                Ok(t.log_value(i, n))
            }
            Self::Exponential { c, tau, n0 } => Ok(i as f64 * c.ln() - tau * (n as f64 - (i * n0) as f64)),
        }
    }
}

fn ln_biguint(b: &BigUint) -> f64 {
    let bits = b.bits();
    if bits < 1000 {
        return b.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (b >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Super-polynomial-case bound:
///
/// ```text
/// Σ_{i <= [δ n^θ']} C(n+i-n₀, i-1) K₀^i M̄(i, n)  +  mass (1-ε₀)^{[δ n^θ'] - 1}
/// ```
#[allow(clippy::too_many_arguments)]
pub fn stnexp_rhs(
    n: usize,
    theta_prime: f64,
    delta: f64,
    k0: f64,
    eps0: f64,
    n0: usize,
    source: &MaxProductSource<'_>,
    mass: f64,
) -> Result<BoundValue> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    if !(theta_prime > 0.0 && theta_prime <= 1.0) {
        return Err(Error::InvalidArgument(format!("θ' must lie in (0, 1], got {theta_prime}")));
    }
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε₀ must lie in (0, 1], got {eps0}")));
    }
    let i_max = (delta * (n as f64).powf(theta_prime)).floor() as usize;
    let mut terms = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        let top = (n + i) as i64 - n0 as i64;
        let ln_binom = if i == 1 {
            0.0
        } else if top < (i - 1) as i64 {
            f64::NEG_INFINITY
        } else {
            ln_biguint(&num_integer::binomial(BigUint::from(top as u64), BigUint::from((i - 1) as u64)))
        };
        let ln_term = ln_binom + i as f64 * k0.ln() + source.log_value(i, n)?;
        terms.push(ln_term.exp());
    }
    let remainder = mass * (1.0 - eps0).powf(i_max as f64 - 1.0);
    let value = terms.iter().sum::<f64>() + remainder;
    Ok(BoundValue { n, value, terms, remainder, notes: Vec::new() })
}

/// Default `δ` for [`stnexp_rhs`].
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub n: usize,
    pub tail: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub window: (usize, usize),
    pub checked: usize,
    pub pass: bool,
    pub violations: Vec<Violation>,
    /// Smallest `bound / tail` over the window.
    pub min_ratio: f64,
}

/// `tail(n) <= bound(n) + leak(n)` for every `n` in `first..first + bounds.len()`.
pub fn dominance_check(curve: &SurvivalCurve, first: usize, bounds: &[f64]) -> Result<DominanceReport> {
    let last = first + bounds.len().saturating_sub(1);
    if bounds.is_empty() || last > curve.horizon() {
        return Err(Error::InvalidArgument("bound range does not match the curve".into()));
    }
    let mut violations = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for (k, &b) in bounds.iter().enumerate() {
        let n = first + k;
        let t = curve.tail(n);
        if t > b + curve.leak(n) {
            violations.push(Violation { n, tail: t, bound: b });
        }
        if t > 0.0 {
            min_ratio = min_ratio.min(b / t);
        }
    }
    Ok(DominanceReport {
        window: (first, last),
        checked: bounds.len(),
        pass: violations.is_empty(),
        violations,
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estm_hand_example() {
        let v = estm_rhs(2, 1.0, 0.5, 1, &|_| 1.0, 1.0).unwrap();
        assert_eq!(v.value, 5.0);
        let empty = estm_rhs(2, 1.0, 0.5, 1, &|_| 1.0, 1.0).unwrap();
        assert_eq!(empty.terms.len(), 1);
        let short = estm_rhs(3, 1.0, 0.5, 2, &|_| 1.0, 1.0).unwrap();
        assert!(short.terms.is_empty());
        assert_eq!(short.value, 0.5f64.powf(-0.5));
    }

    #[test]
    fn estm_full_mixing_keeps_only_third_summand() {
        let mbar = |k: i64| 1.0 / (1.0 + k.max(0) as f64);
        let v = estm_rhs(30, 2.0, 1.0, 1, &mbar, 1.0).unwrap();
        assert_eq!(v.remainder, 0.0);
        assert!((v.value - 2.0 * 3.0 * mbar(10 - 1)).abs() < 1e-15);
        assert!(!v.notes.is_empty());
    }

    #[test]
    fn stnexp_empty_sum() {
        let t = MaxProductTable::new(&|_| 1.0, 1, 2, 10).unwrap();
        let v = stnexp_rhs(10, 1.0, 0.01, 1.0, 0.5, 1, &MaxProductSource::Exact(&t), 1.0).unwrap();
        assert!(v.terms.is_empty());
        assert_eq!(v.value, 2.0);
    }

    #[test]
    fn max_product_table_matches_enumeration() {
        let tau = 2f64.ln();
        let mbar = |k: i64| if k < 0 { 2.0 + (-k) as f64 } else { 2.0 * (-tau * k as f64).exp() };
        for n0 in 1..=3 {
            let t = MaxProductTable::new(&mbar, n0, 5, 20).unwrap();
            for i in 1..=5 {
                for n in 0..=20 {
                    let e = max_product_by_enumeration(&mbar, n0, i, n);
                    let d = t.log_value(i, n).exp();
                    assert!((e - d).abs() <= 1e-12 * e.max(1e-300), "n0={n0} i={i} n={n}: {e} vs {d}");
                }
            }
        }
    }

    #[test]
    fn dominance_cases() {
        let c = SurvivalCurve::closed_form(10, |n| 0.5f64.powi(n as i32));
        assert!(dominance_check(&c, 0, &[1.0; 11]).unwrap().pass);
        let r = dominance_check(&c, 0, &[0.0; 11]).unwrap();
        assert_eq!(r.violations.len(), 11);
    }
}
