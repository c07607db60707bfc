//! Return-time tail families, the aggregate tails `M_n` and `M̄_n`, and two
//! numeric lemmas about stretched-exponential sums and incomplete gamma tails.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// A survival sequence `P(R > n)`, `n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailRecord", into = "TailRecord")]
pub enum TailSpec {
    /// `e^{-τ n}`.
    Exponential { tau: f64 },
    /// `e^{-τ n^θ}`, `θ ∈ (0, 1)`.
    Stretched { tau: f64, theta: f64 },
    /// `min(1, c n^{-α})` for `n >= 1`, `α > 1`.
    Polynomial { alpha: f64, scale: f64 },
    /// Listed survival values; zero past the end of the list.
    Explicit { values: Vec<f64> },
}

impl TailSpec {
    pub fn exponential(tau: f64) -> Result<Self> {
        Self::Exponential { tau }.validated()
    }

    pub fn stretched(tau: f64, theta: f64) -> Result<Self> {
        Self::Stretched { tau, theta }.validated()
    }

    pub fn polynomial(alpha: f64, scale: f64) -> Result<Self> {
        Self::Polynomial { alpha, scale }.validated()
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::Explicit { values }.validated()
    }

    /// Geometric returns `P(R = k) = (1-q) q^{k-1}`, i.e. tail `q^n`.
    pub fn geometric(q: f64) -> Result<Self> {
        Self::exponential(-q.ln())
    }

    /// Builds an explicit tail from a finite return-time law given as
    /// `(k, P(R = k))` pairs with `k >= 1`.
    pub fn from_pmf(pmf: &[(usize, f64)]) -> Result<Self> {
        let max_k = pmf.iter().map(|&(k, _)| k).max().ok_or(Error::EmptyComponents)?;
        if pmf.iter().any(|&(k, _)| k == 0) {
            return Err(Error::InvalidTail("return times start at 1".into()));
        }
        let mut point = vec![0.0; max_k + 1];
        for &(k, p) in pmf {
            point[k] += p;
        }
        let total: f64 = point.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTail(format!("probabilities sum to {total}")));
        }
        // tail(n) = Σ_{k > n} P(R = k), accumulated from the top.
        let mut values = vec![0.0; max_k + 1];
        let mut acc = 0.0;
        for n in (0..max_k).rev() {
            acc += point[n + 1];
            values[n] = acc;
        }
        values[0] = 1.0;
        Self::explicit(values)
    }

    fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidTail(msg));
        match &self {
            Self::Exponential { tau } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return bad(format!("exponential rate must be positive, got {tau}"));
                }
            }
            Self::Stretched { tau, theta } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return bad(format!("stretched rate must be positive, got {tau}"));
                }
                if !(*theta > 0.0 && *theta < 1.0) {
                    return bad(format!("stretched exponent must lie in (0, 1), got {theta}"));
                }
            }
            Self::Polynomial { alpha, scale } => {
                if !(alpha.is_finite() && *alpha > 1.0) {
                    return bad(format!("polynomial exponent must exceed 1, got {alpha}"));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("polynomial scale must be positive, got {scale}"));
                }
            }
            Self::Explicit { values } => {
                if values.first() != Some(&1.0) {
                    return bad("explicit survival values must start with 1".into());
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad("explicit survival values must lie in [0, 1]".into());
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("explicit survival values must be non-increasing".into());
                }
            }
        }
        Ok(self)
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Exponential { .. } => Family::Exponential,
            Self::Stretched { .. } => Family::Stretched,
            Self::Polynomial { .. } => Family::Polynomial,
            Self::Explicit { .. } => Family::Explicit,
        }
    }

    /// `P(R > n)`.
    pub fn survival(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let x = n as f64;
        match self {
            Self::Exponential { tau } => (-tau * x).exp(),
            Self::Stretched { tau, theta } => (-tau * x.powf(*theta)).exp(),
            Self::Polynomial { alpha, scale } => (scale * x.powf(-alpha)).min(1.0),
            Self::Explicit { values } => values.get(n).copied().unwrap_or(0.0),
        }
    }

    /// `P(R = k) = P(R > k-1) - P(R > k)`, evaluated without cancellation
    /// where the family allows it.
    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let prev = (k - 1) as f64;
        match self {
            Self::Exponential { tau } => -(-tau * prev).exp() * (-tau).exp_m1(),
            Self::Stretched { tau, theta } => {
                if k == 1 {
                    return -(-tau).exp_m1();
                }
                // k^θ - (k-1)^θ = (k-1)^θ (e^{θ ln(1 + 1/(k-1))} - 1)
                let gap = prev.powf(*theta) * (theta * (1.0 / prev).ln_1p()).exp_m1();
                -(-tau * prev.powf(*theta)).exp() * (-tau * gap).exp_m1()
            }
            Self::Polynomial { alpha, scale } => {
                let upper = self.survival(k - 1);
                let lower = self.survival(k);
                if k >= 2 && upper < 1.0 {
                    // both unclamped: c (k-1)^{-α} (1 - (1 + 1/(k-1))^{-α})
                    -scale * prev.powf(-alpha) * (-alpha * (1.0 / prev).ln_1p()).exp_m1()
                } else {
                    upper - lower
                }
            }
            Self::Explicit { .. } => self.survival(k - 1) - self.survival(k),
        }
    }

    /// Upper bound on `Σ_{j > h} P(R > j)`.
    pub fn remainder_bound(&self, h: usize) -> f64 {
        match self {
            Self::Exponential { tau } => {
                (-tau * (h + 1) as f64).exp() / -(-tau).exp_m1()
            }
            Self::Stretched { tau, theta } => {
                if h == 0 {
                    return self.survival(1) + self.remainder_bound(1);
                }
                // Σ_{j>h} f(j) <= ∫_h^∞ e^{-τ x^θ} dx = Γ(1/θ, τ h^θ) / (θ τ^{1/θ})
                let a = 1.0 / theta;
                let q = quadrature::upper_incomplete_gamma(a, tau * (h as f64).powf(*theta));
                let integral = (q.value + q.error) / (theta * tau.powf(a));
                let start = h + 1;
                if (start as f64) >= stretched_threshold(*tau, *theta) {
                    integral.min(stretched_rhs(*tau, *theta, start))
                } else {
                    integral
                }
            }
            Self::Polynomial { alpha, scale } => {
                if h == 0 {
                    return self.survival(1) + self.remainder_bound(1);
                }
                scale * (h as f64).powf(1.0 - alpha) / (alpha - 1.0)
            }
            Self::Explicit { values } => values.iter().skip(h + 1).sum(),
        }
    }

    /// Mass the explicit list assigns past its last entry, zero for the
    /// analytic families.
    pub fn listed_leak(&self) -> f64 {
        match self {
            Self::Explicit { values } => values.last().copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Largest `k` with `P(R = k) > 0`, if finite.
    pub fn max_support(&self) -> Option<usize> {
        match self {
            Self::Explicit { values } => Some(values.iter().rposition(|&v| v > 0.0).map_or(1, |i| i + 1)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Stretched,
    Polynomial,
    Explicit,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Stretched => "stretched",
            Family::Polynomial => "polynomial",
            Family::Explicit => "explicit",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailRecord {
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

impl TryFrom<TailRecord> for TailSpec {
    type Error = Error;

    fn try_from(r: TailRecord) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidTail(format!("{} tail requires `{name}`", r.family.as_str())))
        };
        match r.family {
            Family::Exponential => TailSpec::exponential(need(r.tau, "tau")?),
            Family::Stretched => TailSpec::stretched(need(r.tau, "tau")?, need(r.theta, "theta")?),
            Family::Polynomial => TailSpec::polynomial(need(r.alpha, "alpha")?, r.scale.unwrap_or(1.0)),
            Family::Explicit => TailSpec::explicit(
                r.values
                    .clone()
                    .ok_or_else(|| Error::InvalidTail("explicit tail requires `values`".into()))?,
            ),
        }
    }
}

impl From<TailSpec> for TailRecord {
    fn from(spec: TailSpec) -> Self {
        let mut r = TailRecord {
            family: spec.family(),
            tau: None,
            theta: None,
            alpha: None,
            scale: None,
            values: None,
        };
        match spec {
            TailSpec::Exponential { tau } => r.tau = Some(tau),
            TailSpec::Stretched { tau, theta } => {
                r.tau = Some(tau);
                r.theta = Some(theta);
            }
            TailSpec::Polynomial { alpha, scale } => {
                r.alpha = Some(alpha);
                r.scale = Some(scale);
            }
            TailSpec::Explicit { values } => r.values = Some(values),
        }
        r
    }
}

/// `P(R > n)`.
pub fn tail(spec: &TailSpec, n: usize) -> f64 {
    spec.survival(n)
}

/// `P(R = k)`.
pub fn pmf(spec: &TailSpec, k: usize) -> f64 {
    spec.pmf(k)
}

/// `M_n`: the worst component tail at `n`.
pub fn aggregate_m(specs: &[TailSpec], n: usize) -> Result<f64> {
    specs
        .iter()
        .map(|s| s.survival(n))
        .reduce(f64::max)
        .ok_or(Error::EmptyComponents)
}

/// A truncated sum together with a bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialSum {
    pub value: f64,
    pub remainder_bound: f64,
}

impl PartialSum {
    pub fn upper(&self) -> f64 {
        self.value + self.remainder_bound
    }
}

/// `M̄_n = Σ_{j >= n} M_j`, summed directly up to `horizon`.
pub fn mbar(specs: &[TailSpec], n: usize, horizon: usize) -> Result<PartialSum> {
    if specs.is_empty() {
        return Err(Error::EmptyComponents);
    }
    if n > horizon {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds horizon {horizon}")));
    }
    let mut value = 0.0;
    for j in (n..=horizon).rev() {
        value += aggregate_m(specs, j)?;
    }
    // max_i t_i(j) <= Σ_i t_i(j), so the per-family remainders add up to a bound.
    let remainder_bound: f64 = specs.iter().map(|s| s.remainder_bound(horizon)).sum();
    if !remainder_bound.is_finite() {
        return Err(Error::TruncationUnbounded { from: horizon + 1 });
    }
    Ok(PartialSum { value, remainder_bound })
}

/// `M̄_n` for a bare sequence `m[0..]`, with the caller supplying the bound on
/// `Σ_{j >= m.len()} m_j`. Without one, a sequence whose last entry is still
/// positive cannot be bounded.
pub fn mbar_of_sequence(m: &[f64], n: usize, beyond: Option<f64>) -> Result<PartialSum> {
    let value: f64 = m.iter().skip(n).rev().sum();
    let remainder_bound = match beyond {
        Some(b) => b,
        None if m.last().is_none_or(|&v| v == 0.0) => 0.0,
        None => return Err(Error::TruncationUnbounded { from: m.len() }),
    };
    Ok(PartialSum { value, remainder_bound })
}

/// Precomputed upper bounds on `M̄_k`, extended to negative `k` by
/// `M̄_k = M̄_0 + |k|` (every `M_j` with `j < 0` is 1).
#[derive(Debug, Clone)]
pub struct MbarTable {
    specs: Vec<TailSpec>,
    values: Vec<f64>,
}

impl MbarTable {
    pub fn new(specs: &[TailSpec], horizon: usize) -> Result<Self> {
        let top = mbar(specs, horizon, horizon)?;
        let mut values = vec![0.0; horizon + 1];
        let mut acc = top.upper();
        values[horizon] = acc;
        for k in (0..horizon).rev() {
            acc += aggregate_m(specs, k)?;
            values[k] = acc;
        }
        Ok(Self { specs: specs.to_vec(), values })
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: i64) -> f64 {
        if k < 0 {
            return self.values[0] + k.unsigned_abs() as f64;
        }
        let k = k as usize;
        match self.values.get(k) {
            Some(v) => *v,
            // Σ_{j >= k} M_j <= Σ_i Σ_{j > k-1} t_i(j)
            None => self.specs.iter().map(|s| s.remainder_bound(k - 1)).sum(),
        }
    }
}

/// Which of the two polynomial integrability conditions an exponent meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PolynomialRegime {
    /// `α > ℓ`, the hypothesis of the ℓ-fold polynomial statement.
    pub product_condition: bool,
    /// `α > 2`, what the pair argument needs for a finite-mean fold.
    pub pair_condition: bool,
}

pub fn polynomial_regime(alpha: f64, components: usize) -> PolynomialRegime {
    PolynomialRegime {
        product_condition: alpha > components as f64,
        pair_condition: alpha > 2.0,
    }
}

/// Outcome of evaluating an inequality `lhs <= rhs` numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Bound on the numerical error of `lhs` (truncation or quadrature).
    pub lhs_error: f64,
    /// `lhs + lhs_error` against `rhs`.
    pub holds: bool,
}

/// Smallest real `n` for which the stretched-exponential sum bound applies.
pub fn stretched_threshold(tau: f64, theta: f64) -> f64 {
    (2.0 / (tau * theta)).powf(1.0 / theta)
}

fn stretched_rhs(tau: f64, theta: f64, n: usize) -> f64 {
    let x = n as f64;
    2.0 / (tau * theta) * (-tau * x.powf(theta)).exp() * x.powf(1.0 - theta)
}

fn check_stretched_domain(tau: f64, theta: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("τ must be positive, got {tau}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("θ must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

/// Sums `e^{-τ k^θ}` from `n` until a term drops below `1e-18` of the running
/// total. Returns the sum, the last index summed, and the integral bound on
/// the rest.
fn stretched_direct_sum(tau: f64, theta: f64, n: usize) -> (f64, usize, f64) {
    let mut sum = 0.0;
    let mut k = n;
    loop {
        let term = (-tau * (k as f64).powf(theta)).exp();
        sum += term;
        if term < 1e-18 * sum || term == 0.0 {
            break;
        }
        k += 1;
    }
    // terms are decreasing, so Σ_{j > k} f(j) <= ∫_k^∞ f
    let a = 1.0 / theta;
    let q = quadrature::upper_incomplete_gamma(a, tau * (k as f64).powf(theta));
    let rest = (q.value + q.error) / (theta * tau.powf(a));
    (sum, k, if rest.is_finite() { rest } else { 0.0 })
}

/// `Σ_{k>=n} e^{-τ k^θ} <= (2/(τθ)) e^{-τ n^θ} n^{1-θ}` for
/// `n >= (2/(τθ))^{1/θ}`.
pub fn stretched_tail_lemma(tau: f64, theta: f64, n: usize) -> Result<LemmaCheck> {
    check_stretched_domain(tau, theta)?;
    let threshold = stretched_threshold(tau, theta);
    if (n as f64) < threshold.ceil() {
        return Err(Error::ThresholdNotMet { n: n as f64, threshold: threshold.ceil() });
    }
    let (lhs, _, rest) = stretched_direct_sum(tau, theta, n);
    let rhs = stretched_rhs(tau, theta, n);
    Ok(LemmaCheck { lhs, rhs, lhs_error: rest, holds: lhs + rest <= rhs })
}

/// One row of a stretched-lemma sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub theta: f64,
    pub n: usize,
    pub check: LemmaCheck,
}

/// Evaluates the stretched lemma at `count` consecutive `n` starting at the
/// threshold. The long sum is done once at the far end and extended
/// backwards term by term.
pub fn stretched_lemma_sweep(tau: f64, theta: f64, count: usize) -> Result<Vec<SweepRow>> {
    check_stretched_domain(tau, theta)?;
    let start = stretched_threshold(tau, theta).ceil().max(1.0) as usize;
    let end = start + count.saturating_sub(1);
    let (mut sum, _, rest) = stretched_direct_sum(tau, theta, end);
    let mut rows = Vec::with_capacity(count);
    for n in (start..=end).rev() {
        if n < end {
            sum += (-tau * (n as f64).powf(theta)).exp();
        }
        let rhs = stretched_rhs(tau, theta, n);
        rows.push(SweepRow {
            tau,
            theta,
            n,
            check: LemmaCheck { lhs: sum, rhs, lhs_error: rest, holds: sum + rest <= rhs },
        });
    }
    rows.reverse();
    Ok(rows)
}

/// `∫_x^∞ t^{a-1} e^{-t} dt < B x^{a-1} e^{-x}` for `x > B(a-1)/(B-1)`.
pub fn gamma_tail_inequality(a: f64, b: f64, x: f64) -> Result<LemmaCheck> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("a must be positive, got {a}")));
    }
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("B must exceed 1, got {b}")));
    }
    let threshold = (b * (a - 1.0) / (b - 1.0)).max(0.0);
    if !(x > threshold) {
        return Err(Error::ThresholdNotMet { n: x, threshold });
    }
    let q = quadrature::upper_incomplete_gamma(a, x);
    let rhs = b * x.powf(a - 1.0) * (-x).exp();
    Ok(LemmaCheck { lhs: q.value, rhs, lhs_error: q.error, holds: q.value + q.error < rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Enumeration,
    Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionCount {
    pub count: BigUint,
    /// `C(n + i - n₀, i - 1)`.
    pub bound: BigUint,
    pub method: CountMethod,
}

const ENUMERATION_LIMIT: u64 = 200_000;

/// Number of tuples `(k_1, ..., k_{i-1})` with every `k_j >= n₀` and
/// `Σ k_j <= n`, plus the binomial bound on it.
pub fn compositions_count(n: usize, i: usize, n0: usize) -> Result<CompositionCount> {
    if i == 0 {
        return Err(Error::InvalidArgument("i must be at least 1".into()));
    }
    if n0 == 0 {
        return Err(Error::InvalidArgument("n₀ must be at least 1".into()));
    }
    let slots = i - 1;
    let bound = {
        let top = (n + i) as i64 - n0 as i64;
        binomial_or_zero(top, slots)
    };
    // Stars and bars: shift each k_j down by n₀ and add a slack variable.
    let count = match n.checked_sub(slots * n0) {
        None => BigUint::zero(),
        Some(m) => num_integer::binomial(BigUint::from(m + slots), BigUint::from(slots)),
    };
    let (count, method) = if count <= BigUint::from(ENUMERATION_LIMIT) {
        let mut enumerated = 0u64;
        for_each_composition(n, i, n0, |_| enumerated += 1);
        debug_assert_eq!(BigUint::from(enumerated), count);
        (BigUint::from(enumerated), CountMethod::Enumeration)
    } else {
        (count, CountMethod::Formula)
    };
    assert!(count <= bound, "composition count exceeds the binomial bound");
    Ok(CompositionCount { count, bound, method })
}

fn binomial_or_zero(top: i64, k: usize) -> BigUint {
    if k == 0 {
        return BigUint::one();
    }
    if top < k as i64 {
        return BigUint::zero();
    }
    num_integer::binomial(BigUint::from(top as u64), BigUint::from(k as u64))
}

/// Calls `visit` on every tuple counted by [`compositions_count`].
pub fn for_each_composition<F: FnMut(&[usize])>(n: usize, i: usize, n0: usize, mut visit: F) {
    fn walk<F: FnMut(&[usize])>(buf: &mut Vec<usize>, slots: usize, budget: usize, n0: usize, visit: &mut F) {
        if buf.len() == slots {
            visit(buf);
            return;
        }
        let remaining_after = slots - buf.len() - 1;
        let reserve = remaining_after * n0;
        if budget < n0 + reserve {
            return;
        }
        for k in n0..=budget - reserve {
            buf.push(k);
            walk(buf, slots, budget - k, n0, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(i.saturating_sub(1));
    walk(&mut buf, i.saturating_sub(1), n, n0, &mut visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_at_small_n() {
        let e = TailSpec::exponential(2f64.ln()).unwrap();
        assert!((tail(&e, 3) - 0.125).abs() < 1e-15);
        assert!((pmf(&e, 2) - 0.25).abs() < 1e-15);
        let p = TailSpec::polynomial(3.0, 1.0).unwrap();
        assert_eq!(tail(&p, 2), 0.125);
        assert_eq!(pmf(&p, 2), 0.875);
        let x = TailSpec::explicit(vec![1.0, 0.5, 0.0]).unwrap();
        assert_eq!(pmf(&x, 1), 0.5);
        for s in [&e, &p, &x] {
            assert_eq!(tail(s, 0), 1.0);
        }
    }

    #[test]
    fn aggregate_is_componentwise_max() {
        let specs = [TailSpec::exponential(2f64.ln()).unwrap(), TailSpec::polynomial(3.0, 1.0).unwrap()];
        assert!((aggregate_m(&specs, 4).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(aggregate_m(&specs, 0).unwrap(), 1.0);
        assert_eq!(aggregate_m(&[], 3), Err(Error::EmptyComponents));
    }

    #[test]
    fn geometric_mbar_is_exact() {
        let specs = [TailSpec::exponential(2f64.ln()).unwrap()];
        let s = mbar(&specs, 2, 40).unwrap();
        assert!((s.upper() - 0.5).abs() < 1e-14);
        assert!(mbar(&specs, 0, 10).unwrap().value >= 1.0);
    }

    #[test]
    fn explicit_sequence_needs_a_remainder() {
        assert!(matches!(
            mbar_of_sequence(&[1.0, 0.5, 0.25], 0, None),
            Err(Error::TruncationUnbounded { from: 3 })
        ));
        let s = mbar_of_sequence(&[1.0, 0.5, 0.0], 1, None).unwrap();
        assert_eq!(s.upper(), 0.5);
    }

    #[test]
    fn mbar_table_extends_to_negative_indices() {
        let specs = [TailSpec::exponential(2f64.ln()).unwrap()];
        let t = MbarTable::new(&specs, 30).unwrap();
        assert!((t.get(0) - 2.0).abs() < 1e-12);
        assert!((t.get(-3) - 5.0).abs() < 1e-12);
        assert!((t.get(40) - 2f64.powi(-39)).abs() < 1e-20);
    }

    #[test]
    fn from_pmf_three_five() {
        let s = TailSpec::from_pmf(&[(3, 0.5), (5, 0.5)]).unwrap();
        assert_eq!(s, TailSpec::explicit(vec![1.0, 1.0, 1.0, 0.5, 0.5, 0.0]).unwrap());
        assert_eq!(pmf(&s, 3), 0.5);
        assert_eq!(pmf(&s, 4), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(TailSpec::stretched(1.0, 1.0).is_err());
        assert!(TailSpec::polynomial(1.0, 1.0).is_err());
        assert!(TailSpec::explicit(vec![0.9, 0.1]).is_err());
        assert!(matches!(stretched_tail_lemma(2f64.ln(), 1.0, 100), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            stretched_tail_lemma(2.0, 0.5, 1),
            Err(Error::ThresholdNotMet { threshold, .. }) if threshold == 4.0
        ));
        assert!(matches!(gamma_tail_inequality(2.0, 2.0, 2.0), Err(Error::ThresholdNotMet { .. })));
    }

    #[test]
    fn gamma_inequality_closed_forms() {
        let c = gamma_tail_inequality(1.0, 2.0, 3.0).unwrap();
        assert!((c.lhs - (-3f64).exp()).abs() < 1e-15 && c.holds);
        let c = gamma_tail_inequality(2.0, 2.0, 4.0).unwrap();
        assert!((c.lhs / (5.0 * (-4f64).exp()) - 1.0).abs() < 1e-12);
        assert!((c.rhs / (8.0 * (-4f64).exp()) - 1.0).abs() < 1e-14);
        assert!(c.holds);
    }

    #[test]
    fn compositions_small_cases() {
        assert_eq!(compositions_count(7, 1, 2).unwrap().count, BigUint::from(1u32));
        assert_eq!(compositions_count(5, 3, 2).unwrap().count, BigUint::from(3u32));
        assert_eq!(compositions_count(4, 3, 3).unwrap().count, BigUint::zero());
        let big = compositions_count(400, 40, 2).unwrap();
        assert_eq!(big.method, CountMethod::Formula);
        assert!(big.count > BigUint::from(u64::MAX));
    }
}
