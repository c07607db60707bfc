//! Towers in affine normal form.
//!
//! Every return branch is an affine bijection onto the base, so a point's
//! position inside its column carries no information: the pair
//! `(column, level)` is an exact Markov model of the tower map. A column with
//! return time `R` and weight `p` climbs deterministically through levels
//! `0..R` and then re-enters the base in column `j` with probability `p_j`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tails::TailSpec;

/// One column of the tower: all base points sharing a return time.
#[derive(Debug, Clone, PartialEq)]
pub struct Column<S> {
    pub return_time: usize,
    pub prob: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TowerState {
    pub column: usize,
    pub level: usize,
}

impl TowerState {
    pub fn base(column: usize) -> Self {
        Self { column, level: 0 }
    }

    pub fn in_base(&self) -> bool {
        self.level == 0
    }
}

#[derive(Debug, Clone)]
pub struct TowerModel<S> {
    columns: Vec<Column<S>>,
    /// `pmf[k] = P(R = k)`, zero where there is no column.
    pmf: Vec<S>,
    cdf: Vec<f64>,
    mean_return: S,
    gcd: usize,
    leak: f64,
    offsets: Vec<usize>,
}

impl<S: Scalar> TowerModel<S> {
    /// Builds a model from `(return time, probability)` pairs. Repeated
    /// return times are merged; columns come out sorted by return time.
    pub fn from_columns(columns: Vec<(usize, S)>) -> Result<Self> {
        Self::with_leak(columns, 0.0)
    }

    pub(crate) fn with_leak(columns: Vec<(usize, S)>, leak: f64) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidModel("a tower needs at least one column".into()));
        }
        let max_r = columns.iter().map(|c| c.0).max().unwrap_or(0);
        let mut pmf = vec![S::zero(); max_r + 1];
        for (r, p) in columns {
            if r == 0 {
                return Err(Error::InvalidModel("return times must be at least 1".into()));
            }
            if !p.is_positive() {
                return Err(Error::InvalidModel(format!("column {r} has non-positive weight {p:?}")));
            }
            pmf[r] = pmf[r].clone() + p;
        }
        let total = crate::scalar::sum(&pmf);
        let off = crate::scalar::abs_diff(&total, &S::one());
        if (S::is_exact() && total != S::one()) || off > S::unit_tolerance() {
            return Err(Error::InvalidModel(format!("column weights sum to {}", total.to_f64())));
        }
        let columns: Vec<Column<S>> = pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(r, p)| Column { return_time: r, prob: p.clone() })
            .collect();
        let support: Vec<usize> = columns.iter().map(|c| c.return_time).collect();
        let gcd = support.iter().fold(0, |g, &r| num_integer::gcd(g, r));
        if gcd != 1 {
            return Err(Error::AperiodicityViolated { gcd, support });
        }
        let mean_return = columns
            .iter()
            .fold(S::zero(), |acc, c| acc + c.prob.clone() * S::from_usize(c.return_time));
        let mut cdf = Vec::with_capacity(columns.len());
        let mut acc = 0.0;
        for c in &columns {
            acc += c.prob.to_f64();
            cdf.push(acc);
        }
        let mut offsets = Vec::with_capacity(columns.len() + 1);
        let mut o = 0;
        for c in &columns {
            offsets.push(o);
            o += c.return_time;
        }
        offsets.push(o);
        Ok(Self { columns, pmf, cdf, mean_return, gcd, leak, offsets })
    }

    pub fn columns(&self) -> &[Column<S>] {
        &self.columns
    }

    /// `P(R = k)` for `k = 0..=max_return`.
    pub fn pmf(&self) -> &[S] {
        &self.pmf
    }

    pub fn max_return(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean_return(&self) -> &S {
        &self.mean_return
    }

    pub fn mean_return_f64(&self) -> f64 {
        self.mean_return.to_f64()
    }

    pub fn gcd(&self) -> usize {
        self.gcd
    }

    /// Probability mass moved onto the top column by truncation.
    pub fn leak(&self) -> f64 {
        self.leak
    }

    /// Contraction of inverse return branches: the largest column weight.
    pub fn expansion_bound(&self) -> f64 {
        self.columns.iter().map(|c| c.prob.to_f64()).fold(0.0, f64::max)
    }

    /// Distortion constant; affine branches have none.
    pub fn distortion(&self) -> f64 {
        0.0
    }

    pub fn return_time(&self, column: usize) -> usize {
        self.columns[column].return_time
    }

    /// Number of `(column, level)` states.
    pub fn state_count(&self) -> usize {
        self.offsets[self.columns.len()]
    }

    pub fn state_index(&self, s: TowerState) -> usize {
        self.offsets[s.column] + s.level
    }

    pub fn states(&self) -> Vec<TowerState> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(column, c)| (0..c.return_time).map(move |level| TowerState { column, level }))
            .collect()
    }

    /// Draws a column according to the re-entry law.
    pub fn sample_column<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let top = *self.cdf.last().expect("non-empty");
        let i = self.cdf.partition_point(|&c| c <= u * top);
        i.min(self.columns.len() - 1)
    }

    /// One application of the tower map.
    pub fn step<R: Rng + ?Sized>(&self, state: TowerState, rng: &mut R) -> TowerState {
        if state.level + 1 < self.columns[state.column].return_time {
            TowerState { column: state.column, level: state.level + 1 }
        } else {
            TowerState::base(self.sample_column(rng))
        }
    }

    /// Steps until the base is reached; zero in the base.
    pub fn first_hitting(&self, state: TowerState) -> usize {
        if state.level == 0 {
            0
        } else {
            self.columns[state.column].return_time - state.level
        }
    }

    /// `u_0..=u_N`: probability of being in the base at time `n` after
    /// starting in the base.
    pub fn renewal_probabilities(&self, horizon: usize) -> Vec<S> {
        renewal_sequence(&self.pmf, horizon)
    }

    /// Chooses the mixing window: the first `n₀` after which `u_n` never
    /// drops below `c = φ / E[R]` up to the horizon.
    pub fn select_n0(&self, fraction: f64, horizon: usize) -> Result<MixingWindow> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1), got {fraction}")));
        }
        let mean = self.mean_return_f64();
        let required = (20.0 * mean).ceil() as usize + self.max_return();
        if horizon < required {
            return Err(Error::HorizonTooShort { horizon, required });
        }
        let u: Vec<f64> = self.renewal_probabilities(horizon).iter().map(|x| x.to_f64()).collect();
        let c = fraction / mean;
        window_for_target(&u, c, mean)
    }

    /// Stationary law `ν(i, ℓ) = p_i / E[R]`, indexed like [`Self::states`].
    pub fn invariant_measure(&self) -> Vec<S> {
        let mut nu = Vec::with_capacity(self.state_count());
        for c in &self.columns {
            let mass = c.prob.clone() / self.mean_return.clone();
            nu.extend(std::iter::repeat_n(mass, c.return_time));
        }
        nu
    }

    /// `dist ↦ dist · P` without forming `P`.
    pub fn push_forward(&self, dist: &[S]) -> Vec<S> {
        assert_eq!(dist.len(), self.state_count());
        let mut out = vec![S::zero(); dist.len()];
        let mut top = S::zero();
        for (i, c) in self.columns.iter().enumerate() {
            let o = self.offsets[i];
            for level in 0..c.return_time - 1 {
                out[o + level + 1] = dist[o + level].clone();
            }
            top = top + dist[o + c.return_time - 1].clone();
        }
        for (i, c) in self.columns.iter().enumerate() {
            let o = self.offsets[i];
            out[o] = out[o].clone() + top.clone() * c.prob.clone();
        }
        out
    }

    /// Distribution of a base start: column `i` at level 0 with weight `p_i`.
    pub fn base_distribution(&self) -> Vec<S> {
        let mut d = vec![S::zero(); self.state_count()];
        for (i, c) in self.columns.iter().enumerate() {
            d[self.offsets[i]] = c.prob.clone();
        }
        d
    }

    /// The elements of the `n`-step refinement restricted to the base. A word
    /// lists the columns visited; it ends with the first column whose return
    /// happens at or after time `n`.
    pub fn enumerate_cylinders(&self, n: usize, max_events: usize) -> Result<Vec<Cylinder<S>>> {
        const WORD_CAP: usize = 5_000_000;
        if n == 0 {
            return Ok(vec![Cylinder { word: vec![], phase: 0, measure: S::one(), returns_to_base: true }]);
        }
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<usize>, usize, S)> = vec![(Vec::new(), 0, S::one())];
        while let Some((word, elapsed, measure)) = stack.pop() {
            if word.len() >= max_events {
                return Err(Error::EnumerationBound(format!(
                    "more than {max_events} return events before time {n}"
                )));
            }
            for c in &self.columns {
                let m = measure.clone() * c.prob.clone();
                let mut w = word.clone();
                w.push(c.return_time);
                let reached = elapsed + c.return_time;
                if reached >= n {
                    out.push(Cylinder {
                        phase: n - elapsed,
                        returns_to_base: reached == n,
                        word: w,
                        measure: m,
                    });
                    if out.len() > WORD_CAP {
                        return Err(Error::EnumerationBound(format!("more than {WORD_CAP} cylinders")));
                    }
                } else {
                    stack.push((w, reached, m));
                }
            }
        }
        out.sort_by(|a, b| a.word.cmp(&b.word));
        Ok(out)
    }

    /// Density of the `n`-step image of the base measure against `ν`, and the
    /// bound `M₀ = (D + 1) m(Δ) / m(Δ₀) = E[R]`.
    pub fn pushforward_density_bound(&self, n: usize) -> DensityCheck {
        let mut d = self.base_distribution();
        for _ in 0..n {
            d = self.push_forward(&d);
        }
        let nu = self.invariant_measure();
        let max_density = d
            .iter()
            .zip(&nu)
            .map(|(x, v)| x.to_f64() / v.to_f64())
            .fold(0.0, f64::max);
        let bound = (self.distortion() + 1.0) * self.mean_return_f64();
        DensityCheck { n, max_density, m0_bound: bound, holds: max_density <= bound * (1.0 + 1e-12) }
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            columns: self.columns.iter().map(|c| (c.return_time, c.prob.to_f64())).collect(),
            mean_return: self.mean_return_f64(),
            gcd: self.gcd,
            leak: self.leak,
            expansion_bound: self.expansion_bound(),
            distortion: self.distortion(),
        }
    }

    /// Converts to another scalar type via `f64`.
    pub fn cast<T: Scalar>(&self) -> TowerModel<T> {
        let cols = self.columns.iter().map(|c| (c.return_time, T::from_f64(c.prob.to_f64()))).collect();
        TowerModel::with_leak(cols, self.leak).expect("casting preserves validity")
    }
}

/// Builds the tower whose column `k` carries `P(R = k)`, lumping
/// `P(R > r_max)` into the top column.
pub fn build_tower<S: Scalar>(spec: &TailSpec, r_max: usize, leak_budget: f64) -> Result<TowerModel<S>> {
    if r_max < 2 {
        return Err(Error::InvalidArgument(format!("truncation must be at least 2, got {r_max}")));
    }
    let top = match spec.max_support() {
        Some(m) => m.min(r_max),
        None => r_max,
    };
    let leak = spec.survival(top);
    if leak > leak_budget {
        return Err(Error::TruncationTooLossy { leak, budget: leak_budget });
    }
    let mut cols: Vec<(usize, S)> = Vec::with_capacity(top);
    for k in 1..top {
        let p = spec.pmf(k);
        if p > 0.0 {
            cols.push((k, S::from_f64(p)));
        }
    }
    let last = if S::is_exact() {
        let used = cols.iter().fold(S::zero(), |a, c| a + c.1.clone());
        S::one() - used
    } else {
        S::from_f64(spec.survival(top - 1))
    };
    if last.is_positive() {
        cols.push((top, last));
    }
    TowerModel::with_leak(cols, leak)
}

/// Solves `u_n = Σ_k P(R = k) u_{n-k}`, `u_0 = 1`.
pub fn renewal_sequence<S: Scalar>(pmf: &[S], horizon: usize) -> Vec<S> {
    let support: Vec<(usize, &S)> = pmf.iter().enumerate().filter(|(_, p)| p.is_positive()).collect();
    let mut u = Vec::with_capacity(horizon + 1);
    u.push(S::one());
    for n in 1..=horizon {
        let mut acc = S::zero();
        for &(k, p) in &support {
            if k > n {
                break;
            }
            acc = acc + p.clone() * u[n - k].clone();
        }
        u.push(acc);
    }
    u
}

/// Smallest `n₀ >= 1` with `u_m >= c` for every `n₀ <= m <= N`.
pub fn window_for_target(u: &[f64], c: f64, mean_return: f64) -> Result<MixingWindow> {
    let horizon = u.len() - 1;
    if u[horizon] < c {
        return Err(Error::MixingWindowNotFound { c, horizon });
    }
    let mut n0 = horizon;
    while n0 > 1 && u[n0 - 1] >= c {
        n0 -= 1;
    }
    Ok(MixingWindow {
        n0,
        c,
        c_unnormalized: c / mean_return,
        limit: 1.0 / mean_return,
        limit_gap: (u[horizon] - 1.0 / mean_return).abs(),
        horizon,
    })
}

/// The pair `(n₀, c)` with `u_n >= c` for `n₀ <= n <= horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingWindow {
    pub n0: usize,
    /// Floor on base-to-base probabilities with the base normalized.
    pub c: f64,
    /// The same floor measured with `m(Δ) = E[R]`.
    pub c_unnormalized: f64,
    pub limit: f64,
    /// `|u_N - 1/E[R]|`.
    pub limit_gap: f64,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder<S> {
    /// Return times of the columns visited, in order.
    pub word: Vec<usize>,
    /// Steps spent in the last column by time `n`.
    pub phase: usize,
    pub measure: S,
    pub returns_to_base: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityCheck {
    pub n: usize,
    pub max_density: f64,
    pub m0_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub columns: Vec<(usize, f64)>,
    pub mean_return: f64,
    pub gcd: usize,
    pub leak: f64,
    pub expansion_bound: f64,
    pub distortion: f64,
}
