//! The product of two towers and its simultaneous return time.
//!
//! Both factors start in their bases at time 0. Step `i` waits `n₀` steps and
//! then runs the driven factor (the first on odd steps, the second on even
//! ones) until it is back in its base; that time is `τ_i`. If the other
//! factor happens to be in its base at `τ_i` the product has returned and
//! `T = τ_i`. Joint visits to the base at other times are ignored.

mod dp;
mod fold;
mod key_prop;
mod mc;
mod oracle;
pub(crate) mod tables;

pub use dp::{product_tail_dp, DpOutcome, DEFAULT_CELL_BUDGET};
pub use fold::{fold, FoldOutcome, FoldPolicy, FoldStep};
pub use key_prop::{key_prop_check, mbar_lookup, model_mbar, KeyPropReport, Witness};
pub use mc::{product_tail_mc, McOutcome, TraceAudit, DEFAULT_CAP};
pub use oracle::{brute_force_tail, OracleOutcome};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tower::{window_for_target, MixingWindow, TowerModel, TowerState};

/// Two towers together with a mixing window `(n₀, c)` valid for both.
#[derive(Debug, Clone)]
pub struct ProductModel<S> {
    components: [TowerModel<S>; 2],
    n0: usize,
    c: f64,
    windows: Option<[MixingWindow; 2]>,
}

impl<S: Scalar> ProductModel<S> {
    /// Picks `c` as the smaller of the two targets `φ / E[R]` and `n₀` as the
    /// larger of the two windows under that shared `c`.
    pub fn new(first: TowerModel<S>, second: TowerModel<S>, fraction: f64, horizon: usize) -> Result<Self> {
        let own = [first.select_n0(fraction, horizon)?, second.select_n0(fraction, horizon)?];
        let c = own[0].c.min(own[1].c);
        let mut windows = [own[0], own[1]];
        for (w, m) in windows.iter_mut().zip([&first, &second]) {
            let u: Vec<f64> = m.renewal_probabilities(horizon).iter().map(|x| x.to_f64()).collect();
            *w = window_for_target(&u, c, m.mean_return_f64())?;
        }
        let n0 = windows[0].n0.max(windows[1].n0);
        Ok(Self { components: [first, second], n0, c, windows: Some(windows) })
    }

    /// Uses a given `n₀`; `c` becomes the smallest `u_n` over
    /// `n₀ <= n <= horizon` across both factors.
    pub fn with_n0(first: TowerModel<S>, second: TowerModel<S>, n0: usize, horizon: usize) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidArgument("n₀ must be at least 1".into()));
        }
        if horizon < n0 {
            return Err(Error::HorizonTooShort { horizon, required: n0 });
        }
        let mut c = f64::INFINITY;
        for m in [&first, &second] {
            let u = m.renewal_probabilities(horizon);
            c = u[n0..].iter().map(|x| x.to_f64()).fold(c, f64::min);
        }
        if c <= 0.0 {
            return Err(Error::MixingWindowNotFound { c, horizon });
        }
        Ok(Self { components: [first, second], n0, c, windows: None })
    }

    pub fn components(&self) -> &[TowerModel<S>; 2] {
        &self.components
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Floor on `u_n`, `n >= n₀`, shared by both factors.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Per-factor windows under the shared `c`, when chosen by policy.
    pub fn windows(&self) -> Option<&[MixingWindow; 2]> {
        self.windows.as_ref()
    }

    /// Bound on how far truncation can move `P(T > n)`: a truncated column
    /// can only matter if it starts at least `R_max` steps before `n`.
    pub fn leak_bound(&self, n: usize) -> f64 {
        self.components
            .iter()
            .map(|m| {
                let r = m.max_return();
                if n >= r {
                    (n - r + 1) as f64 * m.leak()
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// A factor that can be simulated: anything with a base, a first hitting
/// time and a way to jump forward.
pub trait Component: Sync {
    type State: Copy + Send;

    /// A state in the base at the start of a fresh excursion.
    fn fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Steps until the base is reached; zero in the base.
    fn first_hitting(&self, s: &Self::State) -> usize;

    /// Runs the dynamics for `k` steps.
    fn advance<R: Rng + ?Sized>(&self, s: Self::State, k: usize, rng: &mut R) -> Self::State;

    fn in_base(&self, s: &Self::State) -> bool {
        self.first_hitting(s) == 0
    }
}

impl Component for TowerModel<f64> {
    type State = TowerState;

    fn fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerState {
        TowerState::base(self.sample_column(rng))
    }

    fn first_hitting(&self, s: &TowerState) -> usize {
        TowerModel::first_hitting(self, *s)
    }

    fn advance<R: Rng + ?Sized>(&self, mut s: TowerState, mut k: usize, rng: &mut R) -> TowerState {
        loop {
            let to_top = self.return_time(s.column) - s.level;
            if k < to_top {
                s.level += k;
                return s;
            }
            k -= to_top;
            s = TowerState::base(self.sample_column(rng));
        }
    }
}

/// Positions of both factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProductState<A, B> {
    pub first: A,
    pub second: B,
}

/// One realization of the alternating construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TauTrace {
    /// `τ_1 < τ_2 < ... < τ_i`.
    pub taus: Vec<usize>,
    /// Which factor was driven to its base at each step (0 or 1).
    pub driven: Vec<u8>,
    pub stop_index: usize,
    pub t: usize,
    pub both_in_base: bool,
}

impl TauTrace {
    /// Smallest `τ_j - τ_{j-1}` (with `τ_0 = 0`).
    pub fn min_gap(&self) -> usize {
        let mut prev = 0;
        let mut best = usize::MAX;
        for &t in &self.taus {
            best = best.min(t - prev);
            prev = t;
        }
        best
    }
}

/// Waits `n₀` steps, then runs `s` to its base. Returns the elapsed time and
/// the new (base) state.
pub fn tau_advance<C: Component, R: Rng + ?Sized>(
    component: &C,
    n0: usize,
    s: C::State,
    rng: &mut R,
) -> (usize, C::State) {
    let s = component.advance(s, n0, rng);
    let h = component.first_hitting(&s);
    (n0 + h, component.advance(s, h, rng))
}

/// Runs the alternating construction from `start` until the passive factor
/// is found in its base at a probe time. `cap` bounds physical time.
pub fn simultaneous_return<A: Component, B: Component, R: Rng + ?Sized>(
    first: &A,
    second: &B,
    n0: usize,
    start: ProductState<A::State, B::State>,
    cap: usize,
    rng: &mut R,
) -> std::result::Result<TauTrace, usize> {
    let mut s = start;
    let mut t = 0usize;
    let mut taus = Vec::new();
    let mut driven = Vec::new();
    loop {
        let step = taus.len() + 1;
        let passive_in_base = if step % 2 == 1 {
            let (d, a) = tau_advance(first, n0, s.first, rng);
            s.first = a;
            s.second = second.advance(s.second, d, rng);
            t += d;
            driven.push(0);
            second.in_base(&s.second)
        } else {
            let (d, b) = tau_advance(second, n0, s.second, rng);
            s.second = b;
            s.first = first.advance(s.first, d, rng);
            t += d;
            driven.push(1);
            first.in_base(&s.first)
        };
        taus.push(t);
        if passive_in_base {
            return Ok(TauTrace {
                stop_index: taus.len(),
                taus,
                driven,
                t,
                both_in_base: first.in_base(&s.first) && second.in_base(&s.second),
            });
        }
        if t > cap {
            return Err(t);
        }
    }
}

/// A product used as a single factor of a larger product: each excursion
/// draws a simultaneous return time by simulating the pair.
pub struct NestedPair<'a, A, B> {
    pub first: &'a A,
    pub second: &'a B,
    pub n0: usize,
    pub cap: usize,
}

/// Position inside a nested pair's excursion of length `height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedState {
    pub height: usize,
    pub level: usize,
}

impl<A: Component, B: Component> Component for NestedPair<'_, A, B> {
    type State = NestedState;

    fn fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> NestedState {
        let start = ProductState { first: self.first.fresh(rng), second: self.second.fresh(rng) };
        let trace = simultaneous_return(self.first, self.second, self.n0, start, self.cap, rng)
            .expect("nested pair exceeded its cap");
        NestedState { height: trace.t, level: 0 }
    }

    fn first_hitting(&self, s: &NestedState) -> usize {
        if s.level == 0 {
            0
        } else {
            s.height - s.level
        }
    }

    fn advance<R: Rng + ?Sized>(&self, mut s: NestedState, mut k: usize, rng: &mut R) -> NestedState {
        loop {
            let to_top = s.height - s.level;
            if k < to_top {
                s.level += k;
                return s;
            }
            k -= to_top;
            s = self.fresh(rng);
        }
    }
}
