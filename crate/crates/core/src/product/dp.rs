//! Exact law of the simultaneous return time by forward dynamic programming.
//!
//! Between probes the state is `(a, t, r)`: at probe time `t` the factor
//! that was just driven sits fresh in its base, and factor `a` (to be driven
//! next) still needs `r` steps to reach its base. From there the next gap is
//! `d = r` if `r >= n₀`, and `n₀ + j` with `j ~ q^a_{n₀-r}` otherwise. At
//! `t + d` the passive factor, fresh since `t`, is in its base with
//! probability `u_d` (stop) or carries residual `r'` with probability
//! `q_d(r')` (continue with the roles swapped).
//!
//! Transition mass between consecutive probes is recorded in a matrix
//! `A[t][t']`, so that `P(T > n) = Σ_{t <= n < t'} A[t][t']` is a sum of
//! non-negative terms and keeps full relative precision far into the tail.

use super::tables::ResidualTables;
use super::ProductModel;
use crate::error::{Error, Result};
use crate::rates::{Provenance, SurvivalCurve};
use crate::scalar::Scalar;

/// Default ceiling on stored DP cells.
pub const DEFAULT_CELL_BUDGET: usize = 150_000_000;

#[derive(Debug, Clone)]
pub struct DpOutcome<S> {
    /// `tail[n] = P(T > n)`, `n = 0..=N`.
    pub tail: Vec<S>,
    /// `stop[n] = P(T = n)`.
    pub stop: Vec<S>,
    /// Truncation error bound per `n`.
    pub leak_bound: Vec<f64>,
    /// `|Σ stop + P(T > N) - 1|`.
    pub drift: f64,
}

impl<S: Scalar> DpOutcome<S> {
    pub fn curve(&self) -> SurvivalCurve {
        SurvivalCurve::new(
            self.tail.iter().map(|x| x.to_f64()).collect(),
            self.leak_bound.clone(),
            Provenance::Dp,
        )
    }
}

/// Computes `P(T > n)` for `n <= horizon`.
pub fn product_tail_dp<S: Scalar>(model: &ProductModel<S>, horizon: usize, cell_budget: usize) -> Result<DpOutcome<S>> {
    let n = horizon;
    let n0 = model.n0();
    let cells = 4 * (n + 1) * (n + 2) + (n + 2) * (n + 2) + 2 * (n + 1) * (n + 2);
    if cells > cell_budget {
        return Err(Error::StateSpaceBound { states: cells, budget: cell_budget });
    }
    let [first, second] = model.components();
    let tabs = [ResidualTables::new(first, n), ResidualTables::new(second, n)];

    // alive[a][t][r]: factor a next, residual r at probe time t, t + r <= N
    let mut alive: [Vec<Vec<S>>; 2] = std::array::from_fn(|_| (0..=n).map(|t| vec![S::zero(); n - t + 1]).collect());
    let mut transfer: Vec<Vec<S>> = (0..=n).map(|_| vec![S::zero(); n + 2]).collect();
    let mut stop = vec![S::zero(); n + 1];
    alive[0][0][0] = S::one();

    let mut gaps = vec![S::zero(); n + 1];
    for t in 0..=n {
        for a in 0..2 {
            let b = 1 - a;
            let room = n - t;
            // Gap law out of every state at (a, t).
            for g in gaps.iter_mut() {
                *g = S::zero();
            }
            let mut beyond = S::zero();
            let mut any = false;
            for r in 0..=room {
                let w = alive[a][t][r].clone();
                if !w.is_positive() {
                    continue;
                }
                any = true;
                if r >= n0 {
                    gaps[r] = gaps[r].clone() + w;
                } else {
                    let tab = &tabs[a];
                    let g = n0 - r;
                    if n0 <= room {
                        for j in 0..=room - n0 {
                            let qj = tab.q[g][j].clone();
                            if qj.is_positive() {
                                gaps[n0 + j] = gaps[n0 + j].clone() + w.clone() * qj;
                            }
                        }
                        beyond = beyond + w * tab.upper_tail(g, room - n0 + 1);
                    } else {
                        beyond = beyond + w;
                    }
                }
            }
            if !any {
                continue;
            }
            transfer[t][n + 1] = transfer[t][n + 1].clone() + beyond;
            let tab = &tabs[b];
            for d in n0..=room {
                let w = gaps[d].clone();
                if !w.is_positive() {
                    continue;
                }
                let t2 = t + d;
                transfer[t][t2] = transfer[t][t2].clone() + w.clone();
                stop[t2] = stop[t2].clone() + w.clone() * tab.u[d].clone();
                let room2 = n - t2;
                let row = &tab.q[d];
                let target = &mut alive[b][t2];
                for r2 in 1..=room2 {
                    let q = &row[r2];
                    if q.is_positive() {
                        target[r2] = target[r2].clone() + w.clone() * q.clone();
                    }
                }
                if t2 < n {
                    transfer[t2][n + 1] = transfer[t2][n + 1].clone() + w * tab.upper_tail(d, room2 + 1);
                } else {
                    transfer[t2][n + 1] = transfer[t2][n + 1].clone() + w * tab.upper_tail(d, 1);
                }
            }
        }
    }

    // tail(m) = Σ_{t <= m} Σ_{t' > m} A[t][t']
    let mut tail = vec![S::zero(); n + 1];
    for (t, row) in transfer.iter().enumerate() {
        let mut acc = row[n + 1].clone();
        for m in (t..=n).rev() {
            tail[m] = tail[m].clone() + acc.clone();
            acc = acc + row[m].clone();
        }
    }
    let total = stop.iter().fold(tail[n].clone(), |acc, s| acc + s.clone());
    let drift = crate::scalar::abs_diff(&total, &S::one());
    if drift > 1e-10 {
        return Err(Error::InvalidModel(format!("probability drift {drift:e} in the product DP")));
    }
    let leak_bound = (0..=n).map(|m| model.leak_bound(m)).collect();
    Ok(DpOutcome { tail, stop, leak_bound, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tails::TailSpec;
    use crate::tower::{build_tower, TowerModel};

    #[test]
    fn double_geometric_closed_form() {
        let g: TowerModel<f64> = build_tower(&TailSpec::exponential(2f64.ln()).unwrap(), 70, 1e-12).unwrap();
        let p = ProductModel::with_n0(g.clone(), g, 1, 200).unwrap();
        let out = product_tail_dp(&p, 64, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(out.tail[0], 1.0);
        for n in 1..=64 {
            let exact = 0.75f64.powi(n as i32);
            assert!((out.tail[n] - exact).abs() <= 1e-12 * exact.max(1e-300) + out.leak_bound[n], "n={n}");
        }
    }

    #[test]
    fn unit_pair_is_point_mass() {
        let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
        let p = ProductModel::with_n0(u.clone(), u, 1, 10).unwrap();
        let out = product_tail_dp(&p, 10, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(out.tail[0], 1.0);
        assert!(out.tail[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn budget_is_enforced() {
        let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
        let p = ProductModel::with_n0(u.clone(), u, 1, 10).unwrap();
        assert!(matches!(product_tail_dp(&p, 1000, 1000), Err(Error::StateSpaceBound { .. })));
    }
}
