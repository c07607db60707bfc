//! Residual-time tables of a single tower.
//!
//! Start a tower fresh in its base (column drawn from `p`) and let it run for
//! `g` steps. The number of steps still needed to reach the base is the
//! residual at time `g`; `q_g(r)` is its law, with `q_g(0) = u_g`. The
//! recursion
//!
//! ```text
//! q_0 = δ_0,    q_g(r) = q_{g-1}(r + 1) + u_{g-1} p_{r+1}
//! ```
//!
//! only adds non-negative terms, as does the one for the upper tail
//! `Q_g(k) = Σ_{r >= k} q_g(r)`, so both stay accurate deep into the tail.

use crate::scalar::Scalar;
use crate::tower::TowerModel;

pub(crate) struct ResidualTables<S> {
    pub u: Vec<S>,
    /// `q[g][r]` for `r <= horizon - g`.
    pub q: Vec<Vec<S>>,
    /// `upper[g][k] = Q_g(k)` for `k <= horizon - g + 1`.
    pub upper: Vec<Vec<S>>,
}

impl<S: Scalar> ResidualTables<S> {
    pub fn new(model: &TowerModel<S>, horizon: usize) -> Self {
        let pmf = model.pmf();
        let p = |k: usize| pmf.get(k).cloned().unwrap_or_else(S::zero);
        // survival[k] = P(R > k)
        let mut survival = vec![S::zero(); horizon + 2];
        let mut acc = S::zero();
        for k in (0..pmf.len()).rev() {
            if k + 1 < pmf.len() {
                acc = acc + pmf[k + 1].clone();
            }
            if k < survival.len() {
                survival[k] = acc.clone();
            }
        }
        let u = model.renewal_probabilities(horizon);
        let mut q: Vec<Vec<S>> = Vec::with_capacity(horizon + 1);
        let mut beyond: Vec<S> = Vec::with_capacity(horizon + 1);
        let mut row0 = vec![S::zero(); horizon + 1];
        row0[0] = S::one();
        q.push(row0);
        beyond.push(S::zero());
        for g in 1..=horizon {
            let prev = &q[g - 1];
            let w = u[g - 1].clone();
            let len = horizon - g + 1;
            let mut row = Vec::with_capacity(len);
            for r in 0..len {
                row.push(prev[r + 1].clone() + w.clone() * p(r + 1));
            }
            // Q_g(horizon - g + 1) = Q_{g-1}(horizon - g + 2) + u_{g-1} P(R > horizon - g + 1)
            beyond.push(beyond[g - 1].clone() + w * survival[horizon - g + 1].clone());
            q.push(row);
        }
        let upper = q
            .iter()
            .zip(beyond)
            .map(|(row, tail)| {
                let mut out = vec![S::zero(); row.len() + 1];
                out[row.len()] = tail;
                for r in (0..row.len()).rev() {
                    out[r] = out[r + 1].clone() + row[r].clone();
                }
                out
            })
            .collect();
        Self { u, q, upper }
    }

    /// `Q_g(k)`, for any `k >= 0` as long as `g <= horizon`.
    pub fn upper_tail(&self, g: usize, k: usize) -> S {
        let row = &self.upper[g];
        match row.get(k) {
            Some(v) => v.clone(),
            // Only reachable with k > horizon - g + 1; the table has no
            // resolution there, so report the coarsest available bound.
            None => row[row.len() - 1].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_distributions() {
        let t: TowerModel<f64> = TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap();
        let tab = ResidualTables::new(&t, 30);
        for g in 0..=30 {
            assert!((tab.upper[g][0] - 1.0).abs() < 1e-15, "g = {g}");
            assert_eq!(tab.q[g][0], tab.u[g]);
        }
        // after one step from a fresh start the residual is R - 1
        assert_eq!(&tab.q[1][..6], &[0.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn geometric_residual_is_geometric() {
        let t: TowerModel<f64> = crate::tower::build_tower(
            &crate::tails::TailSpec::exponential(2f64.ln()).unwrap(),
            60,
            1e-12,
        )
        .unwrap();
        let tab = ResidualTables::new(&t, 40);
        for g in 1..10 {
            for r in 0..10 {
                assert!((tab.q[g][r] - 0.5f64.powi(r as i32 + 1)).abs() < 1e-15);
            }
        }
    }
}
