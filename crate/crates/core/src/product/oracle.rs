//! Brute-force law of `T` from explicit return-word histories.
//!
//! Each factor's history up to time `N` is one cylinder of its `N + 1` step
//! refinement: a word of return times whose partial sums are the base visits.
//! For every pair of words the alternating rule is replayed on the two visit
//! sets and the pair's probability is credited to the resulting `T`. Nothing
//! is shared with the dynamic program beyond the tower models themselves.

use super::ProductModel;
use crate::error::Result;
use crate::rates::{Provenance, SurvivalCurve};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct OracleOutcome<S> {
    pub tail: Vec<S>,
    pub words: [usize; 2],
}

impl<S: Scalar> OracleOutcome<S> {
    pub fn curve(&self) -> SurvivalCurve {
        let n = self.tail.len();
        SurvivalCurve::new(self.tail.iter().map(|x| x.to_f64()).collect(), vec![0.0; n], Provenance::BruteForce)
    }
}

/// Base visit times of one word: `0, S_1, S_2, ...`.
fn visits(word: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(word.len() + 1);
    let mut s = 0;
    v.push(0);
    for r in word {
        s += r;
        v.push(s);
    }
    v
}

/// Next visit at or after `t`. The last visit of every word lies beyond the
/// horizon, so this always exists for `t <= N + 1`.
fn next_visit(v: &[usize], t: usize) -> usize {
    v[v.partition_point(|&x| x < t)]
}

fn is_visit(v: &[usize], t: usize) -> bool {
    v.binary_search(&t).is_ok()
}

/// Replays the rule; `None` means `T > horizon`.
fn stop_time(v: [&[usize]; 2], n0: usize, horizon: usize) -> Option<usize> {
    let mut t = 0;
    let mut step = 1;
    loop {
        let a = if step % 2 == 1 { 0 } else { 1 };
        let wake = t + n0;
        if wake > horizon {
            return None;
        }
        t = next_visit(v[a], wake);
        if t > horizon {
            return None;
        }
        if is_visit(v[1 - a], t) {
            return Some(t);
        }
        step += 1;
    }
}

/// Exact `P(T > n)` for `n <= horizon` by enumerating all pairs of words.
pub fn brute_force_tail<S: Scalar>(model: &ProductModel<S>, horizon: usize) -> Result<OracleOutcome<S>> {
    let [first, second] = model.components();
    let cyl_a = first.enumerate_cylinders(horizon + 1, horizon + 2)?;
    let cyl_b = second.enumerate_cylinders(horizon + 1, horizon + 2)?;
    let va: Vec<Vec<usize>> = cyl_a.iter().map(|c| visits(&c.word)).collect();
    let vb: Vec<Vec<usize>> = cyl_b.iter().map(|c| visits(&c.word)).collect();
    let n0 = model.n0();

    // P(T = t), with index horizon + 1 collecting T > horizon.
    let mut law = vec![S::zero(); horizon + 2];
    let mut bucket = vec![S::zero(); horizon + 2];
    for (ca, a) in cyl_a.iter().zip(&va) {
        for b in bucket.iter_mut() {
            *b = S::zero();
        }
        for (cb, b) in cyl_b.iter().zip(&vb) {
            let t = stop_time([a, b], n0, horizon).unwrap_or(horizon + 1);
            bucket[t] = bucket[t].clone() + cb.measure.clone();
        }
        for (l, b) in law.iter_mut().zip(&bucket) {
            if b.is_positive() {
                *l = l.clone() + ca.measure.clone() * b.clone();
            }
        }
    }
    let mut tail = vec![S::zero(); horizon + 1];
    let mut acc = law[horizon + 1].clone();
    for n in (0..=horizon).rev() {
        tail[n] = acc.clone();
        acc = acc + law[n].clone();
    }
    Ok(OracleOutcome { tail, words: [cyl_a.len(), cyl_b.len()] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::{product_tail_dp, DEFAULT_CELL_BUDGET};
    use crate::tower::TowerModel;
    use num_rational::BigRational;

    #[test]
    fn unit_pair() {
        let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
        let p = ProductModel::with_n0(u.clone(), u, 1, 10).unwrap();
        let o = brute_force_tail(&p, 8).unwrap();
        assert_eq!(o.tail[0], 1.0);
        assert!(o.tail[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn three_five_small_horizon_exact() {
        let half = BigRational::new(1.into(), 2.into());
        let m = TowerModel::from_columns(vec![(3, half.clone()), (5, half)]).unwrap();
        let p = ProductModel::with_n0(m.clone(), m, 8, 60).unwrap();
        let o = brute_force_tail(&p, 24).unwrap();
        let d = product_tail_dp(&p, 24, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(o.tail, d.tail);
    }
}
