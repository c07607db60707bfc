//! The product tail against oracles that share no code with the DP.

use num_traits::{One, Zero};
use proptest::prelude::*;
use towerprod_core::correlation::transition_matrix;
use towerprod_core::product::{brute_force_tail, product_tail_dp, product_tail_mc, ProductModel, DEFAULT_CELL_BUDGET};
use towerprod_core::rates::wilson;
use towerprod_core::{BigRational, Scalar, TowerModel};

/// Runs the alternating construction forward one time step at a time on the
/// joint chain, carrying the probability of every (state, state, controller)
/// configuration. Returns `P(T > n)` for `n <= horizon`.
fn time_stepped_tail<S: Scalar>(a: &TowerModel<S>, b: &TowerModel<S>, n0: usize, horizon: usize) -> Vec<S> {
    let pa = transition_matrix(a);
    let pb = transition_matrix(b);
    let (ka, kb) = (pa.len(), pb.len());
    let base_a: Vec<bool> = a.states().iter().map(|s| s.in_base()).collect();
    let base_b: Vec<bool> = b.states().iter().map(|s| s.in_base()).collect();
    // controller: driven factor d in {0, 1} and remaining wait w (0 = running)
    let ctl = |d: usize, w: usize| d * (n0 + 1) + w;
    let nctl = 2 * (n0 + 1);
    let idx = |x: usize, y: usize, c: usize| (x * kb + y) * nctl + c;
    let mut dist = vec![S::zero(); ka * kb * nctl];
    for (x, px) in a.base_distribution().iter().enumerate() {
        for (y, py) in b.base_distribution().iter().enumerate() {
            dist[idx(x, y, ctl(0, n0))] = px.clone() * py.clone();
        }
    }
    let mut tail = vec![S::one()];
    let mut alive = S::one();
    for _ in 1..=horizon {
        let mut next = vec![S::zero(); dist.len()];
        let mut stopped = S::zero();
        for x in 0..ka {
            for y in 0..kb {
                for d in 0..2 {
                    for w in 0..=n0 {
                        let m = dist[idx(x, y, ctl(d, w))].clone();
                        if m.is_zero() {
                            continue;
                        }
                        for (x2, p) in pa[x].iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                            for (y2, q) in pb[y].iter().enumerate().filter(|(_, q)| !q.is_zero()) {
                                let mass = m.clone() * p.clone() * q.clone();
                                let w2 = w.saturating_sub(1);
                                let driven_home = if d == 0 { base_a[x2] } else { base_b[y2] };
                                if w2 > 0 || !driven_home {
                                    next[idx(x2, y2, ctl(d, w2))] = next[idx(x2, y2, ctl(d, w2))].clone() + mass;
                                    continue;
                                }
                                // a probe time
                                let passive_home = if d == 0 { base_b[y2] } else { base_a[x2] };
                                if passive_home {
                                    stopped = stopped + mass;
                                } else {
                                    let c = ctl(1 - d, n0);
                                    next[idx(x2, y2, c)] = next[idx(x2, y2, c)].clone() + mass;
                                }
                            }
                        }
                    }
                }
            }
        }
        alive = alive - stopped;
        tail.push(alive.clone());
        dist = next;
    }
    tail
}

fn two_column<S: Scalar>() -> TowerModel<S> {
    TowerModel::from_columns(vec![(3, S::ratio(1, 2)), (5, S::ratio(1, 2))]).unwrap()
}

#[test]
fn geometric_pair_is_compound_geometric() {
    // With P(R = k) = 2^{-k} each factor is in its base with probability ½ at
    // every time, independently of the past. Gaps are Geom(½) and each probe
    // stops with probability ½, so T ~ Geom(¼).
    let g = TowerModel::from_columns((1..=60).map(|k| (k, 0.5f64.powi(k as i32))).chain([(61, 0.5f64.powi(60))]).collect())
        .unwrap();
    let p = ProductModel::with_n0(g.clone(), g, 1, 200).unwrap();
    let dp = product_tail_dp(&p, 64, DEFAULT_CELL_BUDGET).unwrap();
    for n in 1..=64 {
        let exact = 0.75f64.powi(n as i32);
        assert!((dp.tail[n] - exact).abs() <= 1e-12 + dp.leak_bound[n], "n = {n}");
    }
}

#[test]
fn two_column_pair_matches_time_stepping_exactly() {
    let m: TowerModel<BigRational> = two_column();
    let p = ProductModel::with_n0(m.clone(), m.clone(), 8, 60).unwrap();
    let dp = product_tail_dp(&p, 40, DEFAULT_CELL_BUDGET).unwrap();
    let ts = time_stepped_tail(&m, &m, 8, 40);
    assert_eq!(dp.tail, ts);
    let bf = brute_force_tail(&p, 40).unwrap();
    assert_eq!(bf.tail, ts);
}

#[test]
fn unit_model_has_no_tail() {
    let u = TowerModel::from_columns(vec![(1, BigRational::one())]).unwrap();
    let p = ProductModel::with_n0(u.clone(), u, 1, 10).unwrap();
    let dp = product_tail_dp(&p, 10, DEFAULT_CELL_BUDGET).unwrap();
    assert!(dp.tail[1..].iter().all(|x| x.is_zero()));
}

#[test]
fn monte_carlo_within_wilson_bands() {
    let m: TowerModel<f64> = two_column();
    let p = ProductModel::with_n0(m.clone(), m.clone(), 8, 60).unwrap();
    let dp = product_tail_dp(&p, 60, DEFAULT_CELL_BUDGET).unwrap();
    let mc = product_tail_mc(&m, &m, 8, 50_000, 60, 11, 1_000_000).unwrap();
    assert!(mc.audit.gaps_ok && mc.audit.stops_in_base);
    for n in 0..=60 {
        let (lo, hi) = wilson(mc.exceed[n], 50_000, 4.0);
        assert!(lo <= dp.tail[n] && dp.tail[n] <= hi, "n = {n}: {} not in [{lo}, {hi}]", dp.tail[n]);
    }
}

fn small_model() -> impl Strategy<Value = TowerModel<BigRational>> {
    proptest::collection::btree_map(1usize..=6, 1u64..=4, 1..=3).prop_filter_map("aperiodic", |w| {
        let total: u64 = w.values().sum();
        let cols = w.iter().map(|(&k, &x)| (k, BigRational::ratio(x, total))).collect();
        TowerModel::from_columns(cols).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn dp_agrees_with_time_stepping(a in small_model(), b in small_model(), n0 in 4usize..=10) {
        let h = 18;
        let ts = time_stepped_tail(&a, &b, n0, h);
        let p = ProductModel::with_n0(a, b, n0, 40);
        // some windows have u_g = 0 inside them; those models have no c
        prop_assume!(p.is_ok());
        let dp = product_tail_dp(&p.unwrap(), h, DEFAULT_CELL_BUDGET).unwrap();
        prop_assert_eq!(dp.tail, ts);
    }

    #[test]
    fn dp_tail_is_a_survival_function(a in small_model(), b in small_model()) {
        let p = ProductModel::with_n0(a.cast::<f64>(), b.cast::<f64>(), 6, 60);
        prop_assume!(p.is_ok());
        let dp = product_tail_dp(&p.unwrap(), 80, DEFAULT_CELL_BUDGET).unwrap();
        prop_assert!((dp.tail[0] - 1.0).abs() < 1e-15);
        prop_assert!(dp.tail.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(dp.drift < 1e-10);
    }
}
