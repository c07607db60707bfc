//! Correlation sequences, rates and the product bound.

use proptest::prelude::*;
use towerprod_core::correlation::{
    centered_base_indicator, component_rate, correlation_sequence, integral_sequence, product_correlation_check,
    product_integral_sequence, tensor,
};
use towerprod_core::rates::{fit_rate, FitFamily, SurvivalCurve};
use towerprod_core::rng::stream;
use towerprod_core::tails::TailSpec;
use towerprod_core::{build_tower, BigRational, Scalar, TowerModel, TowerState};

fn two_column() -> TowerModel<f64> {
    TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap()
}

fn small_model() -> impl Strategy<Value = TowerModel<f64>> {
    proptest::collection::btree_map(1usize..=6, 1u64..=4, 1..=3).prop_filter_map("aperiodic", |w| {
        let total: u64 = w.values().sum();
        TowerModel::from_columns(w.iter().map(|(&k, &x)| (k, x as f64 / total as f64)).collect()).ok()
    })
}

fn observable(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, len)
}

#[test]
fn time_average_matches_exact_correlation() {
    let m = two_column();
    let phi = centered_base_indicator(&m);
    let exact = correlation_sequence(&m, &phi, &phi, 8).unwrap();
    let norm = 0.75 * 0.75;
    // one long trajectory, split into batches for the error estimate
    let (batches, len) = (100usize, 100_000usize);
    let lags = [0usize, 1, 2, 3, 5, 8];
    let mut rng = stream(2024, 0);
    let mut s = TowerState::base(m.sample_column(&mut rng));
    let mut window = std::collections::VecDeque::with_capacity(9);
    let mut means = vec![Vec::with_capacity(batches); lags.len()];
    for _ in 0..batches {
        let mut acc = vec![0.0; lags.len()];
        for _ in 0..len {
            window.push_front(phi[m.state_index(s)]);
            window.truncate(9);
            if window.len() == 9 {
                for (a, &lag) in acc.iter_mut().zip(&lags) {
                    *a += window[0] * window[lag];
                }
            }
            s = m.step(s, &mut rng);
        }
        for (k, a) in acc.iter().enumerate() {
            means[k].push(a / len as f64);
        }
    }
    for (k, &lag) in lags.iter().enumerate() {
        let mean = means[k].iter().sum::<f64>() / batches as f64;
        let var = means[k].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        let target = exact[lag] * norm;
        assert!((mean.abs() - target).abs() <= 3.0 * se + 1e-12, "lag {lag}: {mean} vs {target} ± {se}");
    }
}

#[test]
fn rates_vanish_for_unit_tower_and_decay_for_geometric() {
    let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
    assert!(component_rate(&u, 10).iter().all(|&g| g == 0.0));
    let g: TowerModel<f64> = build_tower(&TailSpec::geometric(0.5).unwrap(), 30, 1e-3).unwrap();
    let gamma = component_rate(&g, 120);
    assert!(gamma[0] <= 1.0);
    let curve = SurvivalCurve::closed_form(120, |n| gamma[n]);
    let f = fit_rate(&curve, FitFamily::Exponential, (10, 60)).unwrap();
    assert!(f.params.tau.unwrap() > 0.0);
}

#[test]
fn correlations_die_out() {
    let g: TowerModel<f64> = build_tower(&TailSpec::geometric(0.5).unwrap(), 40, 1e-3).unwrap();
    let phi = centered_base_indicator(&g);
    let n = (50.0 * g.mean_return_f64()) as usize;
    assert!(correlation_sequence(&g, &phi, &phi, n).unwrap()[n] < 1e-8);

    // z⁵ = (z² + 1)/2 has a root pair of modulus 0.9014, so the (3,5)
    // correlations are still about 2e-8 at n = 50 E[R] = 200
    let m = two_column();
    let phi = centered_base_indicator(&m);
    let c = correlation_sequence(&m, &phi, &phi, 400).unwrap();
    assert!(c[200] > 1e-8 && c[200] < 3e-8);
    assert!(c[400] < 1e-15);
}

#[test]
fn product_bound_on_two_column_pair() {
    let m = two_column();
    let ind = centered_base_indicator(&m);
    let t = tensor(&ind, &ind);
    let r = product_correlation_check(&m, &m, &t, &t, 200).unwrap();
    assert!(r.holds, "{:?}", r.first_failure);
    assert!(r.reconstruction_error < 1e-12);
    assert!(r.rows.iter().all(|row| row.term_i_holds && row.term_ii_holds));
}

#[test]
fn exact_arithmetic_reconstructs_exactly() {
    let m: TowerModel<BigRational> =
        TowerModel::from_columns(vec![(3, BigRational::ratio(1, 2)), (5, BigRational::ratio(1, 2))]).unwrap();
    let ind = centered_base_indicator(&m);
    let t = tensor(&ind, &ind);
    let r = product_correlation_check(&m, &m, &t, &t, 30).unwrap();
    assert_eq!(r.reconstruction_error, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn constants_do_not_change_correlations(m in small_model(), seed in any::<u64>(), shift in -3.0f64..3.0) {
        let k = m.state_count();
        let mut rng = stream(seed, 0);
        let phi: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let psi: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let nu = m.invariant_measure();
        let mean = |v: &[f64]| v.iter().zip(&nu).map(|(a, b)| a * b).sum::<f64>();
        let raw = integral_sequence(&m, &phi, &psi, 30).unwrap();
        let psi2: Vec<f64> = psi.iter().map(|x| x + shift).collect();
        let phi2: Vec<f64> = phi.iter().map(|x| x + shift).collect();
        let a = integral_sequence(&m, &phi, &psi2, 30).unwrap();
        let b = integral_sequence(&m, &phi2, &psi, 30).unwrap();
        for n in 0..=30 {
            let cov = raw[n] - mean(&phi) * mean(&psi);
            prop_assert!((a[n] - mean(&phi) * mean(&psi2) - cov).abs() < 1e-12);
            prop_assert!((b[n] - mean(&phi2) * mean(&psi) - cov).abs() < 1e-12);
        }
    }

    #[test]
    fn product_form_observables_factor(
        (a, p1, q1) in small_model().prop_flat_map(|m| { let k = m.state_count(); (Just(m), observable(k), observable(k)) }),
        (b, p2, q2) in small_model().prop_flat_map(|m| { let k = m.state_count(); (Just(m), observable(k), observable(k)) }),
    ) {
        let joint = product_integral_sequence(&a, &b, &tensor(&p1, &p2), &tensor(&q1, &q2), 20).unwrap();
        let x = integral_sequence(&a, &p1, &q1, 20).unwrap();
        let y = integral_sequence(&b, &p2, &q2, 20).unwrap();
        for n in 0..=20 {
            prop_assert!((joint[n] - x[n] * y[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn product_bound_and_split(
        (a, phi) in small_model().prop_flat_map(|m| { let k = m.state_count(); (Just(m), observable(k)) }),
        (b, psi) in small_model().prop_flat_map(|m| { let k = m.state_count(); (Just(m), observable(k)) }),
        mix in observable(36),
    ) {
        // a product observable that is not of product form
        let (ka, kb) = (a.state_count(), b.state_count());
        let f: Vec<f64> = (0..ka * kb).map(|i| phi[i / kb] * psi[i % kb] + mix[i % 36]).collect();
        let g: Vec<f64> = (0..ka * kb).map(|i| phi[i / kb] - psi[i % kb] * mix[(i * 7) % 36]).collect();
        prop_assume!(f.iter().any(|x| x.abs() > 1e-6) && g.iter().any(|x| x.abs() > 1e-6));
        let r = product_correlation_check(&a, &b, &f, &g, 40);
        prop_assume!(r.is_ok());
        let r = r.unwrap();
        prop_assert!(r.holds, "{:?}", r.first_failure);
        prop_assert!(r.reconstruction_error < 1e-12);
        prop_assert!(r.rows.iter().all(|row| row.term_i_holds && row.term_ii_holds));
    }

    #[test]
    fn constant_factor_kills_product_correlation(m in small_model(), phi in observable(20)) {
        let k = m.state_count();
        let p: Vec<f64> = phi.iter().cycle().take(k).copied().collect();
        prop_assume!(p.iter().any(|x| x.abs() > 1e-6));
        let nu = m.invariant_measure();
        let mean: f64 = p.iter().zip(&nu).map(|(a, b)| a * b).sum();
        let centered: Vec<f64> = p.iter().map(|x| x - mean).collect();
        let ones = vec![1.0; k];
        let joint = product_integral_sequence(&m, &m, &tensor(&centered, &ones), &tensor(&ones, &p), 15).unwrap();
        prop_assert!(joint.iter().all(|x| x.abs() < 1e-12));
        prop_assert!(centered.iter().map(|x| x.to_f64()).all(f64::is_finite));
    }
}
