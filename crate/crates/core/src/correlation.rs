//! Decay of correlations on the level chain of a tower and of a product of
//! two towers.
//!
//! Observables are functions of `(column, level)` (pairs of those on the
//! product), stored in the order of [`TowerModel::states`]; product
//! observables are row-major with the first factor's state as the row.
//!
//! Rates are worst-case total variation distances to the invariant law,
//! `γ_n = max_s ½ Σ |P^n(s, ·) - ν|`. For sup-norm observables this gives
//! `Cor(φ, ψ∘fⁿ) <= C γ_n` with `C = 2` ([`TV_CONSTANT`]), and the product
//! bound is checked as `2 C γ_n` with the same `C`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{abs_diff, Scalar};
use crate::tower::TowerModel;

/// Correlation constant for sup-norm observables under the TV convention.
pub const TV_CONSTANT: f64 = 2.0;

/// Slack allowed when comparing a correlation with its bound.
pub const BOUND_SLACK: f64 = 1e-10;

/// Dense transition matrix of the tower map, indexed like
/// [`TowerModel::states`].
pub fn transition_matrix<S: Scalar>(model: &TowerModel<S>) -> Vec<Vec<S>> {
    let n = model.state_count();
    let mut p = vec![vec![S::zero(); n]; n];
    let base = model.base_distribution();
    for s in model.states() {
        let i = model.state_index(s);
        if s.level + 1 < model.return_time(s.column) {
            let next = model.state_index(crate::TowerState { column: s.column, level: s.level + 1 });
            p[i][next] = S::one();
        } else {
            p[i].clone_from(&base);
        }
    }
    p
}

fn sup_norm<S: Scalar>(values: &[S]) -> f64 {
    values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn weighted<S: Scalar>(weights: &[S], values: &[S]) -> Vec<S> {
    weights.iter().zip(values).map(|(w, v)| w.clone() * v.clone()).collect()
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::InvalidArgument(format!("observable has {got} values, the chain has {expected} states")));
    }
    Ok(())
}

/// `∫ φ (ψ∘fⁿ) dν` for `n = 0..=horizon`.
pub fn integral_sequence<S: Scalar>(model: &TowerModel<S>, phi: &[S], psi: &[S], horizon: usize) -> Result<Vec<S>> {
    check_len(model.state_count(), phi.len())?;
    check_len(model.state_count(), psi.len())?;
    let mut w = weighted(&model.invariant_measure(), phi);
    let mut out = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            w = model.push_forward(&w);
        }
        out.push(dot(&w, psi));
    }
    Ok(out)
}

/// `Cor(n) = |∫ φ (ψ∘fⁿ) dν - ∫φ dν ∫ψ dν| / (‖φ‖ ‖ψ‖)` for `n = 0..=horizon`.
pub fn correlation_sequence<S: Scalar>(model: &TowerModel<S>, phi: &[S], psi: &[S], horizon: usize) -> Result<Vec<f64>> {
    let (np, ns) = (sup_norm(phi), sup_norm(psi));
    if np == 0.0 || ns == 0.0 {
        return Err(Error::ZeroObservable);
    }
    let nu = model.invariant_measure();
    let mean = dot(&nu, phi) * dot(&nu, psi);
    Ok(integral_sequence(model, phi, psi, horizon)?.iter().map(|x| abs_diff(x, &mean) / (np * ns)).collect())
}

/// `γ_n` for `n = 0..=horizon`.
pub fn component_rate<S: Scalar>(model: &TowerModel<S>, horizon: usize) -> Vec<f64> {
    let k = model.state_count();
    let nu = model.invariant_measure();
    let mut gamma = vec![0.0f64; horizon + 1];
    for start in 0..k {
        let mut d = vec![S::zero(); k];
        d[start] = S::one();
        for (n, g) in gamma.iter_mut().enumerate() {
            if n > 0 {
                d = model.push_forward(&d);
            }
            let tv = 0.5 * d.iter().zip(&nu).map(|(a, b)| abs_diff(a, b)).sum::<f64>();
            *g = g.max(tv);
        }
    }
    gamma
}

/// One step of the product chain on a row-major joint measure.
fn push_product<S: Scalar>(first: &TowerModel<S>, second: &TowerModel<S>, w: &[S]) -> Vec<S> {
    let (k1, k2) = (first.state_count(), second.state_count());
    let mut rows: Vec<S> = w.chunks(k2).flat_map(|row| second.push_forward(row)).collect();
    let mut col = vec![S::zero(); k1];
    for j in 0..k2 {
        for i in 0..k1 {
            col[i] = rows[i * k2 + j].clone();
        }
        let pushed = first.push_forward(&col);
        for i in 0..k1 {
            rows[i * k2 + j] = pushed[i].clone();
        }
    }
    rows
}

fn product_measure<S: Scalar>(first: &TowerModel<S>, second: &TowerModel<S>) -> Vec<S> {
    let (a, b) = (first.invariant_measure(), second.invariant_measure());
    a.iter().flat_map(|x| b.iter().map(move |y| x.clone() * y.clone())).collect()
}

/// `∫ φ (ψ∘(f₁×f₂)ⁿ) dμ` on the product chain for `n = 0..=horizon`.
pub fn product_integral_sequence<S: Scalar>(
    first: &TowerModel<S>,
    second: &TowerModel<S>,
    phi: &[S],
    psi: &[S],
    horizon: usize,
) -> Result<Vec<S>> {
    let size = first.state_count() * second.state_count();
    check_len(size, phi.len())?;
    check_len(size, psi.len())?;
    let mut w = weighted(&product_measure(first, second), phi);
    let mut out = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            w = push_product(first, second, &w);
        }
        out.push(dot(&w, psi));
    }
    Ok(out)
}

/// `φ ⊗ ψ` as a row-major product observable.
pub fn tensor<S: Scalar>(phi: &[S], psi: &[S]) -> Vec<S> {
    phi.iter().flat_map(|x| psi.iter().map(move |y| x.clone() * y.clone())).collect()
}

/// Indicator of the base, centred under the invariant law.
pub fn centered_base_indicator<S: Scalar>(model: &TowerModel<S>) -> Vec<S> {
    let nu = model.invariant_measure();
    let ind: Vec<S> = model.states().iter().map(|s| if s.in_base() { S::one() } else { S::zero() }).collect();
    let mean = dot(&nu, &ind);
    ind.into_iter().map(|x| x - mean.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub n: usize,
    pub cor_product: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `2 C max(γ¹_n, γ²_n)`.
    pub bound: f64,
    pub holds: bool,
    /// Normalized term with `φ - φ̄` on the full chain; bounded by `C γ²_n`.
    pub term_i: f64,
    /// Normalized term with `φ̄` against `ψ` averaged over the second factor;
    /// bounded by `C γ¹_n`.
    pub term_ii: f64,
    pub term_i_holds: bool,
    pub term_ii_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCorrelationReport {
    pub constant: f64,
    pub rows: Vec<CorrelationRow>,
    /// Largest `|I + II - full|` over `n`, unnormalized.
    pub reconstruction_error: f64,
    /// First `n` where the product bound fails, with both sides.
    pub first_failure: Option<(usize, f64, f64)>,
    pub holds: bool,
}

impl ProductCorrelationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,cor_product,gamma1,gamma2,bound,holds\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e},{:e},{}\n", r.n, r.cor_product, r.gamma1, r.gamma2, r.bound, r.holds));
        }
        s
    }
}

/// Checks `Cor(φ, ψ∘(f₁×f₂)ⁿ) <= 2 C γ_n` for `n <= horizon`, along with the
/// two terms of the split at a fixed first coordinate. `φ` is centred here.
pub fn product_correlation_check<S: Scalar>(
    first: &TowerModel<S>,
    second: &TowerModel<S>,
    phi: &[S],
    psi: &[S],
    horizon: usize,
) -> Result<ProductCorrelationReport> {
    let (k1, k2) = (first.state_count(), second.state_count());
    check_len(k1 * k2, phi.len())?;
    check_len(k1 * k2, psi.len())?;
    let (nu1, nu2) = (first.invariant_measure(), second.invariant_measure());
    let mu = product_measure(first, second);
    let mean = dot(&mu, phi);
    let phi: Vec<S> = phi.iter().map(|x| x.clone() - mean.clone()).collect();
    let (np, ns) = (sup_norm(&phi), sup_norm(psi));
    if np == 0.0 || ns == 0.0 {
        return Err(Error::ZeroObservable);
    }

    // φ̄(x₁) = ∫ φ(x₁, y) dν₂(y), and ψ averaged over the second factor
    let phi_bar: Vec<S> = phi.chunks(k2).map(|row| dot(row, &nu2)).collect();
    let psi_bar: Vec<S> = psi.chunks(k2).map(|row| dot(row, &nu2)).collect();
    let phi_fluct: Vec<S> =
        phi.iter().enumerate().map(|(idx, x)| x.clone() - phi_bar[idx / k2].clone()).collect();

    let full = product_integral_sequence(first, second, &phi, psi, horizon)?;
    let term_i = product_integral_sequence(first, second, &phi_fluct, psi, horizon)?;
    let term_ii = integral_sequence(first, &phi_bar, &psi_bar, horizon)?;
    debug_assert_eq!(nu1.len(), k1);

    let g1 = component_rate(first, horizon);
    let g2 = component_rate(second, horizon);
    let c = TV_CONSTANT;
    let norm = np * ns;
    let mut rows = Vec::with_capacity(horizon + 1);
    let mut reconstruction_error: f64 = 0.0;
    let mut first_failure = None;
    for n in 0..=horizon {
        let recon = term_i[n].clone() + term_ii[n].clone();
        reconstruction_error = reconstruction_error.max(abs_diff(&recon, &full[n]));
        let cor = full[n].to_f64().abs() / norm;
        let bound = 2.0 * c * g1[n].max(g2[n]);
        let holds = cor <= bound + BOUND_SLACK;
        if !holds && first_failure.is_none() {
            first_failure = Some((n, cor, bound));
        }
        let ti = term_i[n].to_f64().abs() / norm;
        let tii = term_ii[n].to_f64().abs() / norm;
        rows.push(CorrelationRow {
            n,
            cor_product: cor,
            gamma1: g1[n],
            gamma2: g2[n],
            bound,
            holds,
            term_i: ti,
            term_ii: tii,
            term_i_holds: ti <= c * g2[n] + BOUND_SLACK,
            term_ii_holds: tii <= c * g1[n] + BOUND_SLACK,
        });
    }
    Ok(ProductCorrelationReport {
        constant: c,
        rows,
        reconstruction_error,
        holds: first_failure.is_none(),
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_column() -> TowerModel<f64> {
        TowerModel::from_columns(vec![(3, 0.5), (5, 0.5)]).unwrap()
    }

    #[test]
    fn matrix_matches_step_structure() {
        let m = two_column();
        let p = transition_matrix(&m);
        assert_eq!(p.len(), 8);
        assert_eq!(p[0][1], 1.0);
        assert_eq!(p[2][0], 0.5);
        assert_eq!(p[2][3], 0.5);
        assert_eq!(p[7][0], 0.5);
        for row in &p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_vector_is_invariant() {
        let m = two_column();
        let p = transition_matrix(&m);
        let nu = m.invariant_measure();
        for j in 0..8 {
            let v: f64 = (0..8).map(|i| nu[i] * p[i][j]).sum();
            assert!((v - nu[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_tower_has_no_correlation() {
        let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
        assert_eq!(component_rate(&u, 5), vec![0.0; 6]);
        assert_eq!(correlation_sequence(&u, &[2.0], &[3.0], 4).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn zero_observable_is_rejected() {
        let m = two_column();
        assert!(matches!(correlation_sequence(&m, &[0.0; 8], &[1.0; 8], 3), Err(Error::ZeroObservable)));
    }

    #[test]
    fn product_bound_on_two_column_pair() {
        let m = two_column();
        let ind = centered_base_indicator(&m);
        let t = tensor(&ind, &ind);
        let r = product_correlation_check(&m, &m, &t, &t, 60).unwrap();
        assert!(r.holds);
        assert!(r.reconstruction_error < 1e-12);
    }
}
