//! Empirical constants for the two conditional estimates behind the tail
//! bounds: a uniform floor `ε₀` on the probability of stopping at each probe,
//! and a constant `K₀` with `P(τ_{i+1} - τ_i >= n | Γ) <= K₀ M̄_{n-n₀}`.
//!
//! The conditioning `Γ` fixes everything the construction has decided up to
//! `τ_i`. For the factor driven at step `i + 1` that is: it sat fresh in its
//! base at `τ_{i-1}` and then ran for the gap `g = τ_i - τ_{i-1}`. So both
//! quantities depend on `Γ` only through `(factor, g)`:
//!
//! ```text
//! P(T = τ_i | Γ)              = u_g
//! P(τ_{i+1} - τ_i >= n | Γ)   = P(residual after g + n₀ fresh steps >= n - n₀)
//! ```
//!
//! The check walks the step-indexed chain of (driven factor, residual) to
//! find which `(factor, g)` are reachable at each step `i <= i_max`.

use serde::Serialize;

use super::tables::ResidualTables;
use super::ProductModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A reachable conditioning: step index, factor and gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub step: usize,
    pub factor: usize,
    pub gap: usize,
    /// The `n` attaining the ratio, for `K₀` witnesses.
    pub n: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyPropReport {
    pub n0: usize,
    pub c: f64,
    pub eps0_emp: f64,
    pub eps0_witness: Witness,
    /// `ε₀ >= c`.
    pub eps0_ok: bool,
    pub k0_emp: f64,
    pub k0_witness: Witness,
    /// `max E[R]` over the factors: `M₀ (1 + D) / m₀(Δ₀)` in affine form.
    pub k0_analytic: f64,
    /// Number of `(step, factor, gap, n)` points checked.
    pub checked: usize,
    /// Every checked increment tail is within `K₀_emp M̄_{n-n₀}`.
    pub domination_ok: bool,
    /// ... and within `K₀_analytic M̄_{n-n₀}`.
    pub analytic_ok: bool,
    pub reachable_gaps: usize,
}

/// `M̄_k = Σ_{j >= k} max_c P(R_c > j)` for the two (finite) factors, for
/// `k` from 0 to at least `len`. See [`mbar_lookup`] for other `k`.
pub fn model_mbar<S: Scalar>(model: &ProductModel<S>, len: usize) -> Vec<f64> {
    let surv: Vec<Vec<f64>> = model
        .components()
        .iter()
        .map(|m| {
            let pmf: Vec<f64> = m.pmf().iter().map(|x| x.to_f64()).collect();
            let mut s = vec![0.0; pmf.len().max(len + 1)];
            let mut acc = 0.0;
            for k in (0..pmf.len()).rev() {
                s[k] = acc;
                acc += pmf[k];
            }
            s
        })
        .collect();
    let top = surv.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut out = vec![0.0; top + 1];
    for k in (0..top).rev() {
        let m = surv.iter().map(|s| s.get(k).copied().unwrap_or(0.0)).fold(0.0, f64::max);
        out[k] = out[k + 1] + m;
    }
    out
}

/// Reads a table from [`model_mbar`]: `M̄_0 + |k|` below zero and zero past
/// the end.
pub fn mbar_lookup(table: &[f64], k: i64) -> f64 {
    if k < 0 {
        table[0] + k.unsigned_abs() as f64
    } else {
        table.get(k as usize).copied().unwrap_or(0.0)
    }
}

pub fn key_prop_check<S: Scalar>(model: &ProductModel<S>, i_max: usize, horizon: usize) -> Result<KeyPropReport> {
    if i_max < 2 {
        return Err(Error::InvalidArgument("i_max must be at least 2".into()));
    }
    let n0 = model.n0();
    if horizon <= n0 {
        return Err(Error::HorizonTooShort { horizon, required: n0 + 1 });
    }
    let h = horizon;
    let table_horizon = 2 * h + n0;
    let tabs = {
        let [a, b] = model.components();
        [ResidualTables::new(a, table_horizon), ResidualTables::new(b, table_horizon)]
    };
    let q = |c: usize, g: usize, r: usize| tabs[c].q[g].get(r).map_or(0.0, |x| x.to_f64());
    let mbar = model_mbar(model, h);
    let mbar_at = |k: i64| mbar_lookup(&mbar, k);

    // reach[a][r]: factor a is driven next with residual r at the last probe.
    let mut reach = vec![vec![false; h + 1]; 2];
    reach[0][0] = true;
    let mut eps = Witness { step: 0, factor: 0, gap: 0, n: None, value: f64::INFINITY };
    let mut k0 = Witness { step: 0, factor: 0, gap: 0, n: None, value: 0.0 };
    let mut seen = vec![vec![false; h + 1]; 2];
    let mut checked = 0;
    let mut ratios: Vec<(usize, usize, usize, usize, f64, f64)> = Vec::new();

    for step in 1..=i_max {
        let mut gaps = [vec![false; h + 1], vec![false; h + 1]];
        for a in 0..2 {
            for r in 0..=h {
                if !reach[a][r] {
                    continue;
                }
                if r >= n0 {
                    gaps[a][r] = true;
                } else {
                    for j in 0..=h - n0 {
                        if q(a, n0 - r, j) > 0.0 {
                            gaps[a][n0 + j] = true;
                        }
                    }
                }
            }
        }
        let mut next = vec![vec![false; h + 1]; 2];
        for a in 0..2 {
            let b = 1 - a;
            for g in n0..=h {
                if !gaps[a][g] {
                    continue;
                }
                // stop probability at this probe; b has run g steps fresh
                let stop = tabs[b].u[g].to_f64();
                if stop < eps.value {
                    eps = Witness { step, factor: b, gap: g, n: None, value: stop };
                }
                // increment tail at the next step, driven by b
                if !seen[b][g] {
                    seen[b][g] = true;
                    for n in n0 + 1..=h {
                        let p = tabs[b].upper_tail(g + n0, n - n0).to_f64();
                        let m = mbar_at(n as i64 - n0 as i64);
                        let ratio = if m > 0.0 { p / m } else if p > 0.0 { f64::INFINITY } else { 0.0 };
                        checked += 1;
                        ratios.push((step, b, g, n, p, m));
                        if ratio > k0.value {
                            k0 = Witness { step, factor: b, gap: g, n: Some(n), value: ratio };
                        }
                    }
                }
                for r2 in 1..=h {
                    if q(b, g, r2) > 0.0 {
                        next[b][r2] = true;
                    }
                }
            }
        }
        reach = next;
    }

    let k0_analytic = model.components().iter().map(|m| m.mean_return_f64()).fold(0.0, f64::max);
    let slack = 1.0 + 1e-12;
    let domination_ok = ratios.iter().all(|&(_, _, _, _, p, m)| p <= k0.value * m * slack);
    let analytic_ok = ratios.iter().all(|&(_, _, _, _, p, m)| p <= k0_analytic * m * slack);
    let reachable_gaps = seen.iter().flatten().filter(|&&x| x).count();
    Ok(KeyPropReport {
        n0,
        c: model.c(),
        eps0_emp: eps.value,
        eps0_witness: eps,
        eps0_ok: eps.value >= model.c() * (1.0 - 1e-12),
        k0_emp: k0.value,
        k0_witness: k0,
        k0_analytic,
        checked,
        domination_ok: domination_ok && k0.value.is_finite(),
        analytic_ok,
        reachable_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tails::TailSpec;
    use crate::tower::{build_tower, TowerModel};

    #[test]
    fn double_geometric_floor_is_one_half() {
        let g: TowerModel<f64> = build_tower(&TailSpec::exponential(2f64.ln()).unwrap(), 80, 1e-12).unwrap();
        let p = ProductModel::with_n0(g.clone(), g, 1, 200).unwrap();
        let r = key_prop_check(&p, 4, 40).unwrap();
        assert!((r.eps0_emp - 0.5).abs() < 1e-12);
        assert!(r.eps0_ok && r.domination_ok && r.analytic_ok);
    }

    #[test]
    fn unit_pair_always_stops() {
        let u = TowerModel::from_columns(vec![(1, 1.0)]).unwrap();
        let p = ProductModel::with_n0(u.clone(), u, 1, 10).unwrap();
        let r = key_prop_check(&p, 3, 10).unwrap();
        assert_eq!(r.eps0_emp, 1.0);
    }
}
