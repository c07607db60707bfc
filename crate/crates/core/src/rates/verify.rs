//! Empirical verdicts on the three decay regimes of the product tail.

use serde::{Deserialize, Serialize};

use super::fit::{fit_rate, line_fit, FitFamily, RateFit};
use super::SurvivalCurve;
use crate::error::{Error, Result};

/// What the component tails are assumed to do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Claim {
    Exponential,
    Stretched { theta: f64 },
    Polynomial { alpha: f64 },
}

/// Shortest curve accepted by [`verify_theorem_bound`].
pub const MIN_HORIZON: usize = 256;

/// Largest log-log slope over the last quarter still read as "bounded".
pub const BOUNDED_SLOPE: f64 = 0.05;

/// Behaviour of a rescaled tail `b_n = tail(n) w(n)` over a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledTail {
    pub label: String,
    pub sup: f64,
    pub sup_at: usize,
    /// Log-log slope of `b_n` against `n` over the last quarter.
    pub last_quarter_slope: f64,
    pub non_increasing: bool,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub claim: Claim,
    pub components: usize,
    pub window: (usize, usize),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    pub scaled: Vec<ScaledTail>,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Examines `b_n = tail(n) · weight(n)` over `window`. Values inside the
/// truncation floor are excluded.
pub fn scaled_tail(
    curve: &SurvivalCurve,
    window: (usize, usize),
    label: &str,
    weight: impl Fn(usize) -> f64,
) -> Result<ScaledTail> {
    let (lo, hi) = window;
    let pts: Vec<(usize, f64)> = (lo.max(1)..=hi.min(curve.horizon()))
        .filter(|&n| curve.tail(n) > 10.0 * curve.leak(n) && curve.tail(n) > 0.0)
        .map(|n| (n, curve.tail(n) * weight(n)))
        .collect();
    if pts.len() < 8 {
        return Err(Error::WindowTooNoisy(format!("{} clean points for {label}", pts.len())));
    }
    let (sup_at, sup) = pts.iter().fold((0, f64::NEG_INFINITY), |b, &(n, v)| if v > b.1 { (n, v) } else { b });
    let quarter_start = hi - (hi - lo) / 4;
    let last: Vec<(usize, f64)> = pts.iter().copied().filter(|p| p.0 >= quarter_start).collect();
    if last.len() < 2 {
        return Err(Error::WindowTooNoisy(format!("last quarter of the window is empty for {label}")));
    }
    let xs: Vec<f64> = last.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = last.iter().map(|p| p.1.ln()).collect();
    let slope = line_fit(&xs, &ys).slope;
    let non_increasing = last.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
    Ok(ScaledTail {
        label: label.to_string(),
        sup,
        sup_at,
        last_quarter_slope: slope,
        non_increasing,
        bounded: slope <= BOUNDED_SLOPE,
    })
}

/// Checks the conclusion the theorem draws for `components` factors whose
/// tails follow `claim`.
pub fn verify_theorem_bound(
    curve: &SurvivalCurve,
    claim: Claim,
    components: usize,
    window: (usize, usize),
) -> Result<TheoremVerdict> {
    if curve.horizon() < MIN_HORIZON {
        return Err(Error::InvalidArgument(format!(
            "curve horizon {} is below the required {MIN_HORIZON}",
            curve.horizon()
        )));
    }
    let mut notes = Vec::new();
    let (fit, scaled, pass) = match claim {
        Claim::Exponential => {
            let fit = fit_rate(curve, FitFamily::Exponential, window)?;
            let tau = fit.params.tau.unwrap_or(0.0);
            let s = scaled_tail(curve, window, "tail(n) e^{τ'n/2}", |n| (0.5 * tau * n as f64).exp())?;
            let pass = tau > 0.0 && s.bounded;
            (Some(fit), vec![s], pass)
        }
        Claim::Stretched { theta } => {
            let fit = fit_rate(curve, FitFamily::Stretched, window)?;
            let tp = fit.params.theta.unwrap_or(0.0);
            let tau = fit.params.tau.unwrap_or(0.0);
            if tp >= theta {
                notes.push(format!("best-fitting θ' = {tp} is not below θ = {theta}"));
            }
            let pass = tp > 0.0 && tp < theta && tau > 0.0;
            (Some(fit), Vec::new(), pass)
        }
        Claim::Polynomial { alpha } => {
            let ell = components as f64;
            if alpha <= ell {
                notes.push(format!("α = {alpha} does not exceed ℓ = {components}"));
            }
            let theorem =
                scaled_tail(curve, window, "tail(n) n^{α-ℓ}", |n| (n as f64).powf(alpha - ell))?;
            let pair = scaled_tail(curve, window, "tail(n) n^{α-1}", |n| (n as f64).powf(alpha - 1.0))?;
            notes.push(format!(
                "n^(ℓ-α) rate: {}; n^(1-α) rate: {}",
                if theorem.bounded { "bounded" } else { "unbounded" },
                if pair.bounded { "bounded" } else { "unbounded" }
            ));
            let pass = theorem.bounded && pair.bounded;
            (None, vec![theorem, pair], pass)
        }
    };
    Ok(TheoremVerdict { claim, components, window, fit, scaled, pass, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(h: usize, p: f64) -> SurvivalCurve {
        SurvivalCurve::closed_form(h, |n| if n == 0 { 1.0 } else { (n as f64).powf(-p) })
    }

    #[test]
    fn exponential_passes() {
        let c = SurvivalCurve::closed_form(300, |n| 0.75f64.powi(n as i32));
        let v = verify_theorem_bound(&c, Claim::Exponential, 2, (16, 128)).unwrap();
        assert!(v.pass);
        assert!((v.fit.unwrap().params.tau.unwrap() - 0.287682).abs() < 1e-6);
    }

    #[test]
    fn inverse_square_meets_cubic_claim() {
        let v = verify_theorem_bound(&power(400, 2.0), Claim::Polynomial { alpha: 3.0 }, 2, (32, 400)).unwrap();
        assert!(v.pass);
        assert!(v.scaled[1].non_increasing);
    }

    #[test]
    fn inverse_linear_fails_cubic_claim() {
        let v = verify_theorem_bound(&power(400, 1.0), Claim::Polynomial { alpha: 3.0 }, 2, (32, 400)).unwrap();
        assert!(!v.pass);
        assert!(!v.scaled[1].bounded);
    }

    #[test]
    fn short_curves_are_refused() {
        assert!(verify_theorem_bound(&power(100, 2.0), Claim::Exponential, 2, (10, 100)).is_err());
    }
}
