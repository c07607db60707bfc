//! Least-squares fits of decay families to survival curves.

use serde::{Deserialize, Serialize};

use super::SurvivalCurve;
use crate::error::{Error, Result};

/// Decay family of a fit or of a theorem claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitFamily {
    Exponential,
    Stretched,
    Polynomial,
}

impl FitFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            FitFamily::Exponential => "exponential",
            FitFamily::Stretched => "stretched",
            FitFamily::Polynomial => "polynomial",
        }
    }
}

impl std::str::FromStr for FitFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Self::Exponential),
            "stretched" => Ok(Self::Stretched),
            "polynomial" => Ok(Self::Polynomial),
            other => Err(Error::InvalidArgument(format!("unknown fit family `{other}`"))),
        }
    }
}

/// Fitted parameters: `tail ≈ C e^{-τ n}`, `C e^{-τ n^θ}` or `C n^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub family: FitFamily,
    pub params: FitParams,
    pub window: (usize, usize),
    pub points: usize,
    pub r2: f64,
    pub residual_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `θ` values scanned by stretched fits: 0.10, 0.15, ..., 0.90.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=16).map(|k| (10 + 5 * k) as f64 / 100.0).collect()
}

pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residual_max: f64,
}

pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut residual_max: f64 = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (intercept + slope * x);
        ss_res += r * r;
        residual_max = residual_max.max(r.abs());
    }
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else if ss_res <= 1e-24 { 1.0 } else { 0.0 };
    LineFit { slope, intercept, r2, residual_max }
}

/// Window points usable for a fit: positive and well above the truncation
/// floor. Returns `(n, ln tail)` pairs and notes on what was skipped.
fn clean_points(curve: &SurvivalCurve, window: (usize, usize)) -> Result<(Vec<(usize, f64)>, Vec<String>)> {
    let (lo, hi) = window;
    if lo > hi || hi > curve.horizon() {
        return Err(Error::InvalidArgument(format!(
            "window [{lo}, {hi}] does not fit a curve of horizon {}",
            curve.horizon()
        )));
    }
    let mut pts = Vec::new();
    let mut nonpositive = 0;
    let mut floor = 0;
    for n in lo.max(1)..=hi {
        let v = curve.tail(n);
        if v <= 0.0 {
            nonpositive += 1;
        } else if v <= 10.0 * curve.leak(n) {
            floor += 1;
        } else {
            pts.push((n, v.ln()));
        }
    }
    let mut notes = Vec::new();
    if nonpositive > 0 {
        notes.push(format!("skipped {nonpositive} non-positive values"));
    }
    if floor > 0 {
        notes.push(format!("skipped {floor} values within 10x of the truncation bound"));
    }
    if pts.len() < 8 {
        return Err(Error::WindowTooNoisy(format!(
            "{} clean points in [{lo}, {hi}], need at least 8",
            pts.len()
        )));
    }
    Ok((pts, notes))
}

/// Fits `family` on the linearized curve over `window` (inclusive).
pub fn fit_rate(curve: &SurvivalCurve, family: FitFamily, window: (usize, usize)) -> Result<RateFit> {
    fit_rate_with_grid(curve, family, window, &default_theta_grid())
}

pub fn fit_rate_with_grid(
    curve: &SurvivalCurve,
    family: FitFamily,
    window: (usize, usize),
    theta_grid: &[f64],
) -> Result<RateFit> {
    let (pts, notes) = clean_points(curve, window)?;
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let xs_of = |f: &dyn Fn(f64) -> f64| pts.iter().map(|p| f(p.0 as f64)).collect::<Vec<f64>>();
    let (params, fit) = match family {
        FitFamily::Exponential => {
            let f = line_fit(&xs_of(&|n| n), &ys);
            (FitParams { tau: Some(-f.slope), theta: None, alpha: None, c: f.intercept.exp() }, f)
        }
        FitFamily::Polynomial => {
            let f = line_fit(&xs_of(&|n| n.ln()), &ys);
            (FitParams { tau: None, theta: None, alpha: Some(-f.slope), c: f.intercept.exp() }, f)
        }
        FitFamily::Stretched => {
            if theta_grid.is_empty() {
                return Err(Error::InvalidArgument("empty θ grid".into()));
            }
            let mut best: Option<(f64, LineFit)> = None;
            for &theta in theta_grid {
                let f = line_fit(&xs_of(&|n| n.powf(theta)), &ys);
                if best.as_ref().is_none_or(|b| f.r2 > b.1.r2) {
                    best = Some((theta, f));
                }
            }
            let (theta, f) = best.expect("non-empty grid");
            (FitParams { tau: Some(-f.slope), theta: Some(theta), alpha: None, c: f.intercept.exp() }, f)
        }
    };
    Ok(RateFit {
        family,
        params,
        window,
        points: pts.len(),
        r2: fit.r2,
        residual_max: fit.residual_max,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_recovers_rate() {
        let c = SurvivalCurve::closed_form(128, |n| 0.75f64.powi(n as i32));
        let f = fit_rate(&c, FitFamily::Exponential, (16, 128)).unwrap();
        assert!((f.params.tau.unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-9);
        assert!(f.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn polynomial_recovers_slope() {
        let c = SurvivalCurve::closed_form(500, |n| if n == 0 { 1.0 } else { (n as f64).powi(-2) });
        let f = fit_rate(&c, FitFamily::Polynomial, (10, 500)).unwrap();
        assert!((f.params.alpha.unwrap() - 2.0).abs() < 1e-9);
        assert!((f.params.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stretched_finds_half() {
        let c = SurvivalCurve::closed_form(600, |n| (-(n as f64).sqrt()).exp());
        let f = fit_rate(&c, FitFamily::Stretched, (20, 600)).unwrap();
        assert_eq!(f.params.theta, Some(0.5));
        assert!((f.params.tau.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let c = SurvivalCurve::closed_form(20, |n| 0.5f64.powi(n as i32));
        assert!(matches!(fit_rate(&c, FitFamily::Exponential, (10, 15)), Err(Error::WindowTooNoisy(_))));
        let z = SurvivalCurve::closed_form(40, |n| if n < 5 { 1.0 } else { 0.0 });
        assert!(matches!(fit_rate(&z, FitFamily::Exponential, (1, 40)), Err(Error::WindowTooNoisy(_))));
    }
}
