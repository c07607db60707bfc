//! Experiment configuration (TOML).
//!
//! Every numeric default used by the pipeline lives here. Optional fields
//! that default to a value derived from other fields say so in their docs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use towerprod_core::rates::FitFamily;
use towerprod_core::tails::TailSpec;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub n0_policy: N0Policy,
    #[serde(default)]
    pub dp: DpConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub key_prop: KeyPropConfig,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub tail: TailSpec,
    /// Return times above this are lumped into the top column.
    pub r_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct N0Policy {
    /// `φ` in `c = φ / E[R]`. Default 0.5.
    pub fraction: f64,
    /// Horizon over which `u_n >= c` is checked. Default: the larger of
    /// `dp.horizon` and the least horizon each factor accepts
    /// (`⌈20 E[R]⌉ + max R`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Fixes `n₀` instead of selecting it; `c` is then the least `u_n` past it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
}

impl Default for N0Policy {
    fn default() -> Self {
        Self { fraction: 0.5, horizon: None, n0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpConfig {
    /// Default 512.
    pub horizon: usize,
    /// Largest tail mass a truncation may drop. Default 1e-6; at most 1e-3.
    pub leak_budget: f64,
    /// Default 150 000 000 cells.
    pub cell_budget: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self { horizon: 512, leak_budget: 1e-6, cell_budget: towerprod_core::product::DEFAULT_CELL_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    /// Default 0 (no simulation).
    pub samples: u64,
    /// Required when `samples > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Physical-time cap per sample. Default 1 000 000.
    pub cap: usize,
    /// Agreement with the DP is checked for `n` up to this. Default 32.
    pub compare_horizon: usize,
    /// Wilson band width in standard deviations. Default 3.
    pub z: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 0, seed: None, cap: towerprod_core::product::DEFAULT_CAP, compare_horizon: 32, z: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub family: FitFamily,
    pub window: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Default true.
    pub enabled: bool,
    /// Default `[⌈N/10⌉, N]` with `N = dp.horizon`: the first decade is
    /// treated as pre-asymptotic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { enabled: true, window: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    /// Default true.
    pub enabled: bool,
    /// `δ` for the super-polynomial bound. Default 0.05.
    pub delta: f64,
    /// Largest `n` at which bounds are evaluated. Default 512 (capped by
    /// `dp.horizon`).
    pub max_n: usize,
    /// First `n` of the super-polynomial bound's window. Default 64.
    pub stnexp_from: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { enabled: true, delta: towerprod_core::rates::DEFAULT_DELTA, max_n: 512, stnexp_from: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyPropConfig {
    /// Default true.
    pub enabled: bool,
    /// Steps of the construction examined. Default 8.
    pub i_max: usize,
    /// Gap and increment horizon. Default 512 (capped by `dp.horizon`).
    pub horizon: usize,
}

impl Default for KeyPropConfig {
    fn default() -> Self {
        Self { enabled: true, i_max: 8, horizon: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableChoice {
    /// `φ = ψ =` tensor product of the centred base indicators.
    CenteredBaseIndicator,
    /// `φ = ψ =` tensor product of the centred normalized level `ℓ / R`.
    CenteredLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    /// Default false.
    pub enabled: bool,
    /// Largest lag. Default 200.
    #[serde(rename = "N")]
    pub n: usize,
    pub observables: ObservableChoice,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self { enabled: false, n: 200, observables: ObservableChoice::CenteredBaseIndicator }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Default `out`, relative to the working directory.
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out") }
    }
}

fn invalid(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: msg.into() }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default();
            CliError::Config { path, message: e.message().to_string() }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn is_product(&self) -> bool {
        self.components.len() >= 2
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.components.is_empty() {
            return Err(invalid("components", "at least one component is required"));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.r_max < 2 {
                return Err(invalid(&format!("components[{i}].r_max"), "must be at least 2"));
            }
        }
        if !(self.n0_policy.fraction > 0.0 && self.n0_policy.fraction < 1.0) {
            return Err(invalid("n0_policy.fraction", "must lie in (0, 1)"));
        }
        if self.n0_policy.n0 == Some(0) {
            return Err(invalid("n0_policy.n0", "must be at least 1"));
        }
        if !(self.dp.leak_budget > 0.0 && self.dp.leak_budget <= 1e-3) {
            return Err(invalid("dp.leak_budget", "must lie in (0, 1e-3]"));
        }
        if self.dp.horizon < 2 {
            return Err(invalid("dp.horizon", "must be at least 2"));
        }
        if self.mc.samples > 0 && self.mc.seed.is_none() {
            return Err(invalid("mc.seed", "a seed is required when mc.samples > 0"));
        }
        if !(self.mc.z > 0.0) {
            return Err(invalid("mc.z", "must be positive"));
        }
        for (i, f) in self.fits.iter().enumerate() {
            let (lo, hi) = f.window;
            if lo > hi || hi > self.dp.horizon {
                return Err(invalid(&format!("fits[{i}].window"), format!("[{lo}, {hi}] must lie within [0, dp.horizon]")));
            }
        }
        if let Some((lo, hi)) = self.verify.window {
            if lo > hi || hi > self.dp.horizon {
                return Err(invalid("verify.window", format!("[{lo}, {hi}] must lie within [0, dp.horizon]")));
            }
        }
        if !(self.bounds.delta > 0.0) {
            return Err(invalid("bounds.delta", "must be positive"));
        }
        if self.key_prop.i_max < 2 {
            return Err(invalid("key_prop.i_max", "must be at least 2"));
        }
        let ell = self.components.len();
        if ell >= 2 {
            for (i, c) in self.components.iter().enumerate() {
                if let TailSpec::Polynomial { alpha, .. } = c.tail {
                    if alpha <= ell as f64 {
                        return Err(CliError::Precondition(format!(
                            "components[{i}].tail.alpha = {alpha}: polynomial tails need α > ℓ = {ell} \
                             for the product tail bound O(n^(ℓ-α)), and for the return time of the product to be integrable"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, horizon: Option<usize>, samples: Option<u64>) {
        if let Some(s) = seed {
            self.mc.seed = Some(s);
        }
        if let Some(h) = horizon {
            self.dp.horizon = h;
        }
        if let Some(n) = samples {
            self.mc.samples = n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEOMETRIC: &str = r#"
[[components]]
r_max = 200
tail = { family = "exponential", tau = 0.6931471805599453 }

[[components]]
r_max = 200
tail = { family = "exponential", tau = 0.6931471805599453 }

[n0_policy]
n0 = 1

[mc]
samples = 1000
seed = 7

[[fits]]
family = "exponential"
window = [16, 128]

[correlation]
enabled = true
N = 50
observables = "centered_base_indicator"
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml(GEOMETRIC).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.dp, DpConfig::default());
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn seed_is_required_for_sampling() {
        let text = GEOMETRIC.replace("seed = 7\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("mc.seed"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = GEOMETRIC.replace("[mc]", "[mc]\nsample = 3");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn heavy_polynomial_tails_are_refused() {
        let text = r#"
[[components]]
r_max = 100
tail = { family = "polynomial", alpha = 1.5 }
[[components]]
r_max = 100
tail = { family = "polynomial", alpha = 1.5 }
"#;
        let err = ExperimentConfig::from_toml(text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("α > ℓ"));
    }
}
