//! Orchestration: build → n₀ → DP/MC/oracle → fit → verify → bounds →
//! correlate. Everything is computed in memory; [`Artifacts`] are written by
//! the caller in one pass.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use towerprod_core::correlation::{centered_base_indicator, product_correlation_check, tensor};
use towerprod_core::product::{
    brute_force_tail, fold, key_prop_check, mbar_lookup, model_mbar, product_tail_dp, product_tail_mc, FoldPolicy,
    FoldStep, KeyPropReport, NestedPair, ProductModel, TraceAudit,
};
use towerprod_core::rates::{
    dominance_check, estm_rhs, fit_rate, stnexp_rhs, verify_theorem_bound, wilson, BoundValue, Claim,
    DominanceReport, MaxProductSource, MaxProductTable, Provenance, RateFit, SurvivalCurve, TheoremVerdict,
    MIN_HORIZON,
};
use towerprod_core::tower::MixingWindow;
use towerprod_core::{build_tower, rng, TailSpec, Tower};

use crate::config::{ExperimentConfig, ObservableChoice};
use crate::error::{CliError, Context};
use crate::svg::{self, Series};

/// Largest product chain handled by the correlation check.
pub const MAX_CORRELATION_STATES: usize = 4_000_000;

/// Absolute tolerance for DP against the brute-force oracle, on top of the
/// recorded leak.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

/// Which parts of the pipeline a command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub dp: bool,
    pub mc: bool,
    pub oracle: bool,
    pub fits: bool,
    pub verify: bool,
    pub key_prop: bool,
    pub bounds: bool,
    pub correlation: bool,
}

impl Stages {
    /// Everything the config enables, except the brute-force oracle.
    pub fn run() -> Self {
        Self { oracle: false, ..Self::everything() }
    }

    pub fn everything() -> Self {
        Self { dp: true, mc: true, oracle: true, fits: true, verify: true, key_prop: true, bounds: true, correlation: true }
    }

    pub fn tower() -> Self {
        Self { dp: false, mc: false, oracle: false, fits: false, verify: false, key_prop: false, bounds: false, correlation: false }
    }

    pub fn product() -> Self {
        Self { dp: true, mc: true, ..Self::tower() }
    }

    pub fn oracle() -> Self {
        Self { dp: true, oracle: true, ..Self::tower() }
    }

    pub fn fit() -> Self {
        Self { dp: true, fits: true, ..Self::tower() }
    }

    pub fn verify() -> Self {
        Self { dp: true, verify: true, key_prop: true, bounds: true, ..Self::tower() }
    }

    pub fn correlate() -> Self {
        Self { correlation: true, ..Self::tower() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub name: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
}

impl Default for Generator {
    fn default() -> Self {
        Self { name: "towerprod", version: env!("CARGO_PKG_VERSION"), rng: rng::GENERATOR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub tail: TailSpec,
    pub r_max: usize,
    pub columns: usize,
    pub mean_return: f64,
    pub gcd: usize,
    pub leak: f64,
    pub expansion_bound: f64,
    /// `⌈20 E[R]⌉ + max R`.
    pub required_horizon: usize,
    /// The component's own window under `n0_policy.fraction`.
    pub window: MixingWindow,
    /// `max |νP - ν|`.
    pub stationary_residual: f64,
}

/// Single-component summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TowerReport {
    pub n0: usize,
    pub c: f64,
    /// `ν` of every base state; level `ℓ` of column `i` carries `p_i / E[R]`.
    pub nu_base: f64,
    pub renewal_limit_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpSummary {
    pub horizon: usize,
    pub drift: f64,
    pub max_leak_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub samples: u64,
    pub seed: u64,
    pub cap: usize,
    pub z: f64,
    pub audit: TraceAudit,
    pub compare_horizon: usize,
    /// `n` at which the DP tail lies outside the Wilson band.
    pub outside_band: Vec<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub horizon: usize,
    pub words: [usize; 2],
    pub max_abs_diff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductReport {
    pub factors: usize,
    pub n0: usize,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<[MixingWindow; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fold: Vec<FoldStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp: Option<DpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub tail: f64,
    pub bound: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    /// `estm` (polynomial case) or `stnexp` (super-polynomial case).
    pub kind: &'static str,
    pub n0: usize,
    pub eps0: f64,
    pub k0: f64,
    /// Constant passed to the bound.
    pub k: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_prime: Option<f64>,
    pub dominance: DominanceReport,
    pub rows: Vec<BoundRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub horizon: usize,
    pub observables: ObservableChoice,
    pub constant: f64,
    pub holds: bool,
    pub reconstruction_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub generator: Generator,
    pub command: String,
    pub components: Vec<ComponentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower: Option<TowerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<TheoremVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_prop: Option<KeyPropReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSummary>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn find_verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// Files produced by a run, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn put(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Writes every file into `dir`. If any write fails the files already
    /// written are removed again.
    pub fn write_all(&self, dir: &std::path::Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = std::fs::write(&path, bytes) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                let _ = std::fs::remove_file(&path);
                return Err(CliError::Io { path, source: e });
            }
            written.push(path);
        }
        Ok(())
    }
}

fn required_horizon(m: &Tower) -> usize {
    (20.0 * m.mean_return_f64()).ceil() as usize + m.max_return()
}

fn stationary_residual(m: &Tower) -> f64 {
    let nu = m.invariant_measure();
    m.push_forward(&nu).iter().zip(&nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// The decay regime the components put the product in.
pub fn claim_for(specs: &[TailSpec]) -> Claim {
    let alpha = specs
        .iter()
        .filter_map(|s| match s {
            TailSpec::Polynomial { alpha, .. } => Some(*alpha),
            _ => None,
        })
        .reduce(f64::min);
    if let Some(alpha) = alpha {
        return Claim::Polynomial { alpha };
    }
    let theta = specs
        .iter()
        .filter_map(|s| match s {
            TailSpec::Stretched { theta, .. } => Some(*theta),
            _ => None,
        })
        .reduce(f64::min);
    match theta {
        Some(theta) => Claim::Stretched { theta },
        None => Claim::Exponential,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// `n,tail,ci_low,ci_high,leak_bound`; the interval columns are empty where
/// no sample covers `n`.
pub fn survival_csv(curve: &SurvivalCurve, ci: Option<&[(f64, f64)]>) -> String {
    let mut s = String::from("n,tail,ci_low,ci_high,leak_bound\n");
    for n in 0..=curve.horizon() {
        let band = ci.and_then(|c| c.get(n));
        let _ = writeln!(
            s,
            "{n},{:e},{},{},{:e}",
            curve.tail(n),
            fmt_opt(band.map(|b| b.0)),
            fmt_opt(band.map(|b| b.1)),
            curve.leak(n)
        );
    }
    s
}

/// Reads the `n` and `tail` (and, if present, `leak_bound`) columns of a
/// CSV curve. Rows must list `n = 0, 1, 2, ...` in order.
pub fn parse_curve_csv(text: &str) -> Result<SurvivalCurve, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split(',').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let n_col = col("n").ok_or("missing `n` column")?;
    let t_col = col("tail").ok_or("missing `tail` column")?;
    let l_col = col("leak_bound");
    let mut values = Vec::new();
    let mut leak = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |c: usize| fields.get(c).copied().ok_or(format!("row {}: too few fields", row + 1));
        let n: usize = get(n_col)?.parse().map_err(|e| format!("row {}: n: {e}", row + 1))?;
        if n != row {
            return Err(format!("row {}: expected n = {row}, found {n}", row + 1));
        }
        values.push(get(t_col)?.parse::<f64>().map_err(|e| format!("row {}: tail: {e}", row + 1))?);
        leak.push(match l_col {
            Some(c) if !get(c)?.is_empty() => {
                get(c)?.parse::<f64>().map_err(|e| format!("row {}: leak_bound: {e}", row + 1))?
            }
            _ => 0.0,
        });
    }
    if values.is_empty() {
        return Err("no data rows".into());
    }
    Ok(SurvivalCurve::new(values, leak, Provenance::Dp))
}

fn tower_tail(m: &Tower, horizon: usize) -> SurvivalCurve {
    let pmf = m.pmf();
    let mut values = vec![0.0; horizon + 1];
    let mut above: f64 = pmf.iter().skip(horizon + 1).sum();
    for n in (0..=horizon).rev() {
        values[n] = above;
        above += pmf.get(n).copied().unwrap_or(0.0);
    }
    SurvivalCurve::new(values, vec![m.leak(); horizon + 1], Provenance::ClosedForm)
}

fn renewal_csv(models: &[Tower], horizon: usize) -> String {
    let u: Vec<Vec<f64>> = models.iter().map(|m| m.renewal_probabilities(horizon)).collect();
    let mut s = String::from("n");
    for i in 0..models.len() {
        let _ = write!(s, ",u{}", i + 1);
    }
    s.push('\n');
    for n in 0..=horizon {
        let _ = write!(s, "{n}");
        for col in &u {
            let _ = write!(s, ",{:e}", col[n]);
        }
        s.push('\n');
    }
    s
}

fn invariant_csv(m: &Tower) -> String {
    let mean = m.mean_return_f64();
    let mut s = String::from("column,return_time,prob,level_mass\n");
    for (i, c) in m.columns().iter().enumerate() {
        let _ = writeln!(s, "{i},{},{:e},{:e}", c.return_time, c.prob, c.prob / mean);
    }
    s
}

/// `ℓ / R` on level `ℓ` of a column of height `R`, centred under `ν`.
fn level_observable(m: &Tower) -> Vec<f64> {
    let raw: Vec<f64> = m.states().iter().map(|s| s.level as f64 / m.return_time(s.column) as f64).collect();
    let nu = m.invariant_measure();
    let mean: f64 = raw.iter().zip(&nu).map(|(a, b)| a * b).sum();
    raw.into_iter().map(|x| x - mean).collect()
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the stages of `stages` that the config enables.
pub fn run(cfg: &ExperimentConfig, stages: Stages, command: &str) -> Result<(ExperimentReport, Artifacts), CliError> {
    cfg.validate()?;
    let mut art = Artifacts::default();
    let mut report = ExperimentReport {
        generator: Generator::default(),
        command: command.to_string(),
        components: Vec::new(),
        tower: None,
        product: None,
        fits: Vec::new(),
        verify: None,
        key_prop: None,
        bounds: None,
        correlation: None,
        verdicts: Vec::new(),
        notes: Vec::new(),
        pass: true,
    };
    let n = cfg.dp.horizon;

    let models: Vec<Tower> = cfg
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| build_tower(&c.tail, c.r_max, cfg.dp.leak_budget).context(format!("components[{i}]")))
        .collect::<Result<_, _>>()?;
    let needed = models.iter().map(required_horizon).max().unwrap_or(0);
    let window_horizon = cfg.n0_policy.horizon.unwrap_or(needed.max(n));
    for (i, (m, c)) in models.iter().zip(&cfg.components).enumerate() {
        let window =
            m.select_n0(cfg.n0_policy.fraction, window_horizon).context(format!("components[{i}] mixing window"))?;
        let residual = stationary_residual(m);
        report.verdict(&format!("stationarity[{i}]"), residual <= 1e-12, format!("max |νP - ν| = {residual:e}"));
        report.components.push(ComponentReport {
            tail: c.tail.clone(),
            r_max: c.r_max,
            columns: m.columns().len(),
            mean_return: m.mean_return_f64(),
            gcd: m.gcd(),
            leak: m.leak(),
            expansion_bound: m.expansion_bound(),
            required_horizon: required_horizon(m),
            window,
            stationary_residual: residual,
        });
    }

    if !cfg.is_product() || stages == Stages::tower() {
        art.put("renewal.csv", renewal_csv(&models, n));
        if let [m] = models.as_slice() {
            let w = report.components[0].window;
            report.tower = Some(TowerReport {
                n0: w.n0,
                c: w.c,
                nu_base: 1.0 / m.mean_return_f64(),
                renewal_limit_gap: w.limit_gap,
            });
            art.put("invariant.csv", invariant_csv(m));
            let curve = tower_tail(m, n);
            art.put("survival.csv", survival_csv(&curve, None));
            art.put("survival.svg", svg::render("P(R > n)", &[Series::line("tail", &curve.values, svg::BLACK)]));
            report.notes.push("one component: tower-only report".into());
        }
        return finish(report, art);
    }

    // Pairs are used directly; longer products fold all but the last factor
    // into one tower first.
    let ell = models.len();
    let fraction = cfg.n0_policy.fraction;
    let mut fold_steps = Vec::new();
    let (first, second) = if ell == 2 {
        (models[0].clone(), models[1].clone())
    } else {
        let exponents: Vec<Option<f64>> = cfg
            .components
            .iter()
            .take(ell - 1)
            .map(|c| match c.tail {
                TailSpec::Polynomial { alpha, .. } => Some(alpha),
                _ => None,
            })
            .collect();
        let policy = FoldPolicy {
            fraction,
            window_horizon,
            dp_horizon: n,
            leak_budget: cfg.dp.leak_budget,
            cell_budget: cfg.dp.cell_budget,
            exponents,
        };
        let out = fold(&models[..ell - 1], &policy).context("fold")?;
        fold_steps = out.steps;
        report.notes.push(format!("{ell} factors: the first {} are folded into one tower", ell - 1));
        (out.model, models[ell - 1].clone())
    };
    let pair_horizon = window_horizon.max(required_horizon(&first)).max(required_horizon(&second));
    let pair = match cfg.n0_policy.n0 {
        Some(n0) => ProductModel::with_n0(first, second, n0, pair_horizon).context("n0_policy.n0")?,
        None => ProductModel::new(first, second, fraction, pair_horizon).context("n0_policy")?,
    };
    let mut product = ProductReport {
        factors: ell,
        n0: pair.n0(),
        c: pair.c(),
        windows: pair.windows().copied(),
        fold: fold_steps,
        dp: None,
        mc: None,
        oracle: None,
    };

    let mut curve = None;
    if stages.dp {
        let out = product_tail_dp(&pair, n, cfg.dp.cell_budget).context("product DP")?;
        let c = out.curve();
        product.dp = Some(DpSummary {
            horizon: n,
            drift: out.drift,
            max_leak_bound: c.leak_bound.iter().copied().fold(0.0, f64::max),
        });
        report.verdict("dp_mass", out.drift <= 1e-9, format!("|Σ P(T = n) + P(T > N) - 1| = {:e}", out.drift));
        curve = Some(c);
    }

    let mut band = None;
    if stages.mc && cfg.mc.samples > 0 {
        let seed = cfg.mc.seed.expect("validated");
        let [a, b] = pair.components();
        let mc = match ell {
            2 => Some(product_tail_mc(a, b, pair.n0(), cfg.mc.samples, n, seed, cfg.mc.cap)),
            3 => {
                let inner =
                    NestedPair { first: &models[0], second: &models[1], n0: product.fold[0].n0, cap: cfg.mc.cap };
                Some(product_tail_mc(&inner, b, pair.n0(), cfg.mc.samples, n, seed, cfg.mc.cap))
            }
            _ => {
                report.notes.push("simulation covers at most three factors; skipped".into());
                None
            }
        };
        if let Some(mc) = mc {
            let mc = mc.context("Monte Carlo")?;
            let bands: Vec<(f64, f64)> = mc.exceed.iter().map(|&k| wilson(k, cfg.mc.samples, cfg.mc.z)).collect();
            let compare = cfg.mc.compare_horizon.min(n);
            let mut outside = Vec::new();
            if let Some(c) = &curve {
                for k in 1..=compare {
                    let (lo, hi) = bands[k];
                    if c.tail(k) + c.leak(k) < lo || c.tail(k) - c.leak(k) > hi {
                        outside.push(k);
                    }
                }
            }
            let pass = outside.is_empty() && mc.audit.gaps_ok && mc.audit.stops_in_base;
            report.verdict(
                "mc_agreement",
                pass,
                format!(
                    "{} of {compare} n outside the z = {} band; gaps >= n₀: {}; both in base at T: {}",
                    outside.len(),
                    cfg.mc.z,
                    mc.audit.gaps_ok,
                    mc.audit.stops_in_base
                ),
            );
            product.mc = Some(McSummary {
                samples: cfg.mc.samples,
                seed,
                cap: cfg.mc.cap,
                z: cfg.mc.z,
                audit: mc.audit,
                compare_horizon: compare,
                outside_band: outside,
                pass,
            });
            if curve.is_none() {
                curve = Some(mc.curve);
            }
            band = Some(bands);
        }
    }

    if stages.oracle {
        if let (2, Some(c)) = (ell, &curve) {
            let o = brute_force_tail(&pair, n).context("brute-force oracle")?;
            let mut csv = String::from("n,dp,oracle,abs_diff\n");
            let mut worst: f64 = 0.0;
            let mut pass = true;
            for (k, x) in o.tail.iter().enumerate() {
                let d = (c.tail(k) - x).abs();
                worst = worst.max(d);
                pass &= d <= ORACLE_TOLERANCE + c.leak(k);
                let _ = writeln!(csv, "{k},{:e},{:e},{:e}", c.tail(k), x, d);
            }
            report.verdict("oracle_agreement", pass, format!("max |DP - oracle| = {worst:e} for n <= {n}"));
            product.oracle = Some(OracleSummary { horizon: n, words: o.words, max_abs_diff: worst, pass });
            art.put("oracle.csv", csv);
        } else {
            report.notes.push("the brute-force oracle covers two factors only; skipped".into());
        }
    }

    let claim = claim_for(&cfg.components.iter().map(|c| c.tail.clone()).collect::<Vec<_>>());
    // After folding, the last pair's first factor has exponent α - (ℓ - 2).
    let (claim, claim_components) = match claim {
        Claim::Polynomial { alpha } if ell > 2 => {
            report.notes.push(format!("verdict on the last pair: folded exponent α - {} with ℓ = 2", ell - 2));
            (Claim::Polynomial { alpha: alpha - (ell - 2) as f64 }, 2)
        }
        other => (other, ell.min(2)),
    };

    if let Some(c) = &curve {
        if stages.fits {
            for (i, f) in cfg.fits.iter().enumerate() {
                report.fits.push(fit_rate(c, f.family, f.window).context(format!("fits[{i}]"))?);
            }
            art.put("fits.json", json(&report.fits));
        }

        if stages.verify && cfg.verify.enabled {
            if c.horizon() < MIN_HORIZON {
                report.notes.push(format!("horizon {} is below {MIN_HORIZON}; theorem verdict skipped", c.horizon()));
            } else {
                let window = cfg.verify.window.unwrap_or((n.div_ceil(10), n));
                let v = verify_theorem_bound(c, claim, claim_components, window).context("verify")?;
                report.verdict("theorem_rate", v.pass, format!("{:?} over [{}, {}]", v.claim, window.0, window.1));
                report.verify = Some(v);
            }
        }

        if stages.key_prop && cfg.key_prop.enabled {
            let h = cfg.key_prop.horizon.min(n);
            let kp = key_prop_check(&pair, cfg.key_prop.i_max, h).context("key_prop")?;
            let pass = kp.eps0_ok && kp.domination_ok && kp.k0_emp.is_finite();
            report.verdict(
                "key_estimates",
                pass,
                format!("ε₀ = {:e} (c = {:e}), K₀ = {:e} over {} points", kp.eps0_emp, kp.c, kp.k0_emp, kp.checked),
            );
            if stages.bounds && cfg.bounds.enabled {
                match bound_check(c, &pair, &kp, claim, cfg)? {
                    Some(b) => {
                        report.verdict(
                            &format!("{}_dominates", b.kind),
                            b.dominance.pass,
                            format!(
                                "over [{}, {}]: {} violations, min bound/tail = {:e}",
                                b.dominance.window.0,
                                b.dominance.window.1,
                                b.dominance.violations.len(),
                                b.dominance.min_ratio
                            ),
                        );
                        art.put("bounds.json", json(&b));
                        report.bounds = Some(b);
                    }
                    None => report.notes.push("bound window is empty; bounds skipped".into()),
                }
            }
            report.key_prop = Some(kp);
        }

        art.put("survival.csv", survival_csv(c, band.as_deref()));
        let centre: Option<Vec<f64>> = band.as_ref().map(|b| b.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
        let overlay: Option<Vec<f64>> = report.bounds.as_ref().map(|b| {
            let mut vals = vec![f64::NAN; c.values.len()];
            for r in &b.rows {
                vals[r.n] = r.bound;
            }
            vals
        });
        let mut series = vec![Series::line("DP", &c.values, svg::BLACK)];
        if let Some(v) = &centre {
            series.push(Series::points("MC", v, svg::BLUE));
        }
        if let (Some(v), Some(b)) = (&overlay, &report.bounds) {
            series.push(Series::dashed(b.kind, v, svg::RED));
        }
        art.put("survival.svg", svg::render("P(T > n)", &series));
    }
    report.product = Some(product);

    if stages.correlation && cfg.correlation.enabled {
        let [a, b] = pair.components();
        let states = a.state_count() * b.state_count();
        if states > MAX_CORRELATION_STATES {
            return Err(CliError::Precondition(format!(
                "the product chain has {states} states; the correlation check handles at most {MAX_CORRELATION_STATES}"
            )));
        }
        let (pa, pb) = match cfg.correlation.observables {
            ObservableChoice::CenteredBaseIndicator => (centered_base_indicator(a), centered_base_indicator(b)),
            ObservableChoice::CenteredLevel => (level_observable(a), level_observable(b)),
        };
        let t = tensor(&pa, &pb);
        let r = product_correlation_check(a, b, &t, &t, cfg.correlation.n).context("correlation")?;
        let recon_ok = r.reconstruction_error <= 1e-12;
        report.verdict(
            "correlation_bound",
            r.holds && recon_ok,
            format!(
                "Cor <= 2Cγ_n for n <= {}: {}; split reconstruction error {:e}",
                cfg.correlation.n, r.holds, r.reconstruction_error
            ),
        );
        art.put("correlation.csv", r.to_csv());
        report.correlation = Some(CorrelationSummary {
            horizon: cfg.correlation.n,
            observables: cfg.correlation.observables,
            constant: r.constant,
            holds: r.holds,
            reconstruction_error: r.reconstruction_error,
            first_failure: r.first_failure,
        });
    }

    finish(report, art)
}

fn bound_check(
    curve: &SurvivalCurve,
    pair: &ProductModel<f64>,
    kp: &KeyPropReport,
    claim: Claim,
    cfg: &ExperimentConfig,
) -> Result<Option<BoundCheck>, CliError> {
    let n0 = pair.n0();
    let hi = cfg.bounds.max_n.min(curve.horizon());
    let table = model_mbar(pair, hi + 1);
    let mbar = |k: i64| mbar_lookup(&table, k);
    let (kind, lo, k, delta, theta_prime) = match claim {
        Claim::Polynomial { .. } => ("estm", 2 * n0 + 1, 2.0 * kp.k0_emp.max(1.0), None, None),
        Claim::Exponential => ("stnexp", cfg.bounds.stnexp_from, kp.k0_emp, Some(cfg.bounds.delta), Some(1.0)),
        Claim::Stretched { theta } => {
            ("stnexp", cfg.bounds.stnexp_from, kp.k0_emp, Some(cfg.bounds.delta), Some(0.5 * theta))
        }
    };
    if lo > hi {
        return Ok(None);
    }
    let values: Vec<BoundValue> = match (delta, theta_prime) {
        (Some(delta), Some(tp)) => {
            let i_max = ((delta * (hi as f64).powf(tp)).floor() as usize).max(1);
            let tab = MaxProductTable::new(&mbar, n0, i_max, hi).context("max-product table")?;
            let src = MaxProductSource::Exact(&tab);
            (lo..=hi)
                .map(|m| stnexp_rhs(m, tp, delta, k, kp.eps0_emp, n0, &src, 1.0))
                .collect::<Result<_, _>>()
                .context("stnexp bound")?
        }
        _ => (lo..=hi)
            .map(|m| estm_rhs(m, k, kp.eps0_emp, n0, &mbar, 1.0))
            .collect::<Result<_, _>>()
            .context("estm bound")?,
    };
    let bounds: Vec<f64> = values.iter().map(|b| b.value).collect();
    let dominance = dominance_check(curve, lo, &bounds).context("dominance")?;
    let rows = values
        .iter()
        .map(|b| BoundRow { n: b.n, tail: curve.tail(b.n), bound: b.value, remainder: b.remainder })
        .collect();
    Ok(Some(BoundCheck { kind, n0, eps0: kp.eps0_emp, k0: kp.k0_emp, k, delta, theta_prime, dominance, rows }))
}

fn finish(mut report: ExperimentReport, mut art: Artifacts) -> Result<(ExperimentReport, Artifacts), CliError> {
    report.pass = report.verdicts.iter().all(|v| v.pass);
    art.put("report.json", json(&report));
    Ok((report, art))
}

/// One line per verdict, for the terminal.
pub fn summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for v in &report.verdicts {
        let _ = writeln!(s, "{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    for note in &report.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let c = SurvivalCurve::closed_form(5, |n| 0.5f64.powi(n as i32));
        let back = parse_curve_csv(&survival_csv(&c, None)).unwrap();
        assert_eq!(back.values, c.values);
    }

    #[test]
    fn out_of_order_rows_are_refused() {
        assert!(parse_curve_csv("n,tail\n0,1\n2,0.5\n").is_err());
    }

    #[test]
    fn claims_follow_the_heaviest_tail() {
        let e = TailSpec::exponential(1.0).unwrap();
        let s = TailSpec::stretched(1.0, 0.5).unwrap();
        let p = TailSpec::polynomial(3.0, 1.0).unwrap();
        assert_eq!(claim_for(&[e.clone(), e.clone()]), Claim::Exponential);
        assert_eq!(claim_for(&[e.clone(), s.clone()]), Claim::Stretched { theta: 0.5 });
        assert_eq!(claim_for(&[s, p]), Claim::Polynomial { alpha: 3.0 });
    }
}
