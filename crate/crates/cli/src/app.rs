//! Command-line surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use towerprod_core::rates::{fit_rate, FitFamily};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Context};
use crate::lemmas::check_lemmas;
use crate::pipeline::{self, parse_curve_csv, Artifacts, Stages};

#[derive(Debug, Parser)]
#[command(name = "towerprod", version, about = "Simultaneous return times of product towers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `dp.horizon`.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Overrides `mc.samples`.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline as configured.
    Run(Common),
    /// Builds the towers and reports renewal diagnostics.
    Tower(Common),
    /// Product tail by dynamic programming and simulation.
    Product(Common),
    /// Compares the DP tail with brute-force enumeration.
    Oracle(Common),
    /// Fits decay families, to a configured run or to a curve file.
    Fit(FitArgs),
    /// Decay-regime verdict, key estimates and explicit bounds.
    Verify(Common),
    /// Product decay-of-correlations check.
    Correlate(Common),
    /// Built-in sweeps of the auxiliary inequalities.
    CheckLemmas {
        /// Also write the full tables here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, conflicts_with = "curve")]
    pub config: Option<PathBuf>,
    /// CSV with `n` and `tail` columns.
    #[arg(long, required_unless_present = "config")]
    pub curve: Option<PathBuf>,
    #[arg(long, requires = "curve")]
    pub family: Option<FitFamily>,
    /// `LO HI`; defaults to `[⌈N/10⌉, N]`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], requires = "curve")]
    pub window: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<usize>,
}

/// What a command produced: text for the terminal, files and the verdict.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub artifacts: Artifacts,
    pub out_dir: Option<PathBuf>,
    pub pass: bool,
}

impl Outcome {
    /// Writes the artifacts, all or nothing.
    pub fn write(&self) -> Result<(), CliError> {
        match &self.out_dir {
            Some(dir) if !self.artifacts.files.is_empty() => self.artifacts.write_all(dir),
            _ => Ok(()),
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply_overrides(common.seed, common.horizon, common.samples);
    let dir = common.out.clone().unwrap_or_else(|| cfg.outputs.directory.clone());
    Ok((cfg, dir))
}

fn staged(common: &Common, stages: Stages, name: &str) -> Result<Outcome, CliError> {
    let (cfg, dir) = load(common)?;
    let (report, artifacts) = pipeline::run(&cfg, stages, name)?;
    Ok(Outcome { stdout: pipeline::summary(&report), artifacts, out_dir: Some(dir), pass: report.pass })
}

fn fit_curve(args: &FitArgs, path: &Path) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let curve = parse_curve_csv(&text).map_err(|message| CliError::Input { path: path.to_path_buf(), message })?;
    let n = curve.horizon();
    let window = match args.window.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        _ => (n.div_ceil(10), n),
    };
    let family = args.family.unwrap_or(FitFamily::Exponential);
    let fit = fit_rate(&curve, family, window).context("fit")?;
    let mut json = serde_json::to_string_pretty(&fit).expect("fit serializes");
    json.push('\n');
    let mut artifacts = Artifacts::default();
    if args.out.is_some() {
        artifacts.files.insert("fits.json".into(), json.clone().into_bytes());
    }
    Ok(Outcome { stdout: json, artifacts, out_dir: args.out.clone(), pass: true })
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Run(c) => staged(c, Stages::run(), "run"),
        Command::Tower(c) => staged(c, Stages::tower(), "tower"),
        Command::Product(c) => staged(c, Stages::product(), "product"),
        Command::Oracle(c) => staged(c, Stages::oracle(), "oracle"),
        Command::Verify(c) => staged(c, Stages::verify(), "verify"),
        Command::Correlate(c) => staged(c, Stages::correlate(), "correlate"),
        Command::Fit(args) => match (&args.curve, &args.config) {
            (Some(path), _) => fit_curve(args, path),
            (None, Some(config)) => {
                let common = Common { config: config.clone(), out: args.out.clone(), seed: None, horizon: args.horizon, samples: None };
                staged(&common, Stages::fit(), "fit")
            }
            (None, None) => unreachable!("clap requires one of --curve and --config"),
        },
        Command::CheckLemmas { out } => {
            let t = check_lemmas()?;
            let mut artifacts = Artifacts::default();
            artifacts.files.insert("stretched_sweep.csv".into(), t.sweep_csv.into_bytes());
            artifacts.files.insert("compositions.csv".into(), t.compositions_csv.into_bytes());
            Ok(Outcome { stdout: t.table, artifacts, out_dir: out.clone(), pass: t.pass })
        }
    }
}
