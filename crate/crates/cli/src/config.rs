//! Command-line flags, the optional TOML config file, and their merge.
//!
//! Precedence: flags, then the config file, then the load-keyed presets.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use hybrid_uc::admm::InitialCommitment;
use hybrid_uc::qaoa::Extraction;
use hybrid_uc::{AdmmConfig, QaoaParams};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exhaustive enumeration.
    Baseline,
    /// ADMM with the classical binary-block solver.
    S1,
    /// ADMM with the simulated QAOA binary-block solver.
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extract {
    Argmax,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartZ {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(name = "hybrid-uc", version, about = "Single-period unit commitment via three-block ADMM")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Generator CSV with header `id,a,b,c,p_min,p_max`.
    #[arg(long)]
    pub generators: Option<PathBuf>,
    /// Demand in MW.
    #[arg(long)]
    pub load: Option<f64>,
    /// TOML file with any of the options below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Residual tolerance [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// [default: 1000]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub qaoa_depth: Option<usize>,
    /// Expectation evaluations per variational search [default: 100].
    #[arg(long)]
    pub qaoa_budget: Option<usize>,
    /// Reuse the previous iteration's angles (default).
    #[arg(long, overrides_with = "no_warm_start")]
    pub warm_start: bool,
    #[arg(long, overrides_with = "warm_start")]
    pub no_warm_start: bool,
    #[arg(long, value_enum)]
    pub extract: Option<Extract>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write `histogram_iter<k>.csv` for every iteration (s2 only).
    #[arg(long)]
    pub emit_histograms: bool,
    /// Binary-block solver name; overrides the mode's default.
    #[arg(long)]
    pub qubo_solver: Option<String>,
    /// Starting commitment for the binary block [default: on].
    #[arg(long, value_enum)]
    pub initial_z: Option<StartZ>,
    /// Also run this mode on the same instance and write `compare.txt`.
    #[arg(long, value_enum)]
    pub compare_with: Option<Mode>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<Mode>,
    pub generators: Option<PathBuf>,
    pub load: Option<f64>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub qaoa_depth: Option<usize>,
    pub qaoa_budget: Option<usize>,
    pub warm_start: Option<bool>,
    pub extract: Option<Extract>,
    pub seed: Option<u64>,
    pub emit_histograms: Option<bool>,
    pub qubo_solver: Option<String>,
    pub initial_z: Option<StartZ>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative generator paths are taken relative to the config file.
        if let (Some(g), Some(dir)) = (&cfg.generators, path.parent()) {
            if g.is_relative() {
                cfg.generators = Some(dir.join(g));
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: Mode,
    pub generators: PathBuf,
    pub load: f64,
    pub admm: AdmmConfig,
    pub emit_histograms: bool,
    pub compare_with: Option<Mode>,
    pub out: PathBuf,
}

pub fn default_backend(mode: Mode) -> &'static str {
    match mode {
        Mode::S2 => hybrid_uc::registry::QAOA,
        _ => hybrid_uc::registry::CLASSICAL,
    }
}

impl RunSpec {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => FileConfig::read(path)?,
            None => FileConfig::default(),
        };
        let Some(mode) = cli.mode.or(file.mode) else {
            bail!("--mode is required (baseline, s1 or s2)");
        };
        let Some(generators) = cli.generators.or(file.generators) else {
            bail!("--generators is required");
        };
        let Some(load) = cli.load.or(file.load) else {
            bail!("--load is required");
        };
        if !(load >= 0.0 && load.is_finite()) {
            bail!("--load must be a nonnegative number, got {load}");
        }

        let mut admm = AdmmConfig::for_load(load);
        admm.rho = cli.rho.or(file.rho).unwrap_or(admm.rho);
        admm.beta = cli.beta.or(file.beta).unwrap_or(admm.beta);
        admm.epsilon = cli.epsilon.or(file.epsilon).unwrap_or(admm.epsilon);
        admm.max_iters = cli.max_iters.or(file.max_iters).unwrap_or(admm.max_iters);
        let flag_warm = match (cli.warm_start, cli.no_warm_start) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        admm.warm_start = flag_warm.or(file.warm_start).unwrap_or(admm.warm_start);
        admm.backend = cli
            .qubo_solver
            .or(file.qubo_solver)
            .unwrap_or_else(|| default_backend(mode).to_owned());
        if let Some(start) = cli.initial_z.or(file.initial_z) {
            admm.initial_z = match start {
                StartZ::On => InitialCommitment::AllOn,
                StartZ::Off => InitialCommitment::AllOff,
            };
        }

        let depth = cli.qaoa_depth.or(file.qaoa_depth).unwrap_or(admm.qaoa.depth);
        if depth != admm.qaoa.depth {
            admm.qaoa.depth = depth;
            admm.qaoa.initial_params = QaoaParams::constant(depth, admm.qaoa.initial_params.gammas[0]);
        }
        admm.qaoa.optimizer_budget = cli.qaoa_budget.or(file.qaoa_budget).unwrap_or(admm.qaoa.optimizer_budget);
        admm.qaoa.extraction = match cli.extract.or(file.extract) {
            Some(Extract::Sample) => Extraction::Sample,
            Some(Extract::Argmax) | None => Extraction::Argmax,
        };
        admm.qaoa.sample_seed = cli.seed.or(file.seed).unwrap_or(admm.qaoa.sample_seed);

        let emit_histograms = cli.emit_histograms || file.emit_histograms.unwrap_or(false);
        admm.record_probabilities = emit_histograms && mode == Mode::S2;

        Ok(Self {
            mode,
            generators,
            load,
            admm,
            emit_histograms,
            compare_with: cli.compare_with,
            out: cli.out,
        })
    }
}
