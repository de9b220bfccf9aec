//! Command-line front end. Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::MsrcConfig;
use crate::error::{Error, Result};
use crate::estimators::{EstimateReport, Mode};
use crate::harness::checks::{degenerate_range_checks, run_checks};
use crate::harness::config::{ExperimentConfig, MsrcSetting};
use crate::harness::curves::{avar_curve, rho_grid, write_avar_csv, MsrcConstants};
use crate::harness::experiment::{run_estimator, run_experiment, EstimationInputs};
use crate::model::{BlockGeometry, NoiseCovariance};
use crate::rng::Seed;
use crate::simulate::{add_noise, ModelTag, ObservationSet, SignalPlan};
use crate::spectral::SpectralPlan;

#[derive(Debug, Parser)]
#[command(
    name = "specv",
    version,
    about = "Spectral covolatility estimation under microstructure noise"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed; overrides `master_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one observation set and write it as CSV.
    Simulate {
        /// Preset used when no config is given.
        #[arg(long, default_value = "parametric_s4")]
        preset: String,
        /// Replication index, the seed stream.
        #[arg(long, default_value_t = 0)]
        replication: u64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate from a CSV file, or from a fresh simulation.
    Estimate {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "adaptive")]
        mode: String,
        #[arg(long, default_value = "parametric_s4")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Run the Monte Carlo experiment described by --config.
    Mc {
        /// Worker threads; overrides `threads` from the config.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Asymptotic variance curve over the correlation.
    Avar {
        #[arg(long, default_value_t = 2.0)]
        sigma_x: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_y: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_x: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_y: f64,
        #[arg(long, default_value_t = 0.0)]
        eta_xy: f64,
        #[arg(long, default_value_t = 99)]
        points: usize,
        /// MSRC variance constants `N,D,C`.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        msrc_constants: Option<Vec<f64>>,
    },
    /// Run the identity probes.
    Check,
}

fn load_config(common: &Common, preset: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::preset(preset)?,
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, fallback: &Path) -> PathBuf {
    common.out.clone().unwrap_or_else(|| fallback.to_path_buf())
}

fn simulate_from(cfg: &ExperimentConfig, replication: u64) -> Result<ObservationSet> {
    let spec = &cfg.model;
    let plan = match cfg.model_tag {
        ModelTag::E0 => SignalPlan::smooth(&spec.path, cfg.n, &spec.scheme)?,
        ModelTag::E3 => SignalPlan::blockwise(&spec.path, cfg.n, cfg.geometry.blocks)?,
    };
    let seed = Seed::new(cfg.master_seed, replication);
    add_noise(plan.sample(seed), &spec.noise, seed)
}

/// Geometry of `cfg` when it fits `n`, else the default for `n`.
fn geometry_for(cfg: &ExperimentConfig, n: usize) -> Result<BlockGeometry> {
    let g = cfg.geometry;
    if g.n == n {
        return Ok(g);
    }
    if n.is_multiple_of(g.blocks) {
        BlockGeometry::new(n, g.blocks, n / g.blocks, g.coarse, g.window)
    } else {
        BlockGeometry::default_for(n)
    }
}

/// Estimate an observation set with the model, noise and tuning of `cfg`.
pub fn estimate_observations(
    cfg: &ExperimentConfig,
    obs: &ObservationSet,
    mode: Mode,
) -> Result<EstimateReport> {
    let g = geometry_for(cfg, obs.n())?;
    let coeffs = if mode.is_spectral() {
        Some(SpectralPlan::new(g).compute(obs)?)
    } else {
        None
    };
    let scales = match cfg.msrc {
        MsrcSetting::Explicit { scales } => scales,
        MsrcSetting::GridOracle { .. } => ((obs.n() as f64).sqrt().ceil() as usize).max(1),
    };
    let msrc = MsrcConfig::quadratic(scales.min(obs.n()))?;
    let tick = cfg.model.tick_time_path()?;
    let noise_input = |m: Mode| cfg.noise_input(m);
    let inputs = EstimationInputs {
        path: Some(&tick),
        noise: cfg.model.noise,
        noise_input: &noise_input,
        msrc: Some(&msrc),
    };
    run_estimator(mode, obs, coeffs.as_ref(), &inputs)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    match cli.command {
        Command::Simulate {
            preset,
            replication,
            n,
        } => {
            let mut cfg = load_config(common, &preset)?;
            if let Some(n) = n {
                cfg.n = n;
                cfg.geometry = geometry_for(&cfg, n)?;
            }
            let obs = simulate_from(&cfg, replication)?;
            let path = out_dir(common, Path::new(".")).join("obs.csv");
            obs.write_csv(create(&path)?)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Estimate {
            input,
            mode,
            preset,
            replication,
        } => {
            let cfg = load_config(common, &preset)?;
            let mode: Mode = mode.parse()?;
            let obs = match input {
                Some(p) => {
                    let f =
                        File::open(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                    ObservationSet::read_csv(BufReader::new(f))?
                }
                None => simulate_from(&cfg, replication)?,
            };
            let report = estimate_observations(&cfg, &obs, mode)?;
            let reports = [report];
            if let Some(dir) = &common.out {
                EstimateReport::write_csv(&reports, create(&dir.join("estimate.csv"))?)?;
            }
            EstimateReport::write_csv(&reports, std::io::stdout().lock())?;
            Ok(true)
        }
        Command::Mc { threads } => {
            let path = common
                .config
                .clone()
                .ok_or_else(|| Error::Config("`mc` requires --config".into()))?;
            let mut cfg = load_config(common, "")?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let report = run_experiment(&cfg)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("mc")
                .to_string();
            let dir = out_dir(common, &cfg.outputs);
            let written = report.write_outputs(&dir, &stem)?;
            report.write_summary_csv(std::io::stdout().lock())?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(true)
        }
        Command::Avar {
            sigma_x,
            sigma_y,
            eta_x,
            eta_y,
            eta_xy,
            points,
            msrc_constants,
        } => {
            let noise = NoiseCovariance::from_std(eta_x, eta_y, eta_xy)
                .map_err(|e| Error::Config(e.to_string()))?;
            let consts = msrc_constants.map(|v| MsrcConstants {
                n: v[0],
                d: v[1],
                c: v[2],
            });
            let rows = avar_curve(&rho_grid(points), sigma_x, sigma_y, &noise, consts)?;
            match &common.out {
                Some(dir) => write_avar_csv(&rows, create(&dir.join("avar.csv"))?)?,
                None => write_avar_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(true)
        }
        Command::Check => {
            let seed = common.seed.unwrap_or(1);
            let results = run_checks(seed);
            let mut out = std::io::stdout().lock();
            for r in &results {
                writeln!(out, "{}", r.line())?;
            }
            for r in degenerate_range_checks(seed) {
                writeln!(
                    out,
                    "info {}: max residual {:.3e} (frequency j = nh is degenerate)",
                    r.name, r.max_residual
                )?;
            }
            Ok(results.iter().all(|r| r.passed()))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
