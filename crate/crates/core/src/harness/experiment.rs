//! Seeded Monte Carlo runs over a worker pool with index-ordered aggregation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::baselines::{
    baseline_report, msrc, msrc_on_grid, realized_report, scale_grid, select_grid_oracle,
    GridChoice, MsrcConfig,
};
use crate::error::{Error, Result};
use crate::estimators::{
    specv_adaptive_coeffs, specv_j1, specv_oracle, spev, Component, EstimateReport, Mode,
    NoiseInput, SpotSource,
};
use crate::harness::config::{ExperimentConfig, MsrcSetting};
use crate::model::{
    blockwise_integrated, true_integrated_covolatility, true_integrated_variance_x,
    true_integrated_variance_y, NoiseCovariance, SchemeKind, SpotPath,
};
use crate::rng::Seed;
use crate::simulate::{add_noise, ModelTag, ObservationSet, SignalPlan};
use crate::spectral::{SpectralCoefficients, SpectralPlan};
use crate::stats::normality_pvalue;

const TRUTH_QUAD_POINTS: usize = 64;
const MAX_WIDENINGS: usize = 4;
const WIDEN_STEP: i32 = 8;

/// Integrated quantities the estimators target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub covolatility: f64,
    pub variance_x: f64,
    pub variance_y: f64,
}

impl Truth {
    pub fn for_mode(&self, mode: Mode) -> f64 {
        match mode {
            Mode::SpevX => self.variance_x,
            Mode::SpevY => self.variance_y,
            _ => self.covolatility,
        }
    }
}

pub fn ground_truth(path: &SpotPath, tag: ModelTag, blocks: usize) -> Truth {
    match tag {
        ModelTag::E0 => Truth {
            covolatility: true_integrated_covolatility(path, TRUTH_QUAD_POINTS),
            variance_x: true_integrated_variance_x(path, TRUTH_QUAD_POINTS),
            variance_y: true_integrated_variance_y(path, TRUTH_QUAD_POINTS),
        },
        ModelTag::E3 => {
            let m = blockwise_integrated(path, blocks);
            Truth {
                covolatility: m.cov,
                variance_x: m.vx,
                variance_y: m.vy,
            }
        }
    }
}

/// What the estimators may use besides the data.
pub struct EstimationInputs<'a> {
    /// Tick-time spot path, for the oracle.
    pub path: Option<&'a SpotPath>,
    pub noise: NoiseCovariance,
    pub noise_input: &'a dyn Fn(Mode) -> NoiseInput,
    /// Explicit MSRC configuration.
    pub msrc: Option<&'a MsrcConfig>,
}

/// Runs one estimator on one observation set.
pub fn run_estimator(
    mode: Mode,
    obs: &ObservationSet,
    coeffs: Option<&SpectralCoefficients>,
    inputs: &EstimationInputs<'_>,
) -> Result<EstimateReport> {
    let need = || {
        coeffs.ok_or_else(|| Error::DegenerateInput(format!("{mode} needs spectral coefficients")))
    };
    let mut report = match mode {
        Mode::Oracle => {
            let path = inputs
                .path
                .ok_or_else(|| Error::DegenerateInput("oracle needs the true spot path".into()))?;
            specv_oracle(need()?, path, &inputs.noise)?
        }
        Mode::Adaptive => specv_adaptive_coeffs(need()?, obs, (inputs.noise_input)(mode))?,
        Mode::J1 | Mode::SpevX | Mode::SpevY => {
            let (h, source) = (inputs.noise_input)(mode).resolve(obs)?;
            let c = need()?;
            let mut r = match mode {
                Mode::J1 => specv_j1(c, &h)?,
                Mode::SpevX => spev(c, Component::X, SpotSource::Pilot, &h)?,
                _ => spev(c, Component::Y, SpotSource::Pilot, &h)?,
            };
            r.tuning.noise_source = source;
            r
        }
        Mode::Realized => realized_report(obs),
        Mode::Msrc => {
            let cfg = inputs.msrc.ok_or_else(|| {
                Error::DegenerateInput("msrc needs an explicit configuration".into())
            })?;
            msrc(obs, cfg)?
        }
    };
    report.tuning.seed = obs.meta.seed;
    Ok(report)
}

/// One estimator on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RowRecord {
    pub replication: u64,
    pub mode: Mode,
    pub truth: f64,
    pub outcome: std::result::Result<EstimateReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub mode: Mode,
    pub truth: f64,
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    pub bias: f64,
    /// Monte Carlo variance with divisor `R`.
    pub variance: f64,
    pub rmse: f64,
    /// `variance * sqrt(n)`.
    pub scaled_variance: f64,
    pub normality_p: f64,
    pub runtime: Duration,
}

impl EstimatorSummary {
    fn from_values(
        mode: Mode,
        truth: f64,
        values: &[f64],
        failures: usize,
        n: usize,
        runtime: Duration,
    ) -> Self {
        let count = values.len();
        let c = count as f64;
        let mean = values.iter().sum::<f64>() / c;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c;
        let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / c;
        Self {
            mode,
            truth,
            count,
            failures,
            mean,
            bias: mean - truth,
            variance,
            rmse: mse.sqrt(),
            scaled_variance: variance * (n as f64).sqrt(),
            normality_p: normality_pvalue(values),
            runtime,
        }
    }

    /// Monte Carlo standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n: usize,
    pub replications: u64,
    pub echo: Vec<(String, String)>,
    pub truth: Truth,
    pub rows: Vec<RowRecord>,
    pub summaries: Vec<EstimatorSummary>,
    pub msrc_choice: Option<GridChoice>,
    pub msrc_grid: Vec<usize>,
    pub warnings: Vec<String>,
    pub simulation_time: Duration,
}

impl McReport {
    pub fn summary(&self, mode: Mode) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.mode == mode)
    }

    pub fn values(&self, mode: Mode) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.mode == mode)
            .filter_map(|r| r.outcome.as_ref().ok().map(|e| e.value))
            .collect()
    }

    pub const SUMMARY_HEADER: &'static str =
        "mode,truth,replications,failures,mean,bias,variance,rmse,variance_sqrt_n,normality_p";

    /// Per-estimator table; the config echo and grid choice go in `#` lines.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.echo {
            writeln!(w, "# {k}={v}")?;
        }
        if let Some(c) = &self.msrc_choice {
            writeln!(
                w,
                "# msrc_scales={} msrc_grid_interior={} msrc_mse_unimodal={}",
                c.scales, c.interior, c.unimodal
            )?;
        }
        for warning in &self.warnings {
            writeln!(w, "# warning: {warning}")?;
        }
        writeln!(w, "{}", Self::SUMMARY_HEADER)?;
        for s in &self.summaries {
            writeln!(
                w,
                "{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.mode,
                s.truth,
                s.count,
                s.failures,
                s.mean,
                s.bias,
                s.variance,
                s.rmse,
                s.scaled_variance,
                s.normality_p
            )?;
        }
        Ok(())
    }

    /// One row per replication and estimator, with the standardized value for QQ plots.
    pub fn write_rows_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "replication,{},truth,standardized,error",
            EstimateReport::CSV_HEADER
        )?;
        for r in &self.rows {
            match &r.outcome {
                Ok(e) => {
                    let z = self
                        .summary(r.mode)
                        .map(|s| {
                            if s.variance > 0.0 {
                                (e.value - s.mean) / s.variance.sqrt()
                            } else {
                                f64::NAN
                            }
                        })
                        .unwrap_or(f64::NAN);
                    writeln!(
                        w,
                        "{},{},{:.16e},{:.16e},",
                        r.replication,
                        e.csv_row(),
                        r.truth,
                        z
                    )?;
                }
                Err(msg) => {
                    let empty = ",".repeat(EstimateReport::CSV_HEADER.matches(',').count());
                    writeln!(
                        w,
                        "{},{}{},{:.16e},,{}",
                        r.replication,
                        r.mode,
                        empty,
                        r.truth,
                        msg.replace(',', ";")
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Wall-clock timings, kept apart from the deterministic outputs.
    pub fn write_timings_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "stage,total_seconds,per_replication_seconds")?;
        let per = |d: Duration| d.as_secs_f64() / self.replications as f64;
        writeln!(
            w,
            "simulation,{:.6},{:.6e}",
            self.simulation_time.as_secs_f64(),
            per(self.simulation_time)
        )?;
        for s in &self.summaries {
            writeln!(
                w,
                "{},{:.6},{:.6e}",
                s.mode,
                s.runtime.as_secs_f64(),
                per(s.runtime)
            )?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv`, `<stem>_replications.csv` and `<stem>_timings.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let paths = [
            dir.join(format!("{stem}.csv")),
            dir.join(format!("{stem}_replications.csv")),
            dir.join(format!("{stem}_timings.csv")),
        ];
        self.write_summary_csv(BufWriter::new(File::create(&paths[0])?))?;
        self.write_rows_csv(BufWriter::new(File::create(&paths[1])?))?;
        self.write_timings_csv(BufWriter::new(File::create(&paths[2])?))?;
        Ok(paths.to_vec())
    }
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    tick_path: SpotPath,
    plan: SignalPlan,
    spectral: Option<SpectralPlan>,
    explicit_msrc: Option<MsrcConfig>,
}

struct Replication {
    results: Vec<(Mode, std::result::Result<EstimateReport, String>, Duration)>,
    grid_values: Option<std::result::Result<Vec<f64>, String>>,
    grid_time: Duration,
    simulation_time: Duration,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let spec = &cfg.model;
        let plan = match cfg.model_tag {
            ModelTag::E0 => SignalPlan::smooth(&spec.path, cfg.n, &spec.scheme)?,
            ModelTag::E3 => {
                if spec.scheme.kind() != SchemeKind::Equidistant {
                    return Err(Error::Config("field `scheme`: the blockwise model is only defined on the equidistant grid".into()));
                }
                SignalPlan::blockwise(&spec.path, cfg.n, cfg.geometry.blocks)?
            }
        };
        let spectral = cfg
            .estimators
            .iter()
            .any(|m| m.is_spectral())
            .then(|| SpectralPlan::new(cfg.geometry));
        let explicit_msrc = match cfg.msrc {
            MsrcSetting::Explicit { scales } => Some(MsrcConfig::quadratic(scales)?),
            MsrcSetting::GridOracle { .. } => None,
        };
        Ok(Self {
            cfg,
            tick_path: spec.tick_time_path()?,
            plan,
            spectral,
            explicit_msrc,
        })
    }

    fn observe(&self, replication: u64) -> Result<ObservationSet> {
        let seed = Seed::new(self.cfg.master_seed, replication);
        add_noise(self.plan.sample(seed), &self.cfg.model.noise, seed)
    }

    fn replicate(&self, replication: u64, grid: Option<&[usize]>) -> Replication {
        let start = Instant::now();
        let observed = self.observe(replication);
        let simulation_time = start.elapsed();
        let obs = match observed {
            Ok(o) => o,
            Err(e) => {
                let msg = e.to_string();
                return Replication {
                    results: self
                        .cfg
                        .estimators
                        .iter()
                        .map(|&m| (m, Err(msg.clone()), Duration::ZERO))
                        .collect(),
                    grid_values: grid.map(|_| Err(msg.clone())),
                    grid_time: Duration::ZERO,
                    simulation_time,
                };
            }
        };
        let start = Instant::now();
        let coeffs = self.spectral.as_ref().map(|p| p.compute(&obs));
        let coeff_time = start.elapsed();
        let noise_input = |m: Mode| self.cfg.noise_input(m);
        let inputs = EstimationInputs {
            path: Some(&self.tick_path),
            noise: self.cfg.model.noise,
            noise_input: &noise_input,
            msrc: self.explicit_msrc.as_ref(),
        };
        let mut results = Vec::with_capacity(self.cfg.estimators.len());
        for &mode in &self.cfg.estimators {
            if mode == Mode::Msrc && grid.is_some() {
                continue;
            }
            let start = Instant::now();
            let out = match (&coeffs, mode.is_spectral()) {
                (Some(Err(e)), true) => Err(e.clone()),
                (c, _) => run_estimator(
                    mode,
                    &obs,
                    c.as_ref().and_then(|r| r.as_ref().ok()),
                    &inputs,
                ),
            };
            let mut t = start.elapsed();
            if mode.is_spectral() {
                t += coeff_time;
            }
            results.push((mode, out.map_err(|e| e.to_string()), t));
        }
        let start = Instant::now();
        let grid_values = grid.map(|g| msrc_on_grid(&obs, g).map_err(|e| e.to_string()));
        Replication {
            results,
            grid_values,
            grid_time: start.elapsed(),
            simulation_time,
        }
    }
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("field `threads`: {e}")))
}

/// Runs every replication and aggregates in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McReport> {
    let runner = Runner::new(cfg)?;
    let pool = build_pool(cfg.threads)?;
    let truth = ground_truth(&cfg.model.path, cfg.model_tag, cfg.geometry.blocks);
    let wants_grid =
        cfg.estimators.contains(&Mode::Msrc) && matches!(cfg.msrc, MsrcSetting::GridOracle { .. });
    let (mut lo, mut hi) = match cfg.msrc {
        MsrcSetting::GridOracle { lo, hi } => (lo, hi),
        MsrcSetting::Explicit { .. } => (0, 0),
    };
    let mut grid = scale_grid(cfg.n, lo, hi);

    let reps: Vec<Replication> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| runner.replicate(i, wants_grid.then_some(grid.as_slice())))
            .collect()
    });

    let mut warnings = Vec::new();
    let mut msrc_choice = None;
    let mut msrc_values: Vec<std::result::Result<f64, String>> = Vec::new();
    let mut msrc_time: Duration = reps.iter().map(|r| r.grid_time).sum();
    if wants_grid {
        let mut grid_values: Vec<std::result::Result<Vec<f64>, String>> = reps
            .iter()
            .map(|r| r.grid_values.clone().expect("grid requested"))
            .collect();
        let mut widenings = 0;
        loop {
            let ok: Vec<Vec<f64>> = grid_values
                .iter()
                .filter_map(|v| v.as_ref().ok().cloned())
                .collect();
            let choice = select_grid_oracle(&grid, &ok, truth.covolatility)?;
            let can_lower = grid[0] > 1;
            let can_raise = *grid.last().expect("non-empty grid") < cfg.n;
            let edge_low = choice.index == 0 && can_lower;
            let edge_high = choice.index + 1 == grid.len() && can_raise;
            if choice.interior || widenings == MAX_WIDENINGS || !(edge_low || edge_high) {
                if !choice.interior {
                    warnings.push(format!(
                        "MSRC optimum M = {} lies on the edge of the final grid",
                        choice.scales
                    ));
                }
                if !choice.unimodal {
                    warnings.push("MSRC grid MSE is not unimodal".into());
                }
                msrc_values = grid_values
                    .iter()
                    .map(|v| {
                        v.as_ref()
                            .map(|row| row[choice.index])
                            .map_err(Clone::clone)
                    })
                    .collect();
                msrc_choice = Some(choice);
                break;
            }
            if edge_low {
                lo -= WIDEN_STEP;
            } else {
                hi += WIDEN_STEP;
            }
            warnings.push(format!(
                "MSRC optimum on the grid edge; widened exponents to {lo}..{hi}"
            ));
            widenings += 1;
            grid = scale_grid(cfg.n, lo, hi);
            let start = Instant::now();
            grid_values = pool.install(|| {
                (0..cfg.replications)
                    .into_par_iter()
                    .map(|i| {
                        runner
                            .observe(i)
                            .and_then(|obs| msrc_on_grid(&obs, &grid))
                            .map_err(|e| e.to_string())
                    })
                    .collect()
            });
            msrc_time += start.elapsed();
        }
    }

    let mut rows = Vec::with_capacity(cfg.replications as usize * cfg.estimators.len());
    let mut runtimes = vec![Duration::ZERO; cfg.estimators.len()];
    for (i, rep) in reps.iter().enumerate() {
        let mut results = rep.results.iter();
        for (slot, &mode) in cfg.estimators.iter().enumerate() {
            let outcome = if mode == Mode::Msrc && wants_grid {
                let seed = Some(Seed::new(cfg.master_seed, i as u64));
                msrc_values[i]
                    .clone()
                    .map(|v| baseline_report(Mode::Msrc, v, cfg.n, seed))
            } else {
                let (m, out, t) = results.next().expect("one result per estimator");
                debug_assert_eq!(*m, mode);
                runtimes[slot] += *t;
                out.clone()
            };
            rows.push(RowRecord {
                replication: i as u64,
                mode,
                truth: truth.for_mode(mode),
                outcome,
            });
        }
    }
    if wants_grid {
        if let Some(slot) = cfg.estimators.iter().position(|&m| m == Mode::Msrc) {
            runtimes[slot] = msrc_time;
        }
    }

    let summaries = summarize(&cfg.estimators, &rows, &truth, cfg.n, &runtimes);

    let mut echo = cfg.echo();
    echo.push((
        "truth_covolatility".into(),
        format!("{:.16e}", truth.covolatility),
    ));
    echo.push((
        "truth_variance_x".into(),
        format!("{:.16e}", truth.variance_x),
    ));
    echo.push((
        "truth_variance_y".into(),
        format!("{:.16e}", truth.variance_y),
    ));

    Ok(McReport {
        n: cfg.n,
        replications: cfg.replications,
        echo,
        truth,
        rows,
        summaries,
        msrc_choice,
        msrc_grid: if wants_grid { grid } else { Vec::new() },
        warnings,
        simulation_time: reps.iter().map(|r| r.simulation_time).sum(),
    })
}

fn summarize(
    estimators: &[Mode],
    rows: &[RowRecord],
    truth: &Truth,
    n: usize,
    runtimes: &[Duration],
) -> Vec<EstimatorSummary> {
    estimators
        .iter()
        .enumerate()
        .map(|(slot, &mode)| {
            let mut values = Vec::new();
            let mut failures = 0;
            for r in rows.iter().filter(|r| r.mode == mode) {
                match &r.outcome {
                    Ok(e) => values.push(e.value),
                    Err(_) => failures += 1,
                }
            }
            EstimatorSummary::from_values(
                mode,
                truth.for_mode(mode),
                &values,
                failures,
                n,
                runtimes[slot],
            )
        })
        .collect()
}
