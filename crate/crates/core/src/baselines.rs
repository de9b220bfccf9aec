//! Realized covariance, subsampling and multi-scale realized covariance.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::estimators::{EstimateReport, Mode, NoiseSource, Tuning};
use crate::rng::Seed;
use crate::simulate::ObservationSet;

const CONSTRAINT_TOL: f64 = 1e-10;

/// `sum_l dX_l dY_l` over all `n` increments.
pub fn realized_covariance(obs: &ObservationSet) -> f64 {
    obs.x
        .windows(2)
        .zip(obs.y.windows(2))
        .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
        .sum()
}

/// Average over offsets `0..m` of the lag-`m` realized covariances,
/// `m^{-1} sum_{l=m}^{n} (X_l - X_{l-m})(Y_l - Y_{l-m})`.
pub fn subsampled_rc(obs: &ObservationSet, m: usize) -> Result<f64> {
    let n = obs.n();
    if m == 0 || m > n {
        return Err(Error::BadLag { lag: m, n });
    }
    let s: f64 = (m..=n)
        .map(|l| (obs.x[l] - obs.x[l - m]) * (obs.y[l] - obs.y[l - m]))
        .sum();
    Ok(s / m as f64)
}

/// `sum_{l=m}^{n} (X_l - X_{l-m})(Y_l - Y_{l-m})` for `m = 1..=max_lag`, via one correlation FFT.
pub fn lag_products(obs: &ObservationSet, max_lag: usize) -> Result<Vec<f64>> {
    let n = obs.n();
    if max_lag == 0 || max_lag > n {
        return Err(Error::BadLag { lag: max_lag, n });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&obs.x), mean(&obs.y));
    let x: Vec<f64> = obs.x.iter().map(|v| v - mx).collect();
    let y: Vec<f64> = obs.y.iter().map(|v| v - my).collect();

    let len = (2 * (n + 1)).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut fx: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(x.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    let mut fy: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(y.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    forward.process(&mut fx);
    forward.process(&mut fy);
    // corr[m] = sum_l X_{l+m} Y_l, and corr[len - m] = sum_l Y_{l+m} X_l
    let mut corr: Vec<Complex64> = fx.iter().zip(&fy).map(|(a, b)| a * b.conj()).collect();
    inverse.process(&mut corr);
    let scale = 1.0 / len as f64;

    let mut prefix = vec![0.0; n + 2];
    for l in 0..=n {
        prefix[l + 1] = prefix[l] + x[l] * y[l];
    }
    let range = |a: usize, b: usize| prefix[b + 1] - prefix[a];
    Ok((1..=max_lag)
        .map(|m| {
            let cross = (corr[m].re + corr[len - m].re) * scale;
            range(m, n) + range(0, n - m) - cross
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsrcTuning {
    Explicit,
    GridOracle,
}

/// Scale weights `a_1..a_M` of a multi-scale realized covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MsrcConfig {
    pub scales: usize,
    pub weights: Vec<f64>,
    pub tuned_by: MsrcTuning,
}

impl MsrcConfig {
    /// Quadratic-kernel weights `a_m = 12 (m/M^2)(m/M - 1/2 - 1/(2M)) / (1 - 1/M^2)`.
    pub fn quadratic(scales: usize) -> Result<Self> {
        if scales == 0 {
            return Err(Error::WeightConstraintViolation("M must be >= 1".into()));
        }
        Ok(Self {
            scales,
            weights: quadratic_weights(scales),
            tuned_by: MsrcTuning::Explicit,
        })
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            scales: weights.len(),
            weights,
            tuned_by: MsrcTuning::Explicit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// With `M = 1` the constraints cannot hold and are waived.
    pub fn is_degenerate(&self) -> bool {
        self.scales == 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 || self.weights.len() != self.scales {
            return Err(Error::WeightConstraintViolation(format!(
                "{} weights for M = {}",
                self.weights.len(),
                self.scales
            )));
        }
        if self.is_degenerate() {
            return if (self.weights[0] - 1.0).abs() <= CONSTRAINT_TOL {
                Ok(())
            } else {
                Err(Error::WeightConstraintViolation(
                    "M = 1 requires a_1 = 1".into(),
                ))
            };
        }
        let sum: f64 = self.weights.iter().sum();
        let harmonic: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, a)| a / (i + 1) as f64)
            .sum();
        if (sum - 1.0).abs() > CONSTRAINT_TOL || harmonic.abs() > CONSTRAINT_TOL {
            return Err(Error::WeightConstraintViolation(format!(
                "sum a_m = {sum:e}, sum a_m / m = {harmonic:e}"
            )));
        }
        Ok(())
    }
}

pub fn quadratic_weights(scales: usize) -> Vec<f64> {
    if scales == 1 {
        return vec![1.0];
    }
    let m = scales as f64;
    (1..=scales)
        .map(|i| {
            let i = i as f64;
            12.0 * (i / (m * m)) * (i / m - 0.5 - 0.5 / m) / (1.0 - 1.0 / (m * m))
        })
        .collect()
}

/// `sum_m a_m n/(n-m+1) RC(m)` from precomputed lag products.
///
/// The factor `n/(n-m+1)` restores the `n - m + 1` lag-`m` increments
/// to full length, so that `sum a_m / m = 0` cancels the noise bias exactly.
pub fn msrc_from_lag_products(lag_products: &[f64], weights: &[f64], n: usize) -> f64 {
    weights
        .iter()
        .zip(lag_products)
        .enumerate()
        .map(|(i, (a, s))| {
            let m = i + 1;
            a * s / m as f64 * n as f64 / (n - m + 1) as f64
        })
        .sum()
}

/// Report without a plug-in variance or interval.
pub fn baseline_report(mode: Mode, value: f64, n: usize, seed: Option<Seed>) -> EstimateReport {
    let tuning = Tuning {
        n,
        h_inv: 0,
        cutoff: 0,
        r_inv: 0.0,
        window: 0,
        seed,
        noise_source: NoiseSource::Known,
    };
    let mut r = EstimateReport::new(mode, value, f64::NAN, tuning);
    r.ci95 = (f64::NAN, f64::NAN);
    r
}

fn without_interval(mode: Mode, value: f64, obs: &ObservationSet) -> EstimateReport {
    baseline_report(mode, value, obs.n(), obs.meta.seed)
}

pub fn realized_report(obs: &ObservationSet) -> EstimateReport {
    without_interval(Mode::Realized, realized_covariance(obs), obs)
}

pub fn msrc(obs: &ObservationSet, cfg: &MsrcConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let n = obs.n();
    if cfg.scales > n {
        return Err(Error::BadLag { lag: cfg.scales, n });
    }
    let lags = lag_products(obs, cfg.scales)?;
    Ok(without_interval(
        Mode::Msrc,
        msrc_from_lag_products(&lags, &cfg.weights, n),
        obs,
    ))
}

/// Candidate scale counts `ceil(c sqrt(n))`, `c = 2^{k/4}` for `k` in `lo..=hi`, deduplicated and capped at `n`.
pub fn scale_grid(n: usize, lo: i32, hi: i32) -> Vec<usize> {
    let root = (n as f64).sqrt();
    let mut grid: Vec<usize> = (lo..=hi)
        .map(|k| ((2f64.powf(k as f64 / 4.0) * root).ceil() as usize).clamp(1, n))
        .collect();
    grid.dedup();
    grid
}

/// MSRC values for every grid entry, sharing one set of lag products.
pub fn msrc_on_grid(obs: &ObservationSet, grid: &[usize]) -> Result<Vec<f64>> {
    let n = obs.n();
    let max = grid.iter().copied().max().unwrap_or(1);
    let lags = lag_products(obs, max)?;
    Ok(grid
        .iter()
        .map(|&m| msrc_from_lag_products(&lags, &quadratic_weights(m), n))
        .collect())
}

/// Outcome of the MSE-minimizing choice of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridChoice {
    pub index: usize,
    pub scales: usize,
    pub mse: Vec<f64>,
    pub unimodal: bool,
    pub interior: bool,
}

/// Picks the grid entry with the smallest Monte Carlo MSE against `truth`.
/// `values[r][g]` is replication `r` evaluated at grid entry `g`.
pub fn select_grid_oracle(grid: &[usize], values: &[Vec<f64>], truth: f64) -> Result<GridChoice> {
    if grid.is_empty() || values.is_empty() {
        return Err(Error::DegenerateInput(
            "empty MSRC grid or no replications".into(),
        ));
    }
    let mse: Vec<f64> = (0..grid.len())
        .map(|g| {
            values
                .iter()
                .map(|row| (row[g] - truth).powi(2))
                .sum::<f64>()
                / values.len() as f64
        })
        .collect();
    let index = mse
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::DegenerateInput("MSRC MSE is not finite on the grid".into()))?;
    let unimodal = mse[..=index].windows(2).all(|w| w[0] >= w[1])
        && mse[index..].windows(2).all(|w| w[0] <= w[1]);
    let interior = index > 0 && index + 1 < grid.len();
    Ok(GridChoice {
        index,
        scales: grid[index],
        mse,
        unimodal,
        interior,
    })
}
