//! Noise covariance estimation, pilot spot estimates, variance-optimal
//! weights and the spectral estimators of integrated (co)volatility.

use std::fmt;
use std::io::Write;

use crate::asymptotics::{clt_variance, local_variance_matrix};
use crate::error::{Error, Result};
use crate::model::{BlockGeometry, NoiseCovariance, SpotMatrix, SpotPath};
use crate::rng::Seed;
use crate::simulate::ObservationSet;
use crate::spectral::{SpectralCoefficients, SpectralPlan};

/// Floor for pilot spot variances and eigenvalues.
pub const PILOT_FLOOR: f64 = 1e-8;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseVariant {
    /// `(2n)^{-1} sum dX dY`; biased upwards by the signal.
    HalfQuadratic,
    /// `-n^{-1} sum dY_l dX_{l+1}`; free of signal bias.
    LagOne,
}

impl fmt::Display for NoiseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseVariant::HalfQuadratic => "half_quadratic",
            NoiseVariant::LagOne => "lag_one",
        })
    }
}

/// Noise covariance estimated from the observations, clamped to the PSD cone.
pub fn estimate_noise_covariance(
    obs: &ObservationSet,
    variant: NoiseVariant,
) -> Result<NoiseCovariance> {
    let n = obs.n();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let dx = obs.x_increments();
    let dy = obs.y_increments();
    let nf = n as f64;
    let (vx, vy, cxy) = match variant {
        NoiseVariant::HalfQuadratic => {
            let s = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / (2.0 * nf)
            };
            (s(&dx, &dx), s(&dy, &dy), s(&dx, &dy))
        }
        NoiseVariant::LagOne => {
            let s =
                |a: &[f64], b: &[f64]| -a.iter().zip(&b[1..]).map(|(u, v)| u * v).sum::<f64>() / nf;
            (s(&dx, &dx), s(&dy, &dy), s(&dy, &dx))
        }
    };
    Ok(NoiseCovariance::clamped(vx, vy, cxy))
}

/// `I_j^{-1}`, the variance of `||Phi_j||^{-2} x_j y_j` for spot matrix `m`.
pub fn frequency_variance(m: SpotMatrix, noise: &NoiseCovariance, norm_sq: f64, n: usize) -> f64 {
    let nf = n as f64;
    let inv = 1.0 / norm_sq;
    inv * inv * noise.product_term() / (nf * nf)
        + (m.vx * m.vy + m.cov * m.cov)
        + inv / nf * (m.vx * noise.eta_y_sq + m.vy * noise.eta_x_sq + 2.0 * m.cov * noise.eta_xy)
}

/// Variance of `||Phi_j||^{-2} x_j^2`, i.e. `2 (sigma^2 + ||Phi_j||^{-2} eta^2 / n)^2`.
pub fn frequency_variance_univariate(var: f64, eta_sq: f64, norm_sq: f64, n: usize) -> f64 {
    2.0 * (var + eta_sq / (norm_sq * n as f64)).powi(2)
}

fn normalize(precision: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = precision.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(precision.iter().map(|p| p / total).collect())
}

fn precisions(variances: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    let v: Vec<f64> = variances.collect();
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(v.iter().map(|&x| 1.0 / x).collect())
}

/// Weights `w_j = I_j / sum_r I_r` and precisions `I_j` for one block.
pub fn oracle_weight_row(
    m: SpotMatrix,
    noise: &NoiseCovariance,
    geometry: &BlockGeometry,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = geometry;
    let precision = precisions((1..=g.cutoff).map(|j| {
        let norm = crate::spectral::empirical_norm_sq(j, g.n, g.blocks);
        frequency_variance(m, noise, norm, g.n)
    }))?;
    let w = normalize(precision.clone())?;
    Ok((w, precision))
}

/// Variance-optimal weights for spot volatilities `sigma_x`, `sigma_y` and correlation `rho`.
pub fn oracle_weights(
    sigma_x: f64,
    sigma_y: f64,
    rho: f64,
    noise: &NoiseCovariance,
    geometry: &BlockGeometry,
) -> Result<Vec<f64>> {
    Ok(oracle_weight_row(
        SpotMatrix::from_vols(sigma_x, sigma_y, rho),
        noise,
        geometry,
    )?
    .0)
}

/// Optimal weights for the univariate statistics `x_j^2`.
pub fn univariate_weight_row(
    var: f64,
    eta_sq: f64,
    geometry: &BlockGeometry,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = geometry;
    let precision = precisions((1..=g.cutoff).map(|j| {
        let norm = crate::spectral::empirical_norm_sq(j, g.n, g.blocks);
        frequency_variance_univariate(var, eta_sq, norm, g.n)
    }))?;
    let w = normalize(precision.clone())?;
    Ok((w, precision))
}

/// Per-block weights and the precisions they are proportional to.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub geometry: BlockGeometry,
    pub w: Vec<Vec<f64>>,
    pub precision: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn from_spot<F: Fn(usize) -> SpotMatrix>(
        spot: F,
        noise: &NoiseCovariance,
        geometry: &BlockGeometry,
    ) -> Result<Self> {
        let mut w = Vec::with_capacity(geometry.blocks);
        let mut precision = Vec::with_capacity(geometry.blocks);
        for k in 0..geometry.blocks {
            let (row, prec) = oracle_weight_row(spot(k), noise, geometry)?;
            w.push(row);
            precision.push(prec);
        }
        Ok(Self {
            geometry: *geometry,
            w,
            precision,
        })
    }

    pub fn uniform(geometry: &BlockGeometry) -> Self {
        let row = vec![1.0 / geometry.cutoff as f64; geometry.cutoff];
        Self {
            geometry: *geometry,
            w: vec![row.clone(); geometry.blocks],
            precision: vec![vec![1.0; geometry.cutoff]; geometry.blocks],
        }
    }

    /// Weight on frequency 1 only.
    pub fn first_frequency(geometry: &BlockGeometry) -> Self {
        let mut row = vec![0.0; geometry.cutoff];
        row[0] = 1.0;
        Self {
            geometry: *geometry,
            w: vec![row.clone(); geometry.blocks],
            precision: vec![row; geometry.blocks],
        }
    }

    fn univariate<F: Fn(usize) -> f64>(
        var: F,
        eta_sq: f64,
        geometry: &BlockGeometry,
    ) -> Result<Self> {
        let mut w = Vec::with_capacity(geometry.blocks);
        let mut precision = Vec::with_capacity(geometry.blocks);
        for k in 0..geometry.blocks {
            let (row, prec) = univariate_weight_row(var(k), eta_sq, geometry)?;
            w.push(row);
            precision.push(prec);
        }
        Ok(Self {
            geometry: *geometry,
            w,
            precision,
        })
    }
}

/// `sum_k h sum_j w_jk ||Phi_j||^{-2} (product(k, j) - bias)`.
pub fn weighted_sum<P: Fn(usize, usize) -> f64>(
    coeffs: &SpectralCoefficients,
    weights: &WeightTable,
    bias: f64,
    product: P,
) -> f64 {
    let g = &coeffs.geometry;
    let h = g.h();
    let mut total = 0.0;
    for k in 0..g.blocks {
        let row = &weights.w[k];
        let mut block = 0.0;
        for j in 1..=g.cutoff {
            block += row[j - 1] * (product(k, j) - bias) / coeffs.norm_sq(j);
        }
        total += h * block;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClampReport {
    /// Pilot matrices changed by eigenvalue clipping.
    pub psd_corrections: usize,
    /// Coarse points whose covolatility sign differs from the global pilot.
    pub wrong_sign: usize,
}

/// Pilot spot matrices on the coarse grid `l r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotEstimate {
    pub grid: Vec<f64>,
    pub sigma_x_sq_hat: Vec<f64>,
    pub sigma_y_sq_hat: Vec<f64>,
    pub covol_hat: Vec<f64>,
    pub window: usize,
    pub clamp_report: ClampReport,
    pub(crate) coarse: usize,
}

impl SpotEstimate {
    pub fn matrix(&self, l: usize) -> SpotMatrix {
        SpotMatrix::new(
            self.sigma_x_sq_hat[l],
            self.sigma_y_sq_hat[l],
            self.covol_hat[l],
        )
    }

    /// Pilot attached to block `k`, i.e. at `floor(kh)_r`.
    pub fn block_matrix(&self, k: usize) -> SpotMatrix {
        self.matrix(k / self.coarse)
    }
}

/// Nearest matrix with eigenvalues at least `floor`.
pub fn clip_eigenvalues(m: SpotMatrix, floor: f64) -> (SpotMatrix, bool) {
    let (lo, hi) = m.eigenvalues();
    if lo >= floor && m.vx >= floor && m.vy >= floor {
        return (m, false);
    }
    let theta = 0.5 * (2.0 * m.cov).atan2(m.vx - m.vy);
    let (s, c) = theta.sin_cos();
    let (lo, hi) = (lo.max(floor), hi.max(floor));
    let clipped = SpotMatrix::new(
        hi * c * c + lo * s * s,
        hi * s * s + lo * c * c,
        (hi - lo) * s * c,
    );
    (clipped, true)
}

/// Block indices of the pilot window around coarse point `l`.
pub fn pilot_window(l: usize, geometry: &BlockGeometry) -> std::ops::RangeInclusive<usize> {
    let centre = (l * geometry.coarse) as isize;
    let lo = centre - (geometry.window / 2) as isize;
    let hi = lo + geometry.window as isize - 1;
    let lo = lo.max(0) as usize;
    let hi = (hi.min(geometry.blocks as isize - 1)).max(0) as usize;
    lo..=hi
}

/// Smoothed first-frequency pilot of the spot matrix, clipped to be positive definite.
pub fn spot_pilot(
    coeffs: &SpectralCoefficients,
    noise: &NoiseCovariance,
    geometry: &BlockGeometry,
) -> Result<SpotEstimate> {
    let g = geometry;
    if coeffs.geometry.blocks != g.blocks || coeffs.geometry.n != g.n {
        return Err(Error::BadGeometry(
            "pilot geometry differs from coefficient geometry".into(),
        ));
    }
    BlockGeometry::new(
        g.n,
        g.blocks,
        g.cutoff.min(coeffs.geometry.cutoff),
        g.coarse,
        g.window,
    )?;
    let nf = g.n as f64;
    let inv = 1.0 / coeffs.norm_sq(1);
    let raw: Vec<SpotMatrix> = (0..g.blocks)
        .map(|k| {
            let (x, y) = (coeffs.x(k, 1), coeffs.y(k, 1));
            SpotMatrix::new(
                inv * (x * x - noise.eta_x_sq / nf),
                inv * (y * y - noise.eta_y_sq / nf),
                inv * (x * y - noise.eta_xy / nf),
            )
        })
        .collect();
    let overall = raw.iter().map(|m| m.cov).sum::<f64>();
    let segments = g.coarse_segments();
    let mut out = SpotEstimate {
        grid: Vec::with_capacity(segments),
        sigma_x_sq_hat: Vec::with_capacity(segments),
        sigma_y_sq_hat: Vec::with_capacity(segments),
        covol_hat: Vec::with_capacity(segments),
        window: g.window,
        clamp_report: ClampReport::default(),
        coarse: g.coarse,
    };
    for l in 0..segments {
        let win = pilot_window(l, g);
        let size = win.clone().count() as f64;
        let (mut vx, mut vy, mut c) = (0.0, 0.0, 0.0);
        for k in win {
            vx += raw[k].vx;
            vy += raw[k].vy;
            c += raw[k].cov;
        }
        let m = SpotMatrix::new(vx / size, vy / size, c / size);
        let (m, changed) = clip_eigenvalues(m, PILOT_FLOOR);
        if changed {
            out.clamp_report.psd_corrections += 1;
        }
        if m.cov * overall < 0.0 {
            out.clamp_report.wrong_sign += 1;
        }
        out.grid.push(l as f64 * g.r());
        out.sigma_x_sq_hat.push(m.vx);
        out.sigma_y_sq_hat.push(m.vy);
        out.covol_hat.push(m.cov);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Oracle,
    Adaptive,
    J1,
    SpevX,
    SpevY,
    Realized,
    Msrc,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Oracle,
        Mode::Adaptive,
        Mode::J1,
        Mode::SpevX,
        Mode::SpevY,
        Mode::Realized,
        Mode::Msrc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Adaptive => "adaptive",
            Mode::J1 => "j1",
            Mode::SpevX => "spev_x",
            Mode::SpevY => "spev_y",
            Mode::Realized => "realized",
            Mode::Msrc => "msrc",
        }
    }

    pub fn is_spectral(&self) -> bool {
        !matches!(self, Mode::Realized | Mode::Msrc)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let canonical = match s {
            "specv_oracle" => "oracle",
            "specv_adaptive" => "adaptive",
            "specv_j1" => "j1",
            "msrc_oracle" => "msrc",
            other => other,
        };
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == canonical)
            .ok_or_else(|| Error::Config(format!("unknown estimator mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    Known,
    Estimated(NoiseVariant),
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSource::Known => f.write_str("known"),
            NoiseSource::Estimated(v) => write!(f, "estimated:{v}"),
        }
    }
}

/// Where the noise covariance for an adaptive estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseInput {
    Known(NoiseCovariance),
    Estimate(NoiseVariant),
}

impl NoiseInput {
    pub fn resolve(&self, obs: &ObservationSet) -> Result<(NoiseCovariance, NoiseSource)> {
        match *self {
            NoiseInput::Known(h) => {
                h.check()?;
                Ok((h, NoiseSource::Known))
            }
            NoiseInput::Estimate(v) => Ok((
                estimate_noise_covariance(obs, v)?,
                NoiseSource::Estimated(v),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub n: usize,
    pub h_inv: usize,
    pub cutoff: usize,
    pub r_inv: f64,
    pub window: usize,
    pub seed: Option<Seed>,
    pub noise_source: NoiseSource,
}

impl Tuning {
    pub fn new(geometry: &BlockGeometry, seed: Option<Seed>, noise_source: NoiseSource) -> Self {
        Self {
            n: geometry.n,
            h_inv: geometry.blocks,
            cutoff: geometry.cutoff,
            r_inv: 1.0 / geometry.r(),
            window: geometry.window,
            seed,
            noise_source,
        }
    }
}

/// Point estimate with plug-in variance in the `n^{1/4}` normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub mode: Mode,
    pub value: f64,
    pub plugin_avar: f64,
    pub ci95: (f64, f64),
    pub tuning: Tuning,
    pub clamp_report: Option<ClampReport>,
}

impl EstimateReport {
    pub const CSV_HEADER: &'static str =
        "mode,value,plugin_avar,ci_lo,ci_hi,n,h_inv,J,r_inv,K,seed,noise_source";

    pub fn new(mode: Mode, value: f64, plugin_avar: f64, tuning: Tuning) -> Self {
        let half = Z95 * (plugin_avar / (tuning.n as f64).sqrt()).sqrt();
        Self {
            mode,
            value,
            plugin_avar,
            ci95: (value - half, value + half),
            tuning,
            clamp_report: None,
        }
    }

    pub fn csv_row(&self) -> String {
        let t = &self.tuning;
        let seed = t
            .seed
            .map(|s| format!("{}:{}", s.master, s.stream))
            .unwrap_or_default();
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{},{}",
            self.mode,
            self.value,
            self.plugin_avar,
            self.ci95.0,
            self.ci95.1,
            t.n,
            t.h_inv,
            t.cutoff,
            t.r_inv,
            t.window,
            seed,
            t.noise_source
        )
    }

    pub fn write_csv<W: Write>(reports: &[EstimateReport], mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in reports {
            writeln!(w, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// `sqrt(n) sum_k h^2 sum_j w_jk^2 Var_jk`: exact variance of a weighted spectral sum, rescaled.
fn blockwise_avar<V: Fn(usize, usize) -> f64>(weights: &WeightTable, variance: V) -> f64 {
    let g = &weights.geometry;
    let h = g.h();
    let mut total = 0.0;
    for k in 0..g.blocks {
        for j in 1..=g.cutoff {
            let w = weights.w[k][j - 1];
            if w != 0.0 {
                total += h * h * w * w * variance(k, j);
            }
        }
    }
    total * (g.n as f64).sqrt()
}

fn covariance_avar<F: Fn(usize) -> SpotMatrix>(
    coeffs: &SpectralCoefficients,
    weights: &WeightTable,
    noise: &NoiseCovariance,
    spot: F,
) -> f64 {
    let n = coeffs.geometry.n;
    blockwise_avar(weights, |k, j| {
        frequency_variance(spot(k), noise, coeffs.norm_sq(j), n)
    })
}

fn covariance_sum(
    coeffs: &SpectralCoefficients,
    weights: &WeightTable,
    noise: &NoiseCovariance,
) -> f64 {
    weighted_sum(
        coeffs,
        weights,
        noise.eta_xy / coeffs.geometry.n as f64,
        |k, j| coeffs.x(k, j) * coeffs.y(k, j),
    )
}

/// Oracle estimator with weights evaluated at the true `Sigma_{kh}`.
pub fn specv_oracle(
    coeffs: &SpectralCoefficients,
    path: &SpotPath,
    noise: &NoiseCovariance,
) -> Result<EstimateReport> {
    specv_oracle_seeded(coeffs, path, noise, None)
}

pub fn specv_oracle_seeded(
    coeffs: &SpectralCoefficients,
    path: &SpotPath,
    noise: &NoiseCovariance,
    seed: Option<Seed>,
) -> Result<EstimateReport> {
    let g = coeffs.geometry;
    let spot = |k: usize| path.spot_matrix(k as f64 * g.h());
    let weights = WeightTable::from_spot(spot, noise, &g)?;
    let value = covariance_sum(coeffs, &weights, noise);
    let avar = if noise.product_term() > 0.0 {
        clt_variance(path, noise, 16)?
    } else {
        covariance_avar(coeffs, &weights, noise, spot)
    };
    Ok(EstimateReport::new(
        Mode::Oracle,
        value,
        avar,
        Tuning::new(&g, seed, NoiseSource::Known),
    ))
}

/// Weighted sum with weights from a supplied spot-matrix function.
pub fn specv_with_spot<F: Fn(usize) -> SpotMatrix>(
    coeffs: &SpectralCoefficients,
    spot: F,
    noise: &NoiseCovariance,
) -> Result<f64> {
    let weights = WeightTable::from_spot(spot, noise, &coeffs.geometry)?;
    Ok(covariance_sum(coeffs, &weights, noise))
}

/// Uniform weights `1 / J`.
pub fn specv_uniform(coeffs: &SpectralCoefficients, noise: &NoiseCovariance) -> f64 {
    covariance_sum(coeffs, &WeightTable::uniform(&coeffs.geometry), noise)
}

/// `n^{1/4}`-normalized plug-in variance from the pilot.
fn pilot_avar(
    coeffs: &SpectralCoefficients,
    weights: &WeightTable,
    noise: &NoiseCovariance,
    pilot: &SpotEstimate,
) -> Result<f64> {
    if noise.product_term() > 0.0 {
        let g = &coeffs.geometry;
        let scale = noise.product_term().powf(0.25);
        let mut total = 0.0;
        for l in 0..pilot.grid.len() {
            let first = l * g.coarse;
            let last = ((l + 1) * g.coarse).min(g.blocks);
            let length = (last - first) as f64 * g.h();
            total += length * local_variance_matrix(pilot.matrix(l), noise)?;
        }
        Ok(scale * total)
    } else {
        Ok(covariance_avar(coeffs, weights, noise, |k| {
            pilot.block_matrix(k)
        }))
    }
}

/// Adaptive estimator from precomputed coefficients.
pub fn specv_adaptive_coeffs(
    coeffs: &SpectralCoefficients,
    obs: &ObservationSet,
    noise: NoiseInput,
) -> Result<EstimateReport> {
    let (h, source) = noise.resolve(obs)?;
    let g = coeffs.geometry;
    let pilot = spot_pilot(coeffs, &h, &g)?;
    let weights = WeightTable::from_spot(|k| pilot.block_matrix(k), &h, &g)?;
    let value = covariance_sum(coeffs, &weights, &h);
    let avar = pilot_avar(coeffs, &weights, &h, &pilot)?;
    let mut report = EstimateReport::new(
        Mode::Adaptive,
        value,
        avar,
        Tuning::new(&g, obs.meta.seed, source),
    );
    report.clamp_report = Some(pilot.clamp_report);
    Ok(report)
}

/// Coefficients, optional noise estimation, pilot, weights and weighted sum.
pub fn specv_adaptive(
    obs: &ObservationSet,
    geometry: &BlockGeometry,
    noise: NoiseInput,
) -> Result<EstimateReport> {
    let coeffs = SpectralPlan::new(*geometry).compute(obs)?;
    specv_adaptive_coeffs(&coeffs, obs, noise)
}

/// First-frequency estimator `h sum_k ||Phi_1||^{-2} (x_1k y_1k - eta_XY / n)`.
pub fn specv_j1(coeffs: &SpectralCoefficients, noise: &NoiseCovariance) -> Result<EstimateReport> {
    let g = coeffs.geometry;
    let weights = WeightTable::first_frequency(&g);
    let value = covariance_sum(coeffs, &weights, noise);
    let pilot = spot_pilot(coeffs, noise, &g)?;
    let avar = covariance_avar(coeffs, &weights, noise, |k| pilot.block_matrix(k));
    Ok(EstimateReport::new(
        Mode::J1,
        value,
        avar,
        Tuning::new(&g, None, NoiseSource::Known),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

/// Source of the spot variances inside univariate weights.
#[derive(Debug, Clone, Copy)]
pub enum SpotSource<'a> {
    Path(&'a SpotPath),
    Pilot,
}

/// Univariate spectral estimator of `int sigma^2` for one component.
pub fn spev(
    coeffs: &SpectralCoefficients,
    which: Component,
    spot: SpotSource<'_>,
    noise: &NoiseCovariance,
) -> Result<EstimateReport> {
    let g = coeffs.geometry;
    let eta_sq = match which {
        Component::X => noise.eta_x_sq,
        Component::Y => noise.eta_y_sq,
    };
    let pick = |m: SpotMatrix| match which {
        Component::X => m.vx,
        Component::Y => m.vy,
    };
    let (vars, clamp): (Vec<f64>, Option<ClampReport>) = match spot {
        SpotSource::Path(p) => (
            (0..g.blocks)
                .map(|k| pick(p.spot_matrix(k as f64 * g.h())))
                .collect(),
            None,
        ),
        SpotSource::Pilot => {
            let pilot = spot_pilot(coeffs, noise, &g)?;
            (
                (0..g.blocks).map(|k| pick(pilot.block_matrix(k))).collect(),
                Some(pilot.clamp_report),
            )
        }
    };
    let weights = WeightTable::univariate(|k| vars[k], eta_sq, &g)?;
    let series = |k: usize, j: usize| match which {
        Component::X => coeffs.x(k, j).powi(2),
        Component::Y => coeffs.y(k, j).powi(2),
    };
    let value = weighted_sum(coeffs, &weights, eta_sq / g.n as f64, series);
    let avar = blockwise_avar(&weights, |k, j| {
        frequency_variance_univariate(vars[k], eta_sq, coeffs.norm_sq(j), g.n)
    });
    let mode = match which {
        Component::X => Mode::SpevX,
        Component::Y => Mode::SpevY,
    };
    let mut report =
        EstimateReport::new(mode, value, avar, Tuning::new(&g, None, NoiseSource::Known));
    report.clamp_report = clamp;
    Ok(report)
}
