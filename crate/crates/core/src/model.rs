//! Data-generating process: spot volatility and correlation paths, noise
//! covariance, sampling schemes and block geometry, plus exact ground-truth
//! functionals of a path.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Absolute tolerance for ground-truth integrals.
pub const TRUTH_TOL: f64 = 1e-13;

pub type PathFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Symmetric 2x2 spot covariance `[[vx, cov], [cov, vy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotMatrix {
    pub vx: f64,
    pub vy: f64,
    pub cov: f64,
}

impl SpotMatrix {
    pub fn new(vx: f64, vy: f64, cov: f64) -> Self {
        Self { vx, vy, cov }
    }

    pub fn from_vols(sigma_x: f64, sigma_y: f64, rho: f64) -> Self {
        Self {
            vx: sigma_x * sigma_x,
            vy: sigma_y * sigma_y,
            cov: rho * sigma_x * sigma_y,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.vx + self.vy);
        let half_diff = 0.5 * (self.vx - self.vy);
        let radius = half_diff.hypot(self.cov);
        (mean - radius, mean + radius)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            vx: self.vx * c,
            vy: self.vy * c,
            cov: self.cov * c,
        }
    }
}

/// Deterministic spot volatilities and correlation on `[0, 1]`.
#[derive(Clone)]
pub struct SpotPath {
    sigma_x: PathFn,
    sigma_y: PathFn,
    rho: PathFn,
    /// Free-text smoothness descriptor; not checked.
    pub holder_note: String,
    /// Grid resolution when the path was built from tabulated values.
    pub tabulated_resolution: Option<usize>,
}

impl fmt::Debug for SpotPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpotPath")
            .field("holder_note", &self.holder_note)
            .field("tabulated_resolution", &self.tabulated_resolution)
            .finish_non_exhaustive()
    }
}

impl SpotPath {
    pub fn from_fns<X, Y, R>(sigma_x: X, sigma_y: Y, rho: R, holder_note: impl Into<String>) -> Self
    where
        X: Fn(f64) -> f64 + Send + Sync + 'static,
        Y: Fn(f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            sigma_x: Arc::new(sigma_x),
            sigma_y: Arc::new(sigma_y),
            rho: Arc::new(rho),
            holder_note: holder_note.into(),
            tabulated_resolution: None,
        }
    }

    pub fn constant(sigma_x: f64, sigma_y: f64, rho: f64) -> Self {
        Self::from_fns(move |_| sigma_x, move |_| sigma_y, move |_| rho, "constant")
    }

    /// Path given on a strictly increasing grid covering `[0, 1]`, linearly interpolated.
    pub fn tabulated(
        grid: Vec<f64>,
        sigma_x: Vec<f64>,
        sigma_y: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let len = grid.len();
        if len < 2 || sigma_x.len() != len || sigma_y.len() != len || rho.len() != len {
            return Err(Error::InvalidPath(
                "tabulated columns must share a length >= 2".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(
                "tabulated grid must be strictly increasing".into(),
            ));
        }
        if grid[0] > 0.0 || grid[len - 1] < 1.0 {
            return Err(Error::InvalidPath(
                "tabulated grid must cover [0, 1]".into(),
            ));
        }
        let grid = Arc::new(grid);
        let interp = |values: Vec<f64>| -> PathFn {
            let grid = Arc::clone(&grid);
            Arc::new(move |t: f64| linear_interp(&grid, &values, t))
        };
        let path = Self {
            sigma_x: interp(sigma_x),
            sigma_y: interp(sigma_y),
            rho: interp(rho),
            holder_note: "tabulated, piecewise linear".into(),
            tabulated_resolution: Some(len),
        };
        path.validate(len.max(2))?;
        Ok(path)
    }

    pub fn sigma_x(&self, t: f64) -> f64 {
        (self.sigma_x)(t)
    }

    pub fn sigma_y(&self, t: f64) -> f64 {
        (self.sigma_y)(t)
    }

    pub fn rho(&self, t: f64) -> f64 {
        (self.rho)(t)
    }

    pub fn covolatility(&self, t: f64) -> f64 {
        self.rho(t) * self.sigma_x(t) * self.sigma_y(t)
    }

    pub fn spot_matrix(&self, t: f64) -> SpotMatrix {
        SpotMatrix::from_vols(self.sigma_x(t), self.sigma_y(t), self.rho(t))
    }

    /// Same volatilities with a replaced correlation function.
    pub fn with_rho<R: Fn(f64) -> f64 + Send + Sync + 'static>(&self, rho: R) -> Self {
        Self {
            rho: Arc::new(rho),
            ..self.clone()
        }
    }

    /// Checks positivity and `|rho| <= 1` at the midpoints of `points` equal cells.
    pub fn validate(&self, points: usize) -> Result<()> {
        let points = points.max(1);
        for i in 0..points {
            let t = (i as f64 + 0.5) / points as f64;
            let (sx, sy, r) = (self.sigma_x(t), self.sigma_y(t), self.rho(t));
            if !(sx > 0.0 && sy > 0.0) {
                return Err(Error::InvalidPath(format!(
                    "non-positive volatility at t = {t}"
                )));
            }
            if !(r.abs() <= 1.0) {
                return Err(Error::InvalidPath(format!("|rho| > 1 at t = {t}")));
            }
        }
        Ok(())
    }
}

fn linear_interp(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = grid.partition_point(|&g| g <= t);
    if idx == 0 {
        return values[0];
    }
    if idx >= grid.len() {
        return values[grid.len() - 1];
    }
    let (g0, g1) = (grid[idx - 1], grid[idx]);
    let w = (t - g0) / (g1 - g0);
    values[idx - 1] + w * (values[idx] - values[idx - 1])
}

/// The two designs of the simulation study.
pub mod presets {
    use super::SpotPath;
    use std::f64::consts::PI;

    /// Constant volatilities 1, correlation 1/2.
    pub fn parametric() -> SpotPath {
        SpotPath::constant(1.0, 1.0, 0.5)
    }

    pub fn timevarying_sigma_x(t: f64) -> f64 {
        0.1 - 0.08 * (PI * t).sin()
    }

    pub fn timevarying_sigma_y(t: f64) -> f64 {
        0.15 - 0.07 * (6.0 / 7.0 * PI * t).sin()
    }

    pub fn timevarying_rho(t: f64) -> f64 {
        0.5 + 0.01 * (PI * t).sin()
    }

    /// Intraday-shaped volatilities with slowly varying correlation.
    pub fn timevarying() -> SpotPath {
        SpotPath::from_fns(
            timevarying_sigma_x,
            timevarying_sigma_y,
            timevarying_rho,
            "analytic",
        )
    }
}

/// Covariance of the i.i.d. Gaussian observation errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCovariance {
    pub eta_x_sq: f64,
    pub eta_y_sq: f64,
    pub eta_xy: f64,
}

impl NoiseCovariance {
    pub fn new(eta_x_sq: f64, eta_y_sq: f64, eta_xy: f64) -> Result<Self> {
        let h = Self {
            eta_x_sq,
            eta_y_sq,
            eta_xy,
        };
        h.check()?;
        Ok(h)
    }

    /// From standard deviations and the cross covariance.
    pub fn from_std(eta_x: f64, eta_y: f64, eta_xy: f64) -> Result<Self> {
        Self::new(eta_x * eta_x, eta_y * eta_y, eta_xy)
    }

    pub fn zero() -> Self {
        Self {
            eta_x_sq: 0.0,
            eta_y_sq: 0.0,
            eta_xy: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let Self {
            eta_x_sq,
            eta_y_sq,
            eta_xy,
        } = *self;
        if !(eta_x_sq >= 0.0 && eta_y_sq >= 0.0) || !eta_xy.is_finite() {
            return Err(Error::NotPsd(format!(
                "variances ({eta_x_sq}, {eta_y_sq}) must be >= 0"
            )));
        }
        let bound = eta_x_sq * eta_y_sq;
        // relative slack for the boundary eta_xy = eta_x * eta_y rounded from sqrt inputs
        if eta_xy * eta_xy > bound * (1.0 + 1e-12) {
            return Err(Error::NotPsd(format!(
                "eta_xy^2 = {} exceeds eta_x^2 eta_y^2 = {bound}",
                eta_xy * eta_xy
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.eta_x_sq == 0.0 && self.eta_y_sq == 0.0 && self.eta_xy == 0.0
    }

    /// `eta_x^2 eta_y^2 + eta_xy^2`, the noise part of the product variance.
    pub fn product_term(&self) -> f64 {
        self.eta_x_sq * self.eta_y_sq + self.eta_xy * self.eta_xy
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SpotMatrix::new(self.eta_x_sq, self.eta_y_sq, self.eta_xy).min_eigenvalue()
    }

    /// Nearest matrix with non-negative variances and `|eta_xy| <= eta_x eta_y`.
    pub fn clamped(eta_x_sq: f64, eta_y_sq: f64, eta_xy: f64) -> Self {
        let vx = eta_x_sq.max(0.0);
        let vy = eta_y_sq.max(0.0);
        let bound = (vx * vy).sqrt();
        Self {
            eta_x_sq: vx,
            eta_y_sq: vy,
            eta_xy: eta_xy.clamp(-bound, bound),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Equidistant,
    Quantile,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Equidistant => "equidistant",
            SchemeKind::Quantile => "quantile",
        })
    }
}

/// Observation times `t_i = F^{-1}(i / n)`.
#[derive(Clone)]
pub enum SamplingScheme {
    Equidistant,
    /// User-supplied quantile function and design density.
    Quantile {
        f_inverse: PathFn,
        f_prime: PathFn,
        label: String,
    },
}

impl fmt::Debug for SamplingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingScheme::Equidistant => f.write_str("Equidistant"),
            SamplingScheme::Quantile { label, .. } => write!(f, "Quantile({label})"),
        }
    }
}

impl SamplingScheme {
    pub fn quantile<FI, FP>(f_inverse: FI, f_prime: FP, label: impl Into<String>) -> Self
    where
        FI: Fn(f64) -> f64 + Send + Sync + 'static,
        FP: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SamplingScheme::Quantile {
            f_inverse: Arc::new(f_inverse),
            f_prime: Arc::new(f_prime),
            label: label.into(),
        }
    }

    /// `F^{-1}(u) = u^p`, i.e. `F(t) = t^{1/p}`.
    pub fn power(p: f64) -> Self {
        Self::quantile(
            move |u: f64| u.powf(p),
            move |t: f64| t.powf(1.0 / p - 1.0) / p,
            format!("power({p})"),
        )
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SamplingScheme::Equidistant => SchemeKind::Equidistant,
            SamplingScheme::Quantile { .. } => SchemeKind::Quantile,
        }
    }

    pub fn quantile_fn(&self, u: f64) -> f64 {
        match self {
            SamplingScheme::Equidistant => u,
            SamplingScheme::Quantile { f_inverse, .. } => f_inverse(u),
        }
    }

    /// `(F^{-1})'(u) = 1 / F'(F^{-1}(u))`.
    pub fn quantile_derivative(&self, u: f64) -> f64 {
        match self {
            SamplingScheme::Equidistant => 1.0,
            SamplingScheme::Quantile {
                f_inverse, f_prime, ..
            } => 1.0 / f_prime(f_inverse(u)),
        }
    }

    /// Observation times for `n` increments; endpoints pinned to 0 and 1.
    pub fn times(&self, n: usize) -> Result<Vec<f64>> {
        let mut times: Vec<f64> = (0..=n)
            .map(|i| self.quantile_fn(i as f64 / n as f64))
            .collect();
        times[0] = 0.0;
        times[n] = 1.0;
        for i in 1..=n {
            if !(times[i] > times[i - 1]) {
                return Err(Error::NonMonotoneScheme {
                    at: i as f64 / n as f64,
                });
            }
        }
        Ok(times)
    }

    pub fn check_monotone(&self, points: usize) -> Result<()> {
        self.times(points.max(2)).map(|_| ())
    }
}

/// Path of the equidistantly observed, time-changed process:
/// `Sigma^F_s = Sigma_{F^{-1}(s)} (F^{-1})'(s)`.
pub fn quantile_transform(path: &SpotPath, scheme: &SamplingScheme) -> Result<SpotPath> {
    if scheme.kind() == SchemeKind::Equidistant {
        return Ok(path.clone());
    }
    scheme.check_monotone(4096)?;
    let (p1, p2, p3) = (path.clone(), path.clone(), path.clone());
    let (s1, s2, s3) = (scheme.clone(), scheme.clone(), scheme.clone());
    let transformed = SpotPath {
        sigma_x: Arc::new(move |s| {
            p1.sigma_x(s1.quantile_fn(s)) * s1.quantile_derivative(s).sqrt()
        }),
        sigma_y: Arc::new(move |s| {
            p2.sigma_y(s2.quantile_fn(s)) * s2.quantile_derivative(s).sqrt()
        }),
        rho: Arc::new(move |s| p3.rho(s3.quantile_fn(s))),
        holder_note: format!("{} (quantile-transformed)", path.holder_note),
        tabulated_resolution: path.tabulated_resolution,
    };
    transformed.validate(4096)?;
    Ok(transformed)
}

/// `int_0^1 rho_t sigma^X_t sigma^Y_t dt` by adaptive Simpson.
pub fn true_integrated_covolatility(path: &SpotPath, quad_points: usize) -> f64 {
    adaptive_simpson(
        |t| path.covolatility(t),
        0.0,
        1.0,
        TRUTH_TOL,
        quad_points.max(3),
    )
}

pub fn true_integrated_variance_x(path: &SpotPath, quad_points: usize) -> f64 {
    adaptive_simpson(
        |t| path.sigma_x(t).powi(2),
        0.0,
        1.0,
        TRUTH_TOL,
        quad_points.max(3),
    )
}

pub fn true_integrated_variance_y(path: &SpotPath, quad_points: usize) -> f64 {
    adaptive_simpson(
        |t| path.sigma_y(t).powi(2),
        0.0,
        1.0,
        TRUTH_TOL,
        quad_points.max(3),
    )
}

/// Integrated spot matrix when the path is frozen at block left endpoints.
pub fn blockwise_integrated(path: &SpotPath, blocks: usize) -> SpotMatrix {
    let h = 1.0 / blocks as f64;
    (0..blocks).fold(SpotMatrix::new(0.0, 0.0, 0.0), |acc, k| {
        let m = path.spot_matrix(k as f64 * h);
        SpotMatrix::new(acc.vx + h * m.vx, acc.vy + h * m.vy, acc.cov + h * m.cov)
    })
}

/// Ground truth of an experiment: path, noise covariance and sampling scheme.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub path: SpotPath,
    pub noise: NoiseCovariance,
    pub scheme: SamplingScheme,
}

impl ModelSpec {
    pub fn new(path: SpotPath, noise: NoiseCovariance, scheme: SamplingScheme) -> Self {
        Self {
            path,
            noise,
            scheme,
        }
    }

    /// Path seen in tick time, the one the estimators target.
    pub fn tick_time_path(&self) -> Result<SpotPath> {
        quantile_transform(&self.path, &self.scheme)
    }
}

/// Block layout of the spectral statistics.
///
/// `blocks = 1/h`, `per_block = nh`, `cutoff = J`, `coarse = r/h`, `window = K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGeometry {
    pub n: usize,
    pub blocks: usize,
    pub per_block: usize,
    pub cutoff: usize,
    pub coarse: usize,
    pub window: usize,
}

impl BlockGeometry {
    pub fn new(
        n: usize,
        blocks: usize,
        cutoff: usize,
        coarse: usize,
        window: usize,
    ) -> Result<Self> {
        if n == 0 || blocks == 0 {
            return Err(Error::BadGeometry("n and 1/h must be positive".into()));
        }
        if n % blocks != 0 {
            return Err(Error::BadGeometry(format!(
                "n h = {n}/{blocks} is not an integer"
            )));
        }
        let per_block = n / blocks;
        if cutoff == 0 || cutoff > per_block {
            return Err(Error::BadGeometry(format!(
                "cutoff J = {cutoff} must lie in 1..={per_block}"
            )));
        }
        if coarse == 0 || coarse > blocks {
            return Err(Error::BadGeometry(format!(
                "r/h = {coarse} must lie in 1..={blocks}"
            )));
        }
        if window == 0 {
            return Err(Error::BadGeometry("pilot window K must be >= 1".into()));
        }
        Ok(Self {
            n,
            blocks,
            per_block,
            cutoff,
            coarse,
            window,
        })
    }

    /// All frequencies, `r = 3h`, `K = 5`.
    pub fn with_blocks(n: usize, blocks: usize) -> Result<Self> {
        let per_block = if blocks > 0 && n % blocks == 0 {
            n / blocks
        } else {
            1
        };
        Self::new(n, blocks, per_block, 3.min(blocks.max(1)), 5)
    }

    /// `1/h` near `sqrt(n) / ln n`, moved to the closest divisor of `n`.
    pub fn default_for(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadGeometry("n must be >= 2".into()));
        }
        let target = ((n as f64).sqrt() / (n as f64).ln()).round().max(1.0) as usize;
        let blocks = (1..=n)
            .filter(|d| n % d == 0)
            .min_by_key(|&d| (d.abs_diff(target), d))
            .unwrap_or(1);
        Self::with_blocks(n, blocks)
    }

    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        Self::new(self.n, self.blocks, cutoff, self.coarse, self.window)
    }

    pub fn with_pilot(self, coarse: usize, window: usize) -> Result<Self> {
        Self::new(self.n, self.blocks, self.cutoff, coarse, window)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.blocks as f64
    }

    pub fn r(&self) -> f64 {
        self.coarse as f64 / self.blocks as f64
    }

    /// Number of coarse segments `ceil(1/r)`.
    pub fn coarse_segments(&self) -> usize {
        self.blocks.div_ceil(self.coarse)
    }

    /// `ceil(sqrt(n) ln n)` capped at `nh`.
    pub fn fast_cutoff(&self) -> usize {
        let j = ((self.n as f64).sqrt() * (self.n as f64).ln()).ceil() as usize;
        j.clamp(1, self.per_block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    #[test]
    fn identity_transform_is_noop() {
        let path = presets::timevarying();
        let t = quantile_transform(&path, &SamplingScheme::power(1.0)).unwrap();
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            assert!((t.sigma_x(s) - path.sigma_x(s)).abs() < 1e-15);
            assert!((t.sigma_y(s) - path.sigma_y(s)).abs() < 1e-15);
            assert_eq!(t.rho(s), path.rho(s));
        }
    }

    #[test]
    fn square_quantile_transform() {
        let path = SpotPath::constant(1.0, 1.0, 0.5);
        let t = quantile_transform(&path, &SamplingScheme::power(2.0)).unwrap();
        for i in 1..=10 {
            let s = i as f64 / 10.0;
            assert!((t.sigma_x(s) - (2.0 * s).sqrt()).abs() < 1e-14);
            assert!((t.sigma_y(s) - (2.0 * s).sqrt()).abs() < 1e-14);
            assert_eq!(t.rho(s), 0.5);
        }
        let iv = adaptive_simpson(|s| t.sigma_x(s).powi(2), 0.0, 1.0, 1e-13, 8);
        assert!((iv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_preserves_integrated_covolatility() {
        let path = presets::timevarying();
        let truth = true_integrated_covolatility(&path, 16);
        for p in [1.5, 2.0, 3.0] {
            let t = quantile_transform(&path, &SamplingScheme::power(p)).unwrap();
            let v = true_integrated_covolatility(&t, 16);
            assert!((v - truth).abs() < 1e-9, "p = {p}: {v} vs {truth}");
        }
    }

    #[test]
    fn non_monotone_scheme_rejected() {
        let bad = SamplingScheme::quantile(|u: f64| (u - 0.5).abs(), |_| 1.0, "fold");
        let err = quantile_transform(&presets::parametric(), &bad).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneScheme { .. }));
    }

    #[test]
    fn ground_truth_values() {
        assert!(
            (true_integrated_covolatility(&SpotPath::constant(2.0, 1.0, 0.5), 3) - 1.0).abs()
                < 1e-14
        );
        assert_eq!(
            true_integrated_covolatility(&SpotPath::constant(0.3, 0.2, 0.0), 3),
            0.0
        );
        let tv = true_integrated_covolatility(&presets::timevarying(), 16);
        assert!((tv - 0.00269).abs() <= 1e-5, "{tv}");
    }

    #[test]
    fn ground_truth_agrees_with_dense_composite_rule() {
        let path = presets::timevarying();
        let dense = crate::quad::composite_simpson(|t| path.covolatility(t), 0.0, 1.0, 20_001);
        assert!((true_integrated_covolatility(&path, 3) - dense).abs() < 1e-10);
    }

    #[test]
    fn designs_are_uniformly_positive_definite() {
        for path in [presets::parametric(), presets::timevarying()] {
            let min = (0..=10_000)
                .map(|i| path.spot_matrix(i as f64 / 10_000.0).min_eigenvalue())
                .fold(f64::INFINITY, f64::min);
            assert!(min > 0.0);
        }
    }

    #[test]
    fn noise_covariance_checks() {
        assert!(NoiseCovariance::new(0.01, 0.01, 0.011).is_err());
        assert!(NoiseCovariance::new(-0.01, 0.01, 0.0).is_err());
        assert!(NoiseCovariance::from_std(0.1, 0.2, 0.1 * 0.2).is_ok());
        let c = NoiseCovariance::clamped(-1.0, 0.04, 0.3);
        assert_eq!(
            c,
            NoiseCovariance {
                eta_x_sq: 0.0,
                eta_y_sq: 0.04,
                eta_xy: 0.0
            }
        );
    }

    #[test]
    fn geometry_validation() {
        assert!(BlockGeometry::new(30_000, 30, 1000, 3, 5).is_ok());
        assert!(matches!(
            BlockGeometry::new(100, 30, 1, 1, 1),
            Err(Error::BadGeometry(_))
        ));
        assert!(BlockGeometry::new(100, 10, 11, 1, 1).is_err());
        assert!(BlockGeometry::new(100, 10, 10, 0, 1).is_err());
        let g = BlockGeometry::default_for(30_000).unwrap();
        assert_eq!(30_000 % g.blocks, 0);
        // sqrt(n) / ln n = 16.8; 17 does not divide 30000, 16 does
        assert_eq!(g.blocks, 16);
    }

    #[test]
    fn tabulated_path_interpolates() {
        let p = SpotPath::tabulated(
            vec![0.0, 0.5, 1.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0; 3],
            vec![0.0, 0.5, 0.0],
        )
        .unwrap();
        assert!((p.sigma_x(0.25) - 1.5).abs() < 1e-15);
        assert!((p.rho(0.75) - 0.25).abs() < 1e-15);
        assert_eq!(p.tabulated_resolution, Some(3));
        assert!(
            SpotPath::tabulated(vec![0.0, 0.5], vec![1.0; 2], vec![1.0; 2], vec![0.0; 2]).is_err()
        );
    }
}
