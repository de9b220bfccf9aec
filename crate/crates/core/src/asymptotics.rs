//! Limiting variance of the spectral covolatility estimator.
//!
//! The local variance is the reciprocal of `int_0^inf dz / f_1(z)` with
//! `f_1(z) = pi^4 z^4 + pi^2 z^2 A + B / 4`. Closed forms follow from the
//! residue theorem; an independent quadrature oracle checks them.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{NoiseCovariance, SpotMatrix, SpotPath};
use crate::quad::{adaptive_simpson, gauss_kronrod};

/// Below this relative distance `|A^2 - B| / B` the closed form switches to its expansion.
pub const BRANCH_SWITCH: f64 = 1e-9;

/// `Var(XY) = (1 + rho^2) sigma_X^2 sigma_Y^2` for a centred Gaussian pair.
pub fn gaussian_product_variance(sigma_x: f64, sigma_y: f64, rho: f64) -> f64 {
    (1.0 + rho * rho) * (sigma_x * sigma_y).powi(2)
}

/// `A`, `B` and the noise scale `(eta_X^2 eta_Y^2 + eta_XY^2)^{1/4}` at one point in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceTerms {
    pub a: f64,
    pub b: f64,
    pub scale: f64,
}

impl VarianceTerms {
    pub fn new(m: SpotMatrix, noise: &NoiseCovariance) -> Result<Self> {
        let p = noise.product_term();
        if !(p > 0.0) {
            return Err(Error::DegenerateInput(
                "noise covariance must be non-zero".into(),
            ));
        }
        let sp = p.sqrt();
        let a = (noise.eta_y_sq * m.vx + noise.eta_x_sq * m.vy + 2.0 * m.cov * noise.eta_xy) / sp;
        let b = 4.0 * (m.vx * m.vy + m.cov * m.cov);
        Ok(Self {
            a,
            b,
            scale: sp.sqrt(),
        })
    }

    pub fn from_vols(
        sigma_x: f64,
        sigma_y: f64,
        rho: f64,
        noise: &NoiseCovariance,
    ) -> Result<Self> {
        Self::new(SpotMatrix::from_vols(sigma_x, sigma_y, rho), noise)
    }

    pub fn quartic(&self) -> QuarticCoefficients {
        QuarticCoefficients::from_ab(self.a, self.b)
    }
}

/// `f(z) = quartic z^4 + quadratic z^2 + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub quartic: f64,
    pub quadratic: f64,
    pub constant: f64,
}

impl QuarticCoefficients {
    /// `f_1` with `pi^4 z^4 + pi^2 A z^2 + B / 4`.
    pub fn from_ab(a: f64, b: f64) -> Self {
        Self {
            quartic: PI.powi(4),
            quadratic: PI * PI * a,
            constant: 0.25 * b,
        }
    }

    /// `f_2(z) = pi^4 z^4 + 2 sigma^2 pi^2 z^2 + (1 + rho^2) sigma^4`.
    pub fn f2(rho: f64, sigma: f64) -> Self {
        Self {
            quartic: PI.powi(4),
            quadratic: 2.0 * sigma * sigma * PI * PI,
            constant: (1.0 + rho * rho) * sigma.powi(4),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let z2 = z * z;
        (self.quartic * z2 + self.quadratic) * z2 + self.constant
    }
}

/// `int_0^inf dz / f(z)` by `z = u / (1 - u)` and adaptive Gauss-Kronrod to absolute `tol`.
pub fn quadrature_oracle(coeffs: &QuarticCoefficients, tol: f64) -> Result<f64> {
    quadrature_oracle_with(coeffs, tol, 16)
}

/// As [`quadrature_oracle`] with a chosen number of initial panels.
pub fn quadrature_oracle_with(
    coeffs: &QuarticCoefficients,
    tol: f64,
    initial: usize,
) -> Result<f64> {
    let c = *coeffs;
    if !(c.quartic > 0.0 && c.constant > 0.0) {
        return Err(Error::DegenerateInput(
            "leading and constant coefficients must be positive".into(),
        ));
    }
    let integrand = move |u: f64| {
        let v = 1.0 - u;
        let (u2, v2) = (u * u, v * v);
        v2 / (c.quartic * u2 * u2 + c.quadratic * u2 * v2 + c.constant * v2 * v2)
    };
    gauss_kronrod(integrand, 0.0, 1.0, tol, initial, 200_000)
}

/// Square root with the branch in the closed upper half plane.
fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(Error::DegenerateInput(format!("B = {b} must be positive")));
    }
    if !(a > 0.0) {
        return Err(Error::DegenerateInput(format!("A = {a} must be positive")));
    }
    Ok(())
}

/// `int_0^inf dz / f_1(z)` in closed form, with roots taken in the upper half plane.
pub fn integral_f1_closed(a: f64, b: f64) -> Result<f64> {
    check_ab(a, b)?;
    let d = a * a - b;
    if d.abs() < BRANCH_SWITCH * b {
        return Ok(near_switch(a, d));
    }
    let cd = sqrt_upper(Complex64::new(d, 0.0));
    let sgn = d.signum();
    let left = sqrt_upper(Complex64::new(a, 0.0) + cd);
    let right = sqrt_upper(Complex64::new(a, 0.0) - cd);
    let value = (left - sgn * right) / (2f64.sqrt() * cd * b.sqrt());
    Ok(value.re)
}

/// First-order expansion in `d = A^2 - B` around the switch, at fixed `A`.
fn near_switch(a: f64, d: f64) -> f64 {
    (1.0 + 5.0 * d / (8.0 * a * a)) / (a * (2.0 * a).sqrt())
}

/// `int_0^inf dz / f_2(z)`.
pub fn integral_f2_closed(rho: f64, sigma: f64) -> f64 {
    if rho == 0.0 {
        return 1.0 / (4.0 * sigma.powi(3));
    }
    let arg = Complex64::new(-rho, 1.0).arg();
    (0.5 * (arg - FRAC_PI_2)).sin() / (2.0 * sigma.powi(3) * rho * (1.0 + rho * rho).powf(0.25))
}

/// Local variance `v = sqrt(2 (A^2 - B) B) / (sqrt(A + sqrt(A^2 - B)) - sgn(A^2 - B) sqrt(A - sqrt(A^2 - B)))`.
pub fn local_variance_terms(t: &VarianceTerms) -> Result<f64> {
    let (a, b) = (t.a, t.b);
    check_ab(a, b)?;
    let d = a * a - b;
    if d.abs() < BRANCH_SWITCH * b {
        return Ok(near_switch(a, d).recip());
    }
    let cd = sqrt_upper(Complex64::new(d, 0.0));
    let sgn = d.signum();
    let numer = sqrt_upper(Complex64::new(2.0 * d * b, 0.0));
    let denom =
        sqrt_upper(Complex64::new(a, 0.0) + cd) - sgn * sqrt_upper(Complex64::new(a, 0.0) - cd);
    Ok((numer / denom).re)
}

pub fn local_variance(
    sigma_x: f64,
    sigma_y: f64,
    rho: f64,
    noise: &NoiseCovariance,
) -> Result<f64> {
    local_variance_terms(&VarianceTerms::from_vols(sigma_x, sigma_y, rho, noise)?)
}

pub fn local_variance_matrix(m: SpotMatrix, noise: &NoiseCovariance) -> Result<f64> {
    local_variance_terms(&VarianceTerms::new(m, noise)?)
}

/// `(eta_X^2 eta_Y^2 + eta_XY^2)^{1/4} int_0^1 v_s ds`, the variance in the `n^{1/4}` normalization.
pub fn clt_variance(path: &SpotPath, noise: &NoiseCovariance, quad_points: usize) -> Result<f64> {
    clt_variance_fn(|t| path.spot_matrix(t), noise, quad_points)
}

/// As [`clt_variance`] for an arbitrary spot-matrix function.
pub fn clt_variance_fn<F: Fn(f64) -> SpotMatrix>(
    spot: F,
    noise: &NoiseCovariance,
    quad_points: usize,
) -> Result<f64> {
    let scale = VarianceTerms::new(SpotMatrix::new(1.0, 1.0, 0.0), noise)?.scale;
    // probe once so that invalid inputs surface as errors rather than NaN
    local_variance_matrix(spot(0.5), noise)?;
    let v = adaptive_simpson(
        |t| local_variance_matrix(spot(t), noise).unwrap_or(f64::NAN),
        0.0,
        1.0,
        1e-12,
        quad_points.max(3),
    );
    if !v.is_finite() {
        return Err(Error::DegenerateInput(
            "local variance undefined somewhere on [0, 1]".into(),
        ));
    }
    Ok(scale * v)
}

/// Minimizer `c = ((-C + sqrt(C^2 + 12 N D)) / (6 N))^{-1/2}` of `N c^-3 + D c + C c^-1`.
pub fn tuning_constant(n: f64, d: f64, c: f64) -> Result<f64> {
    if !(n > 0.0 && d > 0.0) {
        return Err(Error::NonPositiveInputs(format!("N = {n}, D = {d}")));
    }
    Ok(((-c + (c * c + 12.0 * n * d).sqrt()) / (6.0 * n)).powf(-0.5))
}

/// `N c^-3 + D c + C c^-1`.
pub fn tradeoff_objective(n: f64, d: f64, c_cross: f64, c: f64) -> f64 {
    n / c.powi(3) + d * c + c_cross / c
}
