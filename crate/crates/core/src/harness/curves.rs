//! Asymptotic variance curves over the correlation.

use std::io::Write;

use crate::asymptotics::{clt_variance, tradeoff_objective, tuning_constant};
use crate::error::{Error, Result};
use crate::model::{NoiseCovariance, SpotPath};

/// User-supplied constants `(N, D, C)` of the MSRC variance `N c^-3 + D c + C c^-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsrcConstants {
    pub n: f64,
    pub d: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvarRow {
    pub rho: f64,
    pub specv_avar: f64,
    pub msrc_avar: Option<f64>,
}

/// Evenly spaced correlations on the open interval `(-1, 1)`.
pub fn rho_grid(points: usize) -> Vec<f64> {
    (1..=points)
        .map(|i| -1.0 + 2.0 * i as f64 / (points + 1) as f64)
        .collect()
}

pub fn avar_curve(
    rhos: &[f64],
    sigma_x: f64,
    sigma_y: f64,
    noise: &NoiseCovariance,
    msrc: Option<MsrcConstants>,
) -> Result<Vec<AvarRow>> {
    let msrc_avar = match msrc {
        Some(k) => {
            let c = tuning_constant(k.n, k.d, k.c)?;
            Some(tradeoff_objective(k.n, k.d, k.c, c))
        }
        None => None,
    };
    rhos.iter()
        .map(|&rho| {
            if !(rho.abs() < 1.0) {
                return Err(Error::DegenerateInput(format!(
                    "correlation {rho} outside (-1, 1)"
                )));
            }
            let path = SpotPath::constant(sigma_x, sigma_y, rho);
            Ok(AvarRow {
                rho,
                specv_avar: clt_variance(&path, noise, 3)?,
                msrc_avar,
            })
        })
        .collect()
}

pub fn write_avar_csv<W: Write>(rows: &[AvarRow], mut w: W) -> Result<()> {
    writeln!(w, "rho,specv_avar,msrc_avar")?;
    for r in rows {
        let m = r.msrc_avar.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(w, "{:.16e},{:.16e},{}", r.rho, r.specv_avar, m)?;
    }
    Ok(())
}
