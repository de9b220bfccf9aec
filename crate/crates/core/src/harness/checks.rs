//! Numerical identity probes with their residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::asymptotics::{
    local_variance_terms, quadrature_oracle, QuarticCoefficients, VarianceTerms,
};
use crate::baselines::realized_covariance;
use crate::estimators::specv_uniform;
use crate::model::{BlockGeometry, NoiseCovariance, SamplingScheme, SpotPath};
use crate::rng::Seed;
use crate::simulate::{add_noise, ObservationSet, SignalPlan};
use crate::spectral::{compute_coefficients, orthogonality_residuals, sbp_residual};

pub const ORTHOGONALITY_SIZES: [usize; 4] = [4, 16, 100, 1000];
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_residual,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_residual < self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: max residual {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_residual,
            self.tolerance
        )
    }
}

/// `(o1, o2)` residuals on one block for every `nh`; `full` includes `j = nh`.
pub fn orthogonality(full: bool) -> (CheckResult, CheckResult) {
    let (mut o1, mut o2) = (0.0f64, 0.0f64);
    for nh in ORTHOGONALITY_SIZES {
        let r = orthogonality_residuals(nh, 1, 0);
        if full {
            o1 = o1.max(r.o1_full);
            o2 = o2.max(r.o2_full);
        } else {
            o1 = o1.max(r.o1_interior);
            o2 = o2.max(r.o2_interior);
        }
    }
    let suffix = if full { "j,r <= nh" } else { "j,r < nh" };
    (
        CheckResult::new(format!("o1 ({suffix})"), o1, IDENTITY_TOL),
        CheckResult::new(format!("o2 ({suffix})"), o2, IDENTITY_TOL),
    )
}

fn random_levels(rng: &mut ChaCha12Rng, n: usize) -> ObservationSet {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let x = (0..=n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect();
    let y = (0..=n)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect();
    ObservationSet::from_values(x, y).expect("equal lengths")
}

/// Summation by parts on `cases` random series, relative to `max |Y|`.
pub fn summation_by_parts(cases: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let blocks = rng.random_range(1..=5);
        let nh = rng.random_range(2..=120);
        let obs = random_levels(&mut rng, blocks * nh);
        let g = BlockGeometry::with_blocks(blocks * nh, blocks).expect("valid geometry");
        let scale = obs.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..blocks {
            for j in 1..=nh {
                worst = worst.max(sbp_residual(&obs, &g, j, k) / scale);
            }
        }
    }
    CheckResult::new("summation by parts", worst, IDENTITY_TOL)
}

/// Uniform-weight estimator versus realized covariance on noiseless paths.
/// `interior` compares with the sum over block-interior increments only.
pub fn parseval(cases: usize, seed: u64, interior: bool) -> CheckResult {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..cases {
        let blocks = rng.random_range(1..=6);
        let nh = rng.random_range(2..=200);
        let n = blocks * nh;
        let path = SpotPath::constant(
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(-0.95..0.95),
        );
        let plan = SignalPlan::smooth(&path, n, &SamplingScheme::Equidistant).expect("valid plan");
        let s = Seed::new(seed, i as u64);
        let obs = add_noise(plan.sample(s), &NoiseCovariance::zero(), s).expect("noiseless");
        let g = BlockGeometry::with_blocks(n, blocks).expect("valid geometry");
        let coeffs = compute_coefficients(&obs, &g).expect("coefficients");
        let spectral = specv_uniform(&coeffs, &NoiseCovariance::zero());
        let reference = if interior {
            (1..=n)
                .filter(|l| l % nh != 0)
                .map(|l| (obs.x[l] - obs.x[l - 1]) * (obs.y[l] - obs.y[l - 1]))
                .sum::<f64>()
        } else {
            realized_covariance(&obs)
        };
        let denom = (1..=n)
            .map(|l| ((obs.x[l] - obs.x[l - 1]) * (obs.y[l] - obs.y[l - 1])).abs())
            .sum::<f64>();
        worst = worst.max((spectral - reference).abs() / denom);
    }
    let name = if interior {
        "Parseval (block-interior increments)"
    } else {
        "Parseval (full realized covariance)"
    };
    CheckResult::new(name, worst, IDENTITY_TOL)
}

/// `(A, B)` pairs: a 20 x 20 grid on `[0.1, 10]^2` plus points with `|A^2 - B| / B` in `{1e-6, 1e-3}`.
pub fn reference_ab_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..20 {
        for k in 0..20 {
            out.push((0.1 + 9.9 * i as f64 / 19.0, 0.1 + 9.9 * k as f64 / 19.0));
        }
    }
    for b in [0.5f64, 1.0, 4.0, 9.0] {
        for gap in [1e-6, -1e-6, 1e-3, -1e-3] {
            out.push(((b + gap * b).sqrt(), b));
        }
    }
    out
}

/// `v * int 1/f_1 = 1` with `v` from the closed form and the integral by quadrature.
pub fn reciprocity() -> CheckResult {
    let mut worst = 0.0f64;
    for (a, b) in reference_ab_grid() {
        let v = local_variance_terms(&VarianceTerms { a, b, scale: 1.0 }).expect("positive B");
        let integral =
            quadrature_oracle(&QuarticCoefficients::from_ab(a, b), 1e-13 / v).expect("quadrature");
        worst = worst.max((v * integral - 1.0).abs());
    }
    CheckResult::new("reciprocity", worst, IDENTITY_TOL)
}

/// Identities that hold exactly and gate the `check` command.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let (o1, o2) = orthogonality(false);
    vec![
        o1,
        o2,
        summation_by_parts(100, seed),
        parseval(100, seed, true),
        reciprocity(),
    ]
}

/// The same relations over the full index range, where `j = nh` degenerates.
pub fn degenerate_range_checks(seed: u64) -> Vec<CheckResult> {
    let (o1, o2) = orthogonality(true);
    vec![o1, o2, parseval(100, seed, false)]
}
