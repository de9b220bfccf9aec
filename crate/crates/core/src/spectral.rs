//! Blockwise trigonometric basis, empirical scalar products and spectral
//! coefficients.
//!
//! On block `k = [kh, (k+1)h]` the basis is
//! `phi_jk(t) = sqrt(2/h) cos(j pi (t - kh) / h)` with the discretely
//! renormalized antiderivative
//! `Phi_jk(t) = sin(j pi (t - kh) / h) / (sqrt(2h) n sin(j pi / (2nh)))`.
//! Coefficients are `x_jk = sum_l dX_l Phi_jk(l/n)`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::BlockGeometry;
use crate::simulate::ObservationSet;

fn block_bounds(k: usize, blocks: usize) -> (f64, f64) {
    let h = 1.0 / blocks as f64;
    (k as f64 * h, (k + 1) as f64 * h)
}

/// `phi_jk(t)`; zero outside block `k` of `blocks` equal blocks.
pub fn phi(j: usize, k: usize, blocks: usize, t: f64) -> f64 {
    let (lo, hi) = block_bounds(k, blocks);
    if t < lo || t > hi {
        return 0.0;
    }
    let h = 1.0 / blocks as f64;
    (2.0 / h).sqrt() * (j as f64 * PI * (t - lo) / h).cos()
}

/// `Phi_jk(t)` for `n` observations; zero outside block `k`.
pub fn phi_antiderivative(j: usize, k: usize, blocks: usize, n: usize, t: f64) -> f64 {
    let (lo, hi) = block_bounds(k, blocks);
    if t < lo || t > hi {
        return 0.0;
    }
    let h = 1.0 / blocks as f64;
    (j as f64 * PI * (t - lo) / h).sin() * antiderivative_scale(j, n, blocks)
}

/// `1 / (sqrt(2h) n sin(j pi / (2nh)))`.
fn antiderivative_scale(j: usize, n: usize, blocks: usize) -> f64 {
    let h = 1.0 / blocks as f64;
    let per_block = (n / blocks) as f64;
    1.0 / ((2.0 * h).sqrt() * n as f64 * (j as f64 * PI / (2.0 * per_block)).sin())
}

/// `||Phi_jk||_n^2 = (4 n^2 sin^2(j pi / (2nh)))^{-1}`, the same on every block.
pub fn empirical_norm_sq(j: usize, n: usize, blocks: usize) -> f64 {
    let per_block = (n / blocks) as f64;
    let s = (j as f64 * PI / (2.0 * per_block)).sin();
    1.0 / (4.0 * (n as f64).powi(2) * s * s)
}

/// `<f, g>_n = n^{-1} sum_{l=1}^n f(l/n) g(l/n)`.
pub fn scalar_product<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, g: G, n: usize) -> f64 {
    (1..=n)
        .map(|l| f(l as f64 / n as f64) * g(l as f64 / n as f64))
        .sum::<f64>()
        / n as f64
}

/// `[f, g]_n = n^{-1} sum_{l=1}^n f((l - 1/2)/n) g((l - 1/2)/n)`.
pub fn midpoint_scalar_product<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, g: G, n: usize) -> f64 {
    (1..=n)
        .map(|l| {
            let t = (l as f64 - 0.5) / n as f64;
            f(t) * g(t)
        })
        .sum::<f64>()
        / n as f64
}

/// Blockwise statistics `x_jk`, `y_jk` for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub geometry: BlockGeometry,
    /// Row `k` holds frequencies `1..=J` at offsets `0..J`.
    pub xt: Vec<Vec<f64>>,
    pub yt: Vec<Vec<f64>>,
    pub norms_sq: Vec<f64>,
}

impl SpectralCoefficients {
    pub fn x(&self, k: usize, j: usize) -> f64 {
        self.xt[k][j - 1]
    }

    pub fn y(&self, k: usize, j: usize) -> f64 {
        self.yt[k][j - 1]
    }

    pub fn norm_sq(&self, j: usize) -> f64 {
        self.norms_sq[j - 1]
    }

    /// Rows `(k, j, x_coef, y_coef, norm_sq)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,j,x_coef,y_coef,norm_sq")?;
        for k in 0..self.geometry.blocks {
            for j in 1..=self.geometry.cutoff {
                writeln!(
                    w,
                    "{k},{j},{:.16e},{:.16e},{:.16e}",
                    self.x(k, j),
                    self.y(k, j),
                    self.norm_sq(j)
                )?;
            }
        }
        Ok(())
    }
}

fn check_geometry(obs: &ObservationSet, g: &BlockGeometry) -> Result<()> {
    if obs.n() != g.n || obs.x.len() != g.n + 1 || obs.y.len() != g.n + 1 {
        return Err(Error::BadGeometry(format!(
            "geometry is for n = {}, observations have n = {}",
            g.n,
            obs.n()
        )));
    }
    BlockGeometry::new(g.n, g.blocks, g.cutoff, g.coarse, g.window).map(|_| ())
}

/// Reusable transform for one geometry.
///
/// Both series are packed into one complex odd extension of length `2nh`, so a
/// single FFT per block yields the two sine transforms.
#[derive(Clone)]
pub struct SpectralPlan {
    geometry: BlockGeometry,
    fft: Arc<dyn Fft<f64>>,
    scales: Vec<f64>,
    norms_sq: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("geometry", &self.geometry)
            .finish_non_exhaustive()
    }
}

impl SpectralPlan {
    pub fn new(geometry: BlockGeometry) -> Self {
        let g = geometry;
        let fft = FftPlanner::new().plan_fft_forward(2 * g.per_block);
        let scales = (1..=g.cutoff)
            .map(|j| antiderivative_scale(j, g.n, g.blocks))
            .collect();
        let norms_sq = (1..=g.cutoff)
            .map(|j| empirical_norm_sq(j, g.n, g.blocks))
            .collect();
        Self {
            geometry,
            fft,
            scales,
            norms_sq,
        }
    }

    pub fn geometry(&self) -> &BlockGeometry {
        &self.geometry
    }

    pub fn compute(&self, obs: &ObservationSet) -> Result<SpectralCoefficients> {
        let g = self.geometry;
        check_geometry(obs, &g)?;
        let nh = g.per_block;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * nh];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut xt = Vec::with_capacity(g.blocks);
        let mut yt = Vec::with_capacity(g.blocks);
        for k in 0..g.blocks {
            let base = k * nh;
            buf[0] = Complex64::new(0.0, 0.0);
            buf[nh] = Complex64::new(0.0, 0.0);
            for i in 1..nh {
                let l = base + i;
                let v = Complex64::new(obs.x[l] - obs.x[l - 1], obs.y[l] - obs.y[l - 1]);
                buf[i] = v;
                buf[2 * nh - i] = -v;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            let mut xr = Vec::with_capacity(g.cutoff);
            let mut yr = Vec::with_capacity(g.cutoff);
            for j in 1..=g.cutoff {
                let c = self.scales[j - 1];
                if j == nh {
                    // sin(pi i) vanishes at every interior point
                    xr.push(0.0);
                    yr.push(0.0);
                } else {
                    xr.push(-0.5 * buf[j].im * c);
                    yr.push(0.5 * buf[j].re * c);
                }
            }
            xt.push(xr);
            yt.push(yr);
        }
        Ok(SpectralCoefficients {
            geometry: g,
            xt,
            yt,
            norms_sq: self.norms_sq.clone(),
        })
    }
}

/// Coefficients via one FFT per block.
pub fn compute_coefficients(
    obs: &ObservationSet,
    geometry: &BlockGeometry,
) -> Result<SpectralCoefficients> {
    SpectralPlan::new(*geometry).compute(obs)
}

/// Coefficients by direct `O(nh J)` summation with exact argument reduction.
pub fn compute_coefficients_direct(
    obs: &ObservationSet,
    geometry: &BlockGeometry,
) -> Result<SpectralCoefficients> {
    let g = *geometry;
    check_geometry(obs, &g)?;
    let nh = g.per_block;
    let period = 2 * nh;
    let sines: Vec<f64> = (0..period)
        .map(|m| (PI * m as f64 / nh as f64).sin())
        .collect();
    let mut xt = Vec::with_capacity(g.blocks);
    let mut yt = Vec::with_capacity(g.blocks);
    for k in 0..g.blocks {
        let base = k * nh;
        let dx: Vec<f64> = (1..nh)
            .map(|i| obs.x[base + i] - obs.x[base + i - 1])
            .collect();
        let dy: Vec<f64> = (1..nh)
            .map(|i| obs.y[base + i] - obs.y[base + i - 1])
            .collect();
        let mut xr = Vec::with_capacity(g.cutoff);
        let mut yr = Vec::with_capacity(g.cutoff);
        for j in 1..=g.cutoff {
            let c = antiderivative_scale(j, g.n, g.blocks);
            let (mut sx, mut sy) = (0.0, 0.0);
            for i in 1..nh {
                let s = if j == nh {
                    0.0
                } else {
                    sines[(j * i) % period]
                };
                sx += dx[i - 1] * s;
                sy += dy[i - 1] * s;
            }
            xr.push(c * sx);
            yr.push(c * sy);
        }
        xt.push(xr);
        yt.push(yr);
    }
    let norms_sq = (1..=g.cutoff)
        .map(|j| empirical_norm_sq(j, g.n, g.blocks))
        .collect();
    Ok(SpectralCoefficients {
        geometry: g,
        xt,
        yt,
        norms_sq,
    })
}

/// `|sum_l dY_l Phi_jk(l/n) + sum_{l=0}^{n-1} Y_{l/n} phi_jk((l+1/2)/n) / n|` on the `y` series.
pub fn sbp_residual(obs: &ObservationSet, geometry: &BlockGeometry, j: usize, k: usize) -> f64 {
    let g = geometry;
    let (n, nh) = (g.n, g.per_block);
    let h = g.h();
    let period = 2 * nh;
    // sin(pi m / nh) and cos(pi m / (2 nh)) with exact integer reduction
    let c = antiderivative_scale(j, n, g.blocks);
    let amp = (2.0 / h).sqrt() / n as f64;
    let base = k * nh;
    let mut first = 0.0;
    for i in 1..nh {
        let l = base + i;
        let s = (PI * ((j * i) % period) as f64 / nh as f64).sin();
        first += (obs.y[l] - obs.y[l - 1]) * c * s;
    }
    let mut second = 0.0;
    for i in 0..nh {
        let m = (j * (2 * i + 1)) % (4 * nh);
        second += obs.y[base + i] * amp * (PI * m as f64 / (2.0 * nh as f64)).cos();
    }
    (first + second).abs()
}

/// Maximal violations of the two discrete orthogonality relations on block `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityResiduals {
    /// `max |[phi_j, phi_r]_n - delta_jr|` over `1 <= j, r < nh`.
    pub o1_interior: f64,
    /// Same over `1 <= j, r <= nh`.
    pub o1_full: f64,
    /// `max |<Phi_j, Phi_r>_n - delta_jr ||Phi_j||^2| / min(||Phi_j||^2, ||Phi_r||^2)` over `1 <= j, r < nh`.
    pub o2_interior: f64,
    pub o2_full: f64,
}

/// Evaluates both Gram matrices of the basis on block `k` by direct summation.
pub fn orthogonality_residuals(n: usize, blocks: usize, k: usize) -> OrthogonalityResiduals {
    let nh = n / blocks;
    let base = k * nh;
    // only the nh grid points inside the block contribute
    let mids: Vec<Vec<f64>> = (1..=nh)
        .map(|j| {
            (1..=nh)
                .map(|i| phi(j, k, blocks, ((base + i) as f64 - 0.5) / n as f64))
                .collect()
        })
        .collect();
    let nodes: Vec<Vec<f64>> = (1..=nh)
        .map(|j| {
            (1..=nh)
                .map(|i| phi_antiderivative(j, k, blocks, n, (base + i) as f64 / n as f64))
                .collect()
        })
        .collect();
    let norms: Vec<f64> = (1..=nh).map(|j| empirical_norm_sq(j, n, blocks)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    let mut out = OrthogonalityResiduals {
        o1_interior: 0.0,
        o1_full: 0.0,
        o2_interior: 0.0,
        o2_full: 0.0,
    };
    for j in 0..nh {
        for r in j..nh {
            let delta = if j == r { 1.0 } else { 0.0 };
            let e1 = (dot(&mids[j], &mids[r]) - delta).abs();
            let e2 = (dot(&nodes[j], &nodes[r]) - delta * norms[j]).abs() / norms[j].min(norms[r]);
            out.o1_full = out.o1_full.max(e1);
            out.o2_full = out.o2_full.max(e2);
            if r + 1 < nh {
                out.o1_interior = out.o1_interior.max(e1);
                out.o2_interior = out.o2_interior.max(e2);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, NoiseCovariance, SamplingScheme};
    use crate::rng::Seed;
    use crate::simulate::{add_noise, simulate_signal, SignalPlan};
    use crate::stats::mean_and_var;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_obs(n: usize, seed: u64) -> ObservationSet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let x = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ObservationSet::from_values(x, y).unwrap()
    }

    #[test]
    fn basis_values() {
        assert!((phi(1, 0, 1, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((phi(1, 0, 1, 1.0) + 2f64.sqrt()).abs() < 1e-15);
        assert!(phi(2, 1, 2, 0.875).abs() < 1e-15);
        assert_eq!(phi(1, 0, 2, 0.75), 0.0);
    }

    #[test]
    fn antiderivative_values() {
        for (j, k) in [(1, 0), (3, 2), (7, 4)] {
            assert!(phi_antiderivative(j, k, 5, 50, k as f64 / 5.0).abs() < 1e-15);
            assert!(phi_antiderivative(j, k, 5, 50, (k + 1) as f64 / 5.0).abs() < 1e-14);
        }
        let (n, blocks) = (40, 4);
        let (h, nh) = (0.25, 10);
        let peak = phi_antiderivative(nh, 1, blocks, n, h + h / (2.0 * nh as f64));
        assert!((peak - 1.0 / ((2.0 * h).sqrt() * n as f64)).abs() < 1e-15);
        // 1 / (sqrt(2) 4 sin(pi/8)), evaluated in extended precision
        assert!((phi_antiderivative(1, 0, 1, 4, 0.5) - 0.461_939_766_255_643_4).abs() < 1e-15);
    }

    #[test]
    fn norm_values() {
        assert!((empirical_norm_sq(10, 40, 4) - 1.0 / (4.0 * 1600.0)).abs() < 1e-18);
        // (64 sin^2(pi/8))^{-1}; a direct sum over the three interior points agrees
        assert!((empirical_norm_sq(1, 4, 1) - 0.106_694_173_824_159_22).abs() < 1e-15);
        let direct: f64 = (1..4)
            .map(|l| phi_antiderivative(1, 0, 1, 4, l as f64 / 4.0).powi(2))
            .sum::<f64>()
            / 4.0;
        assert!((direct - empirical_norm_sq(1, 4, 1)).abs() < 1e-15);
        let (n, blocks) = (10_000, 1);
        let approx = 1.0 / PI.powi(2);
        let exact = empirical_norm_sq(1, n, blocks);
        assert!((exact / approx - 1.0).abs() < 1e-7);
    }

    #[test]
    fn norms_match_the_scalar_product() {
        let (n, blocks) = (60, 3);
        for j in 1..20 {
            let direct = scalar_product(
                |t| phi_antiderivative(j, 1, blocks, n, t),
                |t| phi_antiderivative(j, 1, blocks, n, t),
                n,
            );
            assert!((direct / empirical_norm_sq(j, n, blocks) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonality_holds_off_the_degenerate_frequency() {
        for nh in [4, 16, 100] {
            let r = orthogonality_residuals(2 * nh, 2, 1);
            assert!(r.o1_interior < 1e-10, "nh = {nh}: {r:?}");
            assert!(r.o2_interior < 1e-12, "nh = {nh}: {r:?}");
            // at j = r = nh the basis vanishes on the grid
            assert!((r.o1_full - 1.0).abs() < 1e-12);
            assert!((r.o2_full - 1.0).abs() < 1e-12);
        }
        let mid = midpoint_scalar_product(|t| phi(3, 0, 1, t), |t| phi(3, 0, 1, t), 16);
        assert!((mid - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_series_has_zero_coefficients() {
        let obs = ObservationSet::from_values(vec![2.5; 101], vec![-1.0; 101]).unwrap();
        let g = BlockGeometry::with_blocks(100, 5).unwrap();
        let c = compute_coefficients(&obs, &g).unwrap();
        assert!(c.xt.iter().chain(&c.yt).flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn fft_matches_direct_sums() {
        for (n, blocks, seed) in [(120, 4, 1), (1000, 10, 2), (30_000, 30, 3), (7, 1, 4)] {
            let obs = random_obs(n, seed);
            let g = BlockGeometry::with_blocks(n, blocks).unwrap();
            let a = compute_coefficients(&obs, &g).unwrap();
            let b = compute_coefficients_direct(&obs, &g).unwrap();
            assert_eq!(a.norms_sq, b.norms_sq);
            for k in 0..blocks {
                for j in 1..=g.cutoff {
                    let scale = antiderivative_scale(j, n, blocks) * (n / blocks) as f64;
                    assert!((a.x(k, j) - b.x(k, j)).abs() < 1e-12 * scale);
                    assert!((a.y(k, j) - b.y(k, j)).abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn blockwise_sum_equals_full_sum() {
        let (n, blocks) = (60, 3);
        let obs = random_obs(n, 5);
        let g = BlockGeometry::with_blocks(n, blocks).unwrap();
        let c = compute_coefficients(&obs, &g).unwrap();
        for k in 0..blocks {
            for j in 1..=g.cutoff {
                let full: f64 = (1..=n)
                    .map(|l| {
                        (obs.x[l] - obs.x[l - 1])
                            * phi_antiderivative(j, k, blocks, n, l as f64 / n as f64)
                    })
                    .sum();
                assert!((full - c.x(k, j)).abs() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn antiderivative_increments_are_picked_out() {
        // increments dX_l = Phi_1(l/n) give x_j = n <Phi_1, Phi_j>_n
        let n = 64;
        let mut x = vec![0.0; n + 1];
        for l in 1..=n {
            x[l] = x[l - 1] + phi_antiderivative(1, 0, 1, n, l as f64 / n as f64);
        }
        let obs = ObservationSet::from_values(x, vec![0.0; n + 1]).unwrap();
        let g = BlockGeometry::with_blocks(n, 1).unwrap();
        let c = compute_coefficients(&obs, &g).unwrap();
        for j in 1..n {
            let ratio = c.x(0, j) / (n as f64 * c.norm_sq(j));
            let expected = if j == 1 { 1.0 } else { 0.0 };
            assert!((ratio - expected).abs() < 1e-10, "j = {j}: {ratio}");
        }
    }

    #[test]
    fn block_locality() {
        let (n, blocks) = (200, 4);
        let g = BlockGeometry::with_blocks(n, blocks).unwrap();
        let obs = random_obs(n, 7);
        let base = compute_coefficients(&obs, &g).unwrap();
        let mut modified = obs.clone();
        for l in (0..50).chain(101..=n) {
            modified.x[l] += 3.0 * l as f64;
            modified.y[l] -= 1.0;
        }
        let other = compute_coefficients(&modified, &g).unwrap();
        assert_eq!(base.xt[1], other.xt[1]);
        assert_eq!(base.yt[1], other.yt[1]);
    }

    #[test]
    fn pure_noise_coefficient_variance() {
        let (n, blocks) = (20, 2);
        let g = BlockGeometry::with_blocks(n, blocks).unwrap();
        let plan = SpectralPlan::new(g);
        let h = NoiseCovariance::from_std(0.5, 0.5, 0.0).unwrap();
        let path = crate::model::SpotPath::constant(1.0, 1.0, 0.0);
        let sig = SignalPlan::blockwise(&path.with_rho(|_| 0.0), n, blocks).unwrap();
        let reps = 100_000;
        let mut vals = Vec::with_capacity(reps);
        for i in 0..reps {
            let mut s = sig.sample(Seed::new(1, i as u64));
            s.x.iter_mut().for_each(|v| *v = 0.0);
            s.y.iter_mut().for_each(|v| *v = 0.0);
            let obs = add_noise(s, &h, Seed::new(1, i as u64)).unwrap();
            vals.push(plan.compute(&obs).unwrap().x(1, 3));
        }
        let (_, v) = mean_and_var(&vals);
        let target = 0.25 / n as f64;
        let se = target * (2.0 / reps as f64).sqrt();
        assert!((v - target).abs() < 4.0 * se, "{v} vs {target}");
    }

    #[test]
    fn cross_block_independence() {
        let n = 300;
        let g = BlockGeometry::with_blocks(n, 3).unwrap();
        let plan = SpectralPlan::new(g);
        let path = presets::parametric();
        let h = NoiseCovariance::from_std(0.1, 0.1, 0.0).unwrap();
        let sig = SignalPlan::smooth(&path, n, &SamplingScheme::Equidistant).unwrap();
        let reps = 100_000usize;
        let (mut a, mut b) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for i in 0..reps {
            let seed = Seed::new(21, i as u64);
            let c = plan
                .compute(&add_noise(sig.sample(seed), &h, seed).unwrap())
                .unwrap();
            a.push(c.x(0, 2));
            b.push(c.x(1, 2));
        }
        let (ma, va) = mean_and_var(&a);
        let (mb, vb) = mean_and_var(&b);
        let corr = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / ((reps - 1) as f64 * (va * vb).sqrt());
        assert!(corr.abs() < 4.0 / (reps as f64).sqrt(), "{corr}");
    }

    #[test]
    fn dump_has_one_row_per_coefficient() {
        let g = BlockGeometry::with_blocks(40, 4).unwrap();
        let c = compute_coefficients(&random_obs(40, 1), &g).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 4 * 10);
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let obs = random_obs(50, 1);
        let g = BlockGeometry::with_blocks(100, 4).unwrap();
        assert!(matches!(
            compute_coefficients(&obs, &g),
            Err(Error::BadGeometry(_))
        ));
    }

    #[test]
    fn sbp_on_simulated_data() {
        let sig = simulate_signal(
            &presets::timevarying(),
            3000,
            &SamplingScheme::Equidistant,
            Seed::new(1, 1),
        )
        .unwrap();
        let obs = add_noise(
            sig,
            &NoiseCovariance::from_std(0.01, 0.01, 0.0).unwrap(),
            Seed::new(1, 1),
        )
        .unwrap();
        let g = BlockGeometry::with_blocks(3000, 30).unwrap();
        let max = obs.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (j, k) in [(1, 0), (50, 14), (100, 29), (99, 29)] {
            assert!(sbp_residual(&obs, &g, j, k) < 1e-10 * max);
        }
        let zero = ObservationSet::from_values(vec![0.0; 3001], vec![0.0; 3001]).unwrap();
        assert_eq!(sbp_residual(&zero, &g, 3, 3), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn summation_by_parts_is_exact(seed in any::<u64>(), blocks in 1usize..6, nh in 2usize..40, jr in 0.0f64..1.0, kr in 0.0f64..1.0) {
            let n = blocks * nh;
            let obs = random_obs(n, seed);
            let g = BlockGeometry::with_blocks(n, blocks).unwrap();
            let j = 1 + ((jr * nh as f64) as usize).min(nh - 1);
            let k = ((kr * blocks as f64) as usize).min(blocks - 1);
            let max = obs.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            prop_assert!(sbp_residual(&obs, &g, j, k) < 1e-10 * max);
        }

        #[test]
        fn parseval_on_increments(seed in any::<u64>(), blocks in 1usize..6, nh in 2usize..60) {
            let n = blocks * nh;
            let obs = random_obs(n, seed);
            let g = BlockGeometry::with_blocks(n, blocks).unwrap();
            let c = compute_coefficients(&obs, &g).unwrap();
            for k in 0..blocks {
                let lhs: f64 = (1..=nh).map(|j| c.x(k, j) * c.y(k, j) / c.norm_sq(j)).sum::<f64>() / nh as f64;
                let interior: f64 = (k * nh + 1..(k + 1) * nh)
                    .map(|l| (obs.x[l] - obs.x[l - 1]) * (obs.y[l] - obs.y[l - 1]))
                    .sum();
                let rhs = interior * blocks as f64;
                prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }
}
