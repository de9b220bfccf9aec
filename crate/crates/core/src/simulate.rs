//! Exact Gaussian simulation of the signal and additive observation noise.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{NoiseCovariance, SamplingScheme, SchemeKind, SpotMatrix, SpotPath};
use crate::quad::composite_simpson;
use crate::rng::Seed;

const STEP_NODES: usize = 9;
const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    /// Smooth deterministic volatility.
    E0,
    /// Volatility frozen on blocks.
    E3,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::E0 => "E0",
            ModelTag::E3 => "E3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationMeta {
    pub n: usize,
    pub scheme: SchemeKind,
    pub seed: Option<Seed>,
    pub model: ModelTag,
    /// Number of blocks for E3 data.
    pub h_inv: Option<usize>,
}

/// Synchronous noisy observations on `n + 1` grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub meta: ObservationMeta,
}

impl ObservationSet {
    /// Observations on the equidistant grid, with no seed attached.
    pub fn from_values(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DegenerateInput("x and y differ in length".into()));
        }
        if x.len() < 2 {
            return Err(Error::TooFewObservations(x.len().saturating_sub(1)));
        }
        let n = x.len() - 1;
        let times = (0..=n).map(|i| i as f64 / n as f64).collect();
        let meta = ObservationMeta {
            n,
            scheme: SchemeKind::Equidistant,
            seed: None,
            model: ModelTag::E0,
            h_inv: None,
        };
        Ok(Self { times, x, y, meta })
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn x_increments(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn y_increments(&self) -> Vec<f64> {
        self.y.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn check(&self) -> Result<()> {
        let len = self.meta.n + 1;
        if self.times.len() != len || self.x.len() != len || self.y.len() != len {
            return Err(Error::Parse(format!(
                "expected {len} rows, found {}",
                self.times.len()
            )));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// CSV with `# key=value` metadata lines, header `t,x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.meta;
        writeln!(w, "# n={}", m.n)?;
        writeln!(w, "# scheme={}", m.scheme)?;
        if let Some(seed) = m.seed {
            writeln!(w, "# seed_master={}", seed.master)?;
            writeln!(w, "# seed_stream={}", seed.stream)?;
        }
        writeln!(w, "# model={}", m.model)?;
        if let Some(h_inv) = m.h_inv {
            writeln!(w, "# h_inv={h_inv}")?;
        }
        writeln!(w, "t,x,y")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.times[i], self.x[i], self.y[i]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut n = None;
        let mut scheme = SchemeKind::Equidistant;
        let (mut master, mut stream) = (None, None);
        let mut model = ModelTag::E0;
        let mut h_inv = None;
        let (mut times, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        let mut header_seen = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta.trim().split_once('=').ok_or_else(|| {
                    Error::Parse(format!("line {}: malformed metadata", lineno + 1))
                })?;
                match key.trim() {
                    "n" => n = Some(parse_num::<usize>(value, lineno)?),
                    "scheme" => {
                        scheme = match value.trim() {
                            "equidistant" => SchemeKind::Equidistant,
                            "quantile" => SchemeKind::Quantile,
                            other => return Err(Error::Parse(format!("unknown scheme `{other}`"))),
                        }
                    }
                    "seed_master" => master = Some(parse_num::<u64>(value, lineno)?),
                    "seed_stream" => stream = Some(parse_num::<u64>(value, lineno)?),
                    "model" => {
                        model = match value.trim() {
                            "E0" => ModelTag::E0,
                            "E3" => ModelTag::E3,
                            other => {
                                return Err(Error::Parse(format!("unknown model tag `{other}`")))
                            }
                        }
                    }
                    "h_inv" => h_inv = Some(parse_num::<usize>(value, lineno)?),
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                if line != "t,x,y" {
                    return Err(Error::Parse(format!(
                        "line {}: expected header `t,x,y`",
                        lineno + 1
                    )));
                }
                header_seen = true;
                continue;
            }
            let mut fields = line.split(',');
            let mut next = || -> Result<f64> {
                let field = fields
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing column", lineno + 1)))?;
                parse_num::<f64>(field, lineno)
            };
            times.push(next()?);
            x.push(next()?);
            y.push(next()?);
        }
        let n = match n {
            Some(n) => n,
            None => times
                .len()
                .checked_sub(1)
                .ok_or(Error::TooFewObservations(0))?,
        };
        let seed = match (master, stream) {
            (Some(m), Some(s)) => Some(Seed::new(m, s)),
            _ => None,
        };
        let obs = Self {
            times,
            x,
            y,
            meta: ObservationMeta {
                n,
                scheme,
                seed,
                model,
                h_inv,
            },
        };
        obs.check()?;
        Ok(obs)
    }
}

fn parse_num<T: FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("line {}: bad number `{}`", lineno + 1, s.trim())))
}

/// Lower-triangular factor `[[l11, 0], [l21, l22]]` of a 2x2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cholesky2 {
    pub l11: f64,
    pub l21: f64,
    pub l22: f64,
}

impl Cholesky2 {
    /// Factor through the correlation form; negative round-off is clamped at 0.
    pub fn new(m: SpotMatrix) -> Self {
        let a = m.vx.max(0.0);
        let b = m.vy.max(0.0);
        let (sa, sb) = (a.sqrt(), b.sqrt());
        let r = if a == 0.0 || b == 0.0 {
            0.0
        } else if m.cov * m.cov >= a * b {
            m.cov.signum()
        } else {
            m.cov / (sa * sb)
        };
        Self {
            l11: sa,
            l21: r * sb,
            l22: sb * (1.0 - r * r).max(0.0).sqrt(),
        }
    }

    pub fn apply(&self, z1: f64, z2: f64) -> (f64, f64) {
        (self.l11 * z1, self.l21 * z1 + self.l22 * z2)
    }
}

fn check_step(m: SpotMatrix, step: usize) -> Result<()> {
    if m.vx < -PSD_TOL || m.vy < -PSD_TOL || m.cov * m.cov > m.vx.max(0.0) * m.vy.max(0.0) + PSD_TOL
    {
        return Err(Error::DegenerateStep { step });
    }
    Ok(())
}

/// Signal values at the grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPath {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub scheme: SchemeKind,
    pub model: ModelTag,
    pub h_inv: Option<usize>,
}

/// Per-step Cholesky factors, computed once per experiment and reused for every seed.
#[derive(Debug, Clone)]
pub struct SignalPlan {
    times: Vec<f64>,
    factors: Vec<Cholesky2>,
    scheme: SchemeKind,
    model: ModelTag,
    h_inv: Option<usize>,
}

impl SignalPlan {
    /// Exact increments over `[t_{i-1}, t_i]` with covariance `int Sigma_s ds`.
    pub fn smooth(path: &SpotPath, n: usize, scheme: &SamplingScheme) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewObservations(n));
        }
        path.validate(n.min(10_000))?;
        let times = scheme.times(n)?;
        let mut factors = Vec::with_capacity(n);
        for i in 1..=n {
            let (a, b) = (times[i - 1], times[i]);
            let vx = composite_simpson(|t| path.sigma_x(t).powi(2), a, b, STEP_NODES);
            let vy = composite_simpson(|t| path.sigma_y(t).powi(2), a, b, STEP_NODES);
            let cov = composite_simpson(|t| path.covolatility(t), a, b, STEP_NODES);
            let m = SpotMatrix::new(vx, vy, cov);
            check_step(m, i)?;
            factors.push(Cholesky2::new(m));
        }
        Ok(Self {
            times,
            factors,
            scheme: scheme.kind(),
            model: ModelTag::E0,
            h_inv: None,
        })
    }

    /// Increments in block `k` with covariance `Sigma_{kh} / n`.
    pub fn blockwise(path: &SpotPath, n: usize, blocks: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewObservations(n));
        }
        if blocks == 0 || n % blocks != 0 {
            return Err(Error::BadGeometry(format!(
                "n h = {n}/{blocks} is not an integer"
            )));
        }
        let per_block = n / blocks;
        let mut factors = Vec::with_capacity(n);
        for k in 0..blocks {
            let m = path
                .spot_matrix(k as f64 / blocks as f64)
                .scaled(1.0 / n as f64);
            check_step(m, k * per_block + 1)?;
            let f = Cholesky2::new(m);
            factors.extend(std::iter::repeat_n(f, per_block));
        }
        let times = SamplingScheme::Equidistant.times(n)?;
        Ok(Self {
            times,
            factors,
            scheme: SchemeKind::Equidistant,
            model: ModelTag::E3,
            h_inv: Some(blocks),
        })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn sample(&self, seed: Seed) -> SignalPath {
        let mut rng = seed.signal_rng();
        let n = self.n();
        let mut x = Vec::with_capacity(n + 1);
        let mut y = Vec::with_capacity(n + 1);
        let (mut cx, mut cy) = (0.0, 0.0);
        x.push(cx);
        y.push(cy);
        for f in &self.factors {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (dx, dy) = f.apply(z1, z2);
            cx += dx;
            cy += dy;
            x.push(cx);
            y.push(cy);
        }
        SignalPath {
            times: self.times.clone(),
            x,
            y,
            scheme: self.scheme,
            model: self.model,
            h_inv: self.h_inv,
        }
    }
}

pub fn simulate_signal(
    path: &SpotPath,
    n: usize,
    scheme: &SamplingScheme,
    seed: Seed,
) -> Result<SignalPath> {
    Ok(SignalPlan::smooth(path, n, scheme)?.sample(seed))
}

pub fn simulate_signal_blockwise(
    path: &SpotPath,
    n: usize,
    blocks: usize,
    seed: Seed,
) -> Result<SignalPath> {
    Ok(SignalPlan::blockwise(path, n, blocks)?.sample(seed))
}

/// Adds i.i.d. `N(0, H)` errors to every grid point, drawn from the noise stream of `seed`.
pub fn add_noise(
    signal: SignalPath,
    noise: &NoiseCovariance,
    seed: Seed,
) -> Result<ObservationSet> {
    noise.check()?;
    let SignalPath {
        times,
        mut x,
        mut y,
        scheme,
        model,
        h_inv,
    } = signal;
    if x.len() != y.len() || x.len() != times.len() {
        return Err(Error::DegenerateInput(
            "signal series differ in length".into(),
        ));
    }
    let n = x.len() - 1;
    if !noise.is_zero() {
        let f = Cholesky2::new(SpotMatrix::new(
            noise.eta_x_sq,
            noise.eta_y_sq,
            noise.eta_xy,
        ));
        let mut rng = seed.noise_rng();
        for i in 0..=n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (ex, ey) = f.apply(z1, z2);
            x[i] += ex;
            y[i] += ey;
        }
    }
    Ok(ObservationSet {
        times,
        x,
        y,
        meta: ObservationMeta {
            n,
            scheme,
            seed: Some(seed),
            model,
            h_inv,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, true_integrated_covolatility};
    use crate::stats::{ks_two_sample, mean_and_var};
    use proptest::prelude::*;

    #[test]
    fn constant_identity_increments() {
        let path = SpotPath::constant(1.0, 1.0, 0.0);
        let plan = SignalPlan::smooth(&path, 4, &SamplingScheme::Equidistant).unwrap();
        let reps = 100_000;
        let first: Vec<f64> = (0..reps)
            .map(|i| plan.sample(Seed::new(3, i)).x[1])
            .collect();
        let (_, var) = mean_and_var(&first);
        assert!((var - 0.25).abs() < 3e-3, "{var}");
    }

    #[test]
    fn perfect_correlation_gives_identical_paths() {
        let path = SpotPath::from_fns(|t| 1.0 + t, |t| 1.0 + t, |_| 1.0, "perfect");
        for s in 0..20 {
            let sig =
                simulate_signal(&path, 500, &SamplingScheme::Equidistant, Seed::new(9, s)).unwrap();
            assert_eq!(sig.x, sig.y);
        }
        let flat = SpotPath::constant(0.3, 0.3, 1.0);
        let sig = simulate_signal_blockwise(&flat, 100, 10, Seed::new(1, 1)).unwrap();
        assert_eq!(sig.x, sig.y);
    }

    #[test]
    fn realized_covariance_matches_truth_on_average() {
        let path = presets::timevarying();
        let n = 30_000;
        let plan = SignalPlan::smooth(&path, n, &SamplingScheme::Equidistant).unwrap();
        let rcs: Vec<f64> = (0..1000)
            .map(|i| {
                let s = plan.sample(Seed::new(11, i));
                s.x.windows(2)
                    .zip(s.y.windows(2))
                    .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
                    .sum()
            })
            .collect();
        let (m, v) = mean_and_var(&rcs);
        let truth = true_integrated_covolatility(&path, 16);
        assert!(
            (m - truth).abs() < 3.0 * (v / 1000.0).sqrt(),
            "{m} vs {truth}"
        );
    }

    #[test]
    fn blockwise_moments_match_frozen_path() {
        let path = presets::timevarying();
        let (n, blocks) = (30_000, 30);
        let plan = SignalPlan::blockwise(&path, n, blocks).unwrap();
        let reps = 1000;
        let per = n / blocks;
        let mut stats = vec![Vec::with_capacity(reps); blocks];
        for i in 0..reps {
            let s = plan.sample(Seed::new(5, i as u64));
            for (k, st) in stats.iter_mut().enumerate() {
                let mut acc = 0.0;
                for l in k * per + 1..=(k + 1) * per {
                    acc += (s.x[l] - s.x[l - 1]) * (s.y[l] - s.y[l - 1]);
                }
                st.push(acc * n as f64 / per as f64);
            }
        }
        for (k, st) in stats.iter().enumerate() {
            let (m, v) = mean_and_var(st);
            let target = path.covolatility(k as f64 / blocks as f64);
            assert!(
                (m - target).abs() < 4.0 * (v / reps as f64).sqrt(),
                "block {k}: {m} vs {target}"
            );
        }
    }

    #[test]
    fn single_block_uses_initial_matrix() {
        let path = presets::timevarying();
        let plan = SignalPlan::blockwise(&path, 10, 1).unwrap();
        let f0 = Cholesky2::new(path.spot_matrix(0.0).scaled(0.1));
        assert!(plan.factors.iter().all(|f| *f == f0));
        assert!(matches!(
            SignalPlan::blockwise(&path, 10, 3),
            Err(Error::BadGeometry(_))
        ));
    }

    #[test]
    fn zero_noise_is_identity() {
        let sig = simulate_signal(
            &presets::parametric(),
            50,
            &SamplingScheme::Equidistant,
            Seed::new(1, 2),
        )
        .unwrap();
        let obs = add_noise(sig.clone(), &NoiseCovariance::zero(), Seed::new(1, 2)).unwrap();
        assert_eq!(obs.x, sig.x);
        assert_eq!(obs.y, sig.y);
    }

    fn zero_signal(n: usize) -> SignalPath {
        SignalPath {
            times: (0..=n).map(|i| i as f64 / n as f64).collect(),
            x: vec![0.0; n + 1],
            y: vec![0.0; n + 1],
            scheme: SchemeKind::Equidistant,
            model: ModelTag::E0,
            h_inv: None,
        }
    }

    #[test]
    fn noise_moments() {
        let n = 100_000;
        let h = NoiseCovariance::from_std(0.1, 0.1, 0.0).unwrap();
        let obs = add_noise(zero_signal(n), &h, Seed::new(2, 0)).unwrap();
        let (_, vx) = mean_and_var(&obs.x);
        let (_, vy) = mean_and_var(&obs.y);
        let cxy = obs.x.iter().zip(&obs.y).map(|(a, b)| a * b).sum::<f64>() / (n + 1) as f64;
        let se = 0.01 * (2.0 / n as f64).sqrt();
        assert!((vx - 0.01).abs() < 4.0 * se && (vy - 0.01).abs() < 4.0 * se);
        assert!(cxy.abs() < 4.0 * 0.01 / (n as f64).sqrt());
    }

    #[test]
    fn boundary_noise_is_perfectly_correlated() {
        let h = NoiseCovariance::from_std(0.1, 0.2, 0.1 * 0.2).unwrap();
        let obs = add_noise(zero_signal(10_000), &h, Seed::new(2, 1)).unwrap();
        let (_, vx) = mean_and_var(&obs.x);
        let (_, vy) = mean_and_var(&obs.y);
        let (mx, _) = mean_and_var(&obs.x);
        let (my, _) = mean_and_var(&obs.y);
        let c = obs
            .x
            .iter()
            .zip(&obs.y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / obs.x.len() as f64;
        assert!((c / (vx * vy).sqrt() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn non_psd_noise_rejected() {
        let bad = NoiseCovariance {
            eta_x_sq: 0.01,
            eta_y_sq: 0.01,
            eta_xy: 0.02,
        };
        assert!(matches!(
            add_noise(zero_signal(4), &bad, Seed::new(0, 0)),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn signal_and_noise_streams_are_independent() {
        let plan = SignalPlan::smooth(
            &SpotPath::constant(1.0, 1.0, 0.5),
            4,
            &SamplingScheme::Equidistant,
        )
        .unwrap();
        let h = NoiseCovariance::from_std(1.0, 1.0, 0.0).unwrap();
        let reps = 100_000;
        let pairs: Vec<(f64, f64)> = (0..reps)
            .map(|i| {
                let seed = Seed::new(77, i);
                let sig = plan.sample(seed);
                let x2 = sig.x[2];
                let obs = add_noise(sig, &h, seed).unwrap();
                (x2, obs.x[2] - x2)
            })
            .collect();
        let prods: Vec<f64> = pairs.iter().map(|(a, b)| a * b).collect();
        let (m, v) = mean_and_var(&prods);
        assert!(m.abs() < 4.0 * (v / reps as f64).sqrt());
    }

    #[test]
    fn smooth_and_blockwise_agree_for_constant_path() {
        let path = SpotPath::constant(0.7, 1.3, -0.4);
        let smooth = SignalPlan::smooth(&path, 20, &SamplingScheme::Equidistant).unwrap();
        let block = SignalPlan::blockwise(&path, 20, 5).unwrap();
        let a: Vec<f64> = (0..10_000)
            .map(|i| smooth.sample(Seed::new(1, i)).y[20])
            .collect();
        let b: Vec<f64> = (0..10_000)
            .map(|i| block.sample(Seed::new(2, i)).y[20])
            .collect();
        assert!(ks_two_sample(&a, &b) > 0.001);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec_path = presets::timevarying();
        let sig = simulate_signal(
            &spec_path,
            200,
            &SamplingScheme::power(2.0),
            Seed::new(8, 3),
        )
        .unwrap();
        let obs = add_noise(
            sig,
            &NoiseCovariance::from_std(0.01, 0.02, 0.0).unwrap(),
            Seed::new(8, 3),
        )
        .unwrap();
        let mut buf = Vec::new();
        obs.write_csv(&mut buf).unwrap();
        let back = ObservationSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(ObservationSet::read_csv("t,x,y\n0,1\n".as_bytes()).is_err());
        assert!(ObservationSet::read_csv("a,b,c\n".as_bytes()).is_err());
        assert!(ObservationSet::read_csv("t,x,y\n0,0,0\n0,1,1\n".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn simulation_is_deterministic(master in any::<u64>(), stream in any::<u64>(), n in 2usize..300) {
            let path = presets::timevarying();
            let h = NoiseCovariance::from_std(0.01, 0.01, 0.0).unwrap();
            let seed = Seed::new(master, stream);
            let run = || add_noise(simulate_signal(&path, n, &SamplingScheme::Equidistant, seed).unwrap(), &h, seed).unwrap();
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn cholesky_reproduces_matrix(vx in 0.0f64..4.0, vy in 0.0f64..4.0, r in -1.0f64..=1.0) {
            let m = SpotMatrix::new(vx, vy, r * (vx * vy).sqrt());
            let f = Cholesky2::new(m);
            let scale = 1.0 + vx + vy;
            prop_assert!((f.l11 * f.l11 - vx).abs() < 1e-12 * scale);
            prop_assert!((f.l11 * f.l21 - m.cov).abs() < 1e-12 * scale);
            prop_assert!((f.l21 * f.l21 + f.l22 * f.l22 - vy).abs() < 1e-12 * scale);
        }
    }
}
