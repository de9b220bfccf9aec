//! Sample moments and Kolmogorov-Smirnov tests.

use statrs::distribution::{ContinuousCDF, Normal};

/// Mean and unbiased sample variance (0 for a single value).
pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1) as f64)
}

/// Kolmogorov limiting survival function `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    // below 0.2 the survival function is within 1e-12 of 1 and the series converges slowly
    if lambda < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample statistic `sup |F_n - cdf|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value (Stephens' small-sample correction) of the one-sample test.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let d = ks_statistic(xs, cdf);
    let sn = (xs.len() as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// p-value against the standard normal.
pub fn ks_standard_normal(xs: &[f64]) -> f64 {
    let z = Normal::standard();
    ks_one_sample(xs, |x| z.cdf(x))
}

/// Standardizes by the sample mean and standard deviation, then tests against N(0, 1).
pub fn normality_pvalue(xs: &[f64]) -> f64 {
    let (m, v) = mean_and_var(xs);
    if xs.len() < 2 || !(v > 0.0) {
        return f64::NAN;
    }
    let sd = v.sqrt();
    let z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    ks_standard_normal(&z)
}

/// Asymptotic p-value of the two-sample test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let se = ne.sqrt();
    kolmogorov_survival((se + 0.12 + 0.11 / se) * d)
}
