//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) and fails when the criterion fails.

use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;

use specv::asymptotics::{
    clt_variance, integral_f1_closed, integral_f2_closed, quadrature_oracle, QuarticCoefficients,
    VarianceTerms,
};
use specv::baselines::{msrc, realized_covariance, MsrcConfig};
use specv::estimators::{specv_j1, specv_oracle, specv_uniform, Mode};
use specv::harness::checks::{
    orthogonality, parseval, reciprocity, reference_ab_grid, summation_by_parts,
};
use specv::harness::{run_experiment, ExperimentConfig, McReport};
use specv::model::{presets, BlockGeometry, NoiseCovariance, SamplingScheme, SchemeKind};
use specv::rng::Seed;
use specv::simulate::{add_noise, ModelTag, SignalPath, SignalPlan};
use specv::spectral::SpectralPlan;
use specv::stats::{ks_standard_normal, mean_and_var};

const MASTER_SEED: u64 = 20_130_501;
const DESK_N: usize = 30_000;
const DESK_REPLICATIONS: u64 = 2000;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // written to the raw handle so the line survives output capture
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn config(preset: &str, estimators: &[&str], replications: u64) -> ExperimentConfig {
    let list = estimators
        .iter()
        .map(|e| format!("\"{e}\""))
        .collect::<Vec<_>>()
        .join(", ");
    ExperimentConfig::from_toml_str(&format!(
        "preset = \"{preset}\"\nn = {DESK_N}\nreplications = {replications}\nmaster_seed = {MASTER_SEED}\n\
         estimators = [{list}]\n[geometry]\nblocks = 30\ncoarse = 3\nwindow = 5\n[msrc]\ntuning = \"grid_oracle\"\n"
    ))
    .expect("valid config")
}

fn parametric_desk() -> &'static McReport {
    static R: OnceLock<McReport> = OnceLock::new();
    R.get_or_init(|| {
        run_experiment(&config(
            "parametric_s4",
            &["oracle", "msrc"],
            DESK_REPLICATIONS,
        ))
        .expect("parametric run")
    })
}

fn timevarying_desk() -> &'static McReport {
    static R: OnceLock<McReport> = OnceLock::new();
    R.get_or_init(|| {
        run_experiment(&config(
            "timevarying_s4",
            &["spev_x", "spev_y", "adaptive", "oracle", "msrc"],
            DESK_REPLICATIONS,
        ))
        .expect("time-varying run")
    })
}

#[test]
fn criterion_1_exact_identities() {
    let (o1, o2) = orthogonality(true);
    let (o1_in, o2_in) = orthogonality(false);
    let sbp = summation_by_parts(100, MASTER_SEED);
    let pars = parseval(100, MASTER_SEED, false);
    let pars_in = parseval(100, MASTER_SEED, true);
    let pass = o1.passed() && o2.passed() && sbp.passed() && pars.passed();
    verdict(
        "1",
        pass,
        &format!(
            "o1 1<=j,r<=nh {:.2e}; o2 {:.2e}; sbp {:.2e}; Parseval vs full RC {:.2e} (tol 1e-10) || \
             without j=nh and boundary increments: o1 {:.2e}, o2 {:.2e}, Parseval {:.2e}",
            o1.max_residual, o2.max_residual, sbp.max_residual, pars.max_residual, o1_in.max_residual, o2_in.max_residual,
            pars_in.max_residual
        ),
    );
}

#[test]
fn criterion_2_closed_form_integrals() {
    let mut f1_worst = 0.0f64;
    for (a, b) in reference_ab_grid() {
        let closed = integral_f1_closed(a, b).unwrap();
        let quad = quadrature_oracle(&QuarticCoefficients::from_ab(a, b), 1e-12 * closed).unwrap();
        f1_worst = f1_worst.max((closed / quad - 1.0).abs());
    }
    let mut f2_worst = 0.0f64;
    for i in 0..20 {
        for k in 0..20 {
            let rho = -0.95 + 1.9 * i as f64 / 19.0;
            let sigma = 0.2 + 4.8 * k as f64 / 19.0;
            let closed = integral_f2_closed(rho, sigma);
            let quad =
                quadrature_oracle(&QuarticCoefficients::f2(rho, sigma), 1e-12 * closed).unwrap();
            f2_worst = f2_worst.max((closed / quad - 1.0).abs());
        }
    }
    let mut zero_worst = 0.0f64;
    for sigma in [0.3, 1.0, 2.0, 4.5] {
        zero_worst =
            zero_worst.max((integral_f2_closed(0.0, sigma) * 4.0 * sigma.powi(3) - 1.0).abs());
    }
    for (sx, sy, ex, ey) in [
        (1.0, 1.0, 1.0, 1.0),
        (2.0, 1.0, 1.0, 1.0),
        (0.5, 1.5, 0.3, 0.7),
        (1.0, 3.0, 2.0, 0.5),
    ] {
        let t = VarianceTerms::from_vols(
            sx,
            sy,
            0.0,
            &NoiseCovariance::from_std(ex, ey, 0.0).unwrap(),
        )
        .unwrap();
        let q = (ex * ex * ey * ey).powf(-0.25);
        let expected = 1.0 / (2.0 * ey * q * sx * sx * sy + 2.0 * ex * q * sy * sy * sx);
        zero_worst = zero_worst.max((integral_f1_closed(t.a, t.b).unwrap() / expected - 1.0).abs());
    }
    let pass = f1_worst < 1e-8 && f2_worst < 1e-8 && zero_worst < 1e-12;
    verdict(
        "2",
        pass,
        &format!("f1 vs quadrature {f1_worst:.2e}, f2 vs quadrature {f2_worst:.2e} (tol 1e-8); rho=0 closed forms {zero_worst:.2e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_3_reciprocity() {
    let r = reciprocity();
    verdict(
        "3",
        r.passed(),
        &format!(
            "max |v * int 1/f1 - 1| = {:.2e} over {} grid points (tol 1e-10)",
            r.max_residual,
            reference_ab_grid().len()
        ),
    );
}

#[test]
fn criterion_4_parametric_desk_scale() {
    let r = parametric_desk();
    let o = r.summary(Mode::Oracle).unwrap();
    let m = r.summary(Mode::Msrc).unwrap();
    let mean_ok = (o.mean - 0.5).abs() <= 4.0 * o.std_error();
    let pass =
        in_band(o.scaled_variance, 0.42, 0.56) && in_band(m.scaled_variance, 0.60, 0.85) && mean_ok;
    verdict(
        "4",
        pass,
        &format!(
            "specv var*sqrt(n) {:.4} in [0.42, 0.56]; msrc var*sqrt(n) {:.4} in [0.60, 0.85] (M = {}); specv mean {:.6} ({:+.2} s.e. from 0.5); failures {}/{}",
            o.scaled_variance,
            m.scaled_variance,
            r.msrc_choice.as_ref().map(|c| c.scales).unwrap_or(0),
            o.mean,
            (o.mean - 0.5) / o.std_error(),
            o.failures,
            m.failures
        ),
    );
}

#[test]
fn criterion_5_timevarying_desk_scale() {
    let r = timevarying_desk();
    let rmse = |mode| r.summary(mode).unwrap().rmse;
    let (sx, sy, ad, or, ms) = (
        rmse(Mode::SpevX),
        rmse(Mode::SpevY),
        rmse(Mode::Adaptive),
        rmse(Mode::Oracle),
        rmse(Mode::Msrc),
    );
    let truth_ok = (r.truth.covolatility - 0.00269).abs() <= 1e-5;
    let checks = [
        ("oracle", or, 0.0012, 0.0019),
        ("adaptive", ad, 0.0027, 0.0045),
        ("msrc", ms, 0.0028, 0.0050),
        ("spev_x", sx, 0.0058, 0.0090),
        ("spev_y", sy, 0.0069, 0.0108),
    ];
    let ordering = or < ad && or < ms;
    let pass = truth_ok && ordering && checks.iter().all(|&(_, v, lo, hi)| in_band(v, lo, hi));
    let bands = checks
        .iter()
        .map(|&(name, v, lo, hi)| {
            format!(
                "{name} {v:.5} {} [{lo}, {hi}]",
                if in_band(v, lo, hi) { "in" } else { "NOT in" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        "5",
        pass,
        &format!(
            "truth {:.6} (target 0.00269 +- 1e-5: {}); RMSE {bands}; ordering oracle < adaptive, msrc: {ordering} (M = {})",
            r.truth.covolatility,
            truth_ok,
            r.msrc_choice.as_ref().map(|c| c.scales).unwrap_or(0)
        ),
    );
}

#[test]
#[ignore = "full-scale reproduction: 10^4 replications per design"]
fn criterion_6_full_reproduction() {
    let tv = run_experiment(&config(
        "timevarying_s4",
        &["spev_x", "spev_y", "adaptive", "oracle", "msrc"],
        10_000,
    ))
    .unwrap();
    let par = run_experiment(&config("parametric_s4", &["oracle", "msrc"], 10_000)).unwrap();
    let entries = [
        ("spev_x rmse", tv.summary(Mode::SpevX).unwrap().rmse, 0.0072),
        ("spev_y rmse", tv.summary(Mode::SpevY).unwrap().rmse, 0.0086),
        (
            "adaptive rmse",
            tv.summary(Mode::Adaptive).unwrap().rmse,
            0.0034,
        ),
        (
            "oracle rmse",
            tv.summary(Mode::Oracle).unwrap().rmse,
            0.0015,
        ),
        ("msrc rmse", tv.summary(Mode::Msrc).unwrap().rmse, 0.0035),
        (
            "parametric specv var*sqrt(n)",
            par.summary(Mode::Oracle).unwrap().scaled_variance,
            0.49,
        ),
        (
            "parametric msrc var*sqrt(n)",
            par.summary(Mode::Msrc).unwrap().scaled_variance,
            0.71,
        ),
    ];
    let pass = entries.iter().all(|&(_, v, p)| (v / p - 1.0).abs() <= 0.10);
    let detail = entries
        .iter()
        .map(|&(name, v, p)| format!("{name} {v:.5} vs {p} ({:+.1}%)", 100.0 * (v / p - 1.0)))
        .collect::<Vec<_>>()
        .join("; ");
    verdict("6", pass, &detail);
}

#[test]
fn criterion_7_normality() {
    let r = timevarying_desk();
    let values = r.values(Mode::Oracle);
    let s = r.summary(Mode::Oracle).unwrap();
    let p = s.normality_p;
    // standardized by the truth and the limiting variance instead of sample moments
    let path = presets::timevarying();
    let avar = clt_variance(
        &path,
        &NoiseCovariance::from_std(0.1, 0.1, 0.0).unwrap(),
        16,
    )
    .unwrap();
    let scale = (avar / (DESK_N as f64).sqrt()).sqrt();
    let z: Vec<f64> = values
        .iter()
        .map(|v| (v - r.truth.covolatility) / scale)
        .collect();
    let p_theory = ks_standard_normal(&z);
    verdict(
        "7",
        p > 0.001,
        &format!(
            "KS p-value of {} standardized oracle estimates {p:.4} (> 0.001); against truth and limiting variance: p = {p_theory:.2e}",
            values.len()
        ),
    );
}

fn pure_noise(n: usize, h: &NoiseCovariance, seed: Seed) -> specv::simulate::ObservationSet {
    let sig = SignalPath {
        times: (0..=n).map(|i| i as f64 / n as f64).collect(),
        x: vec![0.0; n + 1],
        y: vec![0.0; n + 1],
        scheme: SchemeKind::Equidistant,
        model: ModelTag::E0,
        h_inv: None,
    };
    add_noise(sig, h, seed).unwrap()
}

fn byte_report(threads: usize) -> Vec<u8> {
    let mut cfg = ExperimentConfig::from_toml_str(
        "preset = \"timevarying_s4\"\nn = 3000\nreplications = 64\nmaster_seed = 7\n\
         estimators = [\"oracle\", \"adaptive\", \"spev_x\", \"j1\", \"realized\", \"msrc\"]\n[geometry]\nblocks = 30\n[msrc]\ngrid = [-8, 8]\n",
    )
    .unwrap();
    cfg.threads = threads;
    let r = run_experiment(&cfg).unwrap();
    let mut out = Vec::new();
    r.write_summary_csv(&mut out).unwrap();
    r.write_rows_csv(&mut out).unwrap();
    out
}

#[test]
fn criterion_8_property_gates() {
    // oracle dominance on the constant design
    let path = presets::parametric();
    let h = NoiseCovariance::from_std(0.1, 0.1, 0.0).unwrap();
    let g = BlockGeometry::with_blocks(DESK_N, 30).unwrap();
    let plan = SignalPlan::smooth(&path, DESK_N, &SamplingScheme::Equidistant).unwrap();
    let sp = SpectralPlan::new(g);
    let seeds = 1000u64;
    let triples: Vec<(f64, f64, f64)> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let seed = Seed::new(MASTER_SEED + 1, i);
            let c = sp
                .compute(&add_noise(plan.sample(seed), &h, seed).unwrap())
                .unwrap();
            (
                specv_oracle(&c, &path, &h).unwrap().value,
                specv_j1(&c, &h).unwrap().value,
                specv_uniform(&c, &h),
            )
        })
        .collect();
    let var =
        |f: fn(&(f64, f64, f64)) -> f64| mean_and_var(&triples.iter().map(f).collect::<Vec<_>>()).1;
    let (vo, v1, vu) = (var(|t| t.0), var(|t| t.1), var(|t| t.2));
    let dominance = vo <= v1 && vo <= vu;

    // noise-bias cancellation of MSRC on pure noise
    let noise = NoiseCovariance::from_std(0.1, 0.1, 0.005).unwrap();
    let cfg = MsrcConfig::quadratic(((DESK_N as f64).sqrt().ceil()) as usize).unwrap();
    let pairs: Vec<(f64, f64)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let obs = pure_noise(DESK_N, &noise, Seed::new(MASTER_SEED + 2, i));
            (msrc(&obs, &cfg).unwrap().value, realized_covariance(&obs))
        })
        .collect();
    let (mm, mv) = mean_and_var(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (rm, rv) = mean_and_var(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let (mse, rse) = ((mv / 1000.0).sqrt(), (rv / 1000.0).sqrt());
    let cancellation = mm.abs() <= 4.0 * mse && rm.abs() > 10.0 * rse;

    // eta-proportionality of the limiting variance
    let tv = presets::timevarying();
    let base = clt_variance(&tv, &NoiseCovariance::from_std(0.1, 0.1, 0.0).unwrap(), 16).unwrap();
    let doubled =
        clt_variance(&tv, &NoiseCovariance::from_std(0.2, 0.2, 0.0).unwrap(), 16).unwrap();
    let eta_gap = (doubled / base - 2.0).abs();
    let proportional = eta_gap < 1e-6;

    // parallel determinism
    let reference = byte_report(1);
    let deterministic = [4, 8].iter().all(|&t| byte_report(t) == reference);

    verdict(
        "8",
        dominance && cancellation && proportional && deterministic,
        &format!(
            "dominance var oracle {vo:.3e} <= j1 {v1:.3e}, uniform {vu:.3e}: {dominance}; \
             msrc pure-noise mean {mm:.2e} ({:+.2} s.e.), RC mean {rm:.2e} ({:.0} s.e.): {cancellation}; \
             clt(2 eta)/clt(eta) - 2 = {eta_gap:.1e}: {proportional}; byte-identical for 1/4/8 workers: {deterministic}",
            mm / mse,
            rm / rse
        ),
    );
}
