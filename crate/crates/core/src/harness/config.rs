//! Experiment configuration: named presets plus TOML overrides.
//!
//! ```toml
//! preset = "timevarying_s4"   # parametric_s4 | timevarying_s4 | custom, each with a `_small` variant
//! n = 30000
//! replications = 2000
//! master_seed = 20130501
//! estimators = ["oracle", "adaptive", "spev_x", "spev_y", "msrc"]
//! outputs = "out/table1"
//! threads = 0                 # 0 uses all cores
//! model = "smooth"            # smooth | blockwise
//! scheme = "equidistant"      # equidistant | power:<p>
//!
//! [path]                      # custom preset only: constant volatilities
//! sigma_x = 1.0
//! sigma_y = 1.0
//! rho = 0.5
//!
//! [noise]
//! eta_x = 0.1
//! eta_y = 0.1
//! eta_xy = 0.0
//!
//! [geometry]
//! blocks = 30
//! cutoff = 1000               # omitted: all nh frequencies
//! coarse = 3
//! window = 5
//!
//! [noise_source]              # known | lag_one | half_quadratic, per estimator
//! adaptive = "known"
//!
//! [msrc]
//! tuning = "grid_oracle"      # grid_oracle | explicit
//! scales = 173                # explicit tuning only
//! grid = [-16, 24]            # exponents k of c = 2^(k/4) in M = ceil(c sqrt(n))
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::{Mode, NoiseInput, NoiseVariant};
use crate::model::{
    presets, BlockGeometry, ModelSpec, NoiseCovariance, SamplingScheme, SchemeKind, SpotPath,
};
use crate::simulate::ModelTag;

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPath {
    pub sigma_x: Option<f64>,
    pub sigma_y: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub eta_x: Option<f64>,
    pub eta_y: Option<f64>,
    pub eta_xy: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub blocks: Option<usize>,
    pub cutoff: Option<usize>,
    pub coarse: Option<usize>,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMsrc {
    pub tuning: Option<String>,
    pub scales: Option<usize>,
    pub grid: Option<[i32; 2]>,
}

/// Config file as written; every key except `preset` is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: String,
    pub n: Option<usize>,
    pub replications: Option<u64>,
    pub master_seed: Option<u64>,
    pub estimators: Option<Vec<String>>,
    pub outputs: Option<PathBuf>,
    pub threads: Option<usize>,
    pub model: Option<String>,
    pub scheme: Option<String>,
    pub path: Option<RawPath>,
    pub noise: Option<RawNoise>,
    pub geometry: Option<RawGeometry>,
    pub noise_source: Option<BTreeMap<String, String>>,
    pub msrc: Option<RawMsrc>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MsrcSetting {
    Explicit { scales: usize },
    GridOracle { lo: i32, hi: i32 },
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: String,
    pub model: ModelSpec,
    pub model_tag: ModelTag,
    pub n: usize,
    pub geometry: BlockGeometry,
    pub estimators: Vec<Mode>,
    pub replications: u64,
    pub master_seed: u64,
    pub outputs: PathBuf,
    pub threads: usize,
    pub noise_source: BTreeMap<String, NoiseVariantChoice>,
    pub msrc: MsrcSetting,
}

/// Per-estimator noise input, before the value of `H` is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseVariantChoice {
    Known,
    Estimate(NoiseVariant),
}

struct Preset {
    path: SpotPath,
    eta: (f64, f64, f64),
    n: usize,
    replications: u64,
    estimators: Vec<Mode>,
}

fn preset(name: &str, raw_path: &RawPath) -> Result<Preset> {
    let (base, small) = match name.strip_suffix("_small") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let mut p = match base {
        "parametric_s4" => Preset {
            path: presets::parametric(),
            eta: (0.1, 0.1, 0.0),
            n: 30_000,
            replications: 10_000,
            estimators: vec![Mode::Oracle, Mode::Msrc],
        },
        "timevarying_s4" => Preset {
            path: presets::timevarying(),
            eta: (0.1, 0.1, 0.0),
            n: 30_000,
            replications: 10_000,
            estimators: vec![Mode::SpevX, Mode::SpevY, Mode::Adaptive, Mode::Oracle, Mode::Msrc],
        },
        "custom" => Preset {
            path: SpotPath::constant(
                raw_path.sigma_x.unwrap_or(1.0),
                raw_path.sigma_y.unwrap_or(1.0),
                raw_path.rho.unwrap_or(0.0),
            ),
            eta: (0.1, 0.1, 0.0),
            n: 30_000,
            replications: 1000,
            estimators: vec![Mode::Oracle, Mode::Adaptive],
        },
        other => {
            return Err(field(
                "preset",
                format!("unknown preset `{other}` (expected parametric_s4, timevarying_s4 or custom, optionally with `_small`)"),
            ))
        }
    };
    if base != "custom"
        && (raw_path.sigma_x.is_some() || raw_path.sigma_y.is_some() || raw_path.rho.is_some())
    {
        return Err(field(
            "path",
            "only the custom preset accepts path overrides",
        ));
    }
    if small {
        p.n = 7500;
        p.replications = 1000;
    }
    Ok(p)
}

fn parse_scheme(s: &str) -> Result<SamplingScheme> {
    if s == "equidistant" {
        return Ok(SamplingScheme::Equidistant);
    }
    if let Some(p) = s.strip_prefix("power:") {
        let p: f64 = p
            .parse()
            .map_err(|_| field("scheme", format!("bad exponent in `{s}`")))?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(field("scheme", "power exponent must be positive"));
        }
        return Ok(SamplingScheme::power(p));
    }
    Err(field("scheme", format!("unknown scheme `{s}`")))
}

fn parse_noise_choice(key: &str, s: &str) -> Result<NoiseVariantChoice> {
    match s {
        "known" => Ok(NoiseVariantChoice::Known),
        "lag_one" => Ok(NoiseVariantChoice::Estimate(NoiseVariant::LagOne)),
        "half_quadratic" => Ok(NoiseVariantChoice::Estimate(NoiseVariant::HalfQuadratic)),
        other => Err(field(
            &format!("noise_source.{key}"),
            format!("unknown source `{other}`"),
        )),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_raw(RawConfig {
            preset: name.to_string(),
            ..RawConfig::default()
        })
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let p = preset(&raw.preset, &raw.path.clone().unwrap_or_default())?;
        let n = raw.n.unwrap_or(p.n);
        if n < 2 {
            return Err(field("n", "must be at least 2"));
        }
        let replications = raw.replications.unwrap_or(p.replications);
        if replications == 0 {
            return Err(field("replications", "must be at least 1"));
        }
        let noise_raw = raw.noise.unwrap_or_default();
        let noise = NoiseCovariance::from_std(
            noise_raw.eta_x.unwrap_or(p.eta.0),
            noise_raw.eta_y.unwrap_or(p.eta.1),
            noise_raw.eta_xy.unwrap_or(p.eta.2),
        )
        .map_err(|e| field("noise", e))?;
        let scheme = parse_scheme(raw.scheme.as_deref().unwrap_or("equidistant"))?;
        let model_tag = match raw.model.as_deref().unwrap_or("smooth") {
            "smooth" => ModelTag::E0,
            "blockwise" => ModelTag::E3,
            other => {
                return Err(field(
                    "model",
                    format!("unknown model `{other}` (smooth or blockwise)"),
                ))
            }
        };
        if model_tag == ModelTag::E3 && scheme.kind() != SchemeKind::Equidistant {
            return Err(field(
                "scheme",
                "the blockwise model is defined on the equidistant grid only",
            ));
        }
        p.path.validate(1000).map_err(|e| field("path", e))?;

        let g = raw.geometry.unwrap_or_default();
        let blocks = g.blocks.unwrap_or(30);
        if blocks == 0 || !n.is_multiple_of(blocks) {
            return Err(field(
                "geometry.blocks",
                format!("{blocks} does not divide n = {n}"),
            ));
        }
        let per_block = n / blocks;
        let geometry = BlockGeometry::new(
            n,
            blocks,
            g.cutoff.unwrap_or(per_block),
            g.coarse.unwrap_or(3.min(blocks)),
            g.window.unwrap_or(5),
        )
        .map_err(|e| field("geometry", e))?;

        let estimators = match raw.estimators {
            None => p.estimators,
            Some(list) => {
                let mut out = Vec::new();
                for s in list {
                    let m: Mode = s.parse().map_err(|e| field("estimators", e))?;
                    if out.contains(&m) {
                        return Err(field("estimators", format!("`{s}` listed twice")));
                    }
                    out.push(m);
                }
                if out.is_empty() {
                    return Err(field("estimators", "at least one estimator is required"));
                }
                out
            }
        };

        let mut noise_source = BTreeMap::new();
        for (k, v) in raw.noise_source.unwrap_or_default() {
            let m: Mode = k
                .parse()
                .map_err(|e| field(&format!("noise_source.{k}"), e))?;
            if !m.is_spectral() || m == Mode::Oracle {
                return Err(field(
                    &format!("noise_source.{k}"),
                    "only adaptive, j1, spev_x and spev_y take a noise source",
                ));
            }
            noise_source.insert(k.clone(), parse_noise_choice(&k, &v)?);
        }

        let ms = raw.msrc.unwrap_or_default();
        let msrc = match ms.tuning.as_deref().unwrap_or("grid_oracle") {
            "grid_oracle" => {
                if ms.scales.is_some() {
                    return Err(field("msrc.scales", "only used with explicit tuning"));
                }
                let [lo, hi] = ms.grid.unwrap_or([-16, 24]);
                if lo > hi {
                    return Err(field("msrc.grid", "lower exponent exceeds upper"));
                }
                MsrcSetting::GridOracle { lo, hi }
            }
            "explicit" => {
                let scales = ms
                    .scales
                    .ok_or_else(|| field("msrc.scales", "required for explicit tuning"))?;
                if scales == 0 || scales > n {
                    return Err(field("msrc.scales", format!("must lie in 1..={n}")));
                }
                MsrcSetting::Explicit { scales }
            }
            other => return Err(field("msrc.tuning", format!("unknown tuning `{other}`"))),
        };

        Ok(Self {
            preset: raw.preset,
            model: ModelSpec::new(p.path, noise, scheme),
            model_tag,
            n,
            geometry,
            estimators,
            replications,
            master_seed: raw.master_seed.unwrap_or(20_130_501),
            outputs: raw.outputs.unwrap_or_else(|| PathBuf::from("out")),
            threads: raw.threads.unwrap_or(0),
            noise_source,
            msrc,
        })
    }

    /// Noise input for `mode`; estimators without an entry use the known `H`.
    pub fn noise_input(&self, mode: Mode) -> NoiseInput {
        match self.noise_source.get(mode.as_str()) {
            Some(NoiseVariantChoice::Estimate(v)) => NoiseInput::Estimate(*v),
            _ => NoiseInput::Known(self.model.noise),
        }
    }

    /// `key=value` lines describing the resolved configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let g = &self.geometry;
        let h = &self.model.noise;
        let mut out = vec![
            ("preset".into(), self.preset.clone()),
            ("model".into(), self.model_tag.to_string()),
            ("scheme".into(), self.model.scheme.kind().to_string()),
            ("n".into(), self.n.to_string()),
            ("replications".into(), self.replications.to_string()),
            ("master_seed".into(), self.master_seed.to_string()),
            ("h_inv".into(), g.blocks.to_string()),
            ("J".into(), g.cutoff.to_string()),
            ("coarse".into(), g.coarse.to_string()),
            ("K".into(), g.window.to_string()),
            ("eta_x_sq".into(), format!("{:.16e}", h.eta_x_sq)),
            ("eta_y_sq".into(), format!("{:.16e}", h.eta_y_sq)),
            ("eta_xy".into(), format!("{:.16e}", h.eta_xy)),
            (
                "estimators".into(),
                self.estimators
                    .iter()
                    .map(|m| m.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
        ];
        for (k, v) in &self.noise_source {
            let s = match v {
                NoiseVariantChoice::Known => "known".to_string(),
                NoiseVariantChoice::Estimate(var) => var.to_string(),
            };
            out.push((format!("noise_source.{k}"), s));
        }
        out.push((
            "msrc".into(),
            match self.msrc {
                MsrcSetting::Explicit { scales } => format!("explicit:{scales}"),
                MsrcSetting::GridOracle { lo, hi } => format!("grid_oracle:{lo}..{hi}"),
            },
        ));
        out
    }
}
