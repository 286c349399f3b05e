//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vdbf::analysis::WindowOptions;
use vdbf::models::{
    hubbard_neel_occupation, parse_occupation, Boundary, LatticeSpec, ModelKind, ModelSpec,
};
use vdbf::vdbf::VdbfConfig;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Wall-clock cap in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_wall_time: Option<f64>,
    pub model: ModelBlock,
    #[serde(default)]
    pub vdbf: VdbfBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Heisenberg,
    Hubbard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: Kind,
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    /// A `0`/`1` string over qubits, or `"neel"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_occupation: Option<String>,
}

/// Unset fields fall back to [`VdbfConfig::default`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdbfBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_thresh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_clip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_variance: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_stride: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_r_squared: Option<bool>,
    /// Divide the fit-disagreement term of the window score by the site count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_site_score: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowBlock {
    pub k: Vec<usize>,
    pub ds: f64,
    pub steps: usize,
}

fn config_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = RunConfig::parse(&text)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(config_error(
                "version",
                format!(
                    "unsupported version {} (expected {CONFIG_VERSION})",
                    cfg.version
                ),
            ));
        }
        cfg.model_spec()?;
        cfg.vdbf_config()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let m = &self.model;
        let lattice =
            LatticeSpec::new(m.rows, m.cols, m.boundary).map_err(|e| config_error("model", e))?;
        let kind = match m.kind {
            Kind::Heisenberg => {
                for (name, v) in [("t", m.t), ("u", m.u)] {
                    if v.is_some() {
                        return Err(config_error(
                            &format!("model.{name}"),
                            "only valid for Hubbard models",
                        ));
                    }
                }
                ModelKind::Heisenberg {
                    coupling: m.coupling.unwrap_or(1.0),
                }
            }
            Kind::Hubbard => {
                if m.coupling.is_some() {
                    return Err(config_error(
                        "model.coupling",
                        "only valid for Heisenberg models",
                    ));
                }
                let t =
                    m.t.ok_or_else(|| config_error("model.t", "required for Hubbard models"))?;
                let u =
                    m.u.ok_or_else(|| config_error("model.u", "required for Hubbard models"))?;
                ModelKind::Hubbard { t, u }
            }
        };
        let reference_occupation = match m.reference_occupation.as_deref() {
            None if m.kind == Kind::Hubbard => {
                return Err(config_error(
                    "model.reference_occupation",
                    "required for Hubbard models (a 0/1 string over qubits, or \"neel\")",
                ))
            }
            None => None,
            Some("neel") => Some(match m.kind {
                Kind::Heisenberg => lattice.neel_occupation(),
                Kind::Hubbard => hubbard_neel_occupation(&lattice),
            }),
            Some(s) => Some(
                parse_occupation(s).map_err(|e| config_error("model.reference_occupation", e))?,
            ),
        };
        let spec = ModelSpec {
            kind,
            lattice,
            reference_occupation,
        };
        spec.validate()
            .map_err(|e| config_error("model.reference_occupation", e))?;
        Ok(spec)
    }

    pub fn vdbf_config(&self) -> Result<VdbfConfig, CliError> {
        let d = VdbfConfig::default();
        let b = &self.vdbf;
        let cfg = VdbfConfig {
            epsilon: b.epsilon.unwrap_or(d.epsilon),
            n_rots: b.n_rots.unwrap_or(d.n_rots),
            max_iter: b.max_iter.unwrap_or(d.max_iter),
            conv_thresh: b.conv_thresh.unwrap_or(d.conv_thresh),
            gen_clip: b.gen_clip.unwrap_or(d.gen_clip),
            track_variance: b.track_variance.unwrap_or(d.track_variance),
            variance_stride: b.variance_stride.unwrap_or(d.variance_stride),
            max_wall_time: self.max_wall_time,
        };
        cfg.validate().map_err(|e| config_error("vdbf", e))?;
        Ok(cfg)
    }

    pub fn window_options(&self, n_sites: usize) -> WindowOptions {
        let a = &self.analysis;
        let d = WindowOptions::default();
        WindowOptions {
            min_window: a.min_window.unwrap_or(d.min_window),
            literal_r_squared: a.literal_r_squared.unwrap_or(d.literal_r_squared),
            normalize_by: a.per_site_score.unwrap_or(false).then_some(n_sites as f64),
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let m = &self.model;
            let kind = match m.kind {
                Kind::Heisenberg => "heisenberg",
                Kind::Hubbard => "hubbard",
            };
            format!("{kind}-{}x{}", m.rows, m.cols)
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(self.label()))
    }
}
