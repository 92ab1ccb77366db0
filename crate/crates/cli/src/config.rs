//! Run configuration files.
//!
//! A run file is TOML. It either spells out a whole scenario or names a
//! `preset` and overrides some of its sections; an override replaces the
//! preset's section wholesale. Unknown keys are errors.

use std::fs;
use std::path::Path;

use coevolve::dynamics::Regime;
use coevolve::scenario::{
    DeclaredConstants, FluxConfig, GraphConfig, InitialConfig, IntegratorSection, OmegaConfig,
    PicardSection, StudyConfig, VelocityConfig,
};
use coevolve::{preset, preset_names, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_true() -> bool {
    true
}

fn default_eta_stride() -> usize {
    10
}

/// Which files a run writes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub trajectory: bool,
    #[serde(default = "default_true")]
    pub audit: bool,
    #[serde(default = "default_true")]
    pub summary: bool,
    /// Weight snapshots go into the trajectory every `eta_stride` samples;
    /// 0 leaves them out.
    #[serde(default = "default_eta_stride")]
    pub eta_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: true,
            audit: true,
            summary: true,
            eta_stride: default_eta_stride(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    preset: Option<String>,
    output: Option<OutputConfig>,
    horizon: Option<f64>,
    mass_bound: Option<f64>,
    seed: Option<u64>,
    graph: Option<GraphConfig>,
    velocity: Option<VelocityConfig>,
    omega: Option<OmegaConfig>,
    flux: Option<FluxConfig>,
    regime: Option<Regime>,
    initial: Option<InitialConfig>,
    integrator: Option<IntegratorSection>,
    picard: Option<PicardSection>,
    constants: Option<DeclaredConstants>,
    study: Option<StudyConfig>,
}

/// A fully resolved run: the scenario with every default applied, and the
/// output settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
}

/// Command-line overrides applied after the file is resolved.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub eta_stride: Option<usize>,
}

fn pick<T>(field: &str, value: Option<T>, base: Option<T>) -> Result<T, CliError> {
    value
        .or(base)
        .ok_or_else(|| CliError::Config(format!("missing field `{field}` (no preset supplies it)")))
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, ov).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, ov: &Overrides) -> Result<Self, CliError> {
        let file: RunFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let base = match &file.preset {
            Some(name) => Some(preset(name).ok_or_else(|| {
                let known: Vec<&str> = preset_names().iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown preset `{name}`; known presets: {}",
                    known.join(", ")
                ))
            })?),
            None => None,
        };
        let b = base.as_ref();
        let mut scenario = ScenarioConfig {
            horizon: pick("horizon", file.horizon, b.map(|b| b.horizon))?,
            mass_bound: pick("mass_bound", file.mass_bound, b.map(|b| b.mass_bound))?,
            seed: file.seed.or(b.map(|b| b.seed)).unwrap_or(0),
            graph: pick("graph", file.graph, b.map(|b| b.graph.clone()))?,
            velocity: pick("velocity", file.velocity, b.map(|b| b.velocity.clone()))?,
            omega: pick("omega", file.omega, b.map(|b| b.omega.clone()))?,
            flux: file.flux.or(b.map(|b| b.flux)).unwrap_or_default(),
            regime: pick("regime", file.regime, b.map(|b| b.regime))?,
            initial: pick("initial", file.initial, b.map(|b| b.initial.clone()))?,
            integrator: pick("integrator", file.integrator, b.map(|b| b.integrator))?,
            picard: file.picard.or(b.and_then(|b| b.picard)),
            constants: file.constants.or(b.and_then(|b| b.constants)),
            study: file.study.or(b.and_then(|b| b.study.clone())),
        };
        let mut output = file.output.unwrap_or_default();
        if let Some(s) = ov.seed {
            scenario.seed = s;
        }
        if let Some(dt) = ov.dt {
            scenario.integrator.dt = dt;
        }
        if let Some(k) = ov.eta_stride {
            output.eta_stride = k;
        }
        Ok(Self {
            preset: file.preset,
            scenario,
            output,
        })
    }
}
