//! Declarative run configuration (TOML) with schema validation. Unknown
//! keys are rejected so an experiment is reproducible from the file alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use oauc_core::data::{self, Dataset, DatasetConfig};
use oauc_core::eval::{Algorithm, Grids, HyperParams, ScaleScope, TrainOptions};
use oauc_core::kernel::EvictionRule;
use oauc_core::synth;

/// Environment variable naming the directory that relative dataset paths
/// resolve against.
pub const DATA_DIR_ENV: &str = "OAUC_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub seed: u64,
    /// File-backed input; `train` and `experiment` require it.
    pub dataset: Option<DatasetConfig>,
    /// Synthetic input; `regret` accepts either this or `dataset`.
    pub stream: Option<StreamConfig>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum StreamConfig {
    /// Two Gaussian classes separated along the first axis.
    GaussianPairs { t: usize, dim: usize, separation: f64, noise: f64 },
    /// Concentric 2-D rings; not linearly rankable.
    Rings { t: usize, noise: f64 },
}

impl StreamConfig {
    pub fn generate(&self, seed: u64) -> Vec<data::LabeledInstance> {
        match *self {
            StreamConfig::GaussianPairs { t, dim, separation, noise } => {
                synth::gaussian_pair_stream(t, dim, separation, noise, seed)
            }
            StreamConfig::Rings { t, noise } => synth::ring_stream(t, noise, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub width: Option<f64>,
    pub c: Option<f64>,
    /// Per-class support budget for the kernel learners.
    pub budget: Option<usize>,
}

impl Params {
    pub fn hyper(&self) -> HyperParams {
        HyperParams { lambda: self.lambda, eta: self.eta, width: self.width, c: self.c }
    }
}

/// Grid selection for `experiment`: a named preset, optionally overridden
/// per parameter with explicit value lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub mode: GridMode,
    pub lambda: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub width: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// 2^e for integer e in [-10, 10]; 21 values per parameter.
    Full,
    /// Every other exponent; 11 values per parameter.
    #[default]
    Subsampled,
    /// Only the single assignment in `[params]`.
    Fixed,
}

impl GridSpec {
    pub fn build(&self, params: &Params) -> Grids {
        let mut grids = match self.mode {
            GridMode::Full => Grids::full(),
            GridMode::Subsampled => Grids::subsampled(),
            GridMode::Fixed => Grids::single(params.hyper()),
        };
        if let Some(v) = &self.lambda {
            grids.lambda = v.clone();
        }
        if let Some(v) = &self.eta {
            grids.eta = v.clone();
        }
        if let Some(v) = &self.width {
            grids.width = v.clone();
        }
        if let Some(v) = &self.c {
            grids.c = v.clone();
        }
        grids
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub zero_history_updates: bool,
    #[serde(default)]
    pub eviction_rule: EvictionRule,
    #[serde(default)]
    pub strict_ties: bool,
    #[serde(default)]
    pub scale_scope: ScaleScope,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Field-path validation beyond what serde enforces.
    pub fn validate(&self) -> anyhow::Result<()> {
        let p = &self.params;
        match self.algorithm {
            Algorithm::OaucS | Algorithm::OaucM => {
                if p.lambda.is_none() && self.grids.mode == GridMode::Fixed {
                    bail!("params.lambda: required for algorithm {:?}", self.algorithm);
                }
            }
            Algorithm::OaucMConst => {
                if self.grids.mode == GridMode::Fixed {
                    if p.lambda.is_none() {
                        bail!("params.lambda: required for algorithm oauc-m-const");
                    }
                    if p.eta.is_none() {
                        bail!("params.eta: required for algorithm oauc-m-const");
                    }
                }
            }
            Algorithm::OkaucS | Algorithm::OkaucM => {
                if self.grids.mode == GridMode::Fixed {
                    if p.lambda.is_none() {
                        bail!("params.lambda: required for algorithm {:?}", self.algorithm);
                    }
                    if p.width.is_none() {
                        bail!("params.width: required for algorithm {:?}", self.algorithm);
                    }
                }
            }
            Algorithm::Pa1 => {
                if self.grids.mode == GridMode::Fixed && p.c.is_none() {
                    bail!("params.c: required for algorithm pa1");
                }
            }
            Algorithm::Perceptron => {}
        }
        for (name, value) in [
            ("params.lambda", p.lambda),
            ("params.eta", p.eta),
            ("params.width", p.width),
            ("params.c", p.c),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    bail!("{name}: must be a positive finite number, got {v}");
                }
            }
        }
        if p.budget == Some(0) {
            bail!("params.budget: must be at least 1");
        }
        Ok(())
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            budget: self.params.budget.unwrap_or(100),
            eviction_rule: self.flags.eviction_rule,
            strict_ties: self.flags.strict_ties,
            scale_scope: self.flags.scale_scope,
            ..TrainOptions::default()
        }
    }

    /// Loads, binarizes, and (under `scale_scope = global`) scales the
    /// configured dataset. Relative paths resolve against `OAUC_DATA_DIR`.
    pub fn load_dataset(&self) -> anyhow::Result<Dataset> {
        let ds = self
            .dataset
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("dataset: required for this command"))?;
        let path = resolve_data_path(&ds.path);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading dataset {}", path.display()))?;
        let raw = data::parse_libsvm(&text, ds.dimension_hint)?;
        let dataset = data::binarize(&raw, &ds.positive)?;
        if self.flags.scale_scope == ScaleScope::Global {
            let (scaled, _) = data::scale_features(&dataset)?;
            Ok(scaled)
        } else {
            Ok(dataset)
        }
    }
}

pub fn resolve_data_path(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() {
        return p;
    }
    match std::env::var(DATA_DIR_ENV) {
        Ok(root) if !root.is_empty() => PathBuf::from(root).join(p),
        _ => p,
    }
}
