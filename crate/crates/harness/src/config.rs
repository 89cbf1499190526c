//! Run configuration: a sectioned TOML file plus `section.key=value` overrides.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use pcgraph::topology::parse_kinds;
use pcgraph::{
    ActivationKind, Backend, ConnectionKind, InferenceConfig, InitMode, LayerSpec, PredictionConvention,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub inference: InferenceSection,
    pub training: TrainingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sizes: Vec<usize>,
    #[serde(default = "default_connections")]
    pub connections: String,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default = "default_convention")]
    pub convention: String,
    /// Weight std is `init_scale / sqrt(fan_in)` per row.
    #[serde(default = "one")]
    pub init_scale: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_tolerance")]
    pub stop_tolerance: f64,
    /// `feedforward`, `zero` or `gaussian`.
    #[serde(default = "default_init")]
    pub init: String,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    /// `auto`, `exact` or `gradientdescent`; applies to evaluation.
    #[serde(default = "default_solver")]
    pub solver: String,
    /// `auto`, `dense` or `sparse`.
    #[serde(default = "default_backend")]
    pub backend: String,
}

impl Default for InferenceSection {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            step_size: default_step_size(),
            stop_tolerance: default_tolerance(),
            init: default_init(),
            init_std: default_init_std(),
            solver: default_solver(),
            backend: default_backend(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    #[serde(default = "one_usize")]
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dataset: PathBuf,
    /// Fraction of samples held out for testing; 0 evaluates on the training set.
    #[serde(default)]
    pub test_fraction: f64,
    #[serde(default = "one_usize")]
    pub workers: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub checkpoint: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    /// Write measured wall-clock seconds; when false the column is 0 so
    /// metrics files are reproducible byte for byte.
    #[serde(default)]
    pub record_time: bool,
}

fn default_connections() -> String {
    "forward".into()
}
fn default_activation() -> String {
    "tanh".into()
}
fn default_convention() -> String {
    "matrixactivation".into()
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_steps() -> usize {
    100
}
fn default_step_size() -> f64 {
    0.1
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_init() -> String {
    "feedforward".into()
}
fn default_init_std() -> f64 {
    0.1
}
fn default_solver() -> String {
    "auto".into()
}
fn default_backend() -> String {
    "auto".into()
}

/// How testing-mode outputs are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSolver {
    /// Exact forward recursion when the mask is strictly forward, else descent.
    Auto,
    Exact,
    GradientDescent,
}

/// Initialization choice before it is resolved against a concrete mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitChoice {
    FeedForward,
    Zero,
    Gaussian { std: f64 },
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| config_err(format!("{e}")))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: RunConfig =
            toml::Value::Table(table).try_into().map_err(|e| config_err(format!("{e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn spec(&self) -> Result<LayerSpec> {
        Ok(LayerSpec::new(self.model.sizes.clone())?)
    }

    pub fn kinds(&self) -> Result<BTreeSet<ConnectionKind>> {
        Ok(parse_kinds(&self.model.connections)?)
    }

    pub fn activation(&self) -> Result<ActivationKind> {
        Ok(self.model.activation.parse()?)
    }

    pub fn convention(&self) -> Result<PredictionConvention> {
        Ok(self.model.convention.parse()?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.model.seed.ok_or_else(|| config_err("model.seed is required"))
    }

    pub fn init_choice(&self) -> Result<InitChoice> {
        match self.inference.init.trim().to_ascii_lowercase().as_str() {
            "feedforward" => Ok(InitChoice::FeedForward),
            "zero" => Ok(InitChoice::Zero),
            "gaussian" => Ok(InitChoice::Gaussian { std: self.inference.init_std }),
            other => Err(config_err(format!("unknown init mode '{other}'"))),
        }
    }

    pub fn eval_solver(&self) -> Result<EvalSolver> {
        match self.inference.solver.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(EvalSolver::Auto),
            "exact" => Ok(EvalSolver::Exact),
            "gradientdescent" => Ok(EvalSolver::GradientDescent),
            other => Err(config_err(format!("unknown solver '{other}'"))),
        }
    }

    pub fn backend(&self) -> Result<Backend> {
        match self.inference.backend.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Backend::Auto),
            "dense" => Ok(Backend::Dense),
            "sparse" => Ok(Backend::Sparse),
            other => Err(config_err(format!("unknown backend '{other}'"))),
        }
    }

    /// Gradient-descent settings; the init mode is filled in per sample.
    pub fn inference_config(&self) -> Result<InferenceConfig> {
        Ok(InferenceConfig {
            max_steps: self.inference.steps,
            step_size: self.inference.step_size,
            stop_tolerance: self.inference.stop_tolerance,
            backend: self.backend()?,
            init: InitMode::Zero,
            ..InferenceConfig::default()
        })
    }

    /// Checks every field that training needs.
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        self.kinds()?;
        self.activation()?;
        self.convention()?;
        self.seed()?;
        self.init_choice()?;
        self.eval_solver()?;
        self.backend()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{name} must be positive, got {v}")))
            }
        };
        positive("model.init_scale", self.model.init_scale)?;
        positive("inference.step_size", self.inference.step_size)?;
        if !(self.training.learning_rate >= 0.0 && self.training.learning_rate.is_finite()) {
            return Err(config_err("training.learning_rate must be nonnegative"));
        }
        if let InitChoice::Gaussian { std } = self.init_choice()? {
            positive("inference.init_std", std)?;
        }
        if self.inference.stop_tolerance.is_nan() || self.inference.stop_tolerance < 0.0 {
            return Err(config_err("inference.stop_tolerance must be nonnegative"));
        }
        if self.inference.steps == 0 || self.training.epochs == 0 || self.training.batch_size == 0 {
            return Err(config_err("steps, epochs and batch_size must be positive"));
        }
        if self.training.workers == 0 {
            return Err(config_err("training.workers must be positive"));
        }
        if !(0.0..1.0).contains(&self.training.test_fraction) {
            return Err(config_err("training.test_fraction must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Applies `section.key=value`. The value is read as a TOML literal, falling
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{assignment}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad override key '{key}'")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cursor = table;
    for p in parents {
        cursor = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_err(format!("'{p}' is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
