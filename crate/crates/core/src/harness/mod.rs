//! Run configuration and the evaluate, sweep and pipeline drivers.

mod evaluate;
mod pipeline;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetError;
use crate::prompting::{BackendConfig, BackendError, PromptSettings};
use crate::stats::StatsError;

pub use evaluate::{
    check_seed_execution, evaluate, records_to_csv, run_instances, sweep, sweep_to_csv, write_evaluation, EvalOutcome,
    EvalRecord, SweepRow,
};
pub use pipeline::{run_pipeline, PipelineOutput};

pub const DEFAULT_SWEEP_SUBSET: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Range(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn default_shots() -> usize {
    4
}
fn default_temperature() -> f64 {
    0.5
}
fn default_workers() -> usize {
    4
}
fn default_seed() -> u64 {
    42
}
fn default_max_new_tokens() -> u32 {
    256
}
fn default_timeout() -> u64 {
    50
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Exemplars per prompt for backends without their own `shots`.
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(rename = "backend", default)]
    pub backends: Vec<BackendConfig>,
}

impl RunConfig {
    /// A hermetic config: one template baseline over `corpus`.
    pub fn baseline(corpus: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus: corpus.into(),
            out: default_out(),
            shots: default_shots(),
            temperature: default_temperature(),
            workers: default_workers(),
            seed: default_seed(),
            max_new_tokens: default_max_new_tokens(),
            timeout_seconds: default_timeout(),
            backends: vec![BackendConfig::template("template-baseline")],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Load a TOML file; relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let mut config = Self::from_toml(&fs::read_to_string(path).map_err(io_err(path))?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.corpus = base.join(&config.corpus);
        config.out = base.join(&config.out);
        Ok(config)
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        if self.workers == 0 {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(HarnessError::Config(format!("temperature {} is outside [0, 2]", self.temperature)));
        }
        if self.backends.is_empty() {
            return Err(HarnessError::Config("no [[backend]] entries".into()));
        }
        let mut labels: Vec<&str> = Vec::new();
        for b in &self.backends {
            b.check()?;
            if labels.contains(&b.label()) {
                return Err(HarnessError::Config(format!("backend name `{}` is used twice", b.label())));
            }
            labels.push(b.label());
        }
        Ok(())
    }

    pub fn shots_for(&self, backend: &BackendConfig) -> usize {
        backend.shots.unwrap_or(self.shots)
    }

    pub fn max_shots(&self) -> usize {
        self.backends.iter().map(|b| self.shots_for(b)).max().unwrap_or(0)
    }

    pub fn settings_for(&self, backend: &BackendConfig) -> PromptSettings {
        PromptSettings {
            temperature: self.temperature,
            max_new_tokens: self.max_new_tokens,
            timeout_seconds: self.timeout_seconds,
            context_budget: backend.context_budget,
        }
    }

    /// Refuse remote backends unless explicitly allowed.
    pub fn require_hermetic(&self, allow_remote: bool) -> Result<(), HarnessError> {
        match self.backends.iter().find(|b| b.is_remote()) {
            Some(b) if !allow_remote => Err(HarnessError::Config(format!(
                "backend `{}` is remote; pass --allow-remote to use it",
                b.label()
            ))),
            _ => Ok(()),
        }
    }
}
