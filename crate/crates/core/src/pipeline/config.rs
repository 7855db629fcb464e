use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::data::{DataFormat, SplitSpec};
use crate::ensemble::TunerConfig;
use crate::error::{Error, Result};
use crate::learners::{HyperParams, LearnerKind};
use crate::reduce::ReductionMethod;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
}

impl InputSpec {
    pub fn format(&self) -> DataFormat {
        self.format
            .unwrap_or_else(|| DataFormat::from_path(&self.path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    pub method: ReductionMethod,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Overrides applied on top of the preset defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<Map<String, Value>>,
}

impl LearnerConfig {
    pub fn resolved_hyperparams(&self) -> Result<HyperParams> {
        let defaults = HyperParams::default_for(self.kind);
        let Some(overrides) = &self.hyperparams else {
            return Ok(defaults);
        };
        let Value::Object(mut merged) = serde_json::to_value(&defaults)? else {
            unreachable!("hyperparameters serialize as an object");
        };
        for (key, value) in overrides {
            if !merged.contains_key(key) {
                return Err(Error::Config(format!("unknown hyperparameter {key:?}")));
            }
            merged.insert(key.clone(), value.clone());
        }
        let hp: HyperParams = serde_json::from_value(Value::Object(merged))
            .map_err(|e| Error::Config(format!("hyperparameters: {e}")))?;
        hp.validate(self.kind)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(hp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Seeds of `model_1` and `model_2`.
    pub seeds: [u64; 2],
}

/// A training run. Every seed is explicit; relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub inputs: Vec<InputSpec>,
    pub split: SplitConfig,
    pub reduction: ReductionConfig,
    pub learner: LearnerConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuner: Option<TunerConfig>,
    pub output_dir: PathBuf,
    /// Writes the cleaned, unscaled test split here for later evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_test_split: Option<PathBuf>,
}

/// A parsed config plus the SHA-256 of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub sha256: String,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let text =
            std::str::from_utf8(&bytes).map_err(|_| Error::Config("config is not UTF-8".into()))?;
        let mut config = PipelineConfig::from_json(text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(LoadedConfig {
            config,
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for input in &mut self.inputs {
            resolve(&mut input.path);
        }
        resolve(&mut self.output_dir);
        if let Some(p) = &mut self.export_test_split {
            resolve(p);
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train,
            validation_fraction: self.split.validation,
            test_fraction: self.split.test,
            seed: self.split.seed,
        }
    }

    /// Checks everything knowable without reading the inputs.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.inputs.is_empty() {
            return Err(Error::Config("at least one input is required".into()));
        }
        self.split_spec()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.reduction.k == 0 {
            return Err(Error::Config("reduction k must be at least 1".into()));
        }
        self.learner.resolved_hyperparams()?;
        if let Some(t) = &self.tuner {
            t.validate()?;
        }
        Ok(())
    }

    /// Checks `k` against the input width, read from file headers only.
    pub fn validate_dims(&self, d: usize) -> Result<()> {
        if self.reduction.k > d {
            return Err(Error::Config(format!(
                "reduction k={} exceeds the {d} input features",
                self.reduction.k
            )));
        }
        Ok(())
    }
}
