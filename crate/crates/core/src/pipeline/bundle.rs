use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ReductionConfig;
use crate::data::{CleanReport, Dataset, FeatureMatrix};
use crate::ensemble::{GridPoint, TuneResult, VotingEnsemble};
use crate::error::{Error, Result};
use crate::learners::{ForestModel, HyperParams, LearnerKind};
use crate::metrics::{evaluate, MetricsReport};
use crate::preprocess::ScalerChain;
use crate::reduce::Reducer;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKSUM_FILE: &str = "SHA256SUMS";
const SCALERS_FILE: &str = "scalers.json";
const REDUCER_FILE: &str = "reducer.json";
const MODEL_1_FILE: &str = "model_1.json";
const MODEL_2_FILE: &str = "model_2.json";
const VOTE_FILE: &str = "vote.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub partition: u64,
    pub selector: Option<u64>,
    pub model_1: u64,
    pub model_2: u64,
    pub tuner: Option<[u64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub partition_a: usize,
    pub partition_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTelemetry {
    pub stage: String,
    pub wall_ms: f64,
    pub rows: usize,
    pub cols: usize,
}

/// Run-dependent facts: everything here may differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub created_unix_secs: u64,
    pub threads: usize,
    pub total_wall_ms: f64,
    /// Largest estimated feature-matrix footprint held by one stage.
    pub peak_matrix_bytes: u64,
    pub stages: Vec<StageTelemetry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetrics {
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_sha256: String,
    pub learner: LearnerKind,
    pub reduction: ReductionConfig,
    pub input_dim: usize,
    pub seeds: Seeds,
    pub clean_report: CleanReport,
    pub split_sizes: SplitSizes,
    pub stage_trace: Vec<String>,
    /// ROC points are omitted here; `evaluate` reproduces them.
    pub metrics: PhaseMetrics,
    pub telemetry: Telemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub w1: f64,
    pub w2: f64,
    pub grid_report: Vec<GridPoint>,
    pub hyperparams: [HyperParams; 2],
    pub tuner_trace: Option<[TuneResult; 2]>,
}

/// Everything needed to score raw feature vectors, plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub manifest: Manifest,
    pub scalers: ScalerChain,
    pub reducer: Reducer,
    pub ensemble: VotingEnsemble,
    pub vote: VoteRecord,
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptBundle(msg.into())
}

fn sibling(dir: &Path, suffix: &str) -> PathBuf {
    let mut name = dir
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "bundle".into());
    name.push(suffix);
    dir.with_file_name(name)
}

/// Exclusive lock held as `<bundle>.lock` for the duration of a write.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock> {
        let path = sibling(dir, ".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{} is held by another writer", path.display()),
                )))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl ModelBundle {
    pub fn input_dim(&self) -> usize {
        self.scalers.feature_count
    }

    /// Serialized files other than the manifest, in checksum order.
    fn payload(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        Ok(vec![
            (MODEL_1_FILE, to_json(&self.ensemble.model_1)?),
            (MODEL_2_FILE, to_json(&self.ensemble.model_2)?),
            (REDUCER_FILE, to_json(&self.reducer)?),
            (SCALERS_FILE, to_json(&self.scalers)?),
            (VOTE_FILE, to_json(&self.vote)?),
        ])
    }

    /// Writes the bundle to a scratch directory and renames it into place,
    /// replacing an earlier bundle at `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        if dir.exists() && !dir.join(MANIFEST_FILE).exists() && fs::read_dir(dir)?.next().is_some()
        {
            return Err(Error::Config(format!(
                "{} exists and is not a model bundle",
                dir.display()
            )));
        }
        if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let _lock = DirLock::acquire(dir)?;
        let scratch = sibling(dir, ".partial");
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        let written = self.write_files(&scratch).and_then(|()| {
            if dir.exists() {
                fs::remove_dir_all(dir)?;
            }
            fs::rename(&scratch, dir)?;
            Ok(())
        });
        if written.is_err() {
            let _ = fs::remove_dir_all(&scratch);
        }
        written
    }

    fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut sums = String::new();
        for (name, bytes) in self.payload()? {
            fs::write(dir.join(name), &bytes)?;
            sums.push_str(&format!(
                "{}  {name}\n",
                hex::encode(Sha256::digest(&bytes))
            ));
        }
        fs::write(dir.join(CHECKSUM_FILE), sums)?;
        fs::write(dir.join(MANIFEST_FILE), to_json(&self.manifest)?)?;
        File::open(dir)?.sync_all()?;
        Ok(())
    }

    /// Loads and verifies checksums, format version and internal shapes.
    pub fn load(dir: &Path) -> Result<ModelBundle> {
        let read =
            |name: &str| fs::read(dir.join(name)).map_err(|e| corrupt(format!("{name}: {e}")));
        let sums = String::from_utf8(read(CHECKSUM_FILE)?)
            .map_err(|_| corrupt("checksum file is not UTF-8"))?;
        let mut expected = BTreeMap::new();
        for line in sums.lines() {
            let (digest, name) = line
                .split_once("  ")
                .ok_or_else(|| corrupt(format!("bad checksum line {line:?}")))?;
            expected.insert(name.to_string(), digest.to_string());
        }
        let mut files = BTreeMap::new();
        for name in [
            MODEL_1_FILE,
            MODEL_2_FILE,
            REDUCER_FILE,
            SCALERS_FILE,
            VOTE_FILE,
        ] {
            let bytes = read(name)?;
            let digest = hex::encode(Sha256::digest(&bytes));
            if expected.remove(name).as_deref() != Some(digest.as_str()) {
                return Err(corrupt(format!("checksum mismatch for {name}")));
            }
            files.insert(name, bytes);
        }
        if let Some(extra) = expected.keys().next() {
            return Err(corrupt(format!("unexpected checksum entry {extra}")));
        }

        let manifest: Manifest = parse(MANIFEST_FILE, &read(MANIFEST_FILE)?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(corrupt(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let scalers: ScalerChain = parse(SCALERS_FILE, &files[SCALERS_FILE])?;
        let reducer: Reducer = parse(REDUCER_FILE, &files[REDUCER_FILE])?;
        let model_1: ForestModel = parse(MODEL_1_FILE, &files[MODEL_1_FILE])?;
        let model_2: ForestModel = parse(MODEL_2_FILE, &files[MODEL_2_FILE])?;
        let vote: VoteRecord = parse(VOTE_FILE, &files[VOTE_FILE])?;

        reducer.validate()?;
        model_1.validate()?;
        model_2.validate()?;
        if reducer.input_dim() != scalers.feature_count
            || model_1.n_features != reducer.output_dim()
            || manifest.input_dim != scalers.feature_count
        {
            return Err(corrupt("stage dimensions do not chain"));
        }
        if vote.w2 != 1.0 - vote.w1 {
            return Err(corrupt("vote weights do not sum to one"));
        }
        let ensemble = VotingEnsemble::new(model_1, model_2)?
            .with_weight(vote.w1)
            .map_err(|e| corrupt(e.to_string()))?;
        Ok(ModelBundle {
            manifest,
            scalers,
            reducer,
            ensemble,
            vote,
        })
    }

    /// Raw features in, combined probabilities and labels out.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<u8>)> {
        x.expect_cols(self.input_dim())?;
        x.ensure_finite()?;
        let scaled = self.scalers.transform_matrix(x)?;
        let reduced = self.reducer.transform_matrix(&scaled)?;
        self.ensemble.predict(&reduced)
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<MetricsReport> {
        let (p, _) = self.predict(data.features())?;
        evaluate(data.labels(), &p)
    }
}

fn parse<T: DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| corrupt(format!("{name}: {e}")))
}
