//! On-disk artifacts: sample files (JSON), weight artifacts (TOML), training
//! histories (CSV), evaluation reports and comparisons (JSON) and run
//! manifests (JSON). Every writer is deterministic: no timestamps, no
//! absolute paths, floats in shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smirl_core::eval::{Comparison, MethodReport, MethodSummary};
use smirl_core::irl::HistoryEntry;
use smirl_core::{FeatureKind, FeatureNormalizer, RewardParams, SamplerConfig, VehicleParams};

use crate::error::{io, Error, Result};
use crate::pipeline::{Failure, SampleRecord};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| io(path, e))?))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = fs::File::open(path).map_err(|e| io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

/// Sample sets keyed by demonstration id, with the raw member features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesFile {
    pub version: u32,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub vehicle: VehicleParams,
    /// Bins per dimension when the sets were re-distributed.
    #[serde(default)]
    pub redistributed: Option<usize>,
    pub sets: Vec<SampleRecord>,
    pub failures: Vec<Failure>,
}

impl SamplesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let f: SamplesFile = read_json(path)?;
        if f.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported samples version {}",
                path.display(),
                f.version
            )));
        }
        Ok(f)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec(self).map_err(|e| Error::Format(e.to_string()))?;
        v.push(b'\n');
        Ok(v)
    }
}

/// Learned weights with everything needed to score new trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaArtifact {
    pub version: u32,
    pub method: String,
    pub features: Vec<String>,
    pub theta: Vec<f64>,
    /// `theta / max |theta_j|`, for comparison across methods.
    pub theta_scaled: Vec<f64>,
    pub beta: f64,
    pub normalizer: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default)]
    pub redistribution_bins: Option<usize>,
    /// Demonstrations left out of training.
    #[serde(default)]
    pub dropped: Vec<String>,
    pub config_sha256: String,
}

impl ThetaArtifact {
    pub fn new(method: &str, theta: Vec<f64>, beta: f64, normalizer: &FeatureNormalizer) -> Self {
        let m = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        ThetaArtifact {
            version: FORMAT_VERSION,
            method: method.to_string(),
            features: FeatureKind::kinds(theta.len()).iter().map(|k| k.name().to_string()).collect(),
            theta_scaled: theta.iter().map(|t| if m > 0.0 { t / m } else { 0.0 }).collect(),
            theta,
            beta,
            normalizer: normalizer.max_per_feature.clone(),
            converged: false,
            iterations: 0,
            redistribution_bins: None,
            dropped: Vec::new(),
            config_sha256: String::new(),
        }
    }

    pub fn reward_params(&self) -> Result<RewardParams> {
        Ok(RewardParams::new(
            self.theta.clone(),
            self.beta,
            FeatureNormalizer::new(self.normalizer.clone())?,
        )?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }
}

/// Ground-truth sidecar of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub scenario: String,
    pub features: Vec<String>,
    pub theta: Vec<f64>,
    pub beta: f64,
    /// Per-feature maxima of the generation pools; `theta` applies to raw
    /// features divided by these.
    pub normalizer: Vec<f64>,
    pub seed: u64,
    pub noise: f64,
    pub train_cases: Vec<String>,
    pub test_cases: Vec<String>,
    pub skipped: Vec<Failure>,
}

pub fn history_csv(history: &[HistoryEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["k", "gap", "log_likelihood"]).map_err(err)?;
    for h in history {
        w.write_record([h.k.to_string(), h.gap.to_string(), h.log_likelihood.to_string()])
            .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Per-case metrics of every evaluated method on one test corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub samples_sha256: String,
    pub test_demos_sha256: Option<String>,
    pub bins: Option<usize>,
    pub seed: u64,
    pub features: Vec<String>,
    pub methods: Vec<MethodReport>,
    pub summaries: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub version: u32,
    pub samples_sha256: String,
    pub methods: Vec<String>,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileHash {
            name: path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            sha256: file_sha256(path)?,
        })
    }
}

/// Record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            version: TOOL_VERSION.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileHash::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileHash::of(path)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_bytes(&dir.join("manifest.json"), &to_json(self)?)
    }
}
