//! Configuration-driven runner for the `rankone-core` experiments.
//!
//! Each pipeline writes `out/<experiment>/<name>.csv`, a `summary.json` with the headline
//! numbers and a `manifest.json` with the resolved config, SHA-256 hashes of every CSV and
//! the per-check outcomes. Nothing time-dependent is written, so a fixed config reproduces
//! the CSV bytes exactly, independent of the thread count.

pub mod config;
pub mod experiments;
pub mod target;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rankone_core::matrix::{corpus, ScalarFunction};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rankone_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// In-memory result of one pipeline before anything is written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// `(name, csv)`; written as `<name>.csv`.
    pub artifacts: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Map<String, Value>,
}

impl Outcome {
    pub fn artifact(&mut self, name: &str, csv: String) {
        self.artifacts.push((name.to_string(), csv));
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) -> Result<(), CliError> {
        self.summary.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub experiment: Experiment,
    /// File name to lowercase hex SHA-256.
    pub artifacts: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub pipelines: Vec<PipelineRecord>,
    pub passed: bool,
    pub versions: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("rankone-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("rankone-core".to_string(), rankone_core::VERSION.to_string()),
    ])
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_pipeline(cfg: &ExperimentConfig, experiment: Experiment, outcome: &Outcome) -> Result<PipelineRecord, CliError> {
    let dir = cfg.out.join(experiment.name());
    fs::create_dir_all(&dir)?;
    let mut artifacts = BTreeMap::new();
    for (name, csv) in &outcome.artifacts {
        let file = format!("{name}.csv");
        fs::write(dir.join(&file), csv)?;
        artifacts.insert(file, sha256_hex(csv.as_bytes()));
    }
    write_json(&dir.join("summary.json"), &outcome.summary)?;
    let record = PipelineRecord {
        experiment,
        artifacts,
        checks: outcome.checks.clone(),
        passed: outcome.passed(),
    };
    let manifest = RunManifest {
        config: cfg.for_pipeline(experiment),
        pipelines: vec![record.clone()],
        passed: record.passed,
        versions: versions(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(record)
}

fn run_pipelines(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let list: Vec<Experiment> = match cfg.experiment {
        Experiment::All => Experiment::PIPELINES.to_vec(),
        e => vec![e],
    };
    let mut pipelines = Vec::new();
    for e in list {
        let outcome = experiments::run_one(&cfg.for_pipeline(e))?;
        pipelines.push(write_pipeline(cfg, e, &outcome)?);
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        passed: pipelines.iter().all(|p| p.passed),
        pipelines,
        versions: versions(),
    };
    if cfg.experiment == Experiment::All {
        fs::create_dir_all(&cfg.out)?;
        write_json(&cfg.out.join("manifest.json"), &manifest)?;
    }
    Ok(manifest)
}

/// Runs the configured pipeline(s) and writes their outputs; `threads` pins a private pool.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(|| run_pipelines(cfg)),
        None => run_pipelines(cfg),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub shape: String,
    pub flags: Vec<String>,
}

/// Corpus entries in registration order, optionally only those carrying `flag`.
pub fn list_corpus(flag: Option<&str>) -> Result<Vec<CorpusEntry>, CliError> {
    const FLAGS: [&str; 4] = ["convex", "rank_one_convex", "separately_convex", "rank_one_affine"];
    if let Some(f) = flag {
        if !FLAGS.contains(&f) {
            return Err(CliError::Usage(format!("unknown flag `{f}`; valid flags: {}", FLAGS.join(", "))));
        }
    }
    Ok(corpus()
        .into_iter()
        .filter(|h| flag.is_none_or(|f| h.flags.has(f)))
        .map(|h| {
            let s = h.default_shape();
            CorpusEntry {
                name: h.name().to_string(),
                shape: if s.symmetric {
                    format!("sym{}", s.rows)
                } else {
                    format!("{}x{}", s.rows, s.cols)
                },
                flags: h.flags.names().into_iter().map(String::from).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_listing() {
        let all = list_corpus(None).unwrap();
        let det = all.iter().find(|e| e.name == "neg_det_2x2").unwrap();
        assert!(det.flags.contains(&"rank_one_affine".to_string()));
        let neg = all.iter().find(|e| e.name == "neg_half_norm_sq").unwrap();
        assert!(neg.flags.is_empty());
        let sep = list_corpus(Some("separately_convex")).unwrap();
        assert!(sep.iter().any(|e| e.name == "neg_uv"));
        assert!(list_corpus(Some("round")).is_err());
    }

    #[test]
    fn hashes_are_hex() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
