use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Verify,
    Theta,
    Tail,
    Envelope,
    Lemma,
    Appendix,
    All,
}

impl Experiment {
    /// Every concrete pipeline, in the order `all` runs them.
    pub const PIPELINES: [Experiment; 6] = [
        Experiment::Verify,
        Experiment::Theta,
        Experiment::Tail,
        Experiment::Envelope,
        Experiment::Lemma,
        Experiment::Appendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Theta => "theta",
            Experiment::Tail => "tail",
            Experiment::Envelope => "envelope",
            Experiment::Lemma => "lemma",
            Experiment::Appendix => "appendix",
            Experiment::All => "all",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved run configuration. Unset optional keys fall back to per-experiment defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Corpus name or path to a sampled-field CSV.
    #[serde(default)]
    pub function: Option<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub eval_points: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Parses `key = <json>` lines; blank lines and `#` comments are skipped.
pub fn parse_flat(text: &str) -> Result<Map<String, Value>, CliError> {
    let mut map = Map::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let value: Value = serde_json::from_str(value.trim())
            .map_err(|e| CliError::Config(format!("line {}: value is not JSON: {e}", no + 1)))?;
        map.insert(key.trim().to_string(), value);
    }
    Ok(map)
}

impl ExperimentConfig {
    /// File keys first, then `overrides` on top.
    pub fn load(file: Option<&Path>, overrides: Map<String, Value>) -> Result<Self, CliError> {
        let mut map = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                parse_flat(&text)?
            }
            None => Map::new(),
        };
        map.extend(overrides);
        Self::from_map(map)
    }

    pub fn from_map(map: Map<String, Value>) -> Result<Self, CliError> {
        if !map.contains_key("seed") {
            return Err(CliError::Config(
                "a seed is required (config key `seed` or --seed)".into(),
            ));
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(name) = &self.function {
            crate::target::resolve(name)?;
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Config(format!("radius must be positive, got {r}")));
            }
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("tol must be nonnegative, got {t}")));
            }
        }
        Ok(())
    }

    /// Same settings for a single pipeline writing below `out`.
    pub fn for_pipeline(&self, experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_file_with_overrides() {
        let text = "# run\nexperiment = \"tail\"\nseed = 3\nt_grid = [1, 2, 4]\nfunction = \"abs_x11\"\n";
        let mut over = Map::new();
        over.insert("seed".into(), Value::from(9));
        let mut map = parse_flat(text).unwrap();
        map.extend(over);
        let cfg = ExperimentConfig::from_map(map).unwrap();
        assert_eq!(cfg.experiment, Experiment::Tail);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.t_grid, Some(vec![1.0, 2.0, 4.0]));
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn seed_is_mandatory() {
        let map = parse_flat("experiment = \"verify\"").unwrap();
        let err = ExperimentConfig::from_map(map).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn bad_lines_and_keys() {
        assert!(parse_flat("seed 7").is_err());
        assert!(parse_flat("function = abs_x11").is_err());
        let map = parse_flat("experiment = \"verify\"\nseed = 1\ncolour = 3").unwrap();
        assert!(ExperimentConfig::from_map(map).is_err());
        let map = parse_flat("experiment = \"verify\"\nseed = 1\nfunction = \"nope\"").unwrap();
        let err = ExperimentConfig::from_map(map).unwrap_err().to_string();
        assert!(err.contains("neg_det_2x2"), "{err}");
    }
}
