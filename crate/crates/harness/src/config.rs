//! Versioned TOML experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "GUE_MINOR_LAB_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Optional experiment id; when set it must match the experiment
    /// named on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Matrix sizes; experiments that need a single N use the first entry.
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Bulk parameter for index windows.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Index offsets relative to N/2 for gap windows.
    #[serde(default)]
    pub index_offsets: Vec<i64>,
    /// Window lengths for summed-gap statistics.
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Write the raw spectra of sampling experiments as a binary dump.
    #[serde(default)]
    pub dump_spectra: bool,
    /// Named tolerance overrides; every check falls back to the spec-level
    /// default when its key is absent.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_n() -> Vec<usize> {
    vec![400]
}
fn default_trials() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.2
}
fn default_m() -> Vec<usize> {
    vec![8, 32, 64]
}
fn default_seed() -> u64 {
    1
}
fn default_workers() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            n: default_n(),
            trials: default_trials(),
            delta: default_delta(),
            index_offsets: Vec::new(),
            m: default_m(),
            seed: default_seed(),
            workers: default_workers(),
            out_dir: default_out_dir(),
            dump_spectra: false,
            tolerances: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "config schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if self.trials == 0 {
            bail!("trials must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            bail!("delta must lie in (0, 0.5), got {}", self.delta);
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            bail!("n must be a non-empty list of sizes >= 2");
        }
        if self.workers == 0 {
            bail!("workers must be >= 1");
        }
        if self.m.iter().any(|&m| m == 0) {
            bail!("window lengths m must be >= 1");
        }
        Ok(())
    }

    /// Tolerance lookup with a spec-default fallback.
    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Output directory after applying the environment override.
    pub fn resolved_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_rejects_bad_delta() {
        let config: ExperimentConfig =
            toml::from_str("schema_version = 1\ntrials = 5\n").unwrap();
        config.validate().unwrap();
        assert_eq!(config.trials, 5);
        assert_eq!(config.n, vec![400]);

        let bad: ExperimentConfig =
            toml::from_str("schema_version = 1\ndelta = 0.6\n").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_wrong_version() {
        assert!(toml::from_str::<ExperimentConfig>("schema_version = 1\nbogus = 2\n").is_err());
        let wrong: ExperimentConfig = toml::from_str("schema_version = 9\n").unwrap();
        assert!(wrong.validate().is_err());
    }

    #[test]
    fn tolerance_fallback() {
        let config: ExperimentConfig =
            toml::from_str("schema_version = 1\n[tolerances]\nks = 0.01\n").unwrap();
        assert_eq!(config.tol("ks", 0.05), 0.01);
        assert_eq!(config.tol("other", 0.05), 0.05);
    }
}
