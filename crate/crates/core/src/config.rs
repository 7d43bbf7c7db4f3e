//! Pipeline configuration: a TOML file plus CLI overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genclient::{Backend, HttpBackend, HttpOptions, MockBackend, MockMode, ReplayBackend};

pub const DEFAULT_SEED_SIZES: [usize; 5] = [100, 500, 1000, 2000, 3000];
pub const DEFAULT_RNG_SEED: u64 = 13;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
    /// Seed-set sizes, strictly increasing.
    #[serde(default = "default_seed_sizes")]
    pub seed_sizes: Vec<usize>,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub flags: FlagsConfig,
}

fn default_rng_seed() -> u64 {
    DEFAULT_RNG_SEED
}

fn default_seed_sizes() -> Vec<usize> {
    DEFAULT_SEED_SIZES.to_vec()
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rng_seed: DEFAULT_RNG_SEED,
            seed_sizes: default_seed_sizes(),
            paths: PathsConfig::default(),
            backend: BackendConfig::default(),
            flags: FlagsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus_in: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub lexicon_a: Option<PathBuf>,
    pub lexicon_b: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    /// `http`, `replay`, or `mock`.
    #[serde(default = "default_backend_kind")]
    pub kind: String,
    pub url: Option<String>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    pub replay_file: Option<PathBuf>,
    #[serde(default = "default_mock_mode")]
    pub mock_mode: String,
    /// TSV of `token<TAB>replacement` lines for the mock backend.
    pub mock_table: Option<PathBuf>,
}

fn default_backend_kind() -> String {
    "mock".to_string()
}

fn default_batch_size() -> usize {
    64
}

fn default_timeout_s() -> u64 {
    30
}

fn default_retries() -> u32 {
    3
}

fn default_mock_mode() -> String {
    "faithful".to_string()
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: default_backend_kind(),
            url: None,
            batch_size: default_batch_size(),
            timeout_s: default_timeout_s(),
            retries: default_retries(),
            replay_file: None,
            mock_mode: default_mock_mode(),
            mock_table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    /// Corpus files start with a header row.
    #[serde(default)]
    pub header: bool,
    /// Drop exact duplicate rows on ingest.
    #[serde(default)]
    pub dedup: bool,
    /// Check span containment (rule 5) in the filter.
    #[serde(default = "default_true")]
    pub containment_rule: bool,
}

fn default_true() -> bool {
    true
}

impl Default for FlagsConfig {
    fn default() -> Self {
        FlagsConfig {
            header: false,
            dedup: false,
            containment_rule: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {detail}")]
    Unreadable { path: String, detail: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seed_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(format!(
                "seed_sizes must be strictly increasing, got {:?}",
                self.seed_sizes
            )));
        }
        match self.backend.kind.as_str() {
            "http" => {
                if self.backend.url.is_none() {
                    return Err(ConfigError::Invalid(
                        "backend.kind = \"http\" requires backend.url".into(),
                    ));
                }
            }
            "replay" => {
                if self.backend.replay_file.is_none() {
                    return Err(ConfigError::Invalid(
                        "backend.kind = \"replay\" requires backend.replay_file".into(),
                    ));
                }
            }
            "mock" => {
                if MockMode::parse(&self.backend.mock_mode).is_none() {
                    return Err(ConfigError::Invalid(format!(
                        "unknown mock mode `{}`",
                        self.backend.mock_mode
                    )));
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown backend kind `{other}` (expected http, replay, or mock)"
                )))
            }
        }
        Ok(())
    }

    /// Builds the configured backend.
    pub fn build_backend(&self) -> Result<Box<dyn Backend>, ConfigError> {
        self.validate()?;
        match self.backend.kind.as_str() {
            "http" => {
                let url = self.backend.url.clone().expect("validated");
                Ok(Box::new(HttpBackend::new(
                    url,
                    HttpOptions {
                        batch_size: self.backend.batch_size.max(1),
                        timeout: Duration::from_secs(self.backend.timeout_s),
                        retries: self.backend.retries,
                        ..HttpOptions::default()
                    },
                )))
            }
            "replay" => {
                let path = self.backend.replay_file.clone().expect("validated");
                let backend = ReplayBackend::open(&path)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Box::new(backend))
            }
            "mock" => {
                let mode = MockMode::parse(&self.backend.mock_mode).expect("validated");
                let table = match &self.backend.mock_table {
                    Some(path) => load_mock_table(path)?,
                    None => BTreeMap::new(),
                };
                Ok(Box::new(MockBackend { table, mode }))
            }
            _ => unreachable!("validated"),
        }
    }
}

/// Reads a `token<TAB>replacement` substitution table.
pub fn load_mock_table(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut table = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.splitn(2, '\t');
        let token = cols.next().unwrap_or_default();
        let replacement = cols.next().ok_or_else(|| {
            ConfigError::Invalid(format!(
                "mock table line {}: expected token<TAB>replacement",
                idx + 1
            ))
        })?;
        table.insert(token.to_string(), replacement.to_string());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
            rng_seed = 7
            seed_sizes = [10, 20]

            [paths]
            corpus_in = "corpus.tsv"
            out_dir = "out"

            [backend]
            kind = "mock"
            batch_size = 16
            timeout_s = 5
            retries = 2
            mock_mode = "faithful"

            [flags]
            header = true
            dedup = true
            containment_rule = false
        "#;
        let config: PipelineConfig = toml::from_str(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.rng_seed, 7);
        assert_eq!(config.seed_sizes, vec![10, 20]);
        assert_eq!(config.backend.batch_size, 16);
        assert!(config.flags.header);
        assert!(!config.flags.containment_rule);
    }

    #[test]
    fn defaults_apply() {
        let config: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(config.rng_seed, DEFAULT_RNG_SEED);
        assert_eq!(config.seed_sizes, DEFAULT_SEED_SIZES.to_vec());
        assert_eq!(config.backend.kind, "mock");
        assert_eq!(config.backend.batch_size, 64);
        assert_eq!(config.backend.timeout_s, 30);
        assert_eq!(config.backend.retries, 3);
        assert!(config.flags.containment_rule);
        assert!(!config.flags.dedup);
    }

    #[test]
    fn rejects_non_increasing_seed_sizes() {
        let config: PipelineConfig = toml::from_str("seed_sizes = [100, 100]").unwrap();
        assert!(matches!(config.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn rejects_http_without_url_and_unknown_kinds() {
        let http: PipelineConfig = toml::from_str("[backend]\nkind = \"http\"").unwrap();
        assert!(http.validate().is_err());
        let unknown: PipelineConfig = toml::from_str("[backend]\nkind = \"quantum\"").unwrap();
        assert!(unknown.validate().is_err());
    }

    #[test]
    fn builds_mock_backend_with_table() {
        let dir = tempfile::tempdir().unwrap();
        let table_path = dir.path().join("table.tsv");
        std::fs::write(&table_path, "hello\tnamaste\n").unwrap();
        let mut config = PipelineConfig::default();
        config.backend.mock_table = Some(table_path);
        let backend = config.build_backend().unwrap();
        assert_eq!(backend.describe(), "mock:faithful");
    }
}
