//! Run configuration, canonical hashing, and run manifests.
//!
//! A run is identified by the SHA-256 of its effective configuration,
//! canonicalized as sorted-key JSON with normalized number formatting, so
//! the same settings hash identically on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mbti::MbtiCode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which kind of agent answers queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    RemoteChat,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Scripted policy spec, e.g. `random`, `ucb:1.0`, `probit:0.5,0.3`,
    /// `constant:Home`, `cycle`.
    pub policy: String,
    /// Model identifier sent to the remote endpoint.
    pub model_id: String,
    pub temperature: f64,
    /// Endpoint URL; the PERSONA_GAUGE_ENDPOINT environment variable
    /// overrides this at request time.
    pub endpoint: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Scripted,
            policy: "random".to_string(),
            model_id: "gpt-3.5-turbo".to_string(),
            temperature: 1.0,
            endpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptabilityParams {
    /// Number of periods (days) in a trajectory grid.
    pub periods: usize,
    /// Independent grid repetitions feeding the mean/stddev summary.
    pub repeats: usize,
    /// Catalog file (one category per line). Empty = must be supplied.
    pub catalog: String,
    pub max_reprompts: u32,
}

impl Default for AdaptabilityParams {
    fn default() -> Self {
        Self {
            periods: 7,
            repeats: 5,
            catalog: String::new(),
            max_reprompts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditParams {
    pub blocks: usize,
    pub trials_per_block: usize,
    pub mu0: [f64; 2],
    pub tau0: [f64; 2],
    pub tau: [f64; 2],
    pub max_reprompts: u32,
}

impl Default for BanditParams {
    fn default() -> Self {
        Self {
            blocks: 100,
            trials_per_block: 10,
            mu0: [0.0, 0.0],
            tau0: [10.0, 10.0],
            tau: [10.0, 10.0],
            max_reprompts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasoningParams {
    /// Directory of per-subject question CSVs.
    pub mmlu_dir: String,
    /// Subject-to-category mapping file (TSV).
    pub categories: String,
    /// Cap on items drawn per subject; 0 means no cap.
    pub per_subject_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyParams {
    /// Questionnaire inventory file.
    pub inventory: String,
    /// Baseline trait scores file.
    pub baseline: String,
    pub max_reasks: u32,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            inventory: String::new(),
            baseline: String::new(),
            max_reasks: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    pub adaptability: AdaptabilityParams,
    pub bandit: BanditParams,
    pub reasoning: ReasoningParams,
    pub safety: SafetyParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub enabled: bool,
    pub dir: String,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            dir: ".persona-gauge-cache".to_string(),
        }
    }
}

/// The effective configuration of a run. Flag overrides are applied before
/// hashing, so the hash names exactly what executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub parallelism: usize,
    /// Codes under evaluation; empty means all sixteen.
    pub personas: Vec<MbtiCode>,
    pub personas_dir: String,
    pub backend: BackendConfig,
    pub cache: CacheConfig,
    pub tasks: TaskParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            parallelism: 1,
            personas: Vec::new(),
            personas_dir: String::new(),
            backend: BackendConfig::default(),
            cache: CacheConfig::default(),
            tasks: TaskParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.parallelism < 1 {
            return Err(ConfigError::Invalid("parallelism must be >= 1".into()));
        }
        if self.backend.temperature < 0.0 || !self.backend.temperature.is_finite() {
            return Err(ConfigError::Invalid(
                "temperature must be a non-negative finite number".into(),
            ));
        }
        let b = &self.tasks.bandit;
        for k in 0..2 {
            // NaN fails both comparisons and is rejected with negatives
            let scales_ok = b.tau0[k] >= 0.0 && b.tau[k] >= 0.0;
            if !scales_ok {
                return Err(ConfigError::Invalid(
                    "bandit scale parameters must be non-negative".into(),
                ));
            }
        }
        if self.tasks.adaptability.periods < 1 {
            return Err(ConfigError::Invalid("periods must be >= 1".into()));
        }
        Ok(())
    }

    /// Persona codes this run targets: the configured subset, or all 16.
    pub fn effective_personas(&self) -> Vec<MbtiCode> {
        if self.personas.is_empty() {
            MbtiCode::all()
        } else {
            self.personas.clone()
        }
    }

    /// Hex SHA-256 of the canonicalized configuration.
    pub fn config_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = canonical_json(&value);
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Canonical JSON text: object keys sorted, no insignificant whitespace,
/// numbers in their shortest round-trip form (`1.0` and `1` agree).
pub fn canonical_json(value: &serde_json::Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &serde_json::Value, out: &mut String) {
    use serde_json::Value::*;
    match value {
        Null => out.push_str("null"),
        Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                // f64 Display is the shortest representation that
                // round-trips, and prints integral values without ".0"
                let _ = write!(out, "{}", n.as_f64().unwrap_or(f64::NAN));
            }
        }
        String(s) => {
            let _ = write!(out, "{}", serde_json::Value::String(s.clone()));
        }
        Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Object(map) => {
            let mut keys: Vec<&std::string::String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", serde_json::Value::String((*key).clone()));
                out.push(':');
                write_canonical(&map[*key], out);
            }
            out.push('}');
        }
    }
}

/// Immutable description of a completed or in-flight run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub config_hash: String,
    /// RFC 3339 UTC timestamp captured at run start.
    pub start_time: String,
    pub personas: Vec<MbtiCode>,
    pub tasks: Vec<String>,
    pub software_version: String,
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

impl RunManifest {
    pub fn new(config: &RunConfig, tasks: Vec<String>) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            config_hash: config.config_hash(),
            start_time: chrono::Utc::now().to_rfc3339(),
            personas: config.effective_personas(),
            tasks,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Resolves a path from the config relative to a base directory (usually
/// the config file's parent), leaving absolute paths untouched.
pub fn resolve_path(base: &Path, configured: &str) -> PathBuf {
    let p = Path::new(configured);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let config = RunConfig::default();
        let text = toml::to_string(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn identical_configs_hash_identically() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn any_field_change_changes_hash() {
        let base = RunConfig::default();
        let base_hash = base.config_hash();

        let mut c = base.clone();
        c.master_seed = 43;
        assert_ne!(c.config_hash(), base_hash);

        let mut c = base.clone();
        c.backend.temperature = 0.5;
        assert_ne!(c.config_hash(), base_hash);

        let mut c = base.clone();
        c.tasks.bandit.blocks = 99;
        assert_ne!(c.config_hash(), base_hash);

        let mut c = base.clone();
        c.personas = vec!["ENFJ".parse().unwrap()];
        assert_ne!(c.config_hash(), base_hash);
    }

    #[test]
    fn canonical_json_sorts_keys_and_normalizes_numbers() {
        let v: serde_json::Value =
            serde_json::from_str(r#"{"b": 1.0, "a": {"z": 2.5, "y": [1, 2.0]}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"y":[1,2],"z":2.5},"b":1}"#);
    }

    #[test]
    fn empty_personas_expands_to_all_sixteen() {
        assert_eq!(RunConfig::default().effective_personas().len(), 16);
    }

    #[test]
    fn rejects_zero_parallelism() {
        let config = RunConfig {
            parallelism: 0,
            ..RunConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn parses_partial_toml_with_defaults() {
        let config: RunConfig = toml::from_str(
            r#"
            master_seed = 7
            [backend]
            kind = "scripted"
            policy = "ucb:1.0"
            [tasks.bandit]
            blocks = 5
            "#,
        )
        .unwrap();
        assert_eq!(config.master_seed, 7);
        assert_eq!(config.tasks.bandit.blocks, 5);
        assert_eq!(config.tasks.bandit.trials_per_block, 10);
        assert_eq!(config.backend.policy, "ucb:1.0");
    }
}
