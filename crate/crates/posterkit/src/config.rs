//! Run configuration merged from a key-value file, `POSTERKIT_*` environment
//! variables and command-line flags, in increasing precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use posterkit_core::metrics::content::DEFAULT_THRESHOLD;
use posterkit_core::DEFAULT_PRECISION;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::gateway::{BackendConfig, BackendKind};
use crate::io::{self, IoError};

pub const ENV_PREFIX: &str = "POSTERKIT_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{source_name}: unknown setting `{key}`")]
    UnknownKey { source_name: String, key: String },
    #[error("{source_name}: bad value `{value}` for `{key}`: {message}")]
    BadValue {
        source_name: String,
        key: String,
        value: String,
        message: String,
    },
    #[error("{source_name} line {line}: expected key = value")]
    Syntax { source_name: String, line: usize },
}

/// Fully resolved settings for one invocation. Serialized as `config.json`
/// in the run directory; that file is itself a valid `--config` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// Overrides the manifest directory as the root for asset paths.
    pub assets: Option<PathBuf>,
    pub run_dir: PathBuf,
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub timeout: u64,
    pub retries: u32,
    pub token_env: String,
    pub debug: bool,
    /// Comma-separated metric families or `all`.
    pub metrics: String,
    pub precision: u32,
    pub threshold: f64,
    pub jobs: usize,
    pub seed: u64,
    /// `train`, `test` or `all`.
    pub split: String,
    pub constraints_dir: Option<PathBuf>,
    pub style: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BackendConfig::default();
        RunConfig {
            manifest: None,
            assets: None,
            run_dir: PathBuf::from("run"),
            backend: b.kind,
            endpoint: b.endpoint,
            model: b.model,
            max_tokens: b.max_tokens,
            temperature: b.temperature,
            timeout: b.timeout_secs,
            retries: b.retries,
            token_env: b.token_env,
            debug: false,
            metrics: "all".into(),
            precision: DEFAULT_PRECISION,
            threshold: DEFAULT_THRESHOLD,
            jobs: 1,
            seed: 0,
            split: "test".into(),
            constraints_dir: None,
            style: None,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "manifest",
    "assets",
    "run_dir",
    "backend",
    "endpoint",
    "model",
    "max_tokens",
    "temperature",
    "timeout",
    "retries",
    "token_env",
    "debug",
    "metrics",
    "precision",
    "threshold",
    "jobs",
    "seed",
    "split",
    "constraints_dir",
    "style",
];

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    /// Applies one setting given as text.
    pub fn set(&mut self, source_name: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::BadValue {
            source_name: source_name.into(),
            key: key.into(),
            value: value.into(),
            message,
        };
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        match key {
            "manifest" => self.manifest = opt_path(value),
            "assets" => self.assets = opt_path(value),
            "run_dir" => self.run_dir = PathBuf::from(value),
            "backend" => self.backend = value.parse().map_err(bad)?,
            "endpoint" => self.endpoint = value.into(),
            "model" => self.model = value.into(),
            "max_tokens" => self.max_tokens = num(value).map_err(bad)?,
            "temperature" => self.temperature = num(value).map_err(bad)?,
            "timeout" => self.timeout = num(value).map_err(bad)?,
            "retries" => self.retries = num(value).map_err(bad)?,
            "token_env" => self.token_env = value.into(),
            "debug" => {
                self.debug = match value {
                    "1" | "true" | "yes" | "on" => true,
                    "0" | "false" | "no" | "off" | "" => false,
                    _ => return Err(bad("expected true or false".into())),
                }
            }
            "metrics" => {
                crate::eval::parse_families(value).map_err(bad)?;
                self.metrics = value.into();
            }
            "precision" => self.precision = num(value).map_err(bad)?,
            "threshold" => self.threshold = num(value).map_err(bad)?,
            "jobs" => self.jobs = num::<usize>(value).map_err(bad)?.max(1),
            "seed" => self.seed = num(value).map_err(bad)?,
            "split" => match value {
                "train" | "test" | "all" => self.split = value.into(),
                _ => return Err(bad("expected train, test or all".into())),
            },
            "constraints_dir" => self.constraints_dir = opt_path(value),
            "style" => self.style = opt_path(value),
            _ => {
                return Err(ConfigError::UnknownKey {
                    source_name: source_name.into(),
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    /// `key = value` lines (`#` comments allowed) or a JSON object such as
    /// a previous run's `config.json`.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = io::read_text(path)?;
        let name = path.display().to_string();
        if text.trim_start().starts_with('{') {
            let obj: BTreeMap<String, Value> =
                serde_json::from_str(&text).map_err(|e| ConfigError::BadValue {
                    source_name: name.clone(),
                    key: "<file>".into(),
                    value: String::new(),
                    message: e.to_string(),
                })?;
            for (k, v) in obj {
                let s = match v {
                    Value::Null => String::new(),
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                self.set(&name, &k, &s)?;
            }
            return Ok(());
        }
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
                source_name: name.clone(),
                line: i + 1,
            })?;
            self.set(&name, k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Picks up `POSTERKIT_<KEY>` variables for every known key.
    pub fn apply_env(
        &mut self,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<(), ConfigError> {
        let vars: BTreeMap<String, String> = vars.into_iter().collect();
        for key in KEYS {
            let name = format!("{ENV_PREFIX}{}", key.to_uppercase());
            if let Some(v) = vars.get(&name) {
                self.set(&name, key, v)?;
            }
        }
        Ok(())
    }

    pub fn resolve(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        flags: &[(&str, String)],
    ) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::default();
        if let Some(f) = file {
            c.apply_file(f)?;
        }
        c.apply_env(env)?;
        for (k, v) in flags {
            c.set("command line", k, v)?;
        }
        Ok(c)
    }

    pub fn backend_config(&self) -> BackendConfig {
        BackendConfig {
            kind: self.backend,
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            timeout_secs: self.timeout,
            retries: self.retries,
            token_env: self.token_env.clone(),
            debug: self.debug,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
