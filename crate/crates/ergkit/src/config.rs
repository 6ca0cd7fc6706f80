//! Layered configuration: command-line flags override environment
//! variables, which override the file, which overrides the defaults.
//! Credentials come only from the environment and are never logged or
//! stored in files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

/// Environment variable holding the live-gateway API key. The value is
/// read on demand and never written anywhere.
pub const API_KEY_ENV: &str = "ERGKIT_API_KEY";

const ENV_PREFIX: &str = "ERGKIT_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {message}")]
    File { path: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Value { key: String, message: String },
}

/// Gateway selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GatewayChoice {
    #[default]
    Mock,
    Replay,
    Record,
    Live,
}

impl std::str::FromStr for GatewayChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(GatewayChoice::Mock),
            "replay" => Ok(GatewayChoice::Replay),
            "record" => Ok(GatewayChoice::Record),
            "live" => Ok(GatewayChoice::Live),
            other => Err(format!("unknown gateway mode {other:?}")),
        }
    }
}

/// Resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub gateway: GatewayChoice,
    pub model: String,
    pub endpoint: String,
    pub cassette: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub adversarial_fraction: f64,
    pub dialogue_turns: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            gateway: GatewayChoice::Mock,
            model: "offline-judge".into(),
            endpoint: "https://api.openai.com/v1".into(),
            cassette: None,
            templates_dir: None,
            parallelism: 4,
            adversarial_fraction: 0.25,
            dialogue_turns: 2,
        }
    }
}

/// Values a caller (the CLI) wants to force, beating environment and file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub gateway: Option<GatewayChoice>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub cassette: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub adversarial_fraction: Option<f64>,
    pub dialogue_turns: Option<usize>,
}

/// The file-level schema; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    gateway: Option<String>,
    model: Option<String>,
    endpoint: Option<String>,
    cassette: Option<PathBuf>,
    templates_dir: Option<PathBuf>,
    parallelism: Option<usize>,
    adversarial_fraction: Option<f64>,
    dialogue_turns: Option<usize>,
}

fn parse_env<T: std::str::FromStr>(
    env: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let full = format!("{ENV_PREFIX}{key}");
    match env.get(&full) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|e| ConfigError::Value {
            key: full,
            message: format!("{e}"),
        }),
    }
}

/// Loads configuration with precedence overrides > environment > file >
/// defaults. `env` is passed explicitly so resolution is testable; use
/// [`process_env`] for the real environment.
pub fn load_config(
    path: Option<&Path>,
    env: &BTreeMap<String, String>,
    overrides: &ConfigOverrides,
) -> Result<Config, ConfigError> {
    let mut config = Config::default();

    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: FileConfig = toml::from_str(&text).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(raw) = file.gateway {
            config.gateway = raw.parse().map_err(|e| ConfigError::Value {
                key: "gateway".into(),
                message: e,
            })?;
        }
        if let Some(v) = file.model {
            config.model = v;
        }
        if let Some(v) = file.endpoint {
            config.endpoint = v;
        }
        if let Some(v) = file.cassette {
            config.cassette = Some(v);
        }
        if let Some(v) = file.templates_dir {
            config.templates_dir = Some(v);
        }
        if let Some(v) = file.parallelism {
            config.parallelism = v;
        }
        if let Some(v) = file.adversarial_fraction {
            config.adversarial_fraction = v;
        }
        if let Some(v) = file.dialogue_turns {
            config.dialogue_turns = v;
        }
    }

    if let Some(v) = parse_env::<GatewayChoice>(env, "GATEWAY")? {
        config.gateway = v;
    }
    if let Some(v) = env.get(&format!("{ENV_PREFIX}MODEL")) {
        config.model = v.clone();
    }
    if let Some(v) = env.get(&format!("{ENV_PREFIX}ENDPOINT")) {
        config.endpoint = v.clone();
    }
    if let Some(v) = env.get(&format!("{ENV_PREFIX}CASSETTE")) {
        config.cassette = Some(PathBuf::from(v));
    }
    if let Some(v) = env.get(&format!("{ENV_PREFIX}TEMPLATES_DIR")) {
        config.templates_dir = Some(PathBuf::from(v));
    }
    if let Some(v) = parse_env::<usize>(env, "PARALLELISM")? {
        config.parallelism = v;
    }
    if let Some(v) = parse_env::<f64>(env, "ADVERSARIAL_FRACTION")? {
        config.adversarial_fraction = v;
    }
    if let Some(v) = parse_env::<usize>(env, "DIALOGUE_TURNS")? {
        config.dialogue_turns = v;
    }

    if let Some(v) = overrides.gateway {
        config.gateway = v;
    }
    if let Some(v) = &overrides.model {
        config.model = v.clone();
    }
    if let Some(v) = &overrides.endpoint {
        config.endpoint = v.clone();
    }
    if let Some(v) = &overrides.cassette {
        config.cassette = Some(v.clone());
    }
    if let Some(v) = &overrides.templates_dir {
        config.templates_dir = Some(v.clone());
    }
    if let Some(v) = overrides.parallelism {
        config.parallelism = v;
    }
    if let Some(v) = overrides.adversarial_fraction {
        config.adversarial_fraction = v;
    }
    if let Some(v) = overrides.dialogue_turns {
        config.dialogue_turns = v;
    }

    Ok(config)
}

/// Snapshot of the real process environment, filtered to this crate's
/// prefix.
pub fn process_env() -> BTreeMap<String, String> {
    std::env::vars()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_file_yields_defaults() {
        let config = load_config(None, &BTreeMap::new(), &ConfigOverrides::default()).unwrap();
        assert_eq!(config, Config::default());
    }

    #[test]
    fn precedence_overrides_env_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ergkit.toml");
        std::fs::write(&path, "model = \"file-model\"\nparallelism = 2\n").unwrap();

        let mut env = BTreeMap::new();
        env.insert("ERGKIT_MODEL".to_string(), "env-model".to_string());

        // File < env.
        let config = load_config(Some(&path), &env, &ConfigOverrides::default()).unwrap();
        assert_eq!(config.model, "env-model");
        assert_eq!(config.parallelism, 2);

        // Env < overrides.
        let overrides = ConfigOverrides {
            model: Some("flag-model".into()),
            ..Default::default()
        };
        let config = load_config(Some(&path), &env, &overrides).unwrap();
        assert_eq!(config.model, "flag-model");
    }

    #[test]
    fn wrong_types_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "parallelism = \"four\"\n").unwrap();
        assert!(matches!(
            load_config(Some(&path), &BTreeMap::new(), &ConfigOverrides::default()),
            Err(ConfigError::File { .. })
        ));

        let mut env = BTreeMap::new();
        env.insert("ERGKIT_PARALLELISM".to_string(), "lots".to_string());
        assert!(matches!(
            load_config(None, &env, &ConfigOverrides::default()),
            Err(ConfigError::Value { .. })
        ));
    }

    #[test]
    fn unknown_gateway_mode_is_an_error() {
        let mut env = BTreeMap::new();
        env.insert("ERGKIT_GATEWAY".to_string(), "psychic".to_string());
        assert!(load_config(None, &env, &ConfigOverrides::default()).is_err());
    }
}
