use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use danmaku_mod_core::AdminSettings;

/// An external HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    /// Sent as `Authorization: Bearer <api_key>` when present.
    #[serde(default)]
    pub api_key: Option<String>,
    /// Overrides the per-endpoint default timeout.
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub port: u16,
    pub bind: String,
    pub data_dir: PathBuf,
    pub moderator_token: String,
    pub seed: u64,
    pub chat_endpoint: Option<EndpointConfig>,
    pub classifier_endpoint: Option<EndpointConfig>,
    pub image_endpoint: Option<EndpointConfig>,
    pub default_settings: AdminSettings,
    pub lexicon_path: Option<PathBuf>,
    pub phrase_table_path: Option<PathBuf>,
    pub banned_terms_path: Option<PathBuf>,
    pub max_caption_chars: usize,
    /// Accepted submissions per connection per second.
    pub rate_limit_per_s: u32,
    pub heartbeat_s: u64,
    /// Close windows on a timer when the stream goes quiet.
    pub auto_close_windows: bool,
    pub lda_topics: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: 8080,
            bind: "127.0.0.1".into(),
            data_dir: PathBuf::from("data"),
            moderator_token: "change-me".into(),
            seed: 42,
            chat_endpoint: None,
            classifier_endpoint: None,
            image_endpoint: None,
            default_settings: AdminSettings::default(),
            lexicon_path: None,
            phrase_table_path: None,
            banned_terms_path: None,
            max_caption_chars: 30,
            rate_limit_per_s: 5,
            heartbeat_s: 15,
            auto_close_windows: true,
            lda_topics: 10,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid default settings: {0}")]
    Settings(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_str(text)?;
        config.default_settings.validate().map_err(|errs| {
            ConfigError::Settings(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
        })?;
        Ok(config)
    }
}
