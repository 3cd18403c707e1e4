use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::StartupError;

pub const DEFAULT_TOKEN_ENV: &str = "ONTOPURIFY_ADMIN_TOKEN";

/// Service configuration, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Local snapshot (OWL or JSON); rewritten as canonical JSON on every
    /// committed mutation.
    pub snapshot_path: PathBuf,
    /// File path or `http(s)://` URL of the authoritative reference.
    #[serde(default)]
    pub reference_path_or_url: Option<String>,
    #[serde(default = "default_bind")]
    pub bind_addr: SocketAddr,
    /// Name of the environment variable holding the admin bearer token.
    #[serde(default = "default_token_env")]
    pub admin_token_env: String,
    #[serde(default = "default_true")]
    pub auto_purify: bool,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.to_string()
}

fn default_true() -> bool {
    true
}

impl Config {
    pub fn new(snapshot_path: impl Into<PathBuf>) -> Self {
        Self {
            snapshot_path: snapshot_path.into(),
            reference_path_or_url: None,
            bind_addr: default_bind(),
            admin_token_env: default_token_env(),
            auto_purify: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, StartupError> {
        toml::from_str(text).map_err(|e| StartupError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, StartupError> {
        let text = std::fs::read_to_string(path).map_err(|source| StartupError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_optional_keys() {
        let c = Config::from_toml("snapshot_path = \"local.owl\"").unwrap();
        assert_eq!(c, Config::new("local.owl"));
        assert!(c.auto_purify);
    }

    #[test]
    fn all_keys() {
        let c = Config::from_toml(
            r#"
            snapshot_path = "s.json"
            reference_path_or_url = "https://example.org/theatre.owl"
            bind_addr = "0.0.0.0:9000"
            admin_token_env = "TOKEN"
            auto_purify = false
            "#,
        )
        .unwrap();
        assert_eq!(c.bind_addr.port(), 9000);
        assert_eq!(c.admin_token_env, "TOKEN");
        assert!(!c.auto_purify);
        assert!(Config::from_toml("snapshot_path = 1").is_err());
        assert!(Config::from_toml("snapshot_path = \"a\"\ncolour = 1").is_err());
    }
}
