//! Optional TOML config merged under flags (flags win).

use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub repeats: Option<usize>,
    pub backend: Option<String>,
    pub client: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub execute: Option<bool>,
    pub timeout_secs: Option<u64>,
    pub artifacts: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {}", path.display(), e))
    }
}
