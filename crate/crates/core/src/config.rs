//! Pipeline configuration.
//!
//! Values are layered: built-in defaults, then a TOML file, then command-line
//! flags. A complete example lives in `config.example.toml` at the repository
//! root.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enricher::EnrichPolicy;
use crate::kee::KeeConfig;
use crate::kgc::KgcConfig;
use crate::templater::WriteConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Play-by-play feed (CSV or JSON lines).
    pub log: Option<PathBuf>,
    /// Team whose score is the left number of the score column.
    pub home_team: Option<String>,
    pub game_id: Option<String>,
    pub kg: Option<PathBuf>,
    /// Sentence templates; the bundled set when absent.
    pub templates: Option<PathBuf>,
    /// Background templates; the bundled set when absent.
    pub background: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Paths {
    fn rebase(&mut self, dir: &Path) {
        for p in [
            &mut self.log,
            &mut self.kg,
            &mut self.templates,
            &mut self.background,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of every random substream.
    pub seed: u64,
    pub paths: Paths,
    pub kee: KeeConfig,
    pub write: WriteConfig,
    pub enrich: EnrichPolicy,
    pub kgc: KgcConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            paths: Paths::default(),
            kee: KeeConfig::default(),
            write: WriteConfig::default(),
            enrich: EnrichPolicy::default(),
            kgc: KgcConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<PipelineConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut c = PipelineConfig::from_toml(&text, path)?;
        if let Some(dir) = path.parent() {
            c.paths.rebase(dir);
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.kee.validate().map_err(ConfigError::Invalid)?;
        self.kgc
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let t = self.enrich.similarity_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::Invalid(
                "enrich.similarity_threshold must lie in (0, 1]".into(),
            ));
        }
        if self.write.events_per_segment == 0 {
            return Err(ConfigError::Invalid(
                "write.events_per_segment must be positive".into(),
            ));
        }
        self.enrich
            .relations()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
