//! Optional JSON config file supplying defaults for flags.
//!
//! Precedence is flag, then config file, then built-in default. Relative
//! paths in the file are resolved against the file's own directory.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vcrobust_core::analysis::StdKind;

use crate::CliError;

/// Seed used by every seeded subcommand when neither `--seed` nor the
/// config file sets one.
pub const DEFAULT_SEED: u64 = 24_301;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub chain_config: Option<PathBuf>,
    pub noise_dir: Option<PathBuf>,
    pub sample_rate: Option<u32>,
    pub n_pairs: Option<usize>,
    pub models: Option<Vec<String>>,
    pub groups: Option<PathBuf>,
    pub mel_config: Option<PathBuf>,
    pub bin_width: Option<f64>,
    pub std: Option<StdKind>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub store: Option<PathBuf>,
    pub rubric: Option<PathBuf>,
    pub with_reference: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.chain_config,
            &mut cfg.noise_dir,
            &mut cfg.groups,
            &mut cfg.mel_config,
            &mut cfg.store,
            &mut cfg.rubric,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Picks the effective value and logs where it came from at debug level.
pub fn pick<T: Display>(name: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
    let (value, source) = match (flag, file) {
        (Some(v), _) => (v, "flag"),
        (None, Some(v)) => (v, "config"),
        (None, None) => (default, "default"),
    };
    log::debug!(setting = name, value:% = value, source = source; "effective setting");
    value
}

/// Like [`pick`] for settings without a built-in default.
pub fn pick_opt<T: Display>(name: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
    let (value, source) = match (flag, file) {
        (Some(v), _) => (Some(v), "flag"),
        (None, Some(v)) => (Some(v), "config"),
        (None, None) => (None, "unset"),
    };
    match &value {
        Some(v) => log::debug!(setting = name, value:% = v, source = source; "effective setting"),
        None => log::debug!(setting = name, source = source; "effective setting"),
    }
    value
}

/// Path values for [`pick_opt`].
pub fn pick_path(name: &str, flag: Option<PathBuf>, file: Option<PathBuf>) -> Option<PathBuf> {
    pick_opt(name, flag.map(DisplayPath), file.map(DisplayPath)).map(|p| p.0)
}

struct DisplayPath(PathBuf);

impl Display for DisplayPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.display().fmt(f)
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
