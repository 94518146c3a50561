//! Subcommand implementations.

pub mod analyze;
pub mod augment;
pub mod export;
pub mod features;
pub mod serve;
pub mod suite;

use std::path::PathBuf;

use vcrobust_core::augment::{EffectChainConfig, InMemoryNoiseBank};

use crate::config::pick_path;
use crate::CliError;

pub use crate::config::default_jobs;

pub(crate) fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

pub(crate) fn load_noise_bank(
    flag: Option<PathBuf>,
    file: Option<PathBuf>,
) -> Result<InMemoryNoiseBank, CliError> {
    match pick_path("noise_dir", flag, file) {
        Some(dir) => {
            let bank = InMemoryNoiseBank::load_dir(&dir)?;
            if bank.is_empty() {
                return Err(CliError::Data(format!("no WAV files in noise directory {}", dir.display())));
            }
            log::info!(clips = bank.len(), dir:% = dir.display(); "loaded noise bank");
            Ok(bank)
        }
        None => Ok(InMemoryNoiseBank::new()),
    }
}

/// Loads the chain config (or the built-in one) and binds it to `bank`.
///
/// The built-in config drops its noise family when no bank was given; a
/// user-supplied config must name only clips that exist in the bank.
pub(crate) fn load_chain(
    flag: Option<PathBuf>,
    file: Option<PathBuf>,
    bank: &InMemoryNoiseBank,
) -> Result<EffectChainConfig, CliError> {
    let path = pick_path("chain_config", flag, file);
    let mut cfg = match &path {
        Some(p) => EffectChainConfig::load(p)?,
        None => EffectChainConfig::default(),
    };
    cfg = cfg.with_noise_bank(bank.ids().cloned());
    if path.is_none() && bank.is_empty() && cfg.noise.is_some() {
        log::warn!("no noise directory given; additive noise disabled");
        cfg.noise = None;
    }
    if let Some(noise) = &cfg.noise {
        if let Some(missing) = noise.bank.iter().find(|id| !bank.ids().any(|b| b == *id)) {
            return Err(CliError::Data(format!(
                "chain config names noise clip {missing:?}, which is not in the noise directory"
            )));
        }
    }
    cfg.validate()?;
    log::debug!(chain:% = serde_json::to_string(&cfg).expect("config serializes"); "effective chain config");
    Ok(cfg)
}
