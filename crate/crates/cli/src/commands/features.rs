use vcrobust_core::audio::{read_wav, resample};
use vcrobust_core::features::{log_mel, FeatureError, MelConfig};

use crate::config::pick_path;
use crate::error::io_error;
use crate::{CliError, FeaturesArgs, Globals};

pub fn load_mel_config(path: &std::path::Path) -> Result<MelConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run(g: &Globals, a: FeaturesArgs) -> Result<(), CliError> {
    let cfg = match pick_path("mel_config", a.mel_config, g.file.mel_config.clone()) {
        Some(p) => load_mel_config(&p)?,
        None => MelConfig::default(),
    };
    cfg.validate()?;
    let mut buf = read_wav(&a.input)?;
    if buf.sample_rate() != cfg.sample_rate {
        if !a.resample {
            return Err(FeatureError::RateMismatch {
                buffer: buf.sample_rate(),
                config: cfg.sample_rate,
            }
            .into());
        }
        log::info!(from = buf.sample_rate(), to = cfg.sample_rate; "resampling input");
        buf = resample(&buf, cfg.sample_rate)?;
    }
    let mel = log_mel(&buf, &cfg)?;
    mel.write(&a.out)?;
    println!("{} frames x {} mels written to {}", mel.frames(), mel.n_mels(), a.out.display());
    Ok(())
}
