//! Randomized noising of speech clips.
//!
//! Four effect families are supported: gain, additive background noise at a
//! controlled SNR, synthetic room reverberation and a narrowband telephone
//! channel. [`sample_chain`] draws a concrete chain from an
//! [`EffectChainConfig`]; [`apply_chain`] runs it and returns an
//! [`AppliedChainRecord`] from which the output can be replayed bit-exactly.

mod chain;
mod gain;
mod noise;
mod reverb;
mod rng;
mod telephony;

pub use chain::{
    apply_chain, augment_clip, replay, sample_chain, AppliedChainRecord, EffectChainConfig,
    GainFamily, InMemoryNoiseBank, NoiseBank, NoiseFamily, ParamRange, ReverbFamily,
    TelephonyFamily,
};
pub use gain::{apply_gain, db_to_amplitude};
pub use noise::{mix_noise, noise_scale};
pub use reverb::{apply_reverb, fft_convolve, gen_rir};
pub use rng::{substream_seed, SeededRng};
pub use telephony::{
    apply_telephony, mulaw_compress, mulaw_decode, mulaw_encode, mulaw_expand, Biquad,
    MULAW_LEVELS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("signal RMS is zero; SNR is undefined")]
    SilentSignal,
    #[error("noise segment RMS is zero")]
    SilentNoise,
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: u32, right: u32 },
    #[error("invalid effect parameters: {0}")]
    InvalidParams(String),
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("noise reference {0:?} is not in the noise bank")]
    UnresolvableNoiseRef(String),
    #[error("recorded effect is not fully resolved: {0}")]
    UnresolvedEffect(String),
}

/// Where a noise segment starts inside its source clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOffset {
    #[default]
    Random,
    Fixed(usize),
}

/// Narrowband telephone channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelephonyParams {
    pub codec_rate_hz: u32,
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    pub mu: f64,
}

impl Default for TelephonyParams {
    fn default() -> Self {
        Self {
            codec_rate_hz: 8000,
            bandpass_low_hz: 300.0,
            bandpass_high_hz: 3400.0,
            mu: 255.0,
        }
    }
}

impl TelephonyParams {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let nyquist = self.codec_rate_hz as f64 / 2.0;
        if !(self.bandpass_low_hz > 0.0
            && self.bandpass_low_hz < self.bandpass_high_hz
            && self.bandpass_high_hz < nyquist)
        {
            return Err(AugmentError::InvalidParams(format!(
                "telephony band must satisfy 0 < low < high < codec_rate/2, got {}..{} Hz at {} Hz",
                self.bandpass_low_hz, self.bandpass_high_hz, self.codec_rate_hz
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(AugmentError::InvalidParams(format!("mu must be > 0, got {}", self.mu)));
        }
        Ok(())
    }
}

/// One concrete effect.
///
/// `AdditiveNoise::offset_policy` and `Reverb::rir_seed` may be left open
/// when sampled from a config; [`apply_chain`] resolves them and records the
/// resolved values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    Gain {
        gain_db: f64,
    },
    AdditiveNoise {
        noise_id: String,
        snr_db: f64,
        #[serde(default)]
        offset_policy: NoiseOffset,
    },
    Reverb {
        rt60_s: f64,
        predelay_ms: f64,
        wet_dry: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rir_seed: Option<u64>,
    },
    Telephony(TelephonyParams),
}

impl Effect {
    pub fn family(&self) -> &'static str {
        match self {
            Effect::Gain { .. } => "gain",
            Effect::AdditiveNoise { .. } => "noise",
            Effect::Reverb { .. } => "reverb",
            Effect::Telephony(_) => "telephony",
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        match self {
            Effect::Gain { gain_db } if !gain_db.is_finite() => {
                Err(AugmentError::InvalidParams("gain_db must be finite".into()))
            }
            Effect::AdditiveNoise { snr_db, .. } if !snr_db.is_finite() => {
                Err(AugmentError::InvalidParams("snr_db must be finite".into()))
            }
            Effect::Reverb {
                rt60_s,
                predelay_ms,
                wet_dry,
                ..
            } => {
                if !(*rt60_s > 0.0 && rt60_s.is_finite()) {
                    return Err(AugmentError::InvalidParams(format!("rt60_s must be > 0, got {rt60_s}")));
                }
                if !(*predelay_ms >= 0.0 && predelay_ms.is_finite()) {
                    return Err(AugmentError::InvalidParams(format!(
                        "predelay_ms must be >= 0, got {predelay_ms}"
                    )));
                }
                if !(0.0..=1.0).contains(wet_dry) {
                    return Err(AugmentError::InvalidParams(format!(
                        "wet_dry must be in [0, 1], got {wet_dry}"
                    )));
                }
                Ok(())
            }
            Effect::Telephony(p) => p.validate(),
            _ => Ok(()),
        }
    }

    fn is_resolved(&self) -> bool {
        match self {
            Effect::AdditiveNoise { offset_policy, .. } => *offset_policy != NoiseOffset::Random,
            Effect::Reverb { rir_seed, .. } => rir_seed.is_some(),
            _ => true,
        }
    }
}
