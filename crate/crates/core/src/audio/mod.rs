//! Mono audio container, WAV I/O, band-limited resampling and level measurement.
//!
//! Everything downstream (noising, features, suite building) operates on
//! [`AudioBuffer`], a mono `f64` sample sequence with its sample rate.

mod resample;
mod wav;

pub use resample::{resample, resampled_len, Resampler};
pub use wav::{encode_wav, read_wav, read_wav_with_encoding, wav_duration_s, write_wav, WavEncoding};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV data: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("invalid sample rate {0} Hz")]
    InvalidRate(u32),
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Mono audio with nominal amplitude range `[-1, 1]`.
///
/// Samples are always finite and the sample rate is always positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate(sample_rate));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// All-zero buffer of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// Buffer whose `i`-th sample is `f(i)`.
    pub fn from_fn(
        len: usize,
        sample_rate: u32,
        f: impl FnMut(usize) -> f64,
    ) -> Result<Self, AudioError> {
        Self::new((0..len).map(f).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value, 0 for an empty buffer.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// New buffer at the same rate with `f` applied to every sample.
    pub fn map(&self, f: impl FnMut(&f64) -> f64) -> Result<Self, AudioError> {
        Self::new(self.samples.iter().map(f).collect(), self.sample_rate)
    }
}

/// Root-mean-square level, `sqrt(mean(x²))`.
pub fn rms(buf: &AudioBuffer) -> Result<f64, AudioError> {
    rms_of(buf.samples())
}

pub(crate) fn rms_of(samples: &[f64]) -> Result<f64, AudioError> {
    if samples.is_empty() {
        return Err(AudioError::EmptyBuffer);
    }
    let sum_sq: f64 = samples.iter().map(|s| s * s).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}
