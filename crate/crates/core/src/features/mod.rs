//! Log-mel spectrogram front end.
//!
//! Frames are Hann-windowed and centred, with reflection padding of
//! `win_length / 2` on both sides, so a buffer of `n` samples always yields
//! `1 + n / hop_length` frames. Values are natural logs of mel-projected STFT
//! magnitudes, floored at `log_floor`.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("buffer rate {buffer} Hz does not match config rate {config} Hz")]
    RateMismatch { buffer: u32, config: u32 },
    #[error("invalid mel config: {0}")]
    InvalidConfig(String),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub win_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            win_length: 400,
            hop_length: 160,
            fft_size: 512,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
        }
    }
}

impl MelConfig {
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidConfig(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be > 0".into());
        }
        if self.win_length == 0 || self.hop_length == 0 {
            return bad("win_length and hop_length must be > 0".into());
        }
        if self.fft_size < self.win_length {
            return bad(format!(
                "fft_size {} is smaller than win_length {}",
                self.fft_size, self.win_length
            ));
        }
        if self.n_mels == 0 {
            return bad("n_mels must be >= 1".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(0.0 <= self.fmin && self.fmin < self.fmax && self.fmax <= nyquist) {
            return bad(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin={} fmax={}",
                self.fmin, self.fmax
            ));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad("log_floor must be > 0".into());
        }
        Ok(())
    }

    pub fn frame_count(&self, len: usize) -> usize {
        1 + len / self.hop_length
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Periodic Hann window.
fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Sample at virtual index `i` of `x` extended by mirror reflection without
/// repeating the edge sample. Very short inputs reflect repeatedly.
fn reflect(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    match n {
        0 => 0.0,
        1 => x[0],
        _ => {
            let period = 2 * (n - 1);
            let m = i.rem_euclid(period);
            x[if m < n { m } else { period - m } as usize]
        }
    }
}

/// STFT magnitudes, shape `frames × (fft_size/2 + 1)`.
pub fn stft_magnitude(buf: &AudioBuffer, cfg: &MelConfig) -> Result<Array2<f64>, FeatureError> {
    cfg.validate()?;
    if buf.sample_rate() != cfg.sample_rate {
        return Err(FeatureError::RateMismatch {
            buffer: buf.sample_rate(),
            config: cfg.sample_rate,
        });
    }
    let x = buf.samples();
    let frames = cfg.frame_count(x.len());
    let n_bins = cfg.n_bins();
    let pad = (cfg.win_length / 2) as isize;
    let window = hann(cfg.win_length);
    let fft = FftPlannerScalar::<f64>::new().plan_fft_forward(cfg.fft_size);

    let mut out = Array2::zeros((frames, n_bins));
    let mut scratch = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    // padded signal spans [-pad, len + pad)
    let padded_end = x.len() as isize + pad;
    for (f, mut row) in out.rows_mut().into_iter().enumerate() {
        let start = (f * cfg.hop_length) as isize - pad;
        scratch.fill(Complex::new(0.0, 0.0));
        for (k, w) in window.iter().enumerate() {
            let idx = start + k as isize;
            if idx < padded_end {
                scratch[k] = Complex::new(w * reflect(x, idx), 0.0);
            }
        }
        fft.process(&mut scratch);
        for (dst, c) in row.iter_mut().zip(&scratch) {
            *dst = c.norm();
        }
    }
    Ok(out)
}

/// Centre frequencies (Hz) of `n_mels + 2` points uniformly spaced in mel.
pub fn mel_points_hz(cfg: &MelConfig) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
    let steps = cfg.n_mels + 1;
    (0..=steps)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / steps as f64))
        .collect()
}

/// Triangular mel filters, shape `n_mels × (fft_size/2 + 1)`, peak 1.
pub fn mel_filterbank(cfg: &MelConfig) -> Result<Array2<f64>, FeatureError> {
    cfg.validate()?;
    let n_bins = cfg.n_bins();
    let points = mel_points_hz(cfg);
    let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
    let mut fb = Array2::zeros((cfg.n_mels, n_bins));
    for (m, mut row) in fb.rows_mut().into_iter().enumerate() {
        let (left, centre, right) = (points[m], points[m + 1], points[m + 2]);
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * bin_hz;
            let rise = (f - left) / (centre - left);
            let fall = (right - f) / (right - centre);
            *w = rise.min(fall).max(0.0);
        }
        if row.sum() <= 0.0 {
            return Err(FeatureError::InvalidConfig(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; \
                 lower n_mels or raise fft_size"
            )));
        }
    }
    Ok(fb)
}

/// Log-mel frames, shape `frames × n_mels`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFrames {
    pub data: Array2<f64>,
    pub config: MelConfig,
}

impl MelFrames {
    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_mels(&self) -> usize {
        self.data.ncols()
    }

    /// Eight-line text header followed by little-endian `f32` values in
    /// row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let header = format!(
            "vcrobust-melframes 1\nframes={}\nn_mels={}\nsample_rate={}\nwin_length={}\nhop_length={}\nfft_size={}\nfmin={} fmax={} log_floor={:e}\n",
            self.frames(),
            self.n_mels(),
            c.sample_rate,
            c.win_length,
            c.hop_length,
            c.fft_size,
            c.fmin,
            c.fmax,
            c.log_floor
        );
        let mut out = header.into_bytes();
        out.reserve(self.data.len() * 4);
        for v in self.data.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        let path = path.as_ref();
        let io = |source| FeatureError::IoFailure {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        Ok(())
    }
}

/// Computes `ln(max(filterbank · |STFT|, log_floor))` for every frame.
pub fn log_mel(buf: &AudioBuffer, cfg: &MelConfig) -> Result<MelFrames, FeatureError> {
    let fb = mel_filterbank(cfg)?;
    log_mel_with(buf, cfg, &fb)
}

/// [`log_mel`] with a precomputed filterbank.
pub fn log_mel_with(
    buf: &AudioBuffer,
    cfg: &MelConfig,
    filterbank: &Array2<f64>,
) -> Result<MelFrames, FeatureError> {
    let mag = stft_magnitude(buf, cfg)?;
    let floor = cfg.log_floor;
    let data = mag.dot(&filterbank.t()).mapv(|e| e.max(floor).ln());
    Ok(MelFrames {
        data,
        config: cfg.clone(),
    })
}
