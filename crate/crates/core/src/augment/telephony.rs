//! Narrowband telephone channel: band limiting, 8-bit μ-law, and the rate
//! conversions around it.

use std::f64::consts::PI;

use crate::audio::{resample, AudioBuffer};

use super::{AugmentError, TelephonyParams};

/// Number of reconstruction levels produced by [`mulaw_encode`].
///
/// The quantizer is mid-tread: level 0 reconstructs to exactly 0.0 and the
/// level set is symmetric, so codes span `1..=255` and code 128 is zero.
pub const MULAW_LEVELS: u32 = 255;
const HALF_LEVELS: f64 = 127.0;
const ZERO_CODE: i32 = 128;

/// Continuous μ-law compression `sign(x)·ln(1 + μ|x|)/ln(1 + μ)`.
pub fn mulaw_compress(x: f64, mu: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    x.signum() * (mu * x.abs()).ln_1p() / mu.ln_1p()
}

/// Inverse of [`mulaw_compress`].
pub fn mulaw_expand(y: f64, mu: f64) -> f64 {
    let y = y.clamp(-1.0, 1.0);
    y.signum() * ((y.abs() * mu.ln_1p()).exp_m1() / mu)
}

/// Compresses `x` (clamped to `[-1, 1]`) and quantizes to an 8-bit code.
pub fn mulaw_encode(x: f64, mu: f64) -> u8 {
    let level = (mulaw_compress(x, mu) * HALF_LEVELS).round() as i32;
    (ZERO_CODE + level) as u8
}

/// Expands the centre of the quantization cell for `code`.
pub fn mulaw_decode(code: u8, mu: f64) -> f64 {
    let y = (code as i32 - ZERO_CODE) as f64 / HALF_LEVELS;
    mulaw_expand(y, mu)
}

/// Direct-form-I second-order section.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn normalized(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    /// Bilinear-transform low-pass section with quality factor `q`.
    pub fn lowpass(cutoff_hz: f64, sample_rate: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let b1 = 1.0 - cos;
        Self::normalized([b1 / 2.0, b1, b1 / 2.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    /// Bilinear-transform high-pass section with quality factor `q`.
    pub fn highpass(cutoff_hz: f64, sample_rate: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let b1 = 1.0 + cos;
        Self::normalized([b1 / 2.0, -b1, b1 / 2.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        input
            .iter()
            .map(|&x| {
                let y = self.b[0] * x + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                (x2, x1, y2, y1) = (x1, x, y1, y);
                y
            })
            .collect()
    }
}

/// Pole-pair quality factors of a 4th-order Butterworth prototype.
fn butterworth4_qs() -> [f64; 2] {
    [1.0 / (2.0 * (PI / 8.0).cos()), 1.0 / (2.0 * (3.0 * PI / 8.0).cos())]
}

/// 4th-order Butterworth high-pass at `low` followed by 4th-order
/// Butterworth low-pass at `high`, run forward only.
fn bandpass(samples: &[f64], low: f64, high: f64, sample_rate: f64) -> Vec<f64> {
    let mut y = samples.to_vec();
    for q in butterworth4_qs() {
        y = Biquad::highpass(low, sample_rate, q).process(&y);
    }
    for q in butterworth4_qs() {
        y = Biquad::lowpass(high, sample_rate, q).process(&y);
    }
    y
}

/// Simulates a telephone channel.
///
/// Band-limits to `[bandpass_low_hz, bandpass_high_hz]`, converts to the codec
/// rate, passes every sample through 8-bit μ-law, converts back and fits the
/// result to the input length.
pub fn apply_telephony(
    buf: &AudioBuffer,
    params: &TelephonyParams,
) -> Result<AudioBuffer, AugmentError> {
    params.validate()?;
    if buf.sample_rate() <= params.codec_rate_hz {
        return Err(AugmentError::InvalidParams(format!(
            "input rate {} Hz must exceed the codec rate {} Hz",
            buf.sample_rate(),
            params.codec_rate_hz
        )));
    }
    let rate = buf.sample_rate();
    let band = bandpass(
        buf.samples(),
        params.bandpass_low_hz,
        params.bandpass_high_hz,
        rate as f64,
    );
    let narrow = resample(&AudioBuffer::new(band, rate)?, params.codec_rate_hz)?;
    let companded = narrow.map(|&s| mulaw_decode(mulaw_encode(s, params.mu), params.mu))?;
    let mut back = resample(&companded, rate)?.into_samples();
    back.resize(buf.len(), 0.0);
    Ok(AudioBuffer::new(back, rate)?)
}
