use crate::audio::{rms_of, AudioBuffer};

use super::gain::db_to_amplitude;
use super::AugmentError;

fn tiled_segment(noise: &[f64], offset: usize, len: usize) -> Vec<f64> {
    let n = noise.len();
    let start = offset % n;
    (0..len).map(|i| noise[(start + i) % n]).collect()
}

/// Scale factor `k` that puts `k * noise` at `snr_db` below `signal`.
pub fn noise_scale(signal_rms: f64, noise_rms: f64, snr_db: f64) -> f64 {
    signal_rms / (noise_rms * db_to_amplitude(snr_db))
}

/// Adds background noise at a target SNR.
///
/// The noise is tiled cyclically starting at `offset` until it covers the
/// signal, then scaled so that `20·log10(rms(signal) / rms(scaled noise))`
/// equals `snr_db`. The output has the signal's length.
pub fn mix_noise(
    signal: &AudioBuffer,
    noise: &AudioBuffer,
    snr_db: f64,
    offset: usize,
) -> Result<AudioBuffer, AugmentError> {
    if signal.sample_rate() != noise.sample_rate() {
        return Err(AugmentError::RateMismatch {
            left: signal.sample_rate(),
            right: noise.sample_rate(),
        });
    }
    if !snr_db.is_finite() {
        return Err(AugmentError::InvalidParams("snr_db must be finite".into()));
    }
    if signal.is_empty() {
        return Err(AugmentError::SilentSignal);
    }
    if noise.is_empty() {
        return Err(AugmentError::SilentNoise);
    }
    let signal_rms = rms_of(signal.samples())?;
    if signal_rms == 0.0 {
        return Err(AugmentError::SilentSignal);
    }
    let segment = tiled_segment(noise.samples(), offset, signal.len());
    let noise_rms = rms_of(&segment)?;
    if noise_rms == 0.0 {
        return Err(AugmentError::SilentNoise);
    }
    let k = noise_scale(signal_rms, noise_rms, snr_db);
    let mixed = signal
        .samples()
        .iter()
        .zip(&segment)
        .map(|(s, n)| s + k * n)
        .collect();
    Ok(AudioBuffer::new(mixed, signal.sample_rate())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn buf(v: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(v, 16000).unwrap()
    }

    #[test]
    fn zero_db_adds_equal_rms_noise() {
        let s = buf(vec![0.5, -0.5, 0.5, -0.5]);
        let n = buf(vec![-0.5, -0.5, 0.5, 0.5]);
        let out = mix_noise(&s, &n, 0.0, 0).unwrap();
        assert_eq!(out.samples(), &[0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn twenty_db_scales_by_tenth() {
        let s = buf(vec![0.5, -0.5, 0.5, -0.5]);
        let n = buf(vec![0.5, 0.5, -0.5, -0.5]);
        let out = mix_noise(&s, &n, 20.0, 0).unwrap();
        for ((o, si), ni) in out.samples().iter().zip(s.samples()).zip(n.samples()) {
            assert_abs_diff_eq!(*o, si + 0.1 * ni, epsilon = 1e-15);
        }
    }

    #[test]
    fn noise_wraps_from_offset() {
        let s = buf(vec![1.0; 7]);
        let n = buf(vec![1.0, 2.0, 3.0]);
        let out = mix_noise(&s, &n, 0.0, 2).unwrap();
        assert_eq!(out.len(), 7);
        // segment is 3,1,2,3,1,2,3
        let seg = [3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let k = 1.0 / (seg.iter().map(|x: &f64| x * x).sum::<f64>() / 7.0).sqrt();
        for (o, x) in out.samples().iter().zip(seg) {
            assert_abs_diff_eq!(*o, 1.0 + k * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn error_cases() {
        let s = buf(vec![0.5; 8]);
        let z = buf(vec![0.0; 8]);
        assert!(matches!(mix_noise(&z, &s, 0.0, 0), Err(AugmentError::SilentSignal)));
        assert!(matches!(mix_noise(&s, &z, 0.0, 0), Err(AugmentError::SilentNoise)));
        let other = AudioBuffer::new(vec![0.5; 8], 8000).unwrap();
        assert!(matches!(
            mix_noise(&s, &other, 0.0, 0),
            Err(AugmentError::RateMismatch { .. })
        ));
        // the noise clip is non-silent but the segment covering the signal is
        let sparse = buf(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let short = buf(vec![0.5; 2]);
        assert!(matches!(mix_noise(&short, &sparse, 0.0, 0), Err(AugmentError::SilentNoise)));
    }
}
