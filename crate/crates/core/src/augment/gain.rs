use crate::audio::AudioBuffer;

use super::AugmentError;

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Scales every sample by `10^(gain_db/20)`. No clipping happens here.
pub fn apply_gain(buf: &AudioBuffer, gain_db: f64) -> Result<AudioBuffer, AugmentError> {
    if !gain_db.is_finite() {
        return Err(AugmentError::InvalidParams("gain_db must be finite".into()));
    }
    if gain_db == 0.0 {
        return Ok(buf.clone());
    }
    let k = db_to_amplitude(gain_db);
    Ok(buf.map(|s| s * k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gain_examples() {
        let b = AudioBuffer::new(vec![0.1, -0.4, 0.8], 16000).unwrap();
        assert_eq!(apply_gain(&b, 0.0).unwrap(), b);

        let half = apply_gain(&b, -6.0206).unwrap();
        for (o, i) in half.samples().iter().zip(b.samples()) {
            assert_abs_diff_eq!(*o, i * 0.5, epsilon = 1e-6);
        }

        let tens = AudioBuffer::new(vec![0.1; 4], 16000).unwrap();
        let out = apply_gain(&tens, 20.0).unwrap();
        for &s in out.samples() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn no_clamping() {
        let b = AudioBuffer::new(vec![0.9], 16000).unwrap();
        assert!(apply_gain(&b, 6.0).unwrap().samples()[0] > 1.0);
    }
}
