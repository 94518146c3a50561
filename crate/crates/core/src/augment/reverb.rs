use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;

use crate::audio::AudioBuffer;

use super::{AugmentError, SeededRng};

/// Synthetic room impulse response.
///
/// Sample 0 is a unit direct-path impulse. After `predelay_ms` of silence
/// comes a uniform white-noise tail shaped by `10^(-3t/rt60_s)`, with `t`
/// measured from the start of the tail, so the envelope is down 60 dB after
/// `rt60_s`. Tail samples never exceed the direct impulse in magnitude.
pub fn gen_rir(
    rt60_s: f64,
    predelay_ms: f64,
    duration_s: f64,
    sample_rate: u32,
    rng: &mut SeededRng,
) -> Result<AudioBuffer, AugmentError> {
    if !(rt60_s > 0.0 && rt60_s.is_finite()) {
        return Err(AugmentError::InvalidParams(format!("rt60_s must be > 0, got {rt60_s}")));
    }
    if !(predelay_ms >= 0.0 && predelay_ms.is_finite()) {
        return Err(AugmentError::InvalidParams(format!(
            "predelay_ms must be >= 0, got {predelay_ms}"
        )));
    }
    if !(duration_s.is_finite() && duration_s >= rt60_s / 2.0) {
        return Err(AugmentError::InvalidParams(format!(
            "duration_s must be at least rt60_s/2 ({}), got {duration_s}",
            rt60_s / 2.0
        )));
    }
    if sample_rate == 0 {
        return Err(AugmentError::InvalidParams("sample rate must be > 0".into()));
    }

    let rate = sample_rate as f64;
    let predelay = (predelay_ms * rate / 1000.0).round() as usize;
    let len = ((duration_s * rate).round() as usize).max(predelay + 1);
    let mut h = vec![0.0; len];
    h[0] = 1.0;
    let decay_per_sample = -3.0 / (rt60_s * rate);
    for (n, slot) in h.iter_mut().enumerate().skip(predelay.max(1)) {
        let envelope = 10f64.powf(decay_per_sample * (n - predelay) as f64);
        let white = 2.0 * rng.uniform() - 1.0;
        *slot = white * envelope;
    }
    Ok(AudioBuffer::new(h, sample_rate)?)
}

/// Full linear convolution via zero-padded FFT.
///
/// Uses the scalar FFT planner so the result does not depend on which SIMD
/// instruction sets the host CPU offers.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlannerScalar::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let pad = |v: &[f64]| {
        let mut c: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        c.resize(size, Complex::new(0.0, 0.0));
        c
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Wet/dry reverberation: `(1 - wet_dry)·x + wet_dry·conv(x, rir)[..len(x)]`.
pub fn apply_reverb(
    buf: &AudioBuffer,
    rir: &AudioBuffer,
    wet_dry: f64,
) -> Result<AudioBuffer, AugmentError> {
    if buf.sample_rate() != rir.sample_rate() {
        return Err(AugmentError::RateMismatch {
            left: buf.sample_rate(),
            right: rir.sample_rate(),
        });
    }
    if !(0.0..=1.0).contains(&wet_dry) {
        return Err(AugmentError::InvalidParams(format!(
            "wet_dry must be in [0, 1], got {wet_dry}"
        )));
    }
    let wet = fft_convolve(buf.samples(), rir.samples());
    let dry_gain = 1.0 - wet_dry;
    let out = buf
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &x)| dry_gain * x + wet_dry * wet.get(i).copied().unwrap_or(0.0))
        .collect();
    Ok(AudioBuffer::new(out, buf.sample_rate())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn direct(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len() + h.len() - 1];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                y[i + j] += a * b;
            }
        }
        y
    }

    #[test]
    fn predelay_leaves_gap() {
        let mut rng = SeededRng::new(1);
        let rir = gen_rir(0.3, 10.0, 0.3, 16000, &mut rng).unwrap();
        let h = rir.samples();
        assert_eq!(h[0], 1.0);
        assert!(h[1..160].iter().all(|&s| s == 0.0));
        assert!(h[160] != 0.0);
        assert!(h[1..].iter().all(|s| s.abs() <= 1.0));
    }

    #[test]
    fn envelope_law() {
        // at t = rt60 the envelope is 10^-3 of its value at the tail start
        let rt60 = 0.25f64;
        let rate = 16000.0;
        let decay = -3.0 / (rt60 * rate);
        let at_rt60 = 10f64.powf(decay * rt60 * rate);
        assert_abs_diff_eq!(at_rt60, 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let mut rng = SeededRng::new(1);
        assert!(gen_rir(0.0, 0.0, 1.0, 16000, &mut rng).is_err());
        assert!(gen_rir(0.4, 0.0, 0.1, 16000, &mut rng).is_err());
        assert!(gen_rir(0.4, -1.0, 1.0, 16000, &mut rng).is_err());
    }

    #[test]
    fn delta_rir_is_identity() {
        let x = AudioBuffer::from_fn(300, 16000, |i| ((i * 37 % 101) as f64 / 50.0) - 1.0).unwrap();
        let delta = AudioBuffer::new(vec![1.0], 16000).unwrap();
        for wet in [0.0, 0.3, 1.0] {
            let y = apply_reverb(&x, &delta, wet).unwrap();
            for (a, b) in y.samples().iter().zip(x.samples()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
        let rir = AudioBuffer::new(vec![0.7, 0.2, -0.1], 16000).unwrap();
        assert_eq!(apply_reverb(&x, &rir, 0.0).unwrap(), x);
    }

    #[test]
    fn fft_matches_direct() {
        let mut rng = SeededRng::new(99);
        let x: Vec<f64> = (0..256).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let h: Vec<f64> = (0..32).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let f = fft_convolve(&x, &h);
        let d = direct(&x, &h);
        assert_eq!(f.len(), d.len());
        for (a, b) in f.iter().zip(&d) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn rate_mismatch() {
        let x = AudioBuffer::new(vec![0.1; 4], 16000).unwrap();
        let h = AudioBuffer::new(vec![1.0], 8000).unwrap();
        assert!(matches!(apply_reverb(&x, &h, 0.5), Err(AugmentError::RateMismatch { .. })));
    }
}
