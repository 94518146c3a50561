//! Polyphase windowed-sinc rate conversion.
//!
//! The interpolation kernel is a Kaiser-windowed sinc spanning 64 taps at the
//! lower of the two rates, with its cutoff at 0.95 of the lower Nyquist
//! frequency. For a rational ratio `up/down` there are `up` distinct kernel
//! phases; they are tabulated once when `up` is small and evaluated on the fly
//! otherwise.

use super::{AudioBuffer, AudioError};

const TAPS_PER_PHASE: f64 = 64.0;
const CUTOFF_FRACTION: f64 = 0.95;
const KAISER_BETA: f64 = 8.6;
const MAX_TABULATED_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Output length `round(len * target / source)`, computed exactly in integers.
pub fn resampled_len(len: usize, source_rate: u32, target_rate: u32) -> usize {
    let num = len as u128 * target_rate as u128;
    let den = source_rate as u128;
    ((2 * num + den) / (2 * den)) as usize
}

/// One kernel phase: taps apply to input samples `base + offset ..`.
#[derive(Debug, Clone)]
struct Phase {
    offset: i64,
    coeffs: Vec<f64>,
}

/// Reusable rate converter for a fixed `(source, target)` pair.
#[derive(Debug, Clone)]
pub struct Resampler {
    source_rate: u32,
    target_rate: u32,
    up: u64,
    down: u64,
    half_width: f64,
    cutoff: f64,
    table: Option<Vec<Phase>>,
}

impl Resampler {
    pub fn new(source_rate: u32, target_rate: u32) -> Result<Self, AudioError> {
        if source_rate == 0 {
            return Err(AudioError::InvalidRate(source_rate));
        }
        if target_rate == 0 {
            return Err(AudioError::InvalidRate(target_rate));
        }
        let g = gcd(source_rate as u64, target_rate as u64);
        let up = target_rate as u64 / g;
        let down = source_rate as u64 / g;
        // Kernel widths are in input samples; when decimating, the kernel
        // stretches so it still covers 64 taps at the output rate.
        let stretch = (source_rate as f64 / target_rate as f64).max(1.0);
        let half_width = TAPS_PER_PHASE / 2.0 * stretch;
        let min_rate = source_rate.min(target_rate) as f64;
        let cutoff = CUTOFF_FRACTION * (min_rate / 2.0) / source_rate as f64;

        let mut r = Self {
            source_rate,
            target_rate,
            up,
            down,
            half_width,
            cutoff,
            table: None,
        };
        if source_rate != target_rate && up <= MAX_TABULATED_PHASES {
            r.table = Some((0..up).map(|p| r.phase(p)).collect());
        }
        Ok(r)
    }

    fn kernel(&self, tau: f64) -> f64 {
        let r = tau / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA);
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * tau) * window
    }

    fn phase(&self, p: u64) -> Phase {
        let frac = p as f64 / self.up as f64;
        let lo = (frac - self.half_width).ceil() as i64;
        let hi = (frac + self.half_width).floor() as i64;
        let mut coeffs: Vec<f64> = (lo..=hi).map(|d| self.kernel(frac - d as f64)).collect();
        // unit DC gain for every phase
        let sum: f64 = coeffs.iter().sum();
        if sum != 0.0 {
            coeffs.iter_mut().for_each(|c| *c /= sum);
        }
        Phase { offset: lo, coeffs }
    }

    pub fn source_rate(&self) -> u32 {
        self.source_rate
    }

    pub fn target_rate(&self) -> u32 {
        self.target_rate
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        if self.source_rate == self.target_rate {
            return input.to_vec();
        }
        let out_len = resampled_len(input.len(), self.source_rate, self.target_rate);
        let n = input.len() as i64;
        let mut out = Vec::with_capacity(out_len);
        let mut owned;
        for j in 0..out_len as u64 {
            let pos = j * self.down;
            let base = (pos / self.up) as i64;
            let p = pos % self.up;
            let phase = match &self.table {
                Some(t) => &t[p as usize],
                None => {
                    owned = self.phase(p);
                    &owned
                }
            };
            let start = base + phase.offset;
            let mut acc = 0.0;
            for (k, c) in phase.coeffs.iter().enumerate() {
                let idx = start + k as i64;
                if idx >= 0 && idx < n {
                    acc += c * input[idx as usize];
                }
            }
            out.push(acc);
        }
        out
    }
}

/// Converts `buf` to `target_rate`; identity when the rates already match.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    if target_rate == buf.sample_rate() {
        return Ok(buf.clone());
    }
    let r = Resampler::new(buf.sample_rate(), target_rate)?;
    AudioBuffer::new(r.process(buf.samples()), target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        AudioBuffer::from_fn(len, rate, |i| (2.0 * PI * freq * i as f64 / rate as f64).sin()).unwrap()
    }

    /// Single-bin DFT magnitude, normalized so a unit sine reads ~0.5.
    fn dft_mag(x: &[f64], rate: u32, freq: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, s) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * i as f64 / rate as f64;
            re += s * ph.cos();
            im -= s * ph.sin();
        }
        (re * re + im * im).sqrt() / x.len() as f64
    }

    #[test]
    fn identity_and_length() {
        let b = tone(440.0, 16000, 1000);
        assert_eq!(resample(&b, 16000).unwrap(), b);
        let r = resample(&AudioBuffer::silence(16000, 16000).unwrap(), 8000).unwrap();
        assert_eq!(r.len(), 8000);
        assert_eq!(r.sample_rate(), 8000);
        assert!(matches!(resample(&b, 0), Err(AudioError::InvalidRate(0))));
    }

    #[test]
    fn length_rounds_half_up() {
        assert_eq!(resampled_len(16001, 16000, 8000), 8001);
        assert_eq!(resampled_len(3, 44100, 16000), 1);
        assert_eq!(resampled_len(0, 44100, 16000), 0);
    }

    #[test]
    fn dc_is_preserved_away_from_edges() {
        let b = AudioBuffer::new(vec![0.3; 4000], 44100).unwrap();
        let r = resample(&b, 16000).unwrap();
        for &s in &r.samples()[200..r.len() - 200] {
            assert!((s - 0.3).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn upsampling_keeps_tone_level() {
        let b = tone(1000.0, 8000, 8000);
        let r = resample(&b, 16000).unwrap();
        let inner = &r.samples()[400..15600];
        let ratio = dft_mag(inner, 16000, 1000.0) / dft_mag(&b.samples()[200..7800], 8000, 1000.0);
        assert!((20.0 * ratio.log10()).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn decimation_rejects_aliases() {
        // 7 kHz at 48 kHz sits above the 4 kHz output Nyquist; it would alias to 1 kHz
        let b = tone(7000.0, 48000, 48000);
        let r = resample(&b, 8000).unwrap();
        let inner = &r.samples()[200..7800];
        let level = dft_mag(inner, 8000, 1000.0) / 0.5;
        assert!(20.0 * level.log10() < -70.0, "alias at {} dB", 20.0 * level.log10());
    }

    #[test]
    fn large_phase_count_path_matches_table_path() {
        // 16000 -> 16001 has 16001 phases and is evaluated without a table
        let b = tone(300.0, 16000, 2000);
        let r = Resampler::new(16000, 16001).unwrap();
        assert!(r.table.is_none());
        let out = r.process(b.samples());
        assert_eq!(out.len(), 2000);
        let mut tabled = r.clone();
        tabled.table = Some((0..tabled.up).map(|p| tabled.phase(p)).collect());
        assert_eq!(tabled.process(b.samples()), out);
    }
}
