use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, resample, AudioBuffer, AudioError};

use super::{
    apply_gain, apply_reverb, apply_telephony, gen_rir, mix_noise, AugmentError, Effect,
    NoiseOffset, SeededRng, TelephonyParams,
};

/// Closed interval a parameter is drawn from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    fn check(&self, name: &str) -> Result<(), AugmentError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(AugmentError::InvalidConfig(format!(
                "{name}: range needs finite min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut SeededRng) -> f64 {
        rng.uniform_range(self.min, self.max)
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), AugmentError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AugmentError::InvalidConfig(format!(
            "{name}: probability must be in [0, 1], got {p}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainFamily {
    pub probability: f64,
    pub gain_db: ParamRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFamily {
    pub probability: f64,
    pub snr_db: ParamRange,
    /// Noise clip ids. Empty means every clip of the supplied bank.
    #[serde(default)]
    pub bank: Vec<String>,
    #[serde(default)]
    pub offset: NoiseOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverbFamily {
    pub probability: f64,
    pub rt60_s: ParamRange,
    pub predelay_ms: ParamRange,
    pub wet_dry: ParamRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelephonyFamily {
    pub probability: f64,
    pub codec_rate_hz: u32,
    pub bandpass_low_hz: ParamRange,
    pub bandpass_high_hz: ParamRange,
    pub mu: ParamRange,
}

fn default_max_chain_length() -> usize {
    4
}

/// Distribution over effect chains.
///
/// Families are considered in the fixed order gain, noise, reverb, telephony.
/// A family missing from the JSON document is never applied, so `{}` is the
/// empty chain. [`EffectChainConfig::default`] gives the built-in ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectChainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverb: Option<ReverbFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub telephony: Option<TelephonyFamily>,
    #[serde(default = "default_max_chain_length")]
    pub max_chain_length: usize,
}

impl Default for EffectChainConfig {
    fn default() -> Self {
        let tel = TelephonyParams::default();
        Self {
            gain: Some(GainFamily {
                probability: 0.5,
                gain_db: ParamRange::new(-10.0, 6.0),
            }),
            noise: Some(NoiseFamily {
                probability: 0.5,
                snr_db: ParamRange::new(0.0, 30.0),
                bank: Vec::new(),
                offset: NoiseOffset::Random,
            }),
            reverb: Some(ReverbFamily {
                probability: 0.5,
                rt60_s: ParamRange::new(0.1, 0.8),
                predelay_ms: ParamRange::new(0.0, 20.0),
                wet_dry: ParamRange::new(0.2, 0.7),
            }),
            telephony: Some(TelephonyFamily {
                probability: 0.5,
                codec_rate_hz: tel.codec_rate_hz,
                bandpass_low_hz: ParamRange::fixed(tel.bandpass_low_hz),
                bandpass_high_hz: ParamRange::fixed(tel.bandpass_high_hz),
                mu: ParamRange::fixed(tel.mu),
            }),
            max_chain_length: default_max_chain_length(),
        }
    }
}

impl EffectChainConfig {
    /// Config that never applies anything.
    pub fn empty() -> Self {
        Self {
            gain: None,
            noise: None,
            reverb: None,
            telephony: None,
            max_chain_length: default_max_chain_length(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, AugmentError> {
        serde_json::from_str(text).map_err(|e| AugmentError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AugmentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| AudioError::IoFailure {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Fills an empty noise bank list with `ids`.
    pub fn with_noise_bank<I: IntoIterator<Item = String>>(mut self, ids: I) -> Self {
        if let Some(noise) = self.noise.as_mut() {
            if noise.bank.is_empty() {
                noise.bank = ids.into_iter().collect();
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.max_chain_length == 0 {
            return Err(AugmentError::InvalidConfig("max_chain_length must be >= 1".into()));
        }
        if let Some(g) = &self.gain {
            check_probability("gain", g.probability)?;
            g.gain_db.check("gain.gain_db")?;
        }
        if let Some(n) = &self.noise {
            check_probability("noise", n.probability)?;
            n.snr_db.check("noise.snr_db")?;
            if n.probability > 0.0 && n.bank.is_empty() {
                return Err(AugmentError::InvalidConfig(
                    "noise: bank is empty but probability > 0".into(),
                ));
            }
        }
        if let Some(r) = &self.reverb {
            check_probability("reverb", r.probability)?;
            r.rt60_s.check("reverb.rt60_s")?;
            r.predelay_ms.check("reverb.predelay_ms")?;
            r.wet_dry.check("reverb.wet_dry")?;
            if r.rt60_s.min <= 0.0 {
                return Err(AugmentError::InvalidConfig("reverb.rt60_s must be > 0".into()));
            }
            if r.predelay_ms.min < 0.0 {
                return Err(AugmentError::InvalidConfig("reverb.predelay_ms must be >= 0".into()));
            }
            if r.wet_dry.min < 0.0 || r.wet_dry.max > 1.0 {
                return Err(AugmentError::InvalidConfig("reverb.wet_dry must lie in [0, 1]".into()));
            }
        }
        if let Some(t) = &self.telephony {
            check_probability("telephony", t.probability)?;
            t.bandpass_low_hz.check("telephony.bandpass_low_hz")?;
            t.bandpass_high_hz.check("telephony.bandpass_high_hz")?;
            t.mu.check("telephony.mu")?;
            // both range corners must describe a valid channel
            for (low, high, mu) in [
                (t.bandpass_low_hz.min, t.bandpass_high_hz.min, t.mu.min),
                (t.bandpass_low_hz.max, t.bandpass_high_hz.max, t.mu.max),
            ] {
                TelephonyParams {
                    codec_rate_hz: t.codec_rate_hz,
                    bandpass_low_hz: low,
                    bandpass_high_hz: high,
                    mu,
                }
                .validate()
                .map_err(|e| AugmentError::InvalidConfig(format!("telephony: {e}")))?;
            }
            if t.bandpass_low_hz.max >= t.bandpass_high_hz.min {
                return Err(AugmentError::InvalidConfig(
                    "telephony: low and high band edge ranges overlap".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Draws a concrete chain.
///
/// Each configured family consumes one inclusion draw, then (if included) its
/// parameter draws in declaration order. Families beyond `max_chain_length`
/// are dropped.
pub fn sample_chain(
    cfg: &EffectChainConfig,
    rng: &mut SeededRng,
) -> Result<Vec<Effect>, AugmentError> {
    cfg.validate()?;
    let mut chain = Vec::new();

    if let Some(g) = &cfg.gain {
        if rng.bernoulli(g.probability) {
            chain.push(Effect::Gain {
                gain_db: g.gain_db.draw(rng),
            });
        }
    }
    if let Some(n) = &cfg.noise {
        if rng.bernoulli(n.probability) {
            let noise_id = n.bank[rng.index(n.bank.len())].clone();
            chain.push(Effect::AdditiveNoise {
                noise_id,
                snr_db: n.snr_db.draw(rng),
                offset_policy: n.offset,
            });
        }
    }
    if let Some(r) = &cfg.reverb {
        if rng.bernoulli(r.probability) {
            chain.push(Effect::Reverb {
                rt60_s: r.rt60_s.draw(rng),
                predelay_ms: r.predelay_ms.draw(rng),
                wet_dry: r.wet_dry.draw(rng),
                rir_seed: None,
            });
        }
    }
    if let Some(t) = &cfg.telephony {
        if rng.bernoulli(t.probability) {
            chain.push(Effect::Telephony(TelephonyParams {
                codec_rate_hz: t.codec_rate_hz,
                bandpass_low_hz: t.bandpass_low_hz.draw(rng),
                bandpass_high_hz: t.bandpass_high_hz.draw(rng),
                mu: t.mu.draw(rng),
            }));
        }
    }
    chain.truncate(cfg.max_chain_length);
    Ok(chain)
}

/// Read-only lookup of noise clips by id.
pub trait NoiseBank: Sync {
    fn resolve(&self, id: &str) -> Option<&AudioBuffer>;
}

/// Noise bank held fully in memory.
#[derive(Debug, Clone, Default)]
pub struct InMemoryNoiseBank {
    clips: BTreeMap<String, AudioBuffer>,
}

impl InMemoryNoiseBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, clip: AudioBuffer) {
        self.clips.insert(id.into(), clip);
    }

    /// Loads every `*.wav` directly inside `dir`, keyed by file stem.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, AudioError> {
        let dir = dir.as_ref();
        let io = |source| AudioError::IoFailure {
            path: dir.display().to_string(),
            source,
        };
        let mut bank = Self::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            let is_wav = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
            if path.is_file() && is_wav {
                let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                bank.insert(id, read_wav(&path)?);
            }
        }
        Ok(bank)
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.clips.keys()
    }

    /// Copy of the bank with every clip converted to `rate`.
    pub fn resampled(&self, rate: u32) -> Result<Self, AudioError> {
        let clips = self
            .clips
            .iter()
            .map(|(id, clip)| Ok((id.clone(), resample(clip, rate)?)))
            .collect::<Result<_, AudioError>>()?;
        Ok(Self { clips })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }
}

impl NoiseBank for InMemoryNoiseBank {
    fn resolve(&self, id: &str) -> Option<&AudioBuffer> {
        self.clips.get(id)
    }
}

/// Provenance of one augmented clip.
///
/// `effects` holds fully resolved values (noise offsets, RIR seeds), so
/// [`replay`] reproduces the output without any random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedChainRecord {
    pub rng_algorithm: String,
    /// Seed of the stream the chain was drawn from.
    pub seed: u64,
    pub effects: Vec<Effect>,
    pub input_clip_id: String,
    pub output_clip_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AppliedChainRecord {
    pub fn with_ids(mut self, input: impl Into<String>, output: impl Into<String>) -> Self {
        self.input_clip_id = input.into();
        self.output_clip_id = output.into();
        self
    }
}

fn rir_duration_s(rt60_s: f64, predelay_ms: f64) -> f64 {
    rt60_s + predelay_ms / 1000.0
}

fn apply_one(
    buf: &AudioBuffer,
    effect: &Effect,
    bank: &dyn NoiseBank,
    rng: &mut SeededRng,
) -> Result<(AudioBuffer, Effect), AugmentError> {
    effect.validate()?;
    match effect {
        Effect::Gain { gain_db } => Ok((apply_gain(buf, *gain_db)?, effect.clone())),
        Effect::AdditiveNoise {
            noise_id,
            snr_db,
            offset_policy,
        } => {
            let noise = bank
                .resolve(noise_id)
                .ok_or_else(|| AugmentError::UnresolvableNoiseRef(noise_id.clone()))?;
            let noise = if noise.sample_rate() == buf.sample_rate() {
                std::borrow::Cow::Borrowed(noise)
            } else {
                std::borrow::Cow::Owned(resample(noise, buf.sample_rate())?)
            };
            if noise.is_empty() {
                return Err(AugmentError::SilentNoise);
            }
            let offset = match offset_policy {
                NoiseOffset::Fixed(o) => *o,
                NoiseOffset::Random => rng.index(noise.len()),
            };
            let out = mix_noise(buf, &noise, *snr_db, offset)?;
            let resolved = Effect::AdditiveNoise {
                noise_id: noise_id.clone(),
                snr_db: *snr_db,
                offset_policy: NoiseOffset::Fixed(offset),
            };
            Ok((out, resolved))
        }
        Effect::Reverb {
            rt60_s,
            predelay_ms,
            wet_dry,
            rir_seed,
        } => {
            let seed = rir_seed.unwrap_or_else(|| rng.next_u64());
            let rir = gen_rir(
                *rt60_s,
                *predelay_ms,
                rir_duration_s(*rt60_s, *predelay_ms),
                buf.sample_rate(),
                &mut SeededRng::new(seed),
            )?;
            let out = apply_reverb(buf, &rir, *wet_dry)?;
            let resolved = Effect::Reverb {
                rt60_s: *rt60_s,
                predelay_ms: *predelay_ms,
                wet_dry: *wet_dry,
                rir_seed: Some(seed),
            };
            Ok((out, resolved))
        }
        Effect::Telephony(p) => Ok((apply_telephony(buf, p)?, effect.clone())),
    }
}

/// Applies `chain` in order, resolving any open parameters from `rng`.
///
/// The returned record has empty clip ids; callers attach them with
/// [`AppliedChainRecord::with_ids`]. A peak above full scale is noted in
/// `warnings` and left unclipped.
pub fn apply_chain(
    buf: &AudioBuffer,
    chain: &[Effect],
    bank: &dyn NoiseBank,
    rng: &mut SeededRng,
) -> Result<(AudioBuffer, AppliedChainRecord), AugmentError> {
    let mut current = buf.clone();
    let mut resolved = Vec::with_capacity(chain.len());
    for effect in chain {
        let (next, concrete) = apply_one(&current, effect, bank, rng)?;
        current = next;
        resolved.push(concrete);
    }
    let mut warnings = Vec::new();
    let peak = current.peak();
    if peak > 1.0 {
        warnings.push(format!("peak {peak:.4} exceeds full scale; clamped at PCM write"));
    }
    let record = AppliedChainRecord {
        rng_algorithm: SeededRng::ALGORITHM.to_string(),
        seed: rng.seed(),
        effects: resolved,
        input_clip_id: String::new(),
        output_clip_id: String::new(),
        warnings,
    };
    Ok((current, record))
}

/// Re-applies a recorded chain to its input.
pub fn replay(
    buf: &AudioBuffer,
    record: &AppliedChainRecord,
    bank: &dyn NoiseBank,
) -> Result<AudioBuffer, AugmentError> {
    if let Some(open) = record.effects.iter().find(|e| !e.is_resolved()) {
        return Err(AugmentError::UnresolvedEffect(open.family().to_string()));
    }
    let mut rng = SeededRng::new(record.seed);
    apply_chain(buf, &record.effects, bank, &mut rng).map(|(out, _)| out)
}

/// Samples and applies a chain for one clip on its own substream of
/// `global_seed`, so the result does not depend on processing order.
pub fn augment_clip(
    clip_id: &str,
    output_clip_id: &str,
    buf: &AudioBuffer,
    cfg: &EffectChainConfig,
    bank: &dyn NoiseBank,
    global_seed: u64,
) -> Result<(AudioBuffer, AppliedChainRecord), AugmentError> {
    let mut rng = SeededRng::for_clip(global_seed, clip_id);
    let chain = sample_chain(cfg, &mut rng)?;
    let (out, record) = apply_chain(buf, &chain, bank, &mut rng)?;
    Ok((out, record.with_ids(clip_id, output_clip_id)))
}
