//! Slow, straightforward reference computations used to check the fast paths
//! in tests. Nothing here is used by the library itself.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use crate::analysis::{GroupBy, RatingRecord, RatingsTable};
use crate::augment::SeededRng;
use crate::suite::{DemographicGroup, Gender};

/// O(n·m) linear convolution.
pub fn direct_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

/// RT60 from Schroeder backward integration: a least-squares line through
/// the energy decay curve between -5 and -25 dB, extrapolated to -60 dB.
pub fn schroeder_rt60(rir: &[f64], sample_rate: u32) -> f64 {
    let mut edc = vec![0.0; rir.len()];
    let mut acc = 0.0;
    for i in (0..rir.len()).rev() {
        acc += rir[i] * rir[i];
        edc[i] = acc;
    }
    let total = edc[0];
    let points: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .map(|(i, e)| (i as f64 / sample_rate as f64, 10.0 * (e / total).log10()))
        .filter(|(_, db)| (-25.0..=-5.0).contains(db))
        .collect();
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let md = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|(t, d)| (t - mt) * (d - md)).sum();
    let den: f64 = points.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    -60.0 / (num / den)
}

/// Amplitude of the `freq` component of `x`, by direct DFT projection.
pub fn tone_amplitude(x: &[f64], freq: f64, sample_rate: u32) -> f64 {
    let w = 2.0 * PI * freq / sample_rate as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, v) in x.iter().enumerate() {
        re += v * (w * n as f64).cos();
        im -= v * (w * n as f64).sin();
    }
    2.0 * (re * re + im * im).sqrt() / x.len() as f64
}

pub fn sine(len: usize, freq: f64, amp: f64, sample_rate: u32) -> Vec<f64> {
    (0..len)
        .map(|n| amp * (2.0 * PI * freq * n as f64 / sample_rate as f64).sin())
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// SNR of `mixed` relative to the clean `signal`, treating the difference as noise.
pub fn measured_snr_db(signal: &[f64], mixed: &[f64]) -> f64 {
    let noise: Vec<f64> = signal.iter().zip(mixed).map(|(s, m)| m - s).collect();
    20.0 * (rms(signal) / rms(&noise)).log10()
}

/// Harmonic stack under a syllable-rate envelope plus a little breath noise.
pub fn speech_shaped(len: usize, sample_rate: u32, rng: &mut SeededRng) -> Vec<f64> {
    let f0 = rng.uniform_range(90.0, 250.0);
    let rate = rng.uniform_range(3.0, 6.0);
    let sr = sample_rate as f64;
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            let env = 0.5 * (1.0 - (2.0 * PI * rate * t).cos());
            let voiced: f64 = (1..=8)
                .map(|k| (2.0 * PI * f0 * k as f64 * t).sin() / k as f64)
                .sum();
            0.2 * env * voiced + 0.01 * rng.uniform_range(-1.0, 1.0)
        })
        .collect()
}

/// Random complete-ish ratings table: up to 5 annotators, 4 models, 16
/// pairs, with each rating dropped with probability `drop`.
pub fn random_table(rng: &mut SeededRng, drop: f64) -> RatingsTable {
    let annotators = 2 + rng.index(4);
    let models = 1 + rng.index(4);
    let pairs = 2 + rng.index(15);
    let speakers = 1 + rng.index(4);
    let genders = [Gender::Male, Gender::Female, Gender::Unknown];
    let groups = [
        DemographicGroup::English,
        DemographicGroup::Spanish,
        DemographicGroup::Indian,
        DemographicGroup::Chinese,
        DemographicGroup::Other,
        DemographicGroup::Unknown,
    ];
    let spk_meta: Vec<(Gender, DemographicGroup)> = (0..speakers)
        .map(|_| (genders[rng.index(3)], groups[rng.index(6)]))
        .collect();
    let pair_spk: Vec<usize> = (0..pairs).map(|_| rng.index(speakers)).collect();
    let mut records = Vec::new();
    for a in 0..annotators {
        // occasionally a rater who always answers the same
        let constant = rng.bernoulli(0.1).then(|| 1 + rng.index(5) as u8);
        for m in 0..models {
            for (p, &s) in pair_spk.iter().enumerate() {
                if rng.bernoulli(drop) {
                    continue;
                }
                records.push(RatingRecord {
                    annotator_id: format!("ann{a}"),
                    model_id: format!("model{m}"),
                    pair_id: format!("pair_{p:03}"),
                    speaker_id: format!("spk{s}"),
                    gender: spk_meta[s].0,
                    demographic_group: spk_meta[s].1,
                    score: constant.unwrap_or_else(|| 1 + rng.index(5) as u8),
                });
            }
        }
    }
    RatingsTable::new(records).expect("generated table is valid")
}

fn score_of(t: &RatingsTable, a: &str, m: &str, p: &str) -> Option<f64> {
    t.records()
        .iter()
        .find(|r| r.annotator_id == a && r.model_id == m && r.pair_id == p)
        .map(|r| f64::from(r.score))
}

/// Pearson r via raw sums; `None` when undefined.
pub fn raw_sum_pcc(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

/// Oracle cell: `Ok(v)`, or `Err(true)` for zero variance, `Err(false)` for
/// too little overlap.
pub type OracleCell = Result<f64, bool>;

/// Averaged correlation for every annotator pair, looping over each model
/// and each pair id explicitly.
pub fn brute_pcc_matrix(t: &RatingsTable) -> (Vec<String>, Vec<Vec<OracleCell>>) {
    let annotators: Vec<String> = t
        .records()
        .iter()
        .map(|r| r.annotator_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let models: BTreeSet<&str> = t.records().iter().map(|r| r.model_id.as_str()).collect();
    let pairs: BTreeSet<&str> = t.records().iter().map(|r| r.pair_id.as_str()).collect();
    let n = annotators.len();
    let mut out = vec![vec![Ok(1.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut vals = Vec::new();
            let mut zero = false;
            for m in &models {
                let mut x = Vec::new();
                let mut y = Vec::new();
                for p in &pairs {
                    if let (Some(a), Some(b)) = (
                        score_of(t, &annotators[i], m, p),
                        score_of(t, &annotators[j], m, p),
                    ) {
                        x.push(a);
                        y.push(b);
                    }
                }
                if x.len() < 2 {
                    continue;
                }
                match raw_sum_pcc(&x, &y) {
                    Some(r) => vals.push(r),
                    None => zero = true,
                }
            }
            out[i][j] = if zero {
                Err(true)
            } else if vals.is_empty() {
                Err(false)
            } else {
                Ok(vals.iter().sum::<f64>() / vals.len() as f64)
            };
        }
    }
    (annotators, out)
}

pub fn brute_speaker_means(t: &RatingsTable, model: &str) -> BTreeMap<String, f64> {
    let speakers: BTreeSet<&str> = t
        .records()
        .iter()
        .filter(|r| r.model_id == model)
        .map(|r| r.speaker_id.as_str())
        .collect();
    speakers
        .into_iter()
        .map(|s| {
            let v: Vec<f64> = t
                .records()
                .iter()
                .filter(|r| r.model_id == model && r.speaker_id == s)
                .map(|r| f64::from(r.score))
                .collect();
            (s.to_string(), v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// (group, model) → (n, mean, population std), via two explicit passes.
pub fn brute_group_stats(t: &RatingsTable, by: GroupBy) -> BTreeMap<(String, String), (usize, f64, f64)> {
    let key = |r: &RatingRecord| match by {
        GroupBy::All => "All".to_string(),
        GroupBy::Gender => format!("{}", r.gender),
        GroupBy::Demographic => format!("{}", r.demographic_group),
    };
    let mut buckets: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in t.records() {
        buckets
            .entry((key(r), r.model_id.clone()))
            .or_default()
            .push(f64::from(r.score));
    }
    buckets
        .into_iter()
        .map(|(k, v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
            (k, (n, mean, var.max(0.0).sqrt()))
        })
        .collect()
}
