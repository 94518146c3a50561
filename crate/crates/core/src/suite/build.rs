use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::audio::{read_wav, resample, write_wav, WavEncoding};
use crate::augment::{augment_clip, AppliedChainRecord, EffectChainConfig, NoiseBank, SeededRng};

use super::{
    io_err, ClipRecord, EvalPair, SuiteError, SuiteManifest, SuiteMetadata, MANIFEST_FILE,
    PROVENANCE_FILE, SCHEMA_VERSION,
};

/// Placeholder model ids for a four-system comparison.
pub const DEFAULT_MODEL_IDS: [&str; 4] = [
    "autovc",
    "fragmentvc",
    "fragmentvc-cv-finetune",
    "fragmentvc-cv-vctk",
];

const AUDIO_DIR: &str = "audio";
const SELECTION_STREAM: &str = "__suite_selection__";

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub n_pairs: usize,
    pub target_speaker_id: String,
    pub chain: EffectChainConfig,
    pub seed: u64,
    pub model_ids: Vec<String>,
    /// Rate every source clip is converted to before noising.
    pub sample_rate: u32,
    /// Worker threads for augmentation; 0 uses one per logical CPU.
    pub jobs: usize,
}

impl SuiteOptions {
    pub fn new(n_pairs: usize, target_speaker_id: impl Into<String>, seed: u64) -> Self {
        Self {
            n_pairs,
            target_speaker_id: target_speaker_id.into(),
            chain: EffectChainConfig::default(),
            seed,
            model_ids: DEFAULT_MODEL_IDS.iter().map(|s| s.to_string()).collect(),
            sample_rate: 16_000,
            jobs: 0,
        }
    }
}

/// Picks `n` clips without replacement, spreading them over speakers.
///
/// Speakers and each speaker's clips are shuffled, then clips are dealt
/// round-robin, so per-speaker counts differ by at most one unless a speaker
/// runs out of clips.
pub fn select_sources<'a>(
    records: &'a [ClipRecord],
    n: usize,
    rng: &mut SeededRng,
) -> Result<Vec<&'a ClipRecord>, SuiteError> {
    if n > records.len() {
        return Err(SuiteError::InsufficientClips {
            needed: n,
            available: records.len(),
        });
    }
    let mut by_speaker: BTreeMap<&str, Vec<&ClipRecord>> = BTreeMap::new();
    for r in records {
        by_speaker.entry(r.speaker_id.as_str()).or_default().push(r);
    }
    let mut queues: Vec<Vec<&ClipRecord>> = by_speaker.into_values().collect();
    rng.shuffle(&mut queues);
    for q in &mut queues {
        q.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
        rng.shuffle(q);
        // dealt from the back
        q.reverse();
    }
    let mut picked = Vec::with_capacity(n);
    while picked.len() < n {
        for q in queues.iter_mut() {
            if picked.len() == n {
                break;
            }
            if let Some(r) = q.pop() {
                picked.push(r);
            }
        }
    }
    Ok(picked)
}

fn pair_id(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(3);
    format!("pair_{index:0width$}")
}

fn suite_id(opts: &SuiteOptions, chosen: &[&ClipRecord]) -> String {
    let mut h = Sha256::new();
    h.update(b"vcrobust-suite-v1\0");
    h.update(opts.seed.to_le_bytes());
    h.update(opts.sample_rate.to_le_bytes());
    h.update(opts.target_speaker_id.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(&opts.chain).expect("config serializes"));
    for m in &opts.model_ids {
        h.update(m.as_bytes());
        h.update([0]);
    }
    for c in chosen {
        h.update(c.clip_id.as_bytes());
        h.update([0]);
    }
    format!("suite-{}", hex::encode(&h.finalize()[..8]))
}

/// Selects, noises and writes an evaluation suite into `out_dir`.
///
/// Writes `audio/<pair_id>.wav` (PCM16), `provenance.jsonl` and
/// `manifest.json`. Nothing time-dependent is recorded, so identical inputs
/// reproduce every file byte for byte.
pub fn build_suite(
    records: &[ClipRecord],
    opts: &SuiteOptions,
    bank: &dyn NoiseBank,
    out_dir: impl AsRef<Path>,
) -> Result<SuiteManifest, SuiteError> {
    let out_dir = out_dir.as_ref();
    opts.chain.validate()?;
    if opts.model_ids.is_empty() {
        return Err(SuiteError::UnknownModel(String::new()));
    }
    if records.iter().any(|r| r.speaker_id == opts.target_speaker_id) {
        return Err(SuiteError::TargetInSources(opts.target_speaker_id.clone()));
    }
    let mut ids = BTreeSet::new();
    for r in records {
        if !ids.insert(r.clip_id.as_str()) {
            return Err(SuiteError::DuplicateClipId(r.clip_id.clone()));
        }
    }

    let mut rng = SeededRng::for_clip(opts.seed, SELECTION_STREAM);
    let chosen = select_sources(records, opts.n_pairs, &mut rng)?;
    let audio_dir = out_dir.join(AUDIO_DIR);
    std::fs::create_dir_all(&audio_dir).map_err(io_err(&audio_dir))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .expect("thread pool");
    let total = chosen.len();
    let results: Vec<Result<(EvalPair, AppliedChainRecord), SuiteError>> = pool.install(|| {
        chosen
            .par_iter()
            .enumerate()
            .map(|(i, clip)| {
                let pid = pair_id(i, total);
                let mut buf = read_wav(&clip.path)?;
                if buf.sample_rate() != opts.sample_rate {
                    buf = resample(&buf, opts.sample_rate)?;
                }
                let (noised, record) =
                    augment_clip(&clip.clip_id, &pid, &buf, &opts.chain, bank, opts.seed)?;
                let rel = format!("{AUDIO_DIR}/{pid}.wav");
                write_wav(&noised, out_dir.join(&rel), WavEncoding::Pcm16)?;
                let source_clip = ClipRecord {
                    path: PathBuf::from(rel),
                    duration_s: noised.duration_s(),
                    ..(*clip).clone()
                };
                Ok((
                    EvalPair {
                        pair_id: pid,
                        source_clip,
                        target_speaker_id: opts.target_speaker_id.clone(),
                        model_outputs: BTreeMap::new(),
                    },
                    record,
                ))
            })
            .collect()
    });

    let mut pairs = Vec::with_capacity(total);
    let mut provenance = String::new();
    for r in results {
        let (pair, record) = r?;
        provenance.push_str(&serde_json::to_string(&record).expect("record serializes"));
        provenance.push('\n');
        pairs.push(pair);
    }
    let prov_path = out_dir.join(PROVENANCE_FILE);
    std::fs::File::create(&prov_path)
        .and_then(|mut f| f.write_all(provenance.as_bytes()))
        .map_err(io_err(&prov_path))?;

    let source_speakers = records.iter().map(|r| &r.speaker_id).collect::<BTreeSet<_>>().len();
    let manifest = SuiteManifest {
        schema_version: SCHEMA_VERSION,
        suite_id: suite_id(opts, &chosen),
        target_speaker_id: opts.target_speaker_id.clone(),
        model_ids: opts.model_ids.clone(),
        seed: opts.seed,
        chain_config: opts.chain.clone(),
        pairs,
        metadata: SuiteMetadata {
            tool: format!("vcrobust {}", env!("CARGO_PKG_VERSION")),
            rng_algorithm: SeededRng::ALGORITHM.to_string(),
            eligible_clips: records.len(),
            source_speakers,
            audio_encoding: format!("pcm16 {} Hz mono", opts.sample_rate),
            provenance_file: PROVENANCE_FILE.to_string(),
            note: "Built from public corpus clips; the original study used private \
                   name recordings that are not distributed."
                .to_string(),
        },
    };
    manifest.save(out_dir)?;
    info!(
        "suite={} pairs={} speakers={} out={}",
        manifest.suite_id,
        manifest.pairs.len(),
        source_speakers,
        out_dir.join(MANIFEST_FILE).display()
    );
    Ok(manifest)
}

fn relative_inside(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Option<Vec<&str>> = rel
        .components()
        .map(|c| match c {
            Component::Normal(s) => s.to_str(),
            _ => None,
        })
        .collect();
    Some(parts?.join("/"))
}

/// Records converted outputs for `model_id` from `outputs_dir/<pair_id>.wav`.
///
/// Every pair must have a readable WAV, and `outputs_dir` must lie inside
/// the suite directory so the manifest can store relative paths. Nothing is
/// changed unless all pairs validate.
pub fn attach_outputs(
    manifest: &mut SuiteManifest,
    suite_dir: impl AsRef<Path>,
    model_id: &str,
    outputs_dir: impl AsRef<Path>,
) -> Result<(), SuiteError> {
    if !manifest.model_ids.iter().any(|m| m == model_id) {
        return Err(SuiteError::UnknownModel(model_id.to_string()));
    }
    let suite_dir = suite_dir.as_ref();
    let root = suite_dir.canonicalize().map_err(io_err(suite_dir))?;
    let outputs_dir = outputs_dir.as_ref();
    let outputs_dir = if outputs_dir.is_relative() && !outputs_dir.exists() {
        suite_dir.join(outputs_dir)
    } else {
        outputs_dir.to_path_buf()
    };
    let dir = outputs_dir.canonicalize().map_err(io_err(&outputs_dir))?;
    if relative_inside(&root, &dir).is_none() {
        return Err(SuiteError::OutsideSuite {
            path: outputs_dir.display().to_string(),
        });
    }

    let mut found = Vec::with_capacity(manifest.pairs.len());
    for pair in &manifest.pairs {
        let file = dir.join(format!("{}.wav", pair.pair_id));
        let missing = || SuiteError::MissingOutput {
            pair_id: pair.pair_id.clone(),
            path: file.display().to_string(),
        };
        // canonicalize again so a symlink cannot point out of the suite
        let real = file.canonicalize().map_err(|_| missing())?;
        let rel = relative_inside(&root, &real).ok_or_else(|| SuiteError::OutsideSuite {
            path: real.display().to_string(),
        })?;
        read_wav(&real).map_err(|_| missing())?;
        found.push(rel);
    }
    for (pair, rel) in manifest.pairs.iter_mut().zip(found) {
        pair.model_outputs.insert(model_id.to_string(), rel);
    }
    Ok(())
}
