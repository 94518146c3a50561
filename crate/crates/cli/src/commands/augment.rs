use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use vcrobust_core::audio::{read_wav_with_encoding, write_wav};
use vcrobust_core::augment::{augment_clip, AppliedChainRecord, EffectChainConfig, InMemoryNoiseBank};
use walkdir::WalkDir;

use super::{load_chain, load_noise_bank, worker_pool};
use crate::config::pick;
use crate::error::io_error;
use crate::{AugmentArgs, CliError, Globals};

pub const PROVENANCE_FILE: &str = "provenance.jsonl";

/// One input clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipInput {
    pub clip_id: String,
    pub path: PathBuf,
}

/// Outcome of an augment run that got as far as processing clips.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSummary {
    pub written: usize,
    pub failed: Vec<(String, String)>,
}

fn is_wav(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn check_id(id: &str) -> Result<(), CliError> {
    let bad = id.is_empty()
        || id.contains(['/', '\\'])
        || id.starts_with('.')
        || id.chars().any(char::is_control);
    if bad {
        return Err(CliError::Data(format!("clip id {id:?} is not a usable file name")));
    }
    Ok(())
}

/// Expands `--input` into clips: a single WAV, every WAV under a directory
/// (sorted, nested folders joined with `__`), or a clip list file.
pub fn collect_inputs(input: &Path) -> Result<Vec<ClipInput>, CliError> {
    if !input.exists() {
        return Err(CliError::Data(format!("input {} does not exist", input.display())));
    }
    let clips = if input.is_dir() {
        let mut clips = Vec::new();
        for entry in WalkDir::new(input).sort_by_file_name() {
            let entry = entry.map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            if entry.file_type().is_file() && is_wav(entry.path()) {
                let rel = entry.path().strip_prefix(input).unwrap_or(entry.path());
                let id = rel
                    .with_extension("")
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("__");
                clips.push(ClipInput {
                    clip_id: id,
                    path: entry.into_path(),
                });
            }
        }
        clips
    } else if is_wav(input) {
        vec![ClipInput {
            clip_id: stem(input),
            path: input.to_path_buf(),
        }]
    } else {
        let text = std::fs::read_to_string(input).map_err(|e| io_error(input, e))?;
        let base = input.parent().unwrap_or(Path::new("."));
        text.lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|line| {
                let (id, path) = match line.split_once('\t') {
                    Some((id, p)) => (id.trim().to_string(), PathBuf::from(p.trim())),
                    None => {
                        let p = PathBuf::from(line.trim());
                        (stem(&p), p)
                    }
                };
                let path = if path.is_relative() { base.join(path) } else { path };
                ClipInput { clip_id: id, path }
            })
            .collect()
    };
    if clips.is_empty() {
        return Err(CliError::Data(format!("no clips found in {}", input.display())));
    }
    let mut seen = BTreeSet::new();
    for c in &clips {
        check_id(&c.clip_id)?;
        if c.clip_id == "provenance" || !seen.insert(c.clip_id.as_str()) {
            return Err(CliError::Data(format!("duplicate or reserved clip id {:?}", c.clip_id)));
        }
    }
    Ok(clips)
}

fn process_clip(
    clip: &ClipInput,
    cfg: &EffectChainConfig,
    bank: &InMemoryNoiseBank,
    seed: u64,
    out_dir: &Path,
) -> Result<AppliedChainRecord, CliError> {
    let (buf, encoding) = read_wav_with_encoding(&clip.path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", clip.path.display())))?;
    let (out, record) = augment_clip(&clip.clip_id, &clip.clip_id, &buf, cfg, bank, seed)?;
    let dest = out_dir.join(format!("{}.wav", clip.clip_id));
    if record.effects.is_empty() {
        // nothing applied: keep the input bytes exactly
        std::fs::copy(&clip.path, &dest).map_err(|e| io_error(&dest, e))?;
    } else {
        write_wav(&out, &dest, encoding)?;
    }
    for w in &record.warnings {
        log::warn!(clip = clip.clip_id.as_str(), warning = w.as_str(); "clip warning");
    }
    Ok(record)
}

/// Augments every input clip. Per-clip failures are logged and skipped;
/// the run then fails with the worst failure class after writing the rest.
pub fn run(g: &Globals, a: AugmentArgs) -> Result<AugmentSummary, CliError> {
    let f = &g.file;
    let jobs = pick("jobs", a.jobs.map(|j| j as usize), f.jobs, super::default_jobs());
    let bank = load_noise_bank(a.noise_dir, f.noise_dir.clone())?;
    let cfg = load_chain(a.chain_config, f.chain_config.clone(), &bank)?;
    let clips = collect_inputs(&a.input)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;

    log::info!(clips = clips.len(), jobs = jobs, seed = g.seed; "augmenting");
    let pool = worker_pool(jobs)?;
    let results: Vec<Result<AppliedChainRecord, CliError>> = pool.install(|| {
        clips
            .par_iter()
            .map(|c| process_clip(c, &cfg, &bank, g.seed, &a.out))
            .collect()
    });

    let mut provenance = String::new();
    let mut failed = Vec::new();
    let mut worst: Option<CliError> = None;
    for (clip, r) in clips.iter().zip(results) {
        match r {
            Ok(record) => {
                provenance.push_str(&serde_json::to_string(&record).expect("record serializes"));
                provenance.push('\n');
            }
            Err(e) => {
                log::error!(clip = clip.clip_id.as_str(), path:% = clip.path.display(), error:% = e; "clip failed");
                failed.push((clip.clip_id.clone(), e.to_string()));
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    let prov_path = a.out.join(PROVENANCE_FILE);
    std::fs::File::create(&prov_path)
        .and_then(|mut file| file.write_all(provenance.as_bytes()))
        .map_err(|e| io_error(&prov_path, e))?;

    let summary = AugmentSummary {
        written: clips.len() - failed.len(),
        failed,
    };
    println!("augmented {}/{} clips into {}", summary.written, clips.len(), a.out.display());
    match worst {
        None => Ok(summary),
        Some(e) => {
            let names: Vec<&str> = summary.failed.iter().map(|(id, _)| id.as_str()).collect();
            let msg = format!("{} of {} clips failed: {}", names.len(), clips.len(), names.join(", "));
            Err(match e {
                CliError::Io(_) => CliError::Io(msg),
                _ => CliError::Data(msg),
            })
        }
    }
}
