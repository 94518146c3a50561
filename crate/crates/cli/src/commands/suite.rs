use std::collections::BTreeMap;
use std::path::Path;

use vcrobust_core::augment::AppliedChainRecord;
use vcrobust_core::suite::{
    attach_outputs, build_suite, ingest_commonvoice, ingest_vctk, GroupMap, IngestOptions,
    SuiteManifest, SuiteOptions, DEFAULT_MODEL_IDS, PROVENANCE_FILE,
};

use super::{load_chain, load_noise_bank};
use crate::config::{pick, pick_path};
use crate::error::io_error;
use crate::{AttachArgs, BuildSuiteArgs, CliError, Globals};

const MAX_LOGGED_WARNINGS: usize = 20;

/// Effect family name to number of pairs it was applied to, plus `clean`
/// for pairs left untouched.
pub fn effect_counts(suite_dir: &Path) -> Result<BTreeMap<String, usize>, CliError> {
    let path = suite_dir.join(PROVENANCE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let mut counts = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: AppliedChainRecord = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if rec.effects.is_empty() {
            *counts.entry("clean".to_string()).or_insert(0) += 1;
        }
        for e in &rec.effects {
            *counts.entry(e.family().to_string()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

pub fn build(g: &Globals, a: BuildSuiteArgs) -> Result<(), CliError> {
    let f = &g.file;
    let groups = match pick_path("groups", a.groups, f.groups.clone()) {
        Some(p) => GroupMap::load(p)?,
        None => GroupMap::default(),
    };
    let opts = IngestOptions {
        groups,
        anonymize: a.anonymize,
    };
    let ingested = match (&a.commonvoice_tsv, &a.vctk_root) {
        (Some(tsv), _) => {
            let clips = a.clips_dir.clone().unwrap_or_else(|| {
                tsv.parent().unwrap_or(Path::new(".")).join("clips")
            });
            ingest_commonvoice(tsv, clips, &opts)?
        }
        (None, Some(root)) => {
            let info = a.speaker_info.clone().unwrap_or_else(|| {
                root.parent().unwrap_or(Path::new(".")).join("speaker-info.txt")
            });
            ingest_vctk(root, info, &opts)?
        }
        (None, None) => return Err(CliError::Usage("no corpus given".into())),
    };
    for w in ingested.warnings.iter().take(MAX_LOGGED_WARNINGS) {
        log::warn!(warning = w.as_str(); "ingest");
    }
    if ingested.warnings.len() > MAX_LOGGED_WARNINGS {
        log::warn!(more = ingested.warnings.len() - MAX_LOGGED_WARNINGS; "further ingest warnings suppressed");
    }
    let total = ingested.records.len();
    let records: Vec<_> = ingested
        .records
        .into_iter()
        .filter(|r| r.speaker_id != a.target)
        .collect();
    log::info!(
        clips = total, skipped = ingested.skipped, target_clips_excluded = total - records.len();
        "corpus ingested"
    );

    let bank = load_noise_bank(a.noise_dir, f.noise_dir.clone())?;
    let n_pairs = pick("n_pairs", a.n_pairs, f.n_pairs, 64);
    let mut sopts = SuiteOptions::new(n_pairs, a.target.clone(), g.seed);
    sopts.chain = load_chain(a.chain_config, f.chain_config.clone(), &bank)?;
    sopts.model_ids = a
        .models
        .or_else(|| f.models.clone())
        .unwrap_or_else(|| DEFAULT_MODEL_IDS.iter().map(|s| s.to_string()).collect());
    log::debug!(setting = "models", value:% = sopts.model_ids.join(","); "effective setting");
    sopts.sample_rate = pick("sample_rate", a.sample_rate, f.sample_rate, sopts.sample_rate);
    sopts.jobs = pick("jobs", a.jobs.map(|j| j as usize), f.jobs, super::default_jobs());

    let manifest = build_suite(&records, &sopts, &bank, &a.out)?;
    let counts = effect_counts(&a.out)?;
    let speakers = manifest.metadata.source_speakers;
    println!("suite {} written to {}", manifest.suite_id, a.out.display());
    println!(
        "pairs: {}  source speakers: {}  eligible clips: {}",
        manifest.pairs.len(),
        speakers,
        manifest.metadata.eligible_clips
    );
    println!("models: {}", manifest.model_ids.join(", "));
    let effects: Vec<String> = ["gain", "noise", "reverb", "telephony", "clean"]
        .iter()
        .map(|k| format!("{k} {}", counts.get(*k).copied().unwrap_or(0)))
        .collect();
    println!("effects: {}", effects.join(", "));
    Ok(())
}

pub fn attach(a: AttachArgs) -> Result<(), CliError> {
    let mut manifest = SuiteManifest::load(&a.suite)?;
    attach_outputs(&mut manifest, &a.suite, &a.model, &a.outputs)?;
    manifest.save(&a.suite)?;
    let missing = manifest.missing_outputs();
    println!(
        "attached {} outputs for {}; {} (pair, model) outputs still missing",
        manifest.pairs.len(),
        a.model,
        missing.len()
    );
    Ok(())
}
