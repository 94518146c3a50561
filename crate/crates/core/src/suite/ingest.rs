use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::wav_duration_s;

use super::{io_err, ClipRecord, DemographicGroup, Gender, SuiteError};

/// Explicit demographic-group assignments.
///
/// Groups are never inferred; a clip gets a group only through its clip id,
/// its speaker id, or an accent label listed here, checked in that order.
/// Accent keys match case-insensitively after trimming.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupMap {
    #[serde(default)]
    pub accents: BTreeMap<String, DemographicGroup>,
    #[serde(default)]
    pub speakers: BTreeMap<String, DemographicGroup>,
    #[serde(default)]
    pub clips: BTreeMap<String, DemographicGroup>,
}

impl GroupMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SuiteError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut map: Self = serde_json::from_str(&text).map_err(|e| SuiteError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        map.accents = map
            .accents
            .into_iter()
            .map(|(k, v)| (normalize_accent(&k), v))
            .collect();
        Ok(map)
    }

    /// `accent` may hold several `|`-separated labels; the first listed one wins.
    pub fn lookup(&self, clip_id: &str, speaker_id: &str, accent: Option<&str>) -> DemographicGroup {
        if let Some(g) = self.clips.get(clip_id) {
            return *g;
        }
        if let Some(g) = self.speakers.get(speaker_id) {
            return *g;
        }
        accent
            .into_iter()
            .flat_map(|a| a.split('|'))
            .find_map(|a| self.accents.get(&normalize_accent(a)).copied())
            .unwrap_or(DemographicGroup::Unknown)
    }
}

fn normalize_accent(s: &str) -> String {
    s.trim().to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub groups: GroupMap,
    /// Replace clip ids with a hash of the corpus-relative path.
    pub anonymize: bool,
}

/// Ingested records plus accounting of what was dropped.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<ClipRecord>,
    pub skipped: usize,
    pub warnings: Vec<String>,
}

impl Ingested {
    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn anonymous_id(corpus: &str, relative: &str) -> String {
    let digest = Sha256::digest(format!("{corpus}/{relative}").as_bytes());
    hex::encode(&digest[..8])
}

fn is_wav(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Ingests a CommonVoice-style TSV.
///
/// Required columns: `client_id`, `path`, `sentence`. Optional: `gender`,
/// `accents` (or `accent`). Rows whose audio is missing or unreadable are
/// skipped and counted. A row naming a non-WAV file with no WAV sibling is a
/// hard error that explains the conversion step.
pub fn ingest_commonvoice(
    tsv_path: impl AsRef<Path>,
    clips_dir: impl AsRef<Path>,
    opts: &IngestOptions,
) -> Result<Ingested, SuiteError> {
    let tsv_path = tsv_path.as_ref();
    let clips_dir = clips_dir.as_ref();
    let parse_err = |e: csv::Error| SuiteError::Parse {
        path: tsv_path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_path(tsv_path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => SuiteError::Io {
                path: tsv_path.display().to_string(),
                source,
            },
            other => SuiteError::Parse {
                path: tsv_path.display().to_string(),
                message: format!("{other:?}"),
            },
        })?;
    let headers = reader.headers().map_err(parse_err)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        column(name).ok_or_else(|| SuiteError::MissingHeader {
            path: tsv_path.display().to_string(),
            column: name.to_string(),
        })
    };
    let client_col = require("client_id")?;
    let path_col = require("path")?;
    let sentence_col = require("sentence")?;
    let gender_col = column("gender");
    let accent_col = column("accents").or_else(|| column("accent"));

    let mut out = Ingested::default();
    let mut seen = BTreeSet::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(parse_err)?;
        let line = row_no + 2;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let rel = field(path_col);
        if rel.is_empty() {
            out.skipped += 1;
            out.warn(format!("{}:{line}: empty path", tsv_path.display()));
            continue;
        }
        let listed = clips_dir.join(rel);
        let audio: PathBuf = if is_wav(&listed) {
            listed.clone()
        } else {
            let wav = listed.with_extension("wav");
            if wav.is_file() {
                wav
            } else if listed.is_file() {
                return Err(SuiteError::NeedsWavConversion {
                    path: listed.display().to_string(),
                });
            } else {
                wav
            }
        };
        if !audio.is_file() {
            out.skipped += 1;
            out.warn(format!("{}:{line}: missing audio {}", tsv_path.display(), audio.display()));
            continue;
        }
        let duration_s = match wav_duration_s(&audio) {
            Ok(d) => d,
            Err(e) => {
                out.skipped += 1;
                out.warn(format!("{}:{line}: unreadable audio {}: {e}", tsv_path.display(), audio.display()));
                continue;
            }
        };
        let stem = Path::new(rel)
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let clip_id = if opts.anonymize {
            anonymous_id("commonvoice", rel)
        } else {
            stem
        };
        if !seen.insert(clip_id.clone()) {
            out.skipped += 1;
            out.warn(format!("{}:{line}: duplicate clip id {clip_id}", tsv_path.display()));
            continue;
        }
        let speaker_id = field(client_col).to_string();
        let gender = gender_col.map_or(Gender::Unknown, |c| Gender::from_corpus(field(c)));
        let accent = accent_col.map(field).filter(|a| !a.is_empty());
        let demographic_group = opts.groups.lookup(&clip_id, &speaker_id, accent);
        let sentence = field(sentence_col);
        out.records.push(ClipRecord {
            clip_id,
            speaker_id,
            path: audio,
            gender,
            demographic_group,
            duration_s,
            transcript: (!sentence.is_empty()).then(|| sentence.to_string()),
        });
    }
    if out.records.is_empty() {
        return Err(SuiteError::EmptyManifest { skipped: out.skipped });
    }
    Ok(out)
}

struct SpeakerInfo {
    gender: Gender,
    accent: Option<String>,
}

fn read_speaker_info(path: &Path) -> Result<BTreeMap<String, SpeakerInfo>, SuiteError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SuiteError::MissingSpeakerInfo(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| SuiteError::MissingSpeakerInfo(format!("{} is empty", path.display())))?
        .split_whitespace()
        .map(|h| h.to_ascii_uppercase())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let id_col = col("ID")
        .ok_or_else(|| SuiteError::MissingSpeakerInfo(format!("{}: no ID column", path.display())))?;
    let gender_col = col("GENDER")
        .ok_or_else(|| SuiteError::MissingSpeakerInfo(format!("{}: no GENDER column", path.display())))?;
    let accent_col = col("ACCENTS").or_else(|| col("ACCENT"));

    let mut info = BTreeMap::new();
    for line in lines {
        let cells: Vec<&str> = line.split_whitespace().collect();
        let Some(raw_id) = cells.get(id_col) else { continue };
        // older releases list bare numbers ("225") rather than "p225"
        let id = if raw_id.chars().all(|c| c.is_ascii_digit()) {
            format!("p{raw_id}")
        } else {
            raw_id.to_string()
        };
        let gender = cells
            .get(gender_col)
            .map_or(Gender::Unknown, |g| Gender::from_corpus(g));
        let accent = accent_col.and_then(|c| cells.get(c)).map(|a| a.to_string());
        info.insert(id, SpeakerInfo { gender, accent });
    }
    Ok(info)
}

/// Ingests a VCTK-style tree `root/<speaker>/<speaker>_<utt>.wav`.
///
/// Transcripts are picked up from a sibling `txt/<speaker>/<clip>.txt` tree
/// when present.
pub fn ingest_vctk(
    root: impl AsRef<Path>,
    speaker_info_path: impl AsRef<Path>,
    opts: &IngestOptions,
) -> Result<Ingested, SuiteError> {
    let root = root.as_ref();
    let info = read_speaker_info(speaker_info_path.as_ref())?;
    let txt_root = root.parent().map(|p| p.join("txt"));

    let mut speakers: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    speakers.sort();

    let mut out = Ingested::default();
    let mut seen = BTreeSet::new();
    for dir in speakers {
        let speaker_id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut clips: Vec<PathBuf> = walkdir::WalkDir::new(&dir)
            .max_depth(1)
            .into_iter()
            .filter_map(Result::ok)
            .map(|e| e.into_path())
            .filter(|p| p.is_file() && is_wav(p))
            .collect();
        clips.sort();
        if clips.is_empty() {
            continue;
        }
        let speaker = info.get(&speaker_id);
        if speaker.is_none() {
            out.warn(format!("speaker {speaker_id} not in speaker info; gender Unknown"));
        }
        for clip in clips {
            let stem = clip.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let duration_s = match wav_duration_s(&clip) {
                Ok(d) => d,
                Err(e) => {
                    out.skipped += 1;
                    out.warn(format!("unreadable audio {}: {e}", clip.display()));
                    continue;
                }
            };
            let clip_id = if opts.anonymize {
                anonymous_id("vctk", &format!("{speaker_id}/{stem}.wav"))
            } else {
                stem.clone()
            };
            if !seen.insert(clip_id.clone()) {
                out.skipped += 1;
                out.warn(format!("duplicate clip id {clip_id}"));
                continue;
            }
            let transcript = txt_root
                .as_ref()
                .map(|t| t.join(&speaker_id).join(format!("{stem}.txt")))
                .and_then(|p| std::fs::read_to_string(p).ok())
                .map(|t| t.trim().to_string());
            let accent = speaker.and_then(|s| s.accent.as_deref());
            out.records.push(ClipRecord {
                demographic_group: opts.groups.lookup(&clip_id, &speaker_id, accent),
                clip_id,
                speaker_id: speaker_id.clone(),
                path: clip,
                gender: speaker.map_or(Gender::Unknown, |s| s.gender),
                duration_s,
                transcript,
            });
        }
    }
    if out.records.is_empty() {
        return Err(SuiteError::EmptyManifest { skipped: out.skipped });
    }
    Ok(out)
}
