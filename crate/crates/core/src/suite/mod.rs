//! Corpus ingestion and construction of noised evaluation suites.

mod build;
mod ingest;

pub use build::{attach_outputs, build_suite, select_sources, SuiteOptions, DEFAULT_MODEL_IDS};
pub use ingest::{ingest_commonvoice, ingest_vctk, GroupMap, IngestOptions, Ingested};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::augment::{AugmentError, EffectChainConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROVENANCE_FILE: &str = "provenance.jsonl";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: missing required column {column:?}")]
    MissingHeader { path: String, column: String },
    #[error("no usable clips found ({skipped} rows skipped)")]
    EmptyManifest { skipped: usize },
    #[error(
        "{path} is not WAV; convert the corpus audio to WAV first \
         (for example `ffmpeg -i clip.mp3 -ar 16000 -ac 1 clip.wav`)"
    )]
    NeedsWavConversion { path: String },
    #[error("speaker info unusable: {0}")]
    MissingSpeakerInfo(String),
    #[error("need {needed} source clips but only {available} are eligible")]
    InsufficientClips { needed: usize, available: usize },
    #[error("source records include the target speaker {0:?}")]
    TargetInSources(String),
    #[error("duplicate clip id {0:?}")]
    DuplicateClipId(String),
    #[error("model {0:?} is not listed in the suite")]
    UnknownModel(String),
    #[error("{path} lies outside the suite directory")]
    OutsideSuite { path: String },
    #[error("pair {pair_id}: missing or unreadable output {path}")]
    MissingOutput { pair_id: String, path: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    /// Lenient parse of corpus gender fields; anything unrecognised is Unknown.
    pub fn from_corpus(value: &str) -> Self {
        match value.trim().to_ascii_lowercase().as_str() {
            "m" | "male" | "male_masculine" => Gender::Male,
            "f" | "female" | "female_feminine" => Gender::Female,
            _ => Gender::Unknown,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DemographicGroup {
    English,
    Spanish,
    Indian,
    Chinese,
    Other,
    Unknown,
}

impl FromStr for DemographicGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "english" => Ok(Self::English),
            "spanish" => Ok(Self::Spanish),
            "indian" => Ok(Self::Indian),
            "chinese" => Ok(Self::Chinese),
            "other" => Ok(Self::Other),
            "unknown" => Ok(Self::Unknown),
            other => Err(format!("unknown demographic group {other:?}")),
        }
    }
}

impl fmt::Display for DemographicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One corpus clip and the speaker metadata used for grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub speaker_id: String,
    pub path: PathBuf,
    pub gender: Gender,
    pub demographic_group: DemographicGroup,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub pair_id: String,
    /// Source metadata; `path` points at the noised copy, relative to the suite directory.
    pub source_clip: ClipRecord,
    pub target_speaker_id: String,
    /// Model id to converted-audio path, relative to the suite directory.
    #[serde(default)]
    pub model_outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetadata {
    pub tool: String,
    pub rng_algorithm: String,
    pub eligible_clips: usize,
    pub source_speakers: usize,
    pub audio_encoding: String,
    pub provenance_file: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub schema_version: u32,
    pub suite_id: String,
    pub target_speaker_id: String,
    pub model_ids: Vec<String>,
    pub seed: u64,
    pub chain_config: EffectChainConfig,
    pub pairs: Vec<EvalPair>,
    pub metadata: SuiteMetadata,
}

impl SuiteManifest {
    /// Loads `manifest.json` from a suite directory, or a manifest file directly.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SuiteError> {
        let path = path.as_ref();
        let file = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&file).map_err(io_err(&file))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| SuiteError::Parse {
            path: file.display().to_string(),
            message: e.to_string(),
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(SuiteError::Parse {
                path: file.display().to_string(),
                message: format!("unsupported schema_version {}", m.schema_version),
            });
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), SuiteError> {
        let file = dir.as_ref().join(MANIFEST_FILE);
        std::fs::write(&file, self.to_json()).map_err(io_err(&file))
    }

    pub fn pair(&self, pair_id: &str) -> Option<&EvalPair> {
        self.pairs.iter().find(|p| p.pair_id == pair_id)
    }

    /// Pairs lacking an output for some listed model.
    pub fn missing_outputs(&self) -> Vec<(String, String)> {
        let mut missing = Vec::new();
        for p in &self.pairs {
            for m in &self.model_ids {
                if !p.model_outputs.contains_key(m) {
                    missing.push((p.pair_id.clone(), m.clone()));
                }
            }
        }
        missing
    }
}
