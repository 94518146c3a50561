//! Aggregation of listening-test ratings: inter-rater correlation, speaker
//! means, group statistics and report rendering.

mod pcc;
mod report;
mod stats;

pub use pcc::{pcc, pcc_matrix, PccCell, PccMatrix, Undefined};
pub use report::{format_score, pcc_text_table, render_report, Report, ReportOptions};
pub use stats::{
    group_stats, histogram, speaker_means, GroupBy, GroupRow, GroupStats, Histogram, StdKind,
    DEFAULT_BIN_WIDTH,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::suite::{DemographicGroup, Gender, SuiteManifest};

pub const MIN_SCORE: u8 = 1;
pub const MAX_SCORE: u8 = 5;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("score vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("need at least 2 annotators, got {0}")]
    TooFewAnnotators(usize),
    #[error("no ratings for model {0:?}")]
    UnknownModel(String),
    #[error("pair {0:?} is not in the suite manifest")]
    UnknownPair(String),
    #[error("score {0} outside 1..=5")]
    ScoreOutOfRange(u8),
    #[error("value {0} outside [1, 5]")]
    ValueOutOfRange(f64),
    #[error("duplicate rating for annotator {annotator_id:?}, model {model_id:?}, pair {pair_id:?}")]
    DuplicateRating {
        annotator_id: String,
        model_id: String,
        pair_id: String,
    },
    #[error("bin width {0} does not divide [1, 5] evenly")]
    BadBinWidth(f64),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AnalysisError + '_ {
    move |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One line of the ratings export: the authoritative score an annotator gave
/// to one model's output for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedRating {
    pub annotator_id: String,
    pub model_id: String,
    pub pair_id: String,
    pub score: u8,
    pub revision: u32,
    pub submitted_at: String,
}

/// Reads a newline-delimited ratings export. Blank lines are ignored.
pub fn load_export(path: impl AsRef<Path>) -> Result<Vec<ExportedRating>, AnalysisError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_export(&text, &path.display().to_string())
}

pub fn parse_export(text: &str, origin: &str) -> Result<Vec<ExportedRating>, AnalysisError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AnalysisError::Parse {
                path: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// A rating joined with the speaker metadata of its pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub annotator_id: String,
    pub model_id: String,
    pub pair_id: String,
    pub speaker_id: String,
    pub gender: Gender,
    pub demographic_group: DemographicGroup,
    pub score: u8,
}

/// Validated ratings: scores in range, one record per (annotator, model, pair).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsTable {
    records: Vec<RatingRecord>,
}

impl RatingsTable {
    pub fn new(records: Vec<RatingRecord>) -> Result<Self, AnalysisError> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !(MIN_SCORE..=MAX_SCORE).contains(&r.score) {
                return Err(AnalysisError::ScoreOutOfRange(r.score));
            }
            if !seen.insert((&r.annotator_id, &r.model_id, &r.pair_id)) {
                return Err(AnalysisError::DuplicateRating {
                    annotator_id: r.annotator_id.clone(),
                    model_id: r.model_id.clone(),
                    pair_id: r.pair_id.clone(),
                });
            }
        }
        Ok(Self { records })
    }

    /// Joins exported ratings with the manifest's pair metadata.
    ///
    /// When the export holds several revisions of one rating, the highest
    /// revision wins.
    pub fn from_export(
        ratings: &[ExportedRating],
        manifest: &SuiteManifest,
    ) -> Result<Self, AnalysisError> {
        let mut latest: BTreeMap<(&str, &str, &str), &ExportedRating> = BTreeMap::new();
        for r in ratings {
            let key = (r.annotator_id.as_str(), r.model_id.as_str(), r.pair_id.as_str());
            match latest.get(&key) {
                Some(prev) if prev.revision >= r.revision => {}
                _ => {
                    latest.insert(key, r);
                }
            }
        }
        let mut records = Vec::with_capacity(latest.len());
        for r in latest.into_values() {
            if !manifest.model_ids.contains(&r.model_id) {
                return Err(AnalysisError::UnknownModel(r.model_id.clone()));
            }
            let pair = manifest
                .pair(&r.pair_id)
                .ok_or_else(|| AnalysisError::UnknownPair(r.pair_id.clone()))?;
            records.push(RatingRecord {
                annotator_id: r.annotator_id.clone(),
                model_id: r.model_id.clone(),
                pair_id: r.pair_id.clone(),
                speaker_id: pair.source_clip.speaker_id.clone(),
                gender: pair.source_clip.gender,
                demographic_group: pair.source_clip.demographic_group,
                score: r.score,
            });
        }
        Self::new(records)
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted, distinct annotator ids.
    pub fn annotators(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.records.iter().map(|r| &r.annotator_id).collect();
        set.into_iter().cloned().collect()
    }

    /// Sorted, distinct model ids.
    pub fn models(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.records.iter().map(|r| &r.model_id).collect();
        set.into_iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::EffectChainConfig;
    use crate::suite::{ClipRecord, EvalPair, SuiteMetadata};

    fn manifest() -> SuiteManifest {
        let pair = |id: &str, spk: &str| EvalPair {
            pair_id: id.into(),
            source_clip: ClipRecord {
                clip_id: format!("c-{id}"),
                speaker_id: spk.into(),
                path: format!("audio/{id}.wav").into(),
                gender: Gender::Female,
                demographic_group: DemographicGroup::Spanish,
                duration_s: 1.0,
                transcript: None,
            },
            target_speaker_id: "t".into(),
            model_outputs: BTreeMap::new(),
        };
        SuiteManifest {
            schema_version: 1,
            suite_id: "s".into(),
            target_speaker_id: "t".into(),
            model_ids: vec!["m1".into()],
            seed: 0,
            chain_config: EffectChainConfig::empty(),
            pairs: vec![pair("p0", "spkA"), pair("p1", "spkB")],
            metadata: SuiteMetadata {
                tool: String::new(),
                rng_algorithm: String::new(),
                eligible_clips: 2,
                source_speakers: 2,
                audio_encoding: String::new(),
                provenance_file: String::new(),
                note: String::new(),
            },
        }
    }

    fn ex(a: &str, m: &str, p: &str, score: u8, revision: u32) -> ExportedRating {
        ExportedRating {
            annotator_id: a.into(),
            model_id: m.into(),
            pair_id: p.into(),
            score,
            revision,
            submitted_at: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn join_keeps_highest_revision() {
        let t = RatingsTable::from_export(
            &[ex("a", "m1", "p0", 2, 1), ex("a", "m1", "p0", 4, 2), ex("a", "m1", "p1", 3, 1)],
            &manifest(),
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.records()[0].score, 4);
        assert_eq!(t.records()[0].speaker_id, "spkA");
        assert_eq!(t.records()[1].demographic_group, DemographicGroup::Spanish);
    }

    #[test]
    fn join_rejects_unknowns() {
        assert!(matches!(
            RatingsTable::from_export(&[ex("a", "m2", "p0", 2, 1)], &manifest()),
            Err(AnalysisError::UnknownModel(_))
        ));
        assert!(matches!(
            RatingsTable::from_export(&[ex("a", "m1", "p9", 2, 1)], &manifest()),
            Err(AnalysisError::UnknownPair(_))
        ));
        assert!(matches!(
            RatingsTable::from_export(&[ex("a", "m1", "p0", 6, 1)], &manifest()),
            Err(AnalysisError::ScoreOutOfRange(6))
        ));
    }

    #[test]
    fn parse_export_reports_line() {
        let good = serde_json::to_string(&ex("a", "m1", "p0", 2, 1)).unwrap();
        let text = format!("{good}\n\n{{oops\n");
        match parse_export(&text, "x.ndjson") {
            Err(AnalysisError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_export(&format!("{good}\n"), "x").unwrap().len(), 1);
    }
}
