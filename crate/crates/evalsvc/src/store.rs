//! Append-only rating store.
//!
//! One JSON object per line: `{"checksum":"<hex>","record":{...}}`, where the
//! checksum covers the exact bytes of `record`. Every append is flushed and
//! fsynced before it returns, so an acknowledged write survives a crash. A
//! final line without its newline was never acknowledged and is dropped on
//! open.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use vcrobust_core::analysis::ExportedRating;

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub session_id: String,
    pub annotator_id: String,
    pub token: String,
    pub seed: u64,
    pub suite_id: String,
    pub n_items: usize,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub session_id: String,
    pub annotator_id: String,
    pub model_id: String,
    pub pair_id: String,
    pub item_index: usize,
    pub score: u8,
    pub revision: u32,
    pub submitted_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Session(SessionEvent),
    Rating(RatingEvent),
}

#[derive(Deserialize)]
struct Line<'a> {
    checksum: &'a str,
    #[serde(borrow)]
    record: &'a RawValue,
}

fn checksum(record: &str) -> String {
    hex::encode(&Sha256::digest(record.as_bytes())[..8])
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ServiceError + '_ {
    move |source| ServiceError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn encode_line(event: &Event) -> String {
    let record = serde_json::to_string(event).expect("event serializes");
    format!("{{\"checksum\":\"{}\",\"record\":{record}}}\n", checksum(&record))
}

fn decode_line(line: &str, number: usize) -> Result<Event, ServiceError> {
    let corrupt = |reason: String| ServiceError::CorruptStore {
        line: number,
        reason,
    };
    let parsed: Line = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
    if checksum(parsed.record.get()) != parsed.checksum {
        return Err(corrupt("checksum mismatch".into()));
    }
    serde_json::from_str(parsed.record.get()).map_err(|e| corrupt(e.to_string()))
}

/// Splits store contents into complete-line events plus the byte length of
/// the complete prefix.
fn parse(text: &str) -> Result<(Vec<Event>, usize), ServiceError> {
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    let mut events = Vec::new();
    for (i, line) in text[..complete].lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        events.push(decode_line(line, i + 1)?);
    }
    Ok((events, complete))
}

/// Reads every complete event without modifying the file.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<Event>, ServiceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse(&text)?.0)
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
}

impl Store {
    /// Opens (creating if needed) the store and returns its events.
    ///
    /// A torn final line is cut off; the second value is the number of bytes
    /// removed.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Event>, usize), ServiceError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io_err(&path))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io_err(&path))?;
        let (events, complete) = parse(&text)?;
        let torn = text.len() - complete;
        if torn > 0 {
            log::warn!("store={} dropping {torn} bytes of an unfinished final line", path.display());
            file.set_len(complete as u64).map_err(io_err(&path))?;
            file.sync_all().map_err(io_err(&path))?;
        }
        Ok((Self { path, file }, events, torn))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one event durably.
    pub fn append(&mut self, event: &Event) -> Result<(), ServiceError> {
        let line = encode_line(event);
        self.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }
}

/// Authoritative ratings: the highest revision per (annotator, model, pair),
/// sorted by that key.
pub fn export_ratings(events: &[Event]) -> Vec<ExportedRating> {
    let mut latest: BTreeMap<(&str, &str, &str), &RatingEvent> = BTreeMap::new();
    for e in events {
        if let Event::Rating(r) = e {
            let key = (r.annotator_id.as_str(), r.model_id.as_str(), r.pair_id.as_str());
            if latest.get(&key).is_none_or(|prev| r.revision > prev.revision) {
                latest.insert(key, r);
            }
        }
    }
    latest
        .into_values()
        .map(|r| ExportedRating {
            annotator_id: r.annotator_id.clone(),
            model_id: r.model_id.clone(),
            pair_id: r.pair_id.clone(),
            score: r.score,
            revision: r.revision,
            submitted_at: r.submitted_at.clone(),
        })
        .collect()
}

pub fn to_ndjson(ratings: &[ExportedRating]) -> String {
    let mut out = String::new();
    for r in ratings {
        out.push_str(&serde_json::to_string(r).expect("rating serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rating(a: &str, m: &str, p: &str, score: u8, revision: u32) -> Event {
        Event::Rating(RatingEvent {
            session_id: "s".into(),
            annotator_id: a.into(),
            model_id: m.into(),
            pair_id: p.into(),
            item_index: 0,
            score,
            revision,
            submitted_at: "2024-05-01T10:00:00Z".into(),
        })
    }

    #[test]
    fn append_and_reopen() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("store.ndjson");
        let (mut s, ev, torn) = Store::open(&p).unwrap();
        assert!(ev.is_empty());
        assert_eq!(torn, 0);
        s.append(&rating("a", "m", "p", 3, 1)).unwrap();
        s.append(&rating("a", "m", "p", 4, 2)).unwrap();
        drop(s);
        let (_, ev, _) = Store::open(&p).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1], rating("a", "m", "p", 4, 2));
    }

    #[test]
    fn torn_tail_is_truncated() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("store.ndjson");
        let line = encode_line(&rating("a", "m", "p", 3, 1));
        std::fs::write(&p, format!("{line}{}", &line[..20])).unwrap();
        let (mut s, ev, torn) = Store::open(&p).unwrap();
        assert_eq!((ev.len(), torn), (1, 20));
        s.append(&rating("b", "m", "p", 2, 1)).unwrap();
        assert_eq!(read_events(&p).unwrap().len(), 2);
    }

    #[test]
    fn corrupt_lines_are_reported() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("store.ndjson");
        let good = encode_line(&rating("a", "m", "p", 3, 1));
        let tampered = good.replace("\"score\":3", "\"score\":5");
        std::fs::write(&p, format!("{good}{tampered}")).unwrap();
        match Store::open(&p) {
            Err(ServiceError::CorruptStore { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("checksum"));
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, format!("{good}not json\n")).unwrap();
        assert!(matches!(read_events(&p), Err(ServiceError::CorruptStore { line: 2, .. })));
    }

    #[test]
    fn export_keeps_latest_revision_sorted() {
        let ev = vec![
            rating("b", "m", "p1", 1, 1),
            rating("a", "n", "p0", 2, 1),
            rating("a", "m", "p0", 3, 1),
            rating("a", "m", "p0", 5, 2),
        ];
        let out = export_ratings(&ev);
        let keys: Vec<_> = out.iter().map(|r| (r.annotator_id.as_str(), r.model_id.as_str(), r.score)).collect();
        assert_eq!(keys, [("a", "m", 5), ("a", "n", 2), ("b", "m", 1)]);
        assert_eq!(out[0].revision, 2);
        assert_eq!(to_ndjson(&out).lines().count(), 3);
    }
}
