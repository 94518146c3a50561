use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricEntry {
    pub score: u8,
    pub description: String,
}

/// The five anchored points of the rating scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rubric(Vec<RubricEntry>);

impl Default for Rubric {
    fn default() -> Self {
        let text = [
            "doesn't sound like speech",
            "sounds like speech, weird noise and incomprehensible",
            "some comprehensible bits, can't fully parse name",
            "can hear what the name is, still some noise or quality issues",
            "clearly can hear the name, sounds clean",
        ];
        Rubric(
            text.iter()
                .zip(1u8..)
                .map(|(d, score)| RubricEntry {
                    score,
                    description: d.to_string(),
                })
                .collect(),
        )
    }
}

impl Rubric {
    pub fn new(entries: Vec<RubricEntry>) -> Result<Self, ServiceError> {
        let ok = entries.len() == 5
            && entries
                .iter()
                .zip(1u8..)
                .all(|(e, s)| e.score == s && !e.description.trim().is_empty());
        if !ok {
            return Err(ServiceError::BadRequest(
                "rubric needs scores 1 to 5 in order, each with a description".into(),
            ));
        }
        Ok(Rubric(entries))
    }

    /// Loads a JSON array of `{score, description}` objects.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let entries = serde_json::from_str(&text)
            .map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[RubricEntry] {
        &self.0
    }
}
