use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, RatingRecord, RatingsTable, MAX_SCORE, MIN_SCORE};

pub const DEFAULT_BIN_WIDTH: f64 = 0.5;

/// Mean score per source speaker for one model, over every annotator and pair.
pub fn speaker_means(
    table: &RatingsTable,
    model_id: &str,
) -> Result<BTreeMap<String, f64>, AnalysisError> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in table.records().iter().filter(|r| r.model_id == model_id) {
        let e = acc.entry(r.speaker_id.as_str()).or_default();
        e.0 += f64::from(r.score);
        e.1 += 1;
    }
    if acc.is_empty() {
        return Err(AnalysisError::UnknownModel(model_id.to_string()));
    }
    Ok(acc
        .into_iter()
        .map(|(s, (sum, n))| (s.to_string(), sum / n as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges from 1 to 5.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Counts values in half-open bins of `bin_width` over [1, 5]; the last bin
/// also takes 5 itself.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Histogram, AnalysisError> {
    let lo = f64::from(MIN_SCORE);
    let hi = f64::from(MAX_SCORE);
    let ratio = (hi - lo) / bin_width;
    let bins = ratio.round();
    if !bin_width.is_finite() || bin_width <= 0.0 || bins < 1.0 || (ratio - bins).abs() > 1e-9 {
        return Err(AnalysisError::BadBinWidth(bin_width));
    }
    let bins = bins as usize;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * bin_width).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        if !(lo..=hi).contains(&v) {
            return Err(AnalysisError::ValueOutOfRange(v));
        }
        let mut k = (((v - lo) / bin_width).floor() as usize).min(bins - 1);
        // guard against the division landing one bin off an exact edge
        if v < edges[k] {
            k -= 1;
        } else if k + 1 < bins && v >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    All,
    Gender,
    Demographic,
}

impl GroupBy {
    pub const ALL: [GroupBy; 3] = [GroupBy::All, GroupBy::Gender, GroupBy::Demographic];

    fn key(self, r: &RatingRecord) -> String {
        match self {
            GroupBy::All => "All".to_string(),
            GroupBy::Gender => r.gender.to_string(),
            GroupBy::Demographic => r.demographic_group.to_string(),
        }
    }

    /// Sort rank keeping enum order rather than alphabetical order.
    fn rank(self, r: &RatingRecord) -> u8 {
        match self {
            GroupBy::All => 0,
            GroupBy::Gender => r.gender as u8,
            GroupBy::Demographic => r.demographic_group as u8,
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::All => "all",
            GroupBy::Gender => "gender",
            GroupBy::Demographic => "demographic",
        })
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(GroupBy::All),
            "gender" => Ok(GroupBy::Gender),
            "demographic" => Ok(GroupBy::Demographic),
            other => Err(format!("unknown grouping {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub model_id: String,
    pub n: usize,
    pub mean: f64,
    /// `None` only for the sample formula with a single score.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_by: GroupBy,
    pub std_kind: StdKind,
    pub rows: Vec<GroupRow>,
    /// (group, model) combinations with no ratings, which get no row.
    pub omitted: Vec<String>,
}

/// Mean and spread of scores per (group, model).
pub fn group_stats(table: &RatingsTable, group_by: GroupBy, std_kind: StdKind) -> GroupStats {
    let mut scores: BTreeMap<(u8, String, String), Vec<f64>> = BTreeMap::new();
    let mut groups: BTreeSet<(u8, String)> = BTreeSet::new();
    for r in table.records() {
        let (rank, key) = (group_by.rank(r), group_by.key(r));
        groups.insert((rank, key.clone()));
        scores
            .entry((rank, key, r.model_id.clone()))
            .or_default()
            .push(f64::from(r.score));
    }
    let models = table.models();
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for (rank, group) in &groups {
        for m in &models {
            let Some(v) = scores.get(&(*rank, group.clone(), m.clone())) else {
                omitted.push(format!("{group}/{m}"));
                continue;
            };
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
            let std = match std_kind {
                StdKind::Population => Some((ss / n as f64).sqrt()),
                StdKind::Sample if n > 1 => Some((ss / (n - 1) as f64).sqrt()),
                StdKind::Sample => None,
            };
            rows.push(GroupRow {
                group: group.clone(),
                model_id: m.clone(),
                n,
                mean,
                std,
            });
        }
    }
    GroupStats {
        group_by,
        std_kind,
        rows,
        omitted,
    }
}
