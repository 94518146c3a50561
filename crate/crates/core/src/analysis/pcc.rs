use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, RatingsTable};

/// Pearson correlation of two equal-length vectors.
///
/// Returns `Ok(None)` when either vector has zero variance, where the
/// coefficient is undefined.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<Option<f64>, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooFewPoints(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undefined {
    /// Fewer than two commonly rated items.
    TooFewOverlap,
    /// One of the annotators gave the same score to every common item.
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PccCell {
    Value { value: f64 },
    Undefined { reason: Undefined },
}

impl PccCell {
    pub fn value(&self) -> Option<f64> {
        match self {
            PccCell::Value { value } => Some(*value),
            PccCell::Undefined { .. } => None,
        }
    }
}

/// Inter-annotator correlation matrix, averaged across models, with the
/// per-model matrices kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccMatrix {
    pub annotators: Vec<String>,
    pub models: Vec<String>,
    pub cells: Vec<Vec<PccCell>>,
    pub per_model: BTreeMap<String, Vec<Vec<PccCell>>>,
}

impl PccMatrix {
    pub fn get(&self, i: usize, j: usize) -> PccCell {
        self.cells[i][j]
    }
}

fn model_cell(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> PccCell {
    let (x, y): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(pair, sa)| b.get(pair).map(|sb| (*sa, *sb)))
        .unzip();
    if x.len() < 2 {
        return PccCell::Undefined {
            reason: Undefined::TooFewOverlap,
        };
    }
    match pcc(&x, &y).expect("aligned vectors") {
        Some(value) => PccCell::Value { value },
        None => PccCell::Undefined {
            reason: Undefined::ZeroVariance,
        },
    }
}

/// Pairwise annotator correlation.
///
/// For each model the two annotators' scores are aligned on the pairs both
/// rated. The reported cell is the unweighted mean over models with at least
/// two common pairs. If any of those models is zero-variance for the pair of
/// annotators, the averaged cell is undefined too rather than silently
/// dropping that model. The diagonal is exactly 1.
pub fn pcc_matrix(table: &RatingsTable) -> Result<PccMatrix, AnalysisError> {
    let annotators = table.annotators();
    if annotators.len() < 2 {
        return Err(AnalysisError::TooFewAnnotators(annotators.len()));
    }
    let models = table.models();
    let index: BTreeMap<&str, usize> = annotators
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();

    // scores[model][annotator] = pair -> score
    let mut scores: BTreeMap<&str, Vec<BTreeMap<&str, f64>>> = BTreeMap::new();
    for r in table.records() {
        let per = scores
            .entry(r.model_id.as_str())
            .or_insert_with(|| vec![BTreeMap::new(); annotators.len()]);
        per[index[r.annotator_id.as_str()]].insert(r.pair_id.as_str(), f64::from(r.score));
    }

    let n = annotators.len();
    let one = PccCell::Value { value: 1.0 };
    let mut per_model = BTreeMap::new();
    for m in &models {
        let s = &scores[m.as_str()];
        let mut cells = vec![vec![one; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = model_cell(&s[i], &s[j]);
                cells[i][j] = c;
                cells[j][i] = c;
            }
        }
        per_model.insert(m.clone(), cells);
    }

    let mut cells = vec![vec![one; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            let mut count = 0usize;
            let mut degenerate = false;
            for m in per_model.values() {
                match m[i][j] {
                    PccCell::Value { value } => {
                        sum += value;
                        count += 1;
                    }
                    PccCell::Undefined {
                        reason: Undefined::ZeroVariance,
                    } => degenerate = true,
                    PccCell::Undefined {
                        reason: Undefined::TooFewOverlap,
                    } => {}
                }
            }
            let c = if degenerate {
                PccCell::Undefined {
                    reason: Undefined::ZeroVariance,
                }
            } else if count == 0 {
                PccCell::Undefined {
                    reason: Undefined::TooFewOverlap,
                }
            } else {
                PccCell::Value {
                    value: sum / count as f64,
                }
            };
            cells[i][j] = c;
            cells[j][i] = c;
        }
    }
    Ok(PccMatrix {
        annotators,
        models,
        cells,
        per_model,
    })
}
