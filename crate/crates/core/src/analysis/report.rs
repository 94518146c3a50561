use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    group_stats, histogram, io_err, pcc_matrix, speaker_means, AnalysisError, GroupBy, GroupStats,
    Histogram, PccCell, PccMatrix, RatingsTable, StdKind, DEFAULT_BIN_WIDTH,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const UNDEFINED: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub bin_width: f64,
    pub std_kind: StdKind,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            std_kind: StdKind::Population,
        }
    }
}

/// Everything computed from one ratings table, at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub options: ReportOptions,
    pub n_ratings: usize,
    /// Short axis labels (A1, A2, ...) for the sorted annotator ids.
    pub legend: BTreeMap<String, String>,
    pub pcc: PccMatrix,
    pub group_stats: Vec<GroupStats>,
    pub speaker_means: BTreeMap<String, BTreeMap<String, f64>>,
    /// Per model, histogram of speaker means.
    pub histograms: BTreeMap<String, Histogram>,
}

impl Report {
    pub fn compute(table: &RatingsTable, opts: ReportOptions) -> Result<Self, AnalysisError> {
        let pcc = pcc_matrix(table)?;
        let legend = pcc
            .annotators
            .iter()
            .enumerate()
            .map(|(i, a)| (axis_label(i), a.clone()))
            .collect();
        let mut means = BTreeMap::new();
        let mut histograms = BTreeMap::new();
        for m in table.models() {
            let sm = speaker_means(table, &m)?;
            let values: Vec<f64> = sm.values().copied().collect();
            histograms.insert(m.clone(), histogram(&values, opts.bin_width)?);
            means.insert(m, sm);
        }
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            options: opts,
            n_ratings: table.len(),
            legend,
            pcc,
            group_stats: GroupBy::ALL
                .iter()
                .map(|g| group_stats(table, *g, opts.std_kind))
                .collect(),
            speaker_means: means,
            histograms,
        })
    }
}

fn axis_label(i: usize) -> String {
    format!("A{}", i + 1)
}

/// Two-decimal rendering with trailing zeros dropped: 0.6, 1, 0.45.
pub fn format_score(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn cell_text(c: PccCell) -> String {
    c.value().map_or_else(|| UNDEFINED.to_string(), format_score)
}

/// Annotator correlation table with A1..An on both axes, followed by a
/// legend mapping labels to annotator ids.
pub fn pcc_text_table(m: &PccMatrix) -> String {
    let n = m.annotators.len();
    let labels: Vec<String> = (0..n).map(axis_label).collect();
    let rows: Vec<Vec<String>> = m.cells.iter().map(|r| r.iter().map(|c| cell_text(*c)).collect()).collect();
    let width = labels
        .iter()
        .chain(rows.iter().flatten())
        .map(|s| s.len())
        .max()
        .unwrap_or(1)
        .max(4);
    let mut out = String::new();
    let _ = write!(out, "{:<w$}", "", w = width);
    for l in &labels {
        let _ = write!(out, " {l:>width$}");
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(&rows) {
        let _ = write!(out, "{l:<width$}");
        for c in row {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
    }
    out.push('\n');
    for (l, a) in labels.iter().zip(&m.annotators) {
        let _ = writeln!(out, "{l} = {a}");
    }
    out
}

fn full(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), AnalysisError> {
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path)(to_io(e)))?;
    w.write_record(header).map_err(|e| io_err(path)(to_io(e)))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path)(to_io(e)))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the report files into `out_dir` and returns their paths.
///
/// Files: `pcc_matrix.csv`, `pcc_matrix.txt`, `group_stats.csv`,
/// `speaker_means.csv`, `histograms.csv`, `report.json`.
pub fn render_report(report: &Report, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, AnalysisError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let m = &report.pcc;
    let path = out_dir.join("pcc_matrix.csv");
    let mut header = vec!["annotator"];
    header.extend(m.annotators.iter().map(String::as_str));
    let rows = m
        .annotators
        .iter()
        .zip(&m.cells)
        .map(|(a, row)| {
            std::iter::once(a.clone())
                .chain(row.iter().map(|c| c.value().map_or_else(|| UNDEFINED.to_string(), full)))
                .collect()
        })
        .collect();
    write_csv(&path, &header, rows)?;
    written.push(path);

    let path = out_dir.join("pcc_matrix.txt");
    std::fs::write(&path, pcc_text_table(m)).map_err(io_err(&path))?;
    written.push(path);

    let path = out_dir.join("group_stats.csv");
    let rows = report
        .group_stats
        .iter()
        .flat_map(|g| {
            g.rows.iter().map(move |r| {
                vec![
                    g.group_by.to_string(),
                    r.group.clone(),
                    r.model_id.clone(),
                    r.n.to_string(),
                    full(r.mean),
                    r.std.map_or_else(|| UNDEFINED.to_string(), full),
                ]
            })
        })
        .collect();
    write_csv(&path, &["group_by", "group", "model_id", "n", "mean", "std"], rows)?;
    written.push(path);

    let path = out_dir.join("speaker_means.csv");
    let rows = report
        .speaker_means
        .iter()
        .flat_map(|(model, means)| {
            means
                .iter()
                .map(move |(spk, v)| vec![model.clone(), spk.clone(), full(*v)])
        })
        .collect();
    write_csv(&path, &["model_id", "speaker_id", "mean_score"], rows)?;
    written.push(path);

    let path = out_dir.join("histograms.csv");
    let rows = report
        .histograms
        .iter()
        .flat_map(|(model, h)| {
            h.counts.iter().enumerate().map(move |(k, c)| {
                vec![model.clone(), full(h.edges[k]), full(h.edges[k + 1]), c.to_string()]
            })
        })
        .collect();
    write_csv(&path, &["model_id", "bin_lo", "bin_hi", "count"], rows)?;
    written.push(path);

    let path = out_dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}
