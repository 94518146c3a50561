use vcrobust_core::analysis::{
    format_score, load_export, pcc_text_table, render_report, GroupStats, RatingsTable, Report,
    ReportOptions, StdKind, DEFAULT_BIN_WIDTH,
};
use vcrobust_core::suite::SuiteManifest;

use crate::config::pick;
use crate::{AnalyzeArgs, CliError, Globals};

/// Plain-text summary of one grouping.
pub fn group_stats_text(gs: &GroupStats) -> String {
    let kind = match gs.std_kind {
        StdKind::Population => "population",
        StdKind::Sample => "sample",
    };
    let mut out = format!("by {} ({kind} std)\n", gs.group_by);
    for r in &gs.rows {
        let std = r.std.map(format_score).unwrap_or_else(|| "NA".into());
        out.push_str(&format!(
            "  {:<10} {:<24} n={:<5} mean={:<5} std={}\n",
            r.group,
            r.model_id,
            r.n,
            format_score(r.mean),
            std
        ));
    }
    out
}

pub fn run(g: &Globals, a: AnalyzeArgs) -> Result<(), CliError> {
    let f = &g.file;
    let opts = ReportOptions {
        bin_width: pick("bin_width", a.bin_width, f.bin_width, DEFAULT_BIN_WIDTH),
        std_kind: a.std.or(f.std).unwrap_or_default(),
    };
    let manifest = SuiteManifest::load(&a.manifest)?;
    let export = load_export(&a.ratings)?;
    let table = RatingsTable::from_export(&export, &manifest)?;
    log::info!(ratings = table.len(), annotators = table.annotators().len(), models = table.models().len(); "ratings loaded");
    let report = Report::compute(&table, opts)?;
    let files = render_report(&report, &a.out)?;
    for p in &files {
        log::debug!(file:% = p.display(); "wrote report file");
    }
    println!("{}", pcc_text_table(&report.pcc));
    for gs in &report.group_stats {
        print!("{}", group_stats_text(gs));
    }
    println!("report written to {} ({} files)", a.out.display(), files.len());
    Ok(())
}
