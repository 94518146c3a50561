use std::io::Write;

use vcrobust_evalsvc::store::{export_ratings, read_events, to_ndjson};

use crate::error::io_error;
use crate::{CliError, ExportArgs};

/// Reads the store offline; a torn final line is ignored, as on server start.
pub fn run(a: ExportArgs) -> Result<(), CliError> {
    let events = read_events(&a.store)?;
    let ratings = export_ratings(&events);
    let text = to_ndjson(&ratings);
    match &a.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| io_error(p, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    log::info!(ratings = ratings.len(); "exported");
    Ok(())
}
