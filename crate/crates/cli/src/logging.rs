//! `key=value` log lines on stderr.

use std::fmt::Write as _;
use std::io::Write;

use log::kv::{Key, Value, VisitSource};
use log::LevelFilter;

/// Quotes `v` when it is empty or holds spaces, quotes, `=` or control characters.
pub fn quote(v: &str) -> String {
    let plain = !v.is_empty()
        && v
            .chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && c != '"' && c != '=');
    if plain {
        return v.to_string();
    }
    let mut out = String::with_capacity(v.len() + 2);
    out.push('"');
    for c in v.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Pairs<'a>(&'a mut String);

impl<'kvs> VisitSource<'kvs> for Pairs<'_> {
    fn visit_pair(&mut self, key: Key<'kvs>, value: Value<'kvs>) -> Result<(), log::kv::Error> {
        let _ = write!(self.0, " {}={}", key.as_str(), quote(&value.to_string()));
        Ok(())
    }
}

/// Formats one record as a single line, without the trailing newline.
pub fn format_record(record: &log::Record<'_>) -> String {
    let mut line = format!(
        "level={} target={} msg={}",
        record.level().as_str().to_ascii_lowercase(),
        quote(record.target()),
        quote(&record.args().to_string())
    );
    let _ = record.key_values().visit(&mut Pairs(&mut line));
    line
}

/// Installs the logger. `VCROBUST_LOG` (env_logger syntax) overrides the
/// level chosen by `-v`. Later calls in the same process are no-ops.
pub fn init(verbosity: u8) {
    let level = match verbosity {
        0 => LevelFilter::Info,
        1 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("VCROBUST_LOG")
        .target(env_logger::Target::Stderr)
        .format(|buf, record| {
            let ts = buf.timestamp_millis();
            writeln!(buf, "ts={ts} {}", format_record(record))
        })
        .try_init();
}
