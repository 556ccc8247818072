//! Result rows and deterministic CSV output.
//!
//! `results.csv` carries no timestamps or timings and is byte-identical
//! across reruns of the same config; wall-clock data lives in `meta.txt`.

use std::fmt::Write as _;
use std::path::Path;

use crate::pipeline::RunOutcome;

pub const CSV_HEADER: &str = "experiment,method,d,n,seed,metric,value";

/// A metric value or an error message.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Text(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub metric: String,
    pub value: Value,
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.experiment),
            csv_field(&r.method),
            r.d,
            r.n,
            r.seed,
            csv_field(&r.metric),
            csv_field(&r.value.to_string()),
        );
    }
    out
}

/// Writes `results.csv` (atomically: temp file + rename) and `meta.txt`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = rows_to_csv(&outcome.rows);
    let tmp = dir.join("results.csv.tmp");
    std::fs::write(&tmp, csv)?;
    std::fs::rename(&tmp, dir.join("results.csv"))?;

    let mut meta = String::new();
    let _ = writeln!(meta, "fgm-ddo {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        meta,
        "started_unix_ms {}",
        outcome.started_unix_ms
    );
    let _ = writeln!(meta, "total_seconds {:.3}", outcome.total_seconds);
    let _ = writeln!(meta, "workers {}", outcome.workers);
    for (cell, secs) in &outcome.cell_seconds {
        let _ = writeln!(meta, "cell {cell} {secs:.3}s");
    }
    let _ = writeln!(meta, "--- config ---");
    meta.push_str(&outcome.config_echo);
    std::fs::write(dir.join("meta.txt"), meta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escapes_commas_and_quotes() {
        let rows = vec![ResultRow {
            experiment: "x".to_string(),
            method: "fgm".to_string(),
            d: 2,
            n: 3,
            seed: 0,
            metric: "error".to_string(),
            value: Value::Text("bad, \"thing\"".to_string()),
        }];
        let csv = rows_to_csv(&rows);
        assert!(csv.contains("\"bad, \"\"thing\"\"\""));
    }

    #[test]
    fn infinities_render_as_inf() {
        assert_eq!(Value::Num(f64::INFINITY).to_string(), "inf");
        assert_eq!(Value::Num(1.5).to_string(), "1.5");
    }
}
