use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bmfsim::io::format_f64;
use bmfsim::StiefelMatrix;

use crate::Format;

/// Writes `text` to `path`, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// One draw per row, each flattened column by column.
pub fn format_samples(samples: &[StiefelMatrix], format: Format) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut s = String::new();
            for x in samples {
                let row: Vec<String> = x.as_matrix().iter().map(|&v| format_f64(v)).collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let (m, r) = samples.first().map_or((0, 0), |x| (x.nrows(), x.ncols()));
            let rows: Vec<Vec<f64>> = samples.iter().map(|x| x.as_matrix().iter().copied().collect()).collect();
            let doc = serde_json::json!({
                "rows": m,
                "cols": r,
                "layout": "column-major",
                "samples": rows,
            });
            Ok(serde_json::to_string(&doc)? + "\n")
        }
    }
}

/// A rectangular table as CSV (with header) or as a JSON array of objects.
pub fn format_table(header: &[&str], rows: &[Vec<serde_json::Value>], format: Format) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut s = header.join(",");
            s.push('\n');
            for row in rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::Number(n) if n.is_f64() => format_f64(n.as_f64().unwrap_or(f64::NAN)),
                        serde_json::Value::String(t) => t.clone(),
                        serde_json::Value::Null => "NA".to_string(),
                        other => other.to_string(),
                    })
                    .collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| header.iter().map(|h| h.to_string()).zip(row.iter().cloned()).collect())
                .collect();
            Ok(serde_json::to_string_pretty(&objs)? + "\n")
        }
    }
}

/// JSON number for a float; non-finite values become `null`.
pub fn num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}
