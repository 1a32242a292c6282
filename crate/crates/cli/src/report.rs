//! Report assembly and serialization.

use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::{io_error, CliError, CliResult};

pub const REPORT_SCHEMA: u32 = 1;

/// SHA-256 over the transcript files in trial order.
pub fn transcript_hash<'a>(files: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for f in files {
        h.update(f.as_bytes());
    }
    hex::encode(h.finalize())
}

pub struct ReportHeader<'a> {
    pub command: &'a str,
    pub config: Value,
    pub config_hash: String,
    pub trials: usize,
    pub transcript_hash: String,
}

pub fn build_report(header: ReportHeader<'_>, analyses: Map<String, Value>) -> Value {
    json!({
        "report_schema": REPORT_SCHEMA,
        "command": header.command,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "rng_stream": memlab::rng::STREAM_ID,
        "config": header.config,
        "config_hash": header.config_hash,
        "trials": header.trials,
        "transcript_hash": header.transcript_hash,
        "analyses": analyses,
    })
}

/// Leaves of `value` as `(dotted.path, scalar)`; array elements use their index.
pub fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// One row per metric: `analysis,metric,value`. Header fields use the
/// analysis name `report`.
pub fn to_csv(report: &Value) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, a: &str, m: &str, v: &str| {
        w.write_record([a, m, v]).map_err(|e| CliError::runtime(e.to_string()))
    };
    row(&mut w, "analysis", "metric", "value")?;
    let obj = report.as_object().expect("reports are objects");
    for (k, v) in obj {
        if k == "analyses" {
            continue;
        }
        let mut leaves = Vec::new();
        flatten(k, v, &mut leaves);
        for (m, val) in leaves {
            row(&mut w, "report", &m, &val)?;
        }
    }
    if let Some(Value::Object(analyses)) = obj.get("analyses") {
        for (name, v) in analyses {
            let mut leaves = Vec::new();
            flatten("", v, &mut leaves);
            for (m, val) in leaves {
                row(&mut w, name, &m, &val)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 input"))
}

pub fn render(report: &Value, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(report)?,
    })
}

/// Writes `report.json` or `report.csv` under `dir`; returns the path.
pub fn write_report(dir: &Path, report: &Value, format: Format) -> CliResult<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let name = match format {
        Format::Json => "report.json",
        Format::Csv => "report.csv",
    };
    let path = dir.join(name);
    std::fs::write(&path, render(report, format)?).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let v = json!({"a": {"b": 1, "c": [true, null]}, "d": "x,y"});
        let mut out = Vec::new();
        flatten("", &v, &mut out);
        assert_eq!(
            out,
            vec![
                ("a.b".to_string(), "1".to_string()),
                ("a.c.0".to_string(), "true".to_string()),
                ("a.c.1".to_string(), String::new()),
                ("d".to_string(), "x,y".to_string()),
            ]
        );
    }

    #[test]
    fn csv_quotes_and_groups_rows() {
        let report = json!({"trials": 2, "analyses": {"qber": {"x_rate": 0.5, "note": "a,b"}}});
        let csv = to_csv(&report).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "analysis,metric,value");
        assert_eq!(lines[1], "report,trials,2");
        assert!(lines.contains(&"qber,note,\"a,b\""));
        assert!(lines.contains(&"qber,x_rate,0.5"));
    }

    #[test]
    fn hash_depends_on_order() {
        assert_ne!(transcript_hash(["a", "b"]), transcript_hash(["b", "a"]));
        assert_eq!(transcript_hash(["ab"]), transcript_hash(["a", "b"]));
    }
}
