//! CSV and JSON result files.
//!
//! Every file carries the schema version, the tool version, the kind of
//! result and the fully resolved run configuration. CSV files put these on
//! leading `# key: value` comment lines (the configuration as one line of
//! JSON); JSON files put them at the top level next to `data`. Floats are
//! written in shortest round-trip form and nothing time-dependent is
//! recorded, so identical inputs give identical bytes.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::{Error, Result, SCHEMA_VERSION, TOOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// Metadata written ahead of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub kind: String,
    pub config: Value,
    /// Extra `key: value` facts about the result (e.g. a resolved ZDW).
    pub summary: Vec<(String, Value)>,
}

impl Header {
    pub fn new(kind: impl Into<String>, config: &impl Serialize) -> Result<Self> {
        Ok(Self { kind: kind.into(), config: serde_json::to_value(config)?, summary: Vec::new() })
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Serialize) -> Result<Self> {
        self.summary.push((key.into(), serde_json::to_value(value)?));
        Ok(self)
    }
}

/// A rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal form; non-finite values are empty.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<W: Write>(mut out: W, header: &Header, table: &Table) -> Result<()> {
    writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
    writeln!(out, "# tool_version: {TOOL_VERSION}")?;
    writeln!(out, "# kind: {}", header.kind)?;
    for (k, v) in &header.summary {
        writeln!(out, "# {k}: {}", serde_json::to_string(v)?)?;
    }
    writeln!(out, "# config: {}", serde_json::to_string(&header.config)?)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, header: &Header, data: Value) -> Result<()> {
    let summary: serde_json::Map<String, Value> = header.summary.iter().cloned().collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "kind": header.kind,
        "summary": summary,
        "config": header.config,
        "data": data,
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// The configuration embedded in a file written by [`write_csv`] or
/// [`write_json`].
pub fn embedded_config(text: &str) -> Result<Value> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text)?;
        return doc
            .get("config")
            .cloned()
            .ok_or_else(|| Error::Data("JSON result has no config field".into()));
    }
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix("# config: ") {
            return Ok(serde_json::from_str(rest)?);
        }
    }
    Err(Error::Data("CSV result has no '# config:' header line".into()))
}

/// Schema version recorded in a result file.
pub fn embedded_schema_version(text: &str) -> Result<u32> {
    let v = if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text)?;
        doc.get("schema_version").and_then(Value::as_u64)
    } else {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# schema_version: "))
            .and_then(|s| s.trim().parse().ok())
    };
    v.map(|v| v as u32).ok_or_else(|| Error::Data("no schema_version in result".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Header, Table) {
        let header = Header::new("test", &json!({"pitch_um": 1.78, "d_over_pitch": 0.437}))
            .unwrap()
            .with("zdw_um", 0.9124)
            .unwrap();
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![fmt_f64(0.1), fmt_f64(f64::NAN)]);
        t.push(vec![fmt_f64(1e-27), fmt_opt(Some(2.0))]);
        (header, t)
    }

    #[test]
    fn csv_round_trips_config() {
        let (h, t) = sample();
        let mut buf = Vec::new();
        write_csv(&mut buf, &h, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema_version: 1\n"));
        assert!(text.contains("# zdw_um: 0.9124\n"));
        assert!(text.ends_with("x,y\n0.1,\n1e-27,2.0\n"));
        assert_eq!(embedded_config(&text).unwrap(), h.config);
        assert_eq!(embedded_schema_version(&text).unwrap(), SCHEMA_VERSION);
    }

    #[test]
    fn json_round_trips_config() {
        let (h, _) = sample();
        let mut buf = Vec::new();
        write_json(&mut buf, &h, json!({"x": [0.1, 0.2]})).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(embedded_config(&text).unwrap(), h.config);
        assert_eq!(embedded_schema_version(&text).unwrap(), SCHEMA_VERSION);
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["summary"]["zdw_um"], json!(0.9124));
    }

    #[test]
    fn output_is_deterministic() {
        let (h, t) = sample();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_csv(&mut a, &h, &t).unwrap();
        write_csv(&mut b, &h, &t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -1.5e-300, 637.318601168874] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn missing_config_is_error() {
        assert!(embedded_config("# kind: x\na,b\n").is_err());
        assert!(embedded_config("{\"kind\": 1}").is_err());
    }
}
