use std::io::Write;
use std::path::Path;

use effrob::{Error, Result};
use serde_json::{Map, Value};

use crate::OutFormat;

/// Columns that always stay strings in JSON output.
const TEXT_COLUMNS: &[&str] = &[
    "model_id",
    "run_id",
    "example_id",
    "model",
    "low_model",
    "high_model",
    "candidate",
    "scaling",
    "note",
    "combiner",
    "std_mode",
    "convexity_verdict",
    "per_class",
];

fn cell(column: &str, raw: &str) -> Value {
    if raw.is_empty() {
        return Value::Null;
    }
    if TEXT_COLUMNS.contains(&column) {
        return Value::String(raw.into());
    }
    match raw {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(i) = raw.parse::<i64>() {
        return Value::from(i);
    }
    match raw.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
        Some(n) => Value::Number(n),
        None => Value::String(raw.into()),
    }
}

/// A CSV table as a JSON array of row objects.
pub fn csv_to_json(text: &str) -> Result<String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let obj: Map<String, Value> = headers
            .iter()
            .zip(rec.iter())
            .map(|(h, v)| (h.to_string(), cell(h, v)))
            .collect();
        rows.push(Value::Object(obj));
    }
    Ok(serde_json::to_string_pretty(&Value::Array(rows))? + "\n")
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::from(e).in_file(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Emit a CSV table in the requested format.
pub fn emit_table(path: Option<&Path>, format: OutFormat, csv_text: &str) -> Result<()> {
    match format {
        OutFormat::Csv => emit(path, csv_text),
        OutFormat::Json => emit(path, &csv_to_json(csv_text)?),
    }
}

pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
