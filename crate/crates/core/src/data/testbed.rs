//! Testbed records: one model's paired ID/OOD accuracy with trial counts.
//!
//! CSV schema: `model_id,acc_in,acc_out,n_in,n_out,tags` where `tags` is a
//! `|`-separated list. JSON is an array of objects carrying the same fields,
//! with `tags` as an array of strings.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Accuracy, Format};
use crate::error::{Error, Result};

pub const TESTBED_HEADER: [&str; 6] = ["model_id", "acc_in", "acc_out", "n_in", "n_out", "tags"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestbedRecord {
    pub model_id: String,
    pub acc_in: Accuracy,
    pub acc_out: Accuracy,
    pub n_in: u64,
    pub n_out: u64,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl TestbedRecord {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    /// Integer count of correct ID predictions implied by `acc_in * n_in`.
    pub fn correct_in(&self) -> u64 {
        (self.acc_in.value() * self.n_in as f64).round() as u64
    }

    pub fn correct_out(&self) -> u64 {
        (self.acc_out.value() * self.n_out as f64).round() as u64
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TestbedOptions {
    /// Substitute `n_in` when `n_out` is absent instead of failing.
    pub default_n_out_to_n_in: bool,
}

pub fn load_testbed(path: impl AsRef<Path>, format: Format, opts: TestbedOptions) -> Result<Vec<TestbedRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_testbed(file, format, opts).map_err(|e| e.in_file(path))
}

pub fn read_testbed<R: Read>(reader: R, format: Format, opts: TestbedOptions) -> Result<Vec<TestbedRecord>> {
    let records = match format {
        Format::Csv => read_csv(reader, opts)?,
        Format::Json => read_json(reader, opts)?,
    };
    validate_unique(&records)?;
    Ok(records)
}

fn validate_unique(records: &[TestbedRecord]) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        if !seen.insert(r.model_id.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate model_id `{}` at row {}",
                r.model_id,
                i + 1
            )));
        }
    }
    Ok(())
}

fn read_csv<R: Read>(reader: R, opts: TestbedOptions) -> Result<Vec<TestbedRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["model_id", "acc_in", "acc_out", "n_in"];
    for name in required {
        if col(name).is_none() {
            return Err(Error::parse(1, 0, name, "missing column in header"));
        }
    }
    let (c_id, c_in, c_out, c_nin) = (
        col("model_id").unwrap(),
        col("acc_in").unwrap(),
        col("acc_out").unwrap(),
        col("n_in").unwrap(),
    );
    let c_nout = col("n_out");
    let c_tags = col("tags");

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let line = row + 1;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).map(str::trim).filter(|s| !s.is_empty());
        let model_id = get(Some(c_id)).ok_or_else(|| Error::parse(line, row, "model_id", "missing value"))?;
        let acc_in = parse_accuracy(get(Some(c_in)), line, row, "acc_in")?;
        let acc_out = parse_accuracy(get(Some(c_out)), line, row, "acc_out")?;
        let n_in = parse_count(get(Some(c_nin)), line, row, "n_in")?;
        let n_out = match get(c_nout) {
            Some(s) => parse_count(Some(s), line, row, "n_out")?,
            None if opts.default_n_out_to_n_in => n_in,
            None => return Err(Error::parse(line, row, "n_out", "missing value")),
        };
        let tags = get(c_tags)
            .map(|t| t.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default();
        out.push(TestbedRecord {
            model_id: model_id.to_string(),
            acc_in,
            acc_out,
            n_in,
            n_out,
            tags,
        });
    }
    Ok(out)
}

fn parse_accuracy(s: Option<&str>, line: usize, row: usize, field: &str) -> Result<Accuracy> {
    let s = s.ok_or_else(|| Error::parse(line, row, field, "missing value"))?;
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, row, field, format!("`{s}` is not a number")))?;
    Accuracy::new(v).map_err(|_| Error::parse(line, row, field, format!("accuracy {v} outside [0, 1]")))
}

fn parse_count(s: Option<&str>, line: usize, row: usize, field: &str) -> Result<u64> {
    let s = s.ok_or_else(|| Error::parse(line, row, field, "missing value"))?;
    let v: u64 = s
        .parse()
        .map_err(|_| Error::parse(line, row, field, format!("`{s}` is not a non-negative integer")))?;
    if v == 0 {
        return Err(Error::parse(line, row, field, "count must be at least 1"));
    }
    Ok(v)
}

#[derive(Deserialize)]
struct JsonRecord {
    model_id: Option<String>,
    acc_in: Option<f64>,
    acc_out: Option<f64>,
    n_in: Option<u64>,
    n_out: Option<u64>,
    #[serde(default)]
    tags: Vec<String>,
}

fn read_json<R: Read>(reader: R, opts: TestbedOptions) -> Result<Vec<TestbedRecord>> {
    let raw: Vec<JsonRecord> = serde_json::from_reader(reader)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            // JSON has no meaningful line numbers; rows are 1-based array positions.
            let row = i + 1;
            let err = |field: &str, msg: &str| Error::parse(0, row, field, msg);
            let model_id = r.model_id.ok_or_else(|| err("model_id", "missing value"))?;
            let acc = |v: Option<f64>, field: &str| -> Result<Accuracy> {
                let v = v.ok_or_else(|| err(field, "missing value"))?;
                Accuracy::new(v).map_err(|_| err(field, &format!("accuracy {v} outside [0, 1]")))
            };
            let acc_in = acc(r.acc_in, "acc_in")?;
            let acc_out = acc(r.acc_out, "acc_out")?;
            let n_in = r.n_in.ok_or_else(|| err("n_in", "missing value"))?;
            let n_out = match r.n_out {
                Some(n) => n,
                None if opts.default_n_out_to_n_in => n_in,
                None => return Err(err("n_out", "missing value")),
            };
            if n_in == 0 {
                return Err(err("n_in", "count must be at least 1"));
            }
            if n_out == 0 {
                return Err(err("n_out", "count must be at least 1"));
            }
            Ok(TestbedRecord {
                model_id,
                acc_in,
                acc_out,
                n_in,
                n_out,
                tags: r.tags.into_iter().collect(),
            })
        })
        .collect()
}

pub fn write_testbed<W: Write>(writer: W, records: &[TestbedRecord], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(TESTBED_HEADER)?;
            for r in records {
                let tags = r.tags.iter().cloned().collect::<Vec<_>>().join("|");
                w.write_record([
                    r.model_id.clone(),
                    r.acc_in.value().to_string(),
                    r.acc_out.value().to_string(),
                    r.n_in.to_string(),
                    r.n_out.to_string(),
                    tags,
                ])?;
            }
            w.flush()?;
        }
        Format::Json => serde_json::to_writer_pretty(writer, records)?,
    }
    Ok(())
}

pub fn save_testbed(path: impl AsRef<Path>, records: &[TestbedRecord], format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_testbed(std::io::BufWriter::new(file), records, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<Vec<TestbedRecord>> {
        read_testbed(text.as_bytes(), Format::Csv, TestbedOptions::default())
    }

    #[test]
    fn single_row() {
        let recs = csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.9,0.8,10000,2000,\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].model_id, "m1");
        assert_eq!(recs[0].acc_in.value(), 0.9);
        assert_eq!(recs[0].acc_out.value(), 0.8);
        assert_eq!(recs[0].n_in, 10000);
        assert_eq!(recs[0].n_out, 2000);
        assert!(recs[0].tags.is_empty());
    }

    #[test]
    fn tags_are_pipe_separated() {
        let recs = csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.9,0.8,10,10,testbed|pretrained\n").unwrap();
        assert!(recs[0].has_tag("testbed"));
        assert!(recs[0].has_tag("pretrained"));
    }

    #[test]
    fn accuracy_out_of_range_cites_row() {
        let err = csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,1.2,0.8,10,10,\n").unwrap_err();
        match err {
            Error::Parse { row, line, field, .. } => {
                assert_eq!(row, 1);
                assert_eq!(line, 2);
                assert_eq!(field, "acc_in");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_number_names_field() {
        let err = csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.5,0.4,10,10,\nm2,0.5,abc,10,10,\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3") && err.contains("acc_out"), "{err}");
    }

    #[test]
    fn duplicate_model_rejected() {
        let err = csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.5,0.4,10,10,\nm1,0.6,0.5,10,10,\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn json_missing_n_out() {
        let text = r#"[{"model_id":"a","acc_in":0.5,"acc_out":0.4,"n_in":10,"n_out":10},
                       {"model_id":"b","acc_in":0.5,"acc_out":0.4,"n_in":10}]"#;
        let err = read_testbed(text.as_bytes(), Format::Json, TestbedOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_out") && msg.contains("row 2"), "{msg}");
        let ok = read_testbed(
            text.as_bytes(),
            Format::Json,
            TestbedOptions {
                default_n_out_to_n_in: true,
            },
        )
        .unwrap();
        assert_eq!(ok[1].n_out, 10);
    }

    #[test]
    fn missing_n_out_csv_needs_flag() {
        let text = "model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.5,0.4,10,,\n";
        assert!(csv(text).is_err());
        let ok = read_testbed(
            text.as_bytes(),
            Format::Csv,
            TestbedOptions {
                default_n_out_to_n_in: true,
            },
        )
        .unwrap();
        assert_eq!(ok[0].n_out, 10);
    }

    #[test]
    fn zero_count_rejected() {
        assert!(csv("model_id,acc_in,acc_out,n_in,n_out,tags\nm1,0.5,0.4,0,10,\n").is_err());
    }
}
