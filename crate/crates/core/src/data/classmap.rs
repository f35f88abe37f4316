//! Many-to-many maps from a source label space onto a target label space,
//! plus the per-example score and label files used for zero-shot evaluation.
//!
//! * map CSV: `source_id,target_id`, one edge per row
//! * scores CSV: `example_id,<source_id>...`, one row of non-negative scores per example
//! * labels CSV: `example_id,label` with `label` a target id

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    source_classes: Vec<String>,
    target_classes: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
    sources_of_target: Vec<Vec<usize>>,
}

impl ClassMap {
    /// Edges are `(source index, target index)` pairs.
    pub fn new(source_classes: Vec<String>, target_classes: Vec<String>, edges: BTreeSet<(usize, usize)>) -> Result<Self> {
        let mut sources_of_target = vec![Vec::new(); target_classes.len()];
        for &(s, t) in &edges {
            if s >= source_classes.len() || t >= target_classes.len() {
                return Err(Error::Validation(format!("edge ({s}, {t}) out of range")));
            }
            sources_of_target[t].push(s);
        }
        Ok(Self {
            source_classes,
            target_classes,
            edges,
            sources_of_target,
        })
    }

    /// Each class maps to itself.
    pub fn identity(classes: Vec<String>) -> Self {
        let edges = (0..classes.len()).map(|i| (i, i)).collect();
        Self::new(classes.clone(), classes, edges).expect("identity edges are in range")
    }

    /// Build from named edges. Sources follow `source_order`; targets are
    /// ordered by first appearance in `pairs`.
    pub fn from_pairs(source_order: &[String], pairs: &[(String, String)]) -> Result<Self> {
        let src_index: HashMap<&str, usize> =
            source_order.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut targets: Vec<String> = Vec::new();
        let mut tgt_index: HashMap<String, usize> = HashMap::new();
        let mut edges = BTreeSet::new();
        for (s, t) in pairs {
            let si = *src_index
                .get(s.as_str())
                .ok_or_else(|| Error::Validation(format!("map references unknown source class `{s}`")))?;
            let ti = *tgt_index.entry(t.clone()).or_insert_with(|| {
                targets.push(t.clone());
                targets.len() - 1
            });
            edges.insert((si, ti));
        }
        Self::new(source_order.to_vec(), targets, edges)
    }

    pub fn source_classes(&self) -> &[String] {
        &self.source_classes
    }

    pub fn target_classes(&self) -> &[String] {
        &self.target_classes
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn sources_of(&self, target: usize) -> &[usize] {
        &self.sources_of_target[target]
    }

    pub fn target_index(&self, target: &str) -> Option<usize> {
        self.target_classes.iter().position(|t| t == target)
    }

    /// Error naming the first target class without an incoming edge.
    pub fn check_covered(&self) -> Result<()> {
        match self.sources_of_target.iter().position(Vec::is_empty) {
            Some(t) => Err(Error::Validation(format!(
                "target class `{}` has no mapped source classes",
                self.target_classes[t]
            ))),
            None => Ok(()),
        }
    }
}

pub fn read_map_pairs<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (row, line) = (i + 1, i + 2);
        let s = rec.get(0).map(str::trim).filter(|s| !s.is_empty());
        let t = rec.get(1).map(str::trim).filter(|s| !s.is_empty());
        match (s, t) {
            (Some(s), Some(t)) => out.push((s.to_string(), t.to_string())),
            (None, _) => return Err(Error::parse(line, row, "source_id", "missing value")),
            (_, None) => return Err(Error::parse(line, row, "target_id", "missing value")),
        }
    }
    Ok(out)
}

/// Per-example source scores with the source class order from the header.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub source_classes: Vec<String>,
    pub example_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_scores<R: Read>(reader: R) -> Result<ScoreTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let source_classes: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if source_classes.is_empty() {
        return Err(Error::Empty("score file has no source classes".into()));
    }
    let mut example_ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (row, line) = (i + 1, i + 2);
        if rec.len() != source_classes.len() + 1 {
            return Err(Error::parse(line, row, "scores", format!("expected {} scores", source_classes.len())));
        }
        example_ids.push(rec[0].trim().to_string());
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, s)| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, row, &source_classes[j], format!("`{s}` is not a number")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(line, row, &source_classes[j], "scores must be finite and non-negative"));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok(ScoreTable {
        source_classes,
        example_ids,
        rows,
    })
}

/// `example_id,label` rows; returns the labels in file order with their ids.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (row, line) = (i + 1, i + 2);
        let id = rec.get(0).map(str::trim).unwrap_or_default();
        let label = rec
            .get(1)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(line, row, "label", "missing value"))?;
        out.push((id.to_string(), label.to_string()));
    }
    Ok(out)
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn from_pairs_orders_targets_by_appearance() {
        let pairs = read_map_pairs("source_id,target_id\ns2,B\ns1,A\ns3,B\n".as_bytes()).unwrap();
        let map = ClassMap::from_pairs(&names(&["s1", "s2", "s3"]), &pairs).unwrap();
        assert_eq!(map.target_classes(), &names(&["B", "A"])[..]);
        assert_eq!(map.sources_of(0), &[1, 2]);
        assert_eq!(map.sources_of(1), &[0]);
        map.check_covered().unwrap();
    }

    #[test]
    fn unknown_source_rejected() {
        let pairs = vec![("zz".to_string(), "A".to_string())];
        assert!(ClassMap::from_pairs(&names(&["s1"]), &pairs).is_err());
    }

    #[test]
    fn uncovered_target_named() {
        let map = ClassMap::new(names(&["s"]), names(&["A", "B"]), [(0, 0)].into_iter().collect()).unwrap();
        let err = map.check_covered().unwrap_err().to_string();
        assert!(err.contains("`B`"), "{err}");
    }

    #[test]
    fn scores_reject_negative() {
        assert!(read_scores("example_id,a,b\nx,0.5,-0.1\n".as_bytes()).is_err());
        let t = read_scores("example_id,a,b\nx,0.5,0.1\n".as_bytes()).unwrap();
        assert_eq!(t.rows, vec![vec![0.5, 0.1]]);
    }
}
