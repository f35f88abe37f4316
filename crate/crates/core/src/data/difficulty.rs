//! Per-example difficulty scores (`example_id,score,class`). Higher score
//! means easier, following the C-score convention.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyTable {
    example_ids: Vec<String>,
    score: Vec<f64>,
    class_of_example: Vec<i64>,
}

impl DifficultyTable {
    pub fn new(example_ids: Vec<String>, score: Vec<f64>, class_of_example: Vec<i64>) -> Result<Self> {
        if example_ids.len() != score.len() || score.len() != class_of_example.len() {
            return Err(Error::Validation("difficulty table columns differ in length".into()));
        }
        if let Some(i) = score.iter().position(|s| !s.is_finite()) {
            return Err(Error::Validation(format!("score for `{}` is not finite", example_ids[i])));
        }
        Ok(Self {
            example_ids,
            score,
            class_of_example,
        })
    }

    pub fn len(&self) -> usize {
        self.score.len()
    }

    pub fn is_empty(&self) -> bool {
        self.score.is_empty()
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.score
    }

    pub fn classes(&self) -> &[i64] {
        &self.class_of_example
    }

    /// Distinct class labels in ascending order.
    pub fn distinct_classes(&self) -> Vec<i64> {
        let mut c = self.class_of_example.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

pub fn read_difficulty<R: Read>(reader: R) -> Result<DifficultyTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let (mut ids, mut scores, mut classes) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (row, line) = (i + 1, i + 2);
        let get = |c: usize| rec.get(c).map(str::trim).unwrap_or_default();
        let id = get(0);
        if id.is_empty() {
            return Err(Error::parse(line, row, "example_id", "missing value"));
        }
        let score: f64 = get(1)
            .parse()
            .map_err(|_| Error::parse(line, row, "score", format!("`{}` is not a number", get(1))))?;
        if !score.is_finite() {
            return Err(Error::parse(line, row, "score", "must be finite"));
        }
        let class: i64 = get(2)
            .parse()
            .map_err(|_| Error::parse(line, row, "class", format!("`{}` is not an integer", get(2))))?;
        ids.push(id.to_string());
        scores.push(score);
        classes.push(class);
    }
    DifficultyTable::new(ids, scores, classes)
}

pub fn load_difficulty(path: impl AsRef<Path>) -> Result<DifficultyTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_difficulty(file).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_table() {
        let t = read_difficulty("example_id,score,class\na,0.9,0\nb,0.1,1\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.distinct_classes(), vec![0, 1]);
        assert!(read_difficulty("example_id,score,class\na,nan,0\n".as_bytes()).is_err());
    }
}
