//! Boolean correctness matrices (models x examples).
//!
//! CSV: header `model_id,<example_id>...`, an optional `class,<label>...`
//! row of integer class labels, then one `model_id,0|1,...` row per model.
//!
//! Binary (`RLPM`): magic `RLPM`, version byte, `u32` model count, `u32`
//! example count, then row-major rows bit-packed LSB-first and padded to a
//! byte boundary. All integers little-endian. Version 1 appends a trailer with
//! the identifiers: every model id then every example id as `u32` byte length
//! plus UTF-8, then a flag byte and, when set, one `i64` class label per
//! example. A file that ends right after the rows is also accepted and gets
//! synthetic ids `m<i>` / `e<j>`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Accuracy, BitRow};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RLPM";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Bitset,
}

impl MatrixFormat {
    /// `.rlpm` / `.bin` select the bitset format, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("rlpm") | Some("bin") => MatrixFormat::Bitset,
            _ => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    model_ids: Vec<String>,
    example_ids: Vec<String>,
    rows: Vec<BitRow>,
    class_of_example: Option<Vec<i64>>,
    correct: Vec<u64>,
    index: HashMap<String, usize>,
}

impl PredictionMatrix {
    pub fn new(
        model_ids: Vec<String>,
        example_ids: Vec<String>,
        rows: Vec<BitRow>,
        class_of_example: Option<Vec<i64>>,
    ) -> Result<Self> {
        if example_ids.is_empty() {
            return Err(Error::Empty("prediction matrix has zero examples".into()));
        }
        if model_ids.len() != rows.len() {
            return Err(Error::Validation(format!(
                "{} model ids but {} rows",
                model_ids.len(),
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != example_ids.len()) {
            return Err(Error::Validation(format!(
                "row `{}` has {} cells, expected {}",
                model_ids[r],
                rows[r].len(),
                example_ids.len()
            )));
        }
        if let Some(c) = &class_of_example {
            if c.len() != example_ids.len() {
                return Err(Error::Validation(format!(
                    "{} class labels for {} examples",
                    c.len(),
                    example_ids.len()
                )));
            }
        }
        let mut index = HashMap::with_capacity(model_ids.len());
        for (i, id) in model_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate model_id `{id}`")));
            }
        }
        let correct = rows.iter().map(BitRow::count_ones).collect();
        Ok(Self {
            model_ids,
            example_ids,
            rows,
            class_of_example,
            correct,
            index,
        })
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_examples(&self) -> usize {
        self.example_ids.len()
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn class_of_example(&self) -> Option<&[i64]> {
        self.class_of_example.as_deref()
    }

    pub fn rows(&self) -> &[BitRow] {
        &self.rows
    }

    pub fn row(&self, model: usize) -> &BitRow {
        &self.rows[model]
    }

    pub fn index_of(&self, model_id: &str) -> Result<usize> {
        self.index
            .get(model_id)
            .copied()
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))
    }

    pub fn row_by_id(&self, model_id: &str) -> Result<&BitRow> {
        Ok(&self.rows[self.index_of(model_id)?])
    }

    /// Number of examples the model classifies correctly.
    pub fn correct_count(&self, model: usize) -> u64 {
        self.correct[model]
    }

    pub fn accuracy(&self, model: usize) -> Accuracy {
        Accuracy::from_counts(self.correct[model], self.n_examples() as u64).expect("non-empty matrix")
    }

    pub fn accuracies(&self) -> Vec<Accuracy> {
        (0..self.n_models()).map(|m| self.accuracy(m)).collect()
    }

    /// A new matrix with `row` appended as model `model_id`.
    pub fn with_row(&self, model_id: impl Into<String>, row: BitRow) -> Result<Self> {
        let mut ids = self.model_ids.clone();
        ids.push(model_id.into());
        let mut rows = self.rows.clone();
        rows.push(row);
        Self::new(ids, self.example_ids.clone(), rows, self.class_of_example.clone())
    }

    /// Restriction to the given models, in the given order.
    pub fn select_models(&self, model_ids: &[String]) -> Result<Self> {
        let rows = model_ids
            .iter()
            .map(|id| self.row_by_id(id).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            model_ids.to_vec(),
            self.example_ids.clone(),
            rows,
            self.class_of_example.clone(),
        )
    }
}

pub fn load_prediction_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<PredictionMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::Csv => read_matrix_csv(reader),
        MatrixFormat::Bitset => read_matrix_bitset(reader),
    }
    .map_err(|e| e.in_file(path))
}

pub fn save_prediction_matrix(path: impl AsRef<Path>, m: &PredictionMatrix, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        MatrixFormat::Csv => write_matrix_csv(&mut w, m)?,
        MatrixFormat::Bitset => write_matrix_bitset(&mut w, m)?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(reader: R) -> Result<PredictionMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Empty("prediction matrix file is empty".into()))?;
    let header = header?;
    let mut cols = header.trim_end_matches('\r').split(',');
    let first = cols.next().unwrap_or_default();
    if first.trim() != "model_id" {
        return Err(Error::parse(1, 0, "model_id", "header must start with `model_id`"));
    }
    let example_ids: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
    if example_ids.is_empty() {
        return Err(Error::Empty("zero examples".into()));
    }
    let n = example_ids.len();

    let mut model_ids = Vec::new();
    let mut rows = Vec::new();
    let mut classes = None;
    let mut row_no = 0;
    for (i, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let id = cells.next().unwrap_or_default().trim().to_string();
        let cells: Vec<&str> = cells.collect();
        if cells.len() != n {
            return Err(Error::parse(
                line_no,
                row_no + 1,
                id,
                format!("ragged row: {} cells, expected {n}", cells.len()),
            ));
        }
        if id == "class" && rows.is_empty() && classes.is_none() {
            let labels = cells
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    c.trim().parse::<i64>().map_err(|_| {
                        Error::parse(line_no, 0, &example_ids[j], format!("class label `{c}` is not an integer"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            classes = Some(labels);
            continue;
        }
        row_no += 1;
        let mut row = BitRow::zeros(n);
        for (j, c) in cells.iter().enumerate() {
            match c.trim() {
                "1" => row.set(j, true),
                "0" => {}
                other => {
                    return Err(Error::parse(
                        line_no,
                        row_no,
                        &example_ids[j],
                        format!("cell `{other}` is not 0 or 1"),
                    ))
                }
            }
        }
        model_ids.push(id);
        rows.push(row);
    }
    PredictionMatrix::new(model_ids, example_ids, rows, classes)
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &PredictionMatrix) -> Result<()> {
    write!(w, "model_id")?;
    for e in m.example_ids() {
        write!(w, ",{e}")?;
    }
    writeln!(w)?;
    if let Some(classes) = m.class_of_example() {
        write!(w, "class")?;
        for c in classes {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    let mut line = String::with_capacity(2 * m.n_examples() + 16);
    for (id, row) in m.model_ids().iter().zip(m.rows()) {
        line.clear();
        line.push_str(id);
        for j in 0..row.len() {
            line.push(',');
            line.push(if row.get(j) { '1' } else { '0' });
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_matrix_bitset<W: Write>(mut w: W, m: &PredictionMatrix) -> Result<()> {
    let to_u32 = |n: usize, what: &str| {
        u32::try_from(n).map_err(|_| Error::Validation(format!("{what} {n} exceeds u32")))
    };
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&to_u32(m.n_models(), "model count")?.to_le_bytes())?;
    w.write_all(&to_u32(m.n_examples(), "example count")?.to_le_bytes())?;
    for row in m.rows() {
        w.write_all(&row.to_bytes())?;
    }
    for id in m.model_ids().iter().chain(m.example_ids()) {
        w.write_all(&to_u32(id.len(), "id length")?.to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    match m.class_of_example() {
        Some(classes) => {
            w.write_all(&[1])?;
            for c in classes {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        None => w.write_all(&[0])?,
    }
    Ok(())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Validation(format!("truncated bitset file while reading {what}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_matrix_bitset<R: Read>(mut r: R) -> Result<PredictionMatrix> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Validation("not an RLPM bitset file (bad magic)".into()));
    }
    let mut version = [0u8; 1];
    read_exact_or(&mut r, &mut version, "version")?;
    if version[0] != VERSION {
        return Err(Error::Validation(format!("unsupported RLPM version {}", version[0])));
    }
    let n_models = read_u32(&mut r, "model count")? as usize;
    let n_examples = read_u32(&mut r, "example count")? as usize;
    if n_examples == 0 {
        return Err(Error::Empty("zero examples".into()));
    }
    let row_bytes = n_examples.div_ceil(8);
    let mut rows = Vec::with_capacity(n_models);
    let mut buf = vec![0u8; row_bytes];
    for i in 0..n_models {
        read_exact_or(&mut r, &mut buf, "row data")?;
        let row = BitRow::from_bytes(&buf, n_examples)
            .ok_or_else(|| Error::Validation(format!("row {i} has non-zero padding bits")))?;
        rows.push(row);
    }

    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.is_empty() {
        let model_ids = (0..n_models).map(|i| format!("m{i}")).collect();
        let example_ids = (0..n_examples).map(|j| format!("e{j}")).collect();
        return PredictionMatrix::new(model_ids, example_ids, rows, None);
    }
    let mut cursor = rest.as_slice();
    let mut read_id = |what: &str| -> Result<String> {
        let len = read_u32(&mut cursor, what)? as usize;
        if cursor.len() < len {
            return Err(Error::Validation(format!("truncated bitset file while reading {what}")));
        }
        let (s, tail) = cursor.split_at(len);
        cursor = tail;
        String::from_utf8(s.to_vec()).map_err(|_| Error::Validation(format!("{what} is not UTF-8")))
    };
    let model_ids = (0..n_models).map(|_| read_id("model id")).collect::<Result<Vec<_>>>()?;
    let example_ids = (0..n_examples).map(|_| read_id("example id")).collect::<Result<Vec<_>>>()?;
    let mut flag = [0u8; 1];
    read_exact_or(&mut cursor, &mut flag, "class flag")?;
    let classes = if flag[0] == 1 {
        let mut labels = Vec::with_capacity(n_examples);
        let mut b = [0u8; 8];
        for _ in 0..n_examples {
            read_exact_or(&mut cursor, &mut b, "class labels")?;
            labels.push(i64::from_le_bytes(b));
        }
        Some(labels)
    } else {
        None
    };
    if !cursor.is_empty() {
        return Err(Error::Validation("trailing bytes after bitset trailer".into()));
    }
    PredictionMatrix::new(model_ids, example_ids, rows, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PredictionMatrix> {
        read_matrix_csv(text.as_bytes())
    }

    #[test]
    fn two_by_three() {
        let m = parse("model_id,x1,x2,x3\na,1,1,0\nb,0,1,1\n").unwrap();
        assert_eq!(m.n_models(), 2);
        assert_eq!(m.accuracy(0).value(), 2.0 / 3.0);
        assert_eq!(m.accuracy(1).value(), 2.0 / 3.0);
        assert_eq!(m.correct_count(1), 2);
    }

    #[test]
    fn class_row() {
        let m = parse("model_id,x1,x2\nclass,3,7\na,1,0\n").unwrap();
        assert_eq!(m.class_of_example(), Some(&[3i64, 7][..]));
        assert_eq!(m.n_models(), 1);
    }

    #[test]
    fn zero_examples() {
        let err = parse("model_id\na\n").unwrap_err();
        assert!(err.to_string().contains("zero examples"));
    }

    #[test]
    fn ragged_and_bad_cells() {
        assert!(parse("model_id,x1,x2\na,1\n").unwrap_err().to_string().contains("ragged"));
        assert!(parse("model_id,x1,x2\na,1,2\n").unwrap_err().to_string().contains("not 0 or 1"));
    }

    #[test]
    fn bitset_header_layout() {
        let m = parse("model_id,x1,x2,x3,x4,x5,x6,x7,x8,x9\na,1,0,0,0,0,0,0,1,1\n").unwrap();
        let mut buf = Vec::new();
        write_matrix_bitset(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"RLPM");
        assert_eq!(buf[4], 1);
        assert_eq!(&buf[5..9], &1u32.to_le_bytes());
        assert_eq!(&buf[9..13], &9u32.to_le_bytes());
        assert_eq!(&buf[13..15], &[0b1000_0001, 0b0000_0001]);
        assert_eq!(read_matrix_bitset(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn bitset_without_trailer() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"RLPM");
        buf.push(1);
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&3u32.to_le_bytes());
        buf.extend_from_slice(&[0b011, 0b110]);
        let m = read_matrix_bitset(buf.as_slice()).unwrap();
        assert_eq!(m.model_ids(), &["m0".to_string(), "m1".to_string()]);
        assert_eq!(m.row(1).to_bools(), vec![false, true, true]);
    }
}
