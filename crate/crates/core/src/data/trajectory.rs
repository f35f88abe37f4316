//! Fine-tuning trajectories in long CSV form: `run_id,step,acc_in,acc_out`,
//! rows grouped by `run_id`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Accuracy;
use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 4] = ["run_id", "step", "acc_in", "acc_out"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub acc_in: Accuracy,
    pub acc_out: Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRun {
    pub run_id: String,
    checkpoints: Vec<Checkpoint>,
}

impl TrajectoryRun {
    pub fn new(run_id: impl Into<String>, checkpoints: Vec<Checkpoint>) -> Result<Self> {
        let run_id = run_id.into();
        for w in checkpoints.windows(2) {
            if w[1].step <= w[0].step {
                return Err(Error::Validation(format!(
                    "run `{run_id}`: non-increasing step {} after {}",
                    w[1].step, w[0].step
                )));
            }
        }
        Ok(Self { run_id, checkpoints })
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRun>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_trajectories(file).map_err(|e| e.in_file(path))
}

pub fn read_trajectories<R: Read>(reader: R) -> Result<Vec<TrajectoryRun>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols != TRAJECTORY_HEADER {
        return Err(Error::parse(1, 0, "header", format!("expected `{}`", TRAJECTORY_HEADER.join(","))));
    }

    let mut runs: Vec<TrajectoryRun> = Vec::new();
    let mut current: Option<(String, Vec<Checkpoint>)> = None;
    let mut finished = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (row, line) = (i + 1, i + 2);
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or_default();
        let run_id = field(0);
        if run_id.is_empty() {
            return Err(Error::parse(line, row, "run_id", "missing value"));
        }
        let step: u64 = field(1)
            .parse()
            .map_err(|_| Error::parse(line, row, "step", format!("`{}` is not a non-negative integer", field(1))))?;
        let acc = |c: usize, name: &str| -> Result<Accuracy> {
            let s = field(c);
            let v: f64 = s
                .parse()
                .map_err(|_| Error::parse(line, row, name, format!("`{s}` is not a number")))?;
            Accuracy::new(v).map_err(|_| Error::parse(line, row, name, format!("accuracy {v} outside [0, 1]")))
        };
        let cp = Checkpoint {
            step,
            acc_in: acc(2, "acc_in")?,
            acc_out: acc(3, "acc_out")?,
        };
        match &mut current {
            Some((id, cps)) if id == run_id => {
                if let Some(prev) = cps.last() {
                    if cp.step <= prev.step {
                        return Err(Error::parse(
                            line,
                            row,
                            "step",
                            format!("non-increasing step {} after {}", cp.step, prev.step),
                        ));
                    }
                }
                cps.push(cp);
            }
            _ => {
                if finished.contains(run_id) {
                    return Err(Error::parse(line, row, "run_id", format!("run `{run_id}` is not contiguous")));
                }
                if let Some((id, cps)) = current.take() {
                    finished.insert(id.clone());
                    runs.push(TrajectoryRun::new(id, cps)?);
                }
                current = Some((run_id.to_string(), vec![cp]));
            }
        }
    }
    if let Some((id, cps)) = current {
        runs.push(TrajectoryRun::new(id, cps)?);
    }
    Ok(runs)
}

pub fn write_trajectories<W: Write>(writer: W, runs: &[TrajectoryRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for run in runs {
        for cp in run.checkpoints() {
            w.write_record([
                run.run_id.clone(),
                cp.step.to_string(),
                cp.acc_in.value().to_string(),
                cp.acc_out.value().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectories(path: impl AsRef<Path>, runs: &[TrajectoryRun]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_trajectories(std::io::BufWriter::new(file), runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_in_order() {
        let text = "run_id,step,acc_in,acc_out\nr,0,0.5,0.4\nr,1,0.6,0.5\nr,2,0.7,0.55\n";
        let runs = read_trajectories(text.as_bytes()).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].len(), 3);
        assert_eq!(runs[0].checkpoints()[2].acc_out.value(), 0.55);
    }

    #[test]
    fn non_increasing_step() {
        let text = "run_id,step,acc_in,acc_out\nr,0,0.5,0.4\nr,2,0.6,0.5\nr,1,0.7,0.55\n";
        let err = read_trajectories(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("non-increasing step"), "{err}");
    }

    #[test]
    fn runs_must_be_grouped() {
        let text = "run_id,step,acc_in,acc_out\na,0,0.5,0.4\nb,0,0.6,0.5\na,1,0.7,0.55\n";
        assert!(read_trajectories(text.as_bytes()).unwrap_err().to_string().contains("contiguous"));
    }

    #[test]
    fn constructor_validates() {
        let cp = |s| Checkpoint {
            step: s,
            acc_in: Accuracy::new(0.5).unwrap(),
            acc_out: Accuracy::new(0.5).unwrap(),
        };
        assert!(TrajectoryRun::new("r", vec![cp(0), cp(0)]).is_err());
        assert!(TrajectoryRun::new("r", vec![cp(0), cp(3)]).is_ok());
    }
}
