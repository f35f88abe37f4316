//! Domain types and loaders for the evaluation artifacts.

mod accuracy;
mod bits;
pub mod classmap;
pub mod difficulty;
pub mod matrix;
pub mod testbed;
pub mod trajectory;

pub use accuracy::Accuracy;
pub use bits::BitRow;
pub use classmap::{ClassMap, ScoreTable};
pub use difficulty::DifficultyTable;
pub use matrix::{load_prediction_matrix, save_prediction_matrix, MatrixFormat, PredictionMatrix};
pub use testbed::{load_testbed, save_testbed, TestbedOptions, TestbedRecord};
pub use trajectory::{load_trajectories, save_trajectories, Checkpoint, TrajectoryRun};

use std::path::Path;

/// Interchange format for tabular artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}
