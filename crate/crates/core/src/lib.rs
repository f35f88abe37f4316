//! Effective robustness analysis for image classifiers.
//!
//! Fits a baseline trend between in-distribution and out-of-distribution
//! accuracy across a testbed of models, measures each model's departure from
//! it, and provides per-example prediction analyses, mixed classifiers,
//! zero-shot class mapping, difficulty-based selection and synthetic data.

pub mod data;
pub mod error;
pub mod fit;
pub mod mixed;
pub mod normal;
pub mod plot;
pub mod prediction;
pub mod registry;
pub mod report;
pub mod rng;
pub mod robustness;
pub mod scaling;
pub mod selection;
pub mod synth;
pub mod tables;
pub mod zeroshot;

pub use data::{Accuracy, BitRow, PredictionMatrix, TestbedRecord, TrajectoryRun};
pub use error::{Error, Result};
pub use fit::{compare_scalings, fit_trend, predict_baseline, LinearFit};
pub use registry::{Named, Registry};
pub use robustness::{effective_robustness, ERValue};
pub use scaling::{scale, unscale, ScalingKind};
