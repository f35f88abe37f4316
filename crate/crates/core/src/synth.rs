//! Synthetic testbeds, trajectories and correctness matrices.
//!
//! All draws go through [`CounterRng`] keyed by role and index, so output is
//! identical for a given seed whatever the thread count.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::data::{Accuracy, BitRow, Checkpoint, PredictionMatrix, TestbedRecord, TrajectoryRun};
use crate::error::{Error, Result};
use crate::fit::LinearFit;
use crate::normal::{norm_cdf, norm_inv_cdf};
use crate::rng::CounterRng;
use crate::scaling::{scale, unscale};

// Stream ids; changing any of these changes every generated artifact.
const S_ACC_IN: u64 = 1;
const S_NOISE: u64 = 2;
const S_DIFFICULTY: u64 = 3;
const S_CELL: u64 = 4;
const S_OUTLIER: u64 = 5;
const S_CHECKPOINT: u64 = 6;

pub const DEFAULT_COUNT: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub fit: LinearFit,
    pub n_models: usize,
    pub acc_in_range: (f64, f64),
    /// Standard deviation of Gaussian noise added in scaled space.
    pub noise_sigma: f64,
    pub seed: u64,
    pub n_in: u64,
    pub n_out: u64,
}

impl GeneratorSpec {
    pub fn new(fit: LinearFit, n_models: usize, acc_in_range: (f64, f64), noise_sigma: f64, seed: u64) -> Self {
        Self {
            fit,
            n_models,
            acc_in_range,
            noise_sigma,
            seed,
            n_in: DEFAULT_COUNT,
            n_out: DEFAULT_COUNT,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.acc_in_range;
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            return Err(Error::Argument(format!("acc_in range ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
        }
        if self.n_models < 2 {
            return Err(Error::Argument("need at least 2 models".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Argument(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.n_in == 0 || self.n_out == 0 {
            return Err(Error::Argument("example counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// `acc_out = unscale(A · scale(acc_in) + B + ε)` with `acc_in` uniform in
/// the range and `ε ~ N(0, noise_sigma²)`.
pub fn gen_testbed(spec: &GeneratorSpec) -> Result<Vec<TestbedRecord>> {
    spec.validate()?;
    let root = CounterRng::new(spec.seed);
    let (acc_rng, noise_rng) = (root.split(S_ACC_IN), root.split(S_NOISE));
    let (lo, hi) = spec.acc_in_range;
    (0..spec.n_models)
        .map(|i| {
            let acc_in = Accuracy::new(lo + (hi - lo) * acc_rng.uniform(i as u64))?;
            let eps = spec.noise_sigma * noise_rng.normal(i as u64);
            let x = scale(acc_in, spec.fit.scaling)?;
            let acc_out = unscale(spec.fit.slope * x + spec.fit.intercept + eps, spec.fit.scaling)?;
            Ok(TestbedRecord {
                model_id: format!("m{i:04}"),
                acc_in,
                acc_out,
                n_in: spec.n_in,
                n_out: spec.n_out,
                tags: BTreeSet::from(["testbed".to_string()]),
            })
        })
        .collect()
}

/// Threshold item model: model `i` is right on example `j` iff
/// `skills[i] + cell_noise · z_ij >= difficulty_j`, difficulty ~ N(mean, std²).
#[derive(Debug, Clone)]
pub struct ItemModel {
    pub n_examples: usize,
    pub difficulty_mean: f64,
    pub difficulty_std: f64,
    pub skills: Vec<f64>,
    pub cell_noise: f64,
}

impl ItemModel {
    pub fn new(n_examples: usize, skills: Vec<f64>, cell_noise: f64) -> Self {
        Self {
            n_examples,
            difficulty_mean: 0.0,
            difficulty_std: 1.0,
            skills,
            cell_noise,
        }
    }

    /// Expected accuracy of a model with the given skill.
    pub fn expected_accuracy(&self, skill: f64) -> f64 {
        let spread = (self.difficulty_std.powi(2) + self.cell_noise.powi(2)).sqrt();
        norm_cdf((skill - self.difficulty_mean) / spread)
    }

    /// Skill whose expected accuracy is `acc`.
    pub fn skill_for_accuracy(&self, acc: f64) -> f64 {
        let spread = (self.difficulty_std.powi(2) + self.cell_noise.powi(2)).sqrt();
        self.difficulty_mean + spread * norm_inv_cdf(acc)
    }

    /// Skills evenly spread so expected accuracies run from `lo` to `hi`.
    pub fn skills_for_accuracy_range(&self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
                self.skill_for_accuracy(lo + (hi - lo) * t)
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_examples == 0 {
            return Err(Error::Argument("item model needs at least one example".into()));
        }
        if !(self.difficulty_std > 0.0 && self.cell_noise >= 0.0) {
            return Err(Error::Argument("difficulty std must be > 0 and cell noise >= 0".into()));
        }
        Ok(())
    }

    pub fn difficulties(&self, seed: u64) -> Vec<f64> {
        let rng = CounterRng::new(seed).split(S_DIFFICULTY);
        (0..self.n_examples)
            .map(|j| self.difficulty_mean + self.difficulty_std * rng.normal(j as u64))
            .collect()
    }
}

pub fn example_ids(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("x{j:05}")).collect()
}

pub fn gen_matrix_shared_difficulty(item: &ItemModel, seed: u64) -> Result<PredictionMatrix> {
    item.validate()?;
    let difficulty = item.difficulties(seed);
    let cells = CounterRng::new(seed).split(S_CELL);
    let rows: Vec<BitRow> = item
        .skills
        .par_iter()
        .enumerate()
        .map(|(i, &skill)| {
            let rng = cells.split(i as u64);
            BitRow::from_fn(item.n_examples, |j| {
                let noise = if item.cell_noise == 0.0 {
                    0.0
                } else {
                    item.cell_noise * rng.normal(j as u64)
                };
                skill + noise >= difficulty[j]
            })
        })
        .collect();
    let model_ids = (0..rows.len()).map(|i| format!("t{i:03}")).collect();
    PredictionMatrix::new(model_ids, example_ids(item.n_examples), rows, None)
}

/// Correctness drawn independently of item difficulty: Bernoulli(target)
/// per example.
pub fn gen_robust_outlier(item: &ItemModel, target_accuracy: f64, seed: u64) -> Result<BitRow> {
    if !(target_accuracy > 0.0 && target_accuracy < 1.0) {
        return Err(Error::Argument(format!("target accuracy {target_accuracy} must lie in (0, 1)")));
    }
    let rng = CounterRng::new(seed).split(S_OUTLIER);
    Ok(BitRow::from_fn(item.n_examples, |j| rng.bernoulli(j as u64, target_accuracy)))
}

#[derive(Debug, Clone)]
pub struct TrajectorySpec {
    pub fit: LinearFit,
    pub acc_in_range: (f64, f64),
    pub n_checkpoints: usize,
    pub peak_er: f64,
    pub peak_at_acc: f64,
    /// Gaussian noise on `acc_out` in scaled space; 0 places every
    /// checkpoint exactly on `β + bump`.
    pub noise_sigma: f64,
}

impl TrajectorySpec {
    /// Raised-cosine bump centred on `peak_at_acc` with height `peak_er`,
    /// symmetric with half-width equal to the distance to the nearer range
    /// endpoint, and zero outside that support.
    pub fn bump(&self, x: f64) -> f64 {
        let (lo, hi) = self.acc_in_range;
        let half = (self.peak_at_acc - lo).min(hi - self.peak_at_acc);
        let d = (x - self.peak_at_acc).abs();
        if d >= half {
            0.0
        } else {
            self.peak_er * 0.5 * (1.0 + (std::f64::consts::PI * d / half).cos())
        }
    }
}

/// ID accuracy rises through jittered strata of the range; OOD accuracy is
/// β(acc_in) plus the bump.
pub fn gen_trajectory(spec: &TrajectorySpec, run_id: &str, seed: u64) -> Result<TrajectoryRun> {
    let (lo, hi) = spec.acc_in_range;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::Argument(format!("acc_in range ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
    }
    if !(spec.peak_at_acc > lo && spec.peak_at_acc < hi) {
        return Err(Error::Argument(format!("peak_at_acc {} outside ({lo}, {hi})", spec.peak_at_acc)));
    }
    if spec.n_checkpoints == 0 {
        return Err(Error::Argument("need at least one checkpoint".into()));
    }
    let root = CounterRng::new(seed);
    let (jitter, noise) = (root.split(S_CHECKPOINT), root.split(S_NOISE));
    let n = spec.n_checkpoints;
    let width = (hi - lo) / n as f64;
    let checkpoints = (0..n)
        .map(|i| {
            let acc_in = Accuracy::new(lo + width * (i as f64 + jitter.uniform(i as u64)))?;
            let target = spec.fit.predict(acc_in)?.value() + spec.bump(acc_in.value());
            let target = Accuracy::new(target)
                .map_err(|_| Error::Argument(format!("peak_er pushes acc_out to {target}")))?;
            let acc_out = if spec.noise_sigma > 0.0 {
                let x = scale(target, spec.fit.scaling)?;
                unscale(x + spec.noise_sigma * noise.normal(i as u64), spec.fit.scaling)?
            } else {
                target
            };
            Ok(Checkpoint {
                step: i as u64,
                acc_in,
                acc_out,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectoryRun::new(run_id, checkpoints)
}

/// `n_runs` trajectories with seeds derived from `seed`.
pub fn gen_trajectories(spec: &TrajectorySpec, n_runs: usize, seed: u64) -> Result<Vec<TrajectoryRun>> {
    let root = CounterRng::new(seed);
    (0..n_runs)
        .map(|r| gen_trajectory(spec, &format!("run{r}"), root.u64_at(r as u64)))
        .collect()
}
