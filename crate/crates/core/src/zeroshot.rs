//! Zero-shot evaluation through a class map.
//!
//! A target class's score combines the scores of every source class mapped
//! onto it; the prediction is the highest-scoring target, ties going to the
//! lowest target index. Combiners are [`Combiner`] strategies registered by
//! name in [`combiners()`].

use std::sync::{Arc, LazyLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Accuracy, BitRow, ClassMap};
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

pub trait Combiner: Named + Send + Sync {
    /// Combine the (non-empty) scores of a target's mapped sources.
    fn combine(&self, scores: &mut dyn Iterator<Item = f64>) -> f64;
}

pub struct Max;
pub struct Mean;
pub struct Sum;

impl Named for Max {
    fn name(&self) -> &'static str {
        "max"
    }
}
impl Combiner for Max {
    fn combine(&self, scores: &mut dyn Iterator<Item = f64>) -> f64 {
        scores.fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Named for Mean {
    fn name(&self) -> &'static str {
        "mean"
    }
}
impl Combiner for Mean {
    fn combine(&self, scores: &mut dyn Iterator<Item = f64>) -> f64 {
        let (s, n) = scores.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    }
}

impl Named for Sum {
    fn name(&self) -> &'static str {
        "sum"
    }
}
impl Combiner for Sum {
    fn combine(&self, scores: &mut dyn Iterator<Item = f64>) -> f64 {
        scores.sum()
    }
}

static COMBINERS: LazyLock<Registry<dyn Combiner>> = LazyLock::new(|| {
    Registry::<dyn Combiner>::new("combiner")
        .with(Arc::new(Max))
        .with(Arc::new(Mean))
        .with(Arc::new(Sum))
});

pub fn combiners() -> &'static Registry<dyn Combiner> {
    &COMBINERS
}

pub const DEFAULT_COMBINER: &str = "max";

/// Non-negative per-source scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
}

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empty probability vector".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("score {v} is negative or not finite")));
        }
        Ok(Self { values })
    }

    /// Like [`ProbVector::new`] but also requires the values to sum to 1 within 1e-6.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        let v = Self::new(values)?;
        let s: f64 = v.values.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("probabilities sum to {s}, not 1")));
        }
        Ok(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotPrediction {
    pub target: usize,
    pub scores: Vec<f64>,
}

pub fn zero_shot_predict(probs: &ProbVector, map: &ClassMap, combiner: &dyn Combiner) -> Result<ZeroShotPrediction> {
    if probs.values().len() != map.source_classes().len() {
        return Err(Error::Validation(format!(
            "{} scores for {} source classes",
            probs.values().len(),
            map.source_classes().len()
        )));
    }
    map.check_covered()?;
    let n_targets = map.target_classes().len();
    if n_targets == 0 {
        return Err(Error::Empty("class map has no target classes".into()));
    }
    let scores: Vec<f64> = (0..n_targets)
        .map(|t| combiner.combine(&mut map.sources_of(t).iter().map(|&s| probs.values()[s])))
        .collect();
    let mut target = 0;
    for (t, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[target] {
            target = t;
        }
    }
    Ok(ZeroShotPrediction { target, scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotEval {
    pub accuracy: Accuracy,
    pub correct: u64,
    pub n: u64,
    pub predictions: Vec<usize>,
    pub correctness: BitRow,
}

/// Accuracy of argmax predictions against target-class labels (indices into
/// `map.target_classes()`).
pub fn zero_shot_accuracy(rows: &[ProbVector], labels: &[usize], map: &ClassMap, combiner: &dyn Combiner) -> Result<ZeroShotEval> {
    if rows.is_empty() {
        return Err(Error::Empty("empty batch".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Validation(format!("{} score rows but {} labels", rows.len(), labels.len())));
    }
    if let Some(l) = labels.iter().find(|&&l| l >= map.target_classes().len()) {
        return Err(Error::Validation(format!("label index {l} out of range")));
    }
    let predictions = rows
        .par_iter()
        .map(|p| zero_shot_predict(p, map, combiner).map(|z| z.target))
        .collect::<Result<Vec<_>>>()?;
    let correctness = BitRow::from_fn(rows.len(), |i| predictions[i] == labels[i]);
    let correct = correctness.count_ones();
    Ok(ZeroShotEval {
        accuracy: Accuracy::from_counts(correct, rows.len() as u64)?,
        correct,
        n: rows.len() as u64,
        predictions,
        correctness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn names(n: usize, p: &str) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    fn four_two() -> ClassMap {
        let edges: BTreeSet<_> = [(0, 0), (1, 1), (2, 1), (3, 1)].into_iter().collect();
        ClassMap::new(names(4, "s"), vec!["A".into(), "B".into()], edges).unwrap()
    }

    fn predict(p: &[f64], map: &ClassMap, c: &str) -> usize {
        let pv = ProbVector::new(p.to_vec()).unwrap();
        zero_shot_predict(&pv, map, &*combiners().get(c).unwrap()).unwrap().target
    }

    #[test]
    fn max_and_sum_disagree() {
        let map = four_two();
        let p = [0.4, 0.3, 0.2, 0.1];
        assert_eq!(predict(&p, &map, "max"), 0);
        assert_eq!(predict(&p, &map, "sum"), 1);
        let pv = ProbVector::new(p.to_vec()).unwrap();
        let z = zero_shot_predict(&pv, &map, &Sum).unwrap();
        assert!((z.scores[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn singleton_maps_agree() {
        let map = ClassMap::identity(names(5, "c"));
        let p = [0.1, 0.05, 0.5, 0.3, 0.05];
        for c in ["max", "mean", "sum"] {
            assert_eq!(predict(&p, &map, c), 2);
        }
    }

    #[test]
    fn uniform_ties_go_low() {
        let edges: BTreeSet<_> = [(0, 0), (1, 0), (2, 1), (3, 1), (4, 2), (5, 2)].into_iter().collect();
        let map = ClassMap::new(names(6, "s"), names(3, "t"), edges).unwrap();
        for c in ["max", "mean", "sum"] {
            assert_eq!(predict(&[1.0 / 6.0; 6], &map, c), 0);
        }
    }

    #[test]
    fn errors() {
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.5, -0.1]).is_err());
        assert!(ProbVector::normalized(vec![0.5, 0.1]).is_err());
        let edges: BTreeSet<_> = [(0, 0)].into_iter().collect();
        let uncovered = ClassMap::new(names(2, "s"), names(2, "t"), edges).unwrap();
        let pv = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert!(zero_shot_predict(&pv, &uncovered, &Max).is_err());
        assert!(combiners().get("median").is_err());
    }

    #[test]
    fn batch_accuracy() {
        let map = four_two();
        let rows: Vec<ProbVector> = [[0.4, 0.3, 0.2, 0.1], [0.1, 0.6, 0.2, 0.1], [0.7, 0.1, 0.1, 0.1]]
            .iter()
            .map(|r| ProbVector::new(r.to_vec()).unwrap())
            .collect();
        let labels = [0, 1, 1];
        let eval = zero_shot_accuracy(&rows, &labels, &map, &Max).unwrap();
        assert_eq!(eval.predictions, vec![0, 1, 0]);
        assert_eq!(eval.correctness.to_bools(), vec![true, true, false]);
        assert_eq!(eval.accuracy.value(), 2.0 / 3.0);
        assert!(zero_shot_accuracy(&[], &[], &map, &Max).is_err());
        assert!(zero_shot_accuracy(&rows, &labels[..2], &map, &Max).is_err());
    }
}
