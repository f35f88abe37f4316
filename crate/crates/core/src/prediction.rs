//! Prediction-similarity analytics over correctness matrices.
//!
//! Every pairwise quantity reduces to popcounts over packed rows: the
//! dominance count of a pair is `popcount(low AND NOT high)`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Accuracy, BitRow, PredictionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceResult {
    pub low_model: String,
    pub high_model: String,
    pub mu_low: Accuracy,
    pub mu_high: Accuracy,
    /// Examples where the low model is right and the high model wrong.
    pub count: u64,
    pub n_examples: u64,
    pub probability: f64,
    pub accuracy_difference: f64,
}

/// Order two models as (low, high): by correct count, then by model id.
fn roles(m: &PredictionMatrix, i: usize, j: usize) -> (usize, usize) {
    let key = |x: usize| (m.correct_count(x), m.model_ids()[x].as_str());
    if key(i) <= key(j) {
        (i, j)
    } else {
        (j, i)
    }
}

pub fn dominance_by_index(m: &PredictionMatrix, i: usize, j: usize) -> DominanceResult {
    let (lo, hi) = roles(m, i, j);
    let count = m.row(lo).count_and_not(m.row(hi));
    let n = m.n_examples() as u64;
    let (mu_low, mu_high) = (m.accuracy(lo), m.accuracy(hi));
    DominanceResult {
        low_model: m.model_ids()[lo].clone(),
        high_model: m.model_ids()[hi].clone(),
        mu_low,
        mu_high,
        count,
        n_examples: n,
        probability: count as f64 / n as f64,
        accuracy_difference: mu_high.value() - mu_low.value(),
    }
}

pub fn dominance_probability(m: &PredictionMatrix, i: &str, j: &str) -> Result<DominanceResult> {
    Ok(dominance_by_index(m, m.index_of(i)?, m.index_of(j)?))
}

/// Model indices in ascending accuracy order (ties by model id).
pub fn accuracy_order(m: &PredictionMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.n_models()).collect();
    order.sort_by(|&a, &b| {
        m.correct_count(a)
            .cmp(&m.correct_count(b))
            .then_with(|| m.model_ids()[a].cmp(&m.model_ids()[b]))
    });
    order
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceMatrix {
    /// Model ids in ascending accuracy order; rows and columns follow it.
    pub models: Vec<String>,
    pub accuracies: Vec<f64>,
    /// Row-major `n x n`.
    pub values: Vec<f64>,
    pub mirrored: bool,
}

impl DominanceMatrix {
    pub fn n(&self) -> usize {
        self.models.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n() + c]
    }
}

/// All pairwise dominance probabilities, models sorted by ascending accuracy.
///
/// Mirrored: entry `(r, c)` is the dominance probability of the pair, so the
/// matrix is symmetric with a zero diagonal. Unmirrored: entry `(r, c)` is
/// `P(r correct, c wrong)`, whose upper triangle holds the dominance
/// probabilities. Rows are computed in parallel into fixed slots.
pub fn dominance_matrix(m: &PredictionMatrix, mirrored: bool) -> Result<DominanceMatrix> {
    if m.n_models() < 2 {
        return Err(Error::Argument("dominance matrix needs at least 2 models".into()));
    }
    let order = accuracy_order(m);
    let n = order.len();
    let total = m.n_examples() as f64;
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(r, out)| {
        let rr = m.row(order[r]);
        for (c, slot) in out.iter_mut().enumerate() {
            if c == r {
                continue;
            }
            let (a, b) = if mirrored { (r.min(c), r.max(c)) } else { (r, c) };
            let count = if a == r { rr.count_and_not(m.row(order[b])) } else { m.row(order[a]).count_and_not(rr) };
            *slot = count as f64 / total;
        }
    });
    Ok(DominanceMatrix {
        models: order.iter().map(|&i| m.model_ids()[i].clone()).collect(),
        accuracies: order.iter().map(|&i| m.accuracy(i).value()).collect(),
        values,
        mirrored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub low_model: String,
    pub high_model: String,
    pub accuracy_difference: f64,
    pub probability: f64,
    pub involves_focus: bool,
}

/// One point per unordered pair, in row-major upper-triangle order of the
/// matrix's model order.
pub fn scatter_dominance_vs_gap(m: &PredictionMatrix, focus: &[String]) -> Result<Vec<ScatterPoint>> {
    for f in focus {
        m.index_of(f)?;
    }
    let focus: BTreeSet<&str> = focus.iter().map(String::as_str).collect();
    let n = m.n_models();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = dominance_by_index(m, i, j);
            let involves_focus = focus.contains(d.low_model.as_str()) || focus.contains(d.high_model.as_str());
            ScatterPoint {
                accuracy_difference: d.accuracy_difference,
                probability: d.probability,
                low_model: d.low_model,
                high_model: d.high_model,
                involves_focus,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardSet {
    pub examples: Vec<usize>,
    pub example_ids: Vec<String>,
    pub pool: Vec<String>,
    pub fraction: f64,
}

fn hard_mask(m: &PredictionMatrix, pool: &[usize]) -> BitRow {
    let mut any = BitRow::zeros(m.n_examples());
    for &i in pool {
        any.or_assign(m.row(i));
    }
    any.not()
}

/// Examples that every model in the pool (all models minus `exclude`) gets wrong.
pub fn hard_example_set(m: &PredictionMatrix, exclude: &[String]) -> Result<HardSet> {
    for e in exclude {
        m.index_of(e)?;
    }
    let pool: Vec<usize> = (0..m.n_models())
        .filter(|&i| !exclude.contains(&m.model_ids()[i]))
        .collect();
    hard_set_of(m, &pool)
}

fn hard_set_of(m: &PredictionMatrix, pool: &[usize]) -> Result<HardSet> {
    if pool.is_empty() {
        return Err(Error::Argument("every model is excluded from the pool".into()));
    }
    let mask = hard_mask(m, pool);
    let examples: Vec<usize> = mask.iter_ones().collect();
    Ok(HardSet {
        example_ids: examples.iter().map(|&e| m.example_ids()[e].clone()).collect(),
        fraction: examples.len() as f64 / m.n_examples() as f64,
        examples,
        pool: pool.iter().map(|&i| m.model_ids()[i].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub candidate: String,
    pub hard_set_size: usize,
    pub count: usize,
    /// `None` when the hard set is empty.
    pub fraction: Option<f64>,
    /// Correct hard examples per class label, when labels are present.
    pub per_class: BTreeMap<i64, usize>,
    pub max_per_class: Option<usize>,
}

pub fn unique_coverage(m: &PredictionMatrix, candidate: &str, testbed: &[String]) -> Result<Coverage> {
    let cand = m.index_of(candidate)?;
    if testbed.iter().any(|t| t == candidate) {
        return Err(Error::Argument(format!("candidate `{candidate}` is part of the testbed pool")));
    }
    let pool = testbed.iter().map(|t| m.index_of(t)).collect::<Result<Vec<_>>>()?;
    let hard = hard_set_of(m, &pool)?;
    let row = m.row(cand);
    let hits: Vec<usize> = hard.examples.iter().copied().filter(|&e| row.get(e)).collect();
    let mut per_class = BTreeMap::new();
    if let Some(classes) = m.class_of_example() {
        for &e in &hits {
            *per_class.entry(classes[e]).or_insert(0) += 1;
        }
    }
    Ok(Coverage {
        candidate: candidate.to_string(),
        hard_set_size: hard.examples.len(),
        count: hits.len(),
        fraction: (!hard.examples.is_empty()).then(|| hits.len() as f64 / hard.examples.len() as f64),
        max_per_class: per_class.values().copied().max(),
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripletDistribution {
    pub models: [String; 3],
    /// Index `(c1 << 2) | (c2 << 1) | c3`, where `c = 1` means correct.
    pub counts: [u64; 8],
    pub cells: [f64; 8],
    pub n_examples: u64,
}

impl TripletDistribution {
    pub fn cell(&self, c1: bool, c2: bool, c3: bool) -> f64 {
        self.cells[((c1 as usize) << 2) | ((c2 as usize) << 1) | c3 as usize]
    }

    /// Number of examples on which model `a` is correct and `b` wrong
    /// (positions 0..3), marginalising out the third.
    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        assert!(a < 3 && b < 3 && a != b);
        (0..8)
            .filter(|idx| (idx >> (2 - a)) & 1 == 1 && (idx >> (2 - b)) & 1 == 0)
            .map(|idx| self.counts[idx])
            .sum()
    }

    pub fn marginal_count(&self, a: usize) -> u64 {
        (0..8).filter(|idx| (idx >> (2 - a)) & 1 == 1).map(|idx| self.counts[idx]).sum()
    }
}

pub fn triplet_distribution(m: &PredictionMatrix, i: &str, j: &str, k: &str) -> Result<TripletDistribution> {
    if i == j || j == k || i == k {
        return Err(Error::Argument(format!("triplet needs three distinct models, got {i}, {j}, {k}")));
    }
    let rows = [m.row_by_id(i)?, m.row_by_id(j)?, m.row_by_id(k)?];
    let n = m.n_examples() as u64;
    let mut counts = [0u64; 8];
    let words = rows[0].words().len();
    for w in 0..words {
        let (a, b, c) = (rows[0].words()[w], rows[1].words()[w], rows[2].words()[w]);
        counts[7] += (a & b & c).count_ones() as u64;
        counts[6] += (a & b & !c).count_ones() as u64;
        counts[5] += (a & !b & c).count_ones() as u64;
        counts[4] += (a & !b & !c).count_ones() as u64;
        counts[3] += (!a & b & c).count_ones() as u64;
        counts[2] += (!a & b & !c).count_ones() as u64;
        counts[1] += (!a & !b & c).count_ones() as u64;
    }
    counts[0] = n - counts[1..].iter().sum::<u64>();
    let cells = counts.map(|c| c as f64 / n as f64);
    Ok(TripletDistribution {
        models: [i.to_string(), j.to_string(), k.to_string()],
        counts,
        cells,
        n_examples: n,
    })
}
