//! Class-balanced subset selection by difficulty, and easy-example phase-out
//! schedules. Higher score means easier.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::{Arc, LazyLock};

use serde::Serialize;

use crate::data::DifficultyTable;
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::rng::CounterRng;

/// Picks `m` examples out of one class.
pub trait SelectionStrategy: Named + Send + Sync {
    /// `members` are example indices in ascending order; returns `m` of them.
    fn choose(&self, members: &[usize], scores: &[f64], m: usize, rng: &CounterRng) -> Vec<usize>;
}

pub struct Easiest;
pub struct Hardest;
pub struct Random;

fn by_score(members: &[usize], scores: &[f64], m: usize, descending: bool) -> Vec<usize> {
    let mut v = members.to_vec();
    // Stable sort keeps ascending index order among equal scores.
    v.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    v.truncate(m);
    v
}

impl Named for Easiest {
    fn name(&self) -> &'static str {
        "easiest"
    }
    fn description(&self) -> &'static str {
        "highest scores per class"
    }
}
impl SelectionStrategy for Easiest {
    fn choose(&self, members: &[usize], scores: &[f64], m: usize, _rng: &CounterRng) -> Vec<usize> {
        by_score(members, scores, m, true)
    }
}

impl Named for Hardest {
    fn name(&self) -> &'static str {
        "hardest"
    }
    fn description(&self) -> &'static str {
        "lowest scores per class"
    }
}
impl SelectionStrategy for Hardest {
    fn choose(&self, members: &[usize], scores: &[f64], m: usize, _rng: &CounterRng) -> Vec<usize> {
        by_score(members, scores, m, false)
    }
}

impl Named for Random {
    fn name(&self) -> &'static str {
        "random"
    }
    fn description(&self) -> &'static str {
        "seeded uniform draw per class"
    }
}
impl SelectionStrategy for Random {
    fn choose(&self, members: &[usize], _scores: &[f64], m: usize, rng: &CounterRng) -> Vec<usize> {
        // Sorting by an independent key per example gives a uniform subset.
        let mut keyed: Vec<(u64, usize)> = members.iter().map(|&i| (rng.u64_at(i as u64), i)).collect();
        keyed.sort_unstable();
        keyed.into_iter().take(m).map(|(_, i)| i).collect()
    }
}

static STRATEGIES: LazyLock<Registry<dyn SelectionStrategy>> = LazyLock::new(|| {
    Registry::<dyn SelectionStrategy>::new("selection mode")
        .with(Arc::new(Easiest))
        .with(Arc::new(Hardest))
        .with(Arc::new(Random))
});

pub fn selection_strategies() -> &'static Registry<dyn SelectionStrategy> {
    &STRATEGIES
}

#[derive(Clone)]
pub struct SelectionSpec {
    pub k: usize,
    pub mode: Arc<dyn SelectionStrategy>,
    pub seed: u64,
}

impl SelectionSpec {
    pub fn new(k: usize, mode: &str, seed: u64) -> Result<Self> {
        Ok(Self {
            k,
            mode: selection_strategies().get(mode)?,
            seed,
        })
    }
}

fn members_by_class(table: &DifficultyTable) -> BTreeMap<i64, Vec<usize>> {
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &c) in table.classes().iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    by_class
}

/// `k / classes` examples from every class; returns indices in ascending order.
pub fn select_subset(table: &DifficultyTable, spec: &SelectionSpec) -> Result<Vec<usize>> {
    let by_class = members_by_class(table);
    let classes = by_class.len();
    if classes == 0 {
        return Err(Error::Empty("difficulty table is empty".into()));
    }
    if spec.k < classes || !spec.k.is_multiple_of(classes) {
        return Err(Error::Argument(format!(
            "k = {} must be a positive multiple of the {classes} classes",
            spec.k
        )));
    }
    let per_class = spec.k / classes;
    let root = CounterRng::new(spec.seed);
    let mut out = Vec::with_capacity(spec.k);
    for (&class, members) in &by_class {
        if members.len() < per_class {
            return Err(Error::Argument(format!(
                "class {class} has {} examples, fewer than the {per_class} required",
                members.len()
            )));
        }
        let rng = root.split(class as u64);
        out.extend(spec.mode.choose(members, table.scores(), per_class, &rng));
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseOutSchedule {
    /// One ascending index set per epoch, nested and shrinking.
    pub sets: Vec<Vec<usize>>,
    pub epochs: usize,
    pub final_n: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseOutSpec {
    pub epochs: usize,
    pub final_n: usize,
    pub class_balanced: bool,
    /// Shape of the size ramp; 1 is linear.
    pub exponent: f64,
}

impl PhaseOutSpec {
    pub fn linear(epochs: usize, final_n: usize, class_balanced: bool) -> Self {
        Self {
            epochs,
            final_n,
            class_balanced,
            exponent: 1.0,
        }
    }
}

/// Set sizes per epoch: `N` at epoch 1 easing to `final_n` at the last.
pub fn schedule_sizes(total: usize, spec: &PhaseOutSpec) -> Vec<usize> {
    let drop = (total - spec.final_n) as f64;
    (0..spec.epochs)
        .map(|e| {
            if spec.epochs == 1 {
                return total;
            }
            let t = (e as f64 / (spec.epochs - 1) as f64).powf(spec.exponent);
            (total as f64 - drop * t).round() as usize
        })
        .collect()
}

/// Easiest-first removal order. With class balance, each removal comes from
/// the class with the most remaining examples (lowest label on ties).
fn removal_order(table: &DifficultyTable, class_balanced: bool) -> Vec<usize> {
    let easiest_first = |members: &[usize]| by_score(members, table.scores(), members.len(), true);
    if !class_balanced {
        let all: Vec<usize> = (0..table.len()).collect();
        return easiest_first(&all);
    }
    let queues: Vec<(i64, Vec<usize>)> = members_by_class(table)
        .into_iter()
        .map(|(c, m)| (c, easiest_first(&m)))
        .collect();
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> =
        queues.iter().enumerate().map(|(q, (_, m))| (m.len(), Reverse(q))).collect();
    let mut next = vec![0usize; queues.len()];
    let mut order = Vec::with_capacity(table.len());
    while let Some((remaining, Reverse(q))) = heap.pop() {
        if remaining == 0 {
            break;
        }
        order.push(queues[q].1[next[q]]);
        next[q] += 1;
        heap.push((remaining - 1, Reverse(q)));
    }
    order
}

pub fn phase_out(table: &DifficultyTable, spec: &PhaseOutSpec) -> Result<PhaseOutSchedule> {
    let total = table.len();
    if spec.epochs == 0 {
        return Err(Error::Argument("phase-out needs at least 1 epoch".into()));
    }
    if spec.final_n > total {
        return Err(Error::Argument(format!("final_n = {} exceeds dataset size {total}", spec.final_n)));
    }
    if spec.epochs == 1 && spec.final_n < total {
        return Err(Error::Argument("schedule needs >= 2 epochs to shrink".into()));
    }
    if !(spec.exponent.is_finite() && spec.exponent > 0.0) {
        return Err(Error::Argument(format!("exponent {} must be positive", spec.exponent)));
    }
    let order = removal_order(table, spec.class_balanced);
    let mut rank = vec![0usize; total];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let sets = schedule_sizes(total, spec)
        .into_iter()
        .map(|size| {
            let removed = total - size;
            (0..total).filter(|&i| rank[i] >= removed).collect()
        })
        .collect();
    Ok(PhaseOutSchedule {
        sets,
        epochs: spec.epochs,
        final_n: spec.final_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(scores: &[f64], classes: &[i64]) -> DifficultyTable {
        DifficultyTable::new(
            (0..scores.len()).map(|i| format!("x{i}")).collect(),
            scores.to_vec(),
            classes.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn full_selection_is_identity() {
        let t = table(&[0.3, 0.1, 0.9, 0.5], &[0, 0, 1, 1]);
        for mode in ["easiest", "hardest", "random"] {
            let sel = select_subset(&t, &SelectionSpec::new(4, mode, 3).unwrap()).unwrap();
            assert_eq!(sel, vec![0, 1, 2, 3], "{mode}");
        }
    }

    #[test]
    fn per_class_extremes() {
        let t = table(&[0.3, 0.9, 0.1, 0.5, 0.2, 0.8], &[0, 0, 0, 1, 1, 1]);
        assert_eq!(select_subset(&t, &SelectionSpec::new(2, "easiest", 0).unwrap()).unwrap(), vec![1, 5]);
        assert_eq!(select_subset(&t, &SelectionSpec::new(2, "hardest", 0).unwrap()).unwrap(), vec![2, 4]);
    }

    #[test]
    fn ties_by_index() {
        let t = table(&[0.5, 0.5, 0.5], &[0, 0, 0]);
        assert_eq!(select_subset(&t, &SelectionSpec::new(2, "easiest", 0).unwrap()).unwrap(), vec![0, 1]);
        assert_eq!(select_subset(&t, &SelectionSpec::new(2, "hardest", 0).unwrap()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn selection_errors() {
        let t = table(&[0.3, 0.9, 0.1, 0.5], &[0, 0, 0, 1]);
        let err = select_subset(&t, &SelectionSpec::new(4, "easiest", 0).unwrap()).unwrap_err();
        assert!(err.to_string().contains("class 1"), "{err}");
        assert!(select_subset(&t, &SelectionSpec::new(3, "easiest", 0).unwrap()).is_err());
        assert!(SelectionSpec::new(2, "medium", 0).is_err());
    }

    #[test]
    fn phase_out_examples() {
        let t = table(&[4.0, 3.0, 2.0, 1.0], &[0, 0, 0, 0]);
        let s = phase_out(&t, &PhaseOutSpec::linear(2, 2, false)).unwrap();
        assert_eq!(s.sets, vec![vec![0, 1, 2, 3], vec![2, 3]]);

        let err = phase_out(&t, &PhaseOutSpec::linear(1, 2, false)).unwrap_err();
        assert!(err.to_string().contains("2 epochs"));
        assert_eq!(phase_out(&t, &PhaseOutSpec::linear(1, 4, false)).unwrap().sets.len(), 1);

        let full = phase_out(&t, &PhaseOutSpec::linear(3, 4, true)).unwrap();
        assert!(full.sets.iter().all(|s| s.len() == 4));
        assert!(phase_out(&t, &PhaseOutSpec::linear(3, 5, true)).is_err());
    }

    #[test]
    fn balanced_removal_round_robin() {
        let scores: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let classes: Vec<i64> = (0..12).map(|i| i % 3).collect();
        let t = table(&scores, &classes);
        let s = phase_out(&t, &PhaseOutSpec::linear(5, 3, true)).unwrap();
        for set in &s.sets {
            let mut counts = [0usize; 3];
            set.iter().for_each(|&i| counts[classes[i] as usize] += 1);
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
        }
        // The hardest example of each class survives.
        assert_eq!(s.sets.last().unwrap(), &vec![0, 1, 2]);
    }
}
