//! Binned ER statistics across runs, and max-ER extraction.
//!
//! Bins are left-closed/right-open over `n_bins` equal-width intervals, with
//! the final bin also closed on the right. Per-bin spread is the population
//! standard deviation of every ER value assigned to the bin.

use serde::{Deserialize, Serialize};

use super::effective_robustness;
use crate::data::TrajectoryRun;
use crate::error::{Error, Result};
use crate::fit::LinearFit;

pub const DEFAULT_BINS: usize = 100;

/// Mergeable per-bin sufficient statistics.
///
/// `sum` is accumulated in insertion order so the reported mean is exactly
/// `sum / count`; the spread uses Welford's running `(mean, m2)` so identical
/// values give an exactly zero deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BinStats {
    pub count: u64,
    pub sum: f64,
    running_mean: f64,
    m2: f64,
}

impl BinStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        let delta = x - self.running_mean;
        self.running_mean += delta / self.count as f64;
        self.m2 += delta * (x - self.running_mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &BinStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.running_mean - self.running_mean;
        self.running_mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
        self.sum += other.sum;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn std(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.m2.max(0.0) / self.count as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// `None` for an empty bin, never 0.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub bin_edges: Vec<f64>,
    pub bins: Vec<Bin>,
    pub n_runs: usize,
}

impl BinnedCurve {
    pub fn non_empty(&self) -> impl Iterator<Item = (usize, &Bin)> {
        self.bins.iter().enumerate().filter(|(_, b)| b.count > 0)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }
}

/// Bin containing `x`, or `None` when outside `[edges[0], edges[last]]`.
pub fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let n = edges.len().checked_sub(1)?;
    if n == 0 || x.is_nan() || x < edges[0] || x > edges[n] {
        return None;
    }
    if x == edges[n] {
        return Some(n - 1);
    }
    Some((edges.partition_point(|e| *e <= x) - 1).min(n - 1))
}

fn make_edges(lo: f64, hi: f64, n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 {
        return Err(Error::Argument("need at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Argument(format!(
            "bin range [{lo}, {hi}] is empty; pass an explicit range"
        )));
    }
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|i| lo + (hi - lo) * (i as f64 / n_bins as f64))
        .collect();
    edges[n_bins] = hi;
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(format!("range [{lo}, {hi}] too narrow for {n_bins} bins")));
    }
    Ok(edges)
}

/// Accumulates `(acc_in, er)` points into fixed bins; partial accumulators
/// over disjoint subsets can be merged.
#[derive(Debug, Clone)]
pub struct BinAccumulator {
    edges: Vec<f64>,
    stats: Vec<BinStats>,
    n_runs: usize,
}

impl BinAccumulator {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        let edges = make_edges(lo, hi, n_bins)?;
        Ok(Self {
            stats: vec![BinStats::default(); n_bins],
            edges,
            n_runs: 0,
        })
    }

    /// Returns false when `acc_in` falls outside the range.
    pub fn push(&mut self, acc_in: f64, er: f64) -> bool {
        match bin_index(&self.edges, acc_in) {
            Some(b) => {
                self.stats[b].push(er);
                true
            }
            None => false,
        }
    }

    pub fn add_run(&mut self, fit: &LinearFit, run: &TrajectoryRun) -> Result<usize> {
        let mut used = 0;
        for cp in run.checkpoints() {
            let er = effective_robustness(fit, cp.acc_in, cp.acc_out)?;
            if self.push(cp.acc_in.value(), er.rho) {
                used += 1;
            }
        }
        self.n_runs += 1;
        Ok(used)
    }

    pub fn merge(&mut self, other: &BinAccumulator) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::Argument("cannot merge accumulators with different bin edges".into()));
        }
        for (a, b) in self.stats.iter_mut().zip(&other.stats) {
            a.merge(b);
        }
        self.n_runs += other.n_runs;
        Ok(())
    }

    pub fn stats(&self) -> &[BinStats] {
        &self.stats
    }

    pub fn finish(self) -> Result<BinnedCurve> {
        if self.stats.iter().all(|s| s.count == 0) {
            return Err(Error::Empty("no checkpoints fall inside the bin range".into()));
        }
        let bins = self
            .stats
            .iter()
            .enumerate()
            .map(|(i, s)| Bin {
                lo: self.edges[i],
                hi: self.edges[i + 1],
                count: s.count,
                mean: s.mean(),
                std: s.std(),
            })
            .collect();
        Ok(BinnedCurve {
            bin_edges: self.edges,
            bins,
            n_runs: self.n_runs,
        })
    }
}

/// Bin every checkpoint's ER by its ID accuracy. `range` defaults to the
/// observed `[min, max]` of `acc_in` over all runs.
pub fn bin_runs(runs: &[TrajectoryRun], fit: &LinearFit, n_bins: usize, range: Option<(f64, f64)>) -> Result<BinnedCurve> {
    if runs.is_empty() {
        return Err(Error::Empty("bin_runs needs at least one run".into()));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let xs = runs.iter().flat_map(|r| r.checkpoints().iter().map(|c| c.acc_in.value()));
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            if lo > hi {
                return Err(Error::Empty("runs contain zero checkpoints".into()));
            }
            (lo, hi)
        }
    };
    let mut acc = BinAccumulator::new(lo, hi, n_bins)?;
    for run in runs {
        acc.add_run(fit, run)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdMode {
    /// Largest per-bin deviation across all non-empty bins.
    #[default]
    #[serde(alias = "max")]
    MaxOverBins,
    /// Deviation of the bin holding the maximum mean ER.
    #[serde(alias = "at-bin")]
    AtMaxBin,
}

impl std::str::FromStr for StdMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "max-over-bins" => Ok(StdMode::MaxOverBins),
            "at-bin" | "at-max-bin" => Ok(StdMode::AtMaxBin),
            other => Err(Error::UnknownStrategy {
                kind: "std mode",
                name: other.to_string(),
                valid: "max|at-bin".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxEr {
    pub bin: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mean: f64,
    pub std: f64,
    pub mode: StdMode,
}

/// Non-empty bin with the largest mean ER (lowest index on ties).
pub fn max_er(curve: &BinnedCurve, mode: StdMode) -> Result<MaxEr> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in curve.non_empty() {
        let m = b.mean.expect("non-empty bin has a mean");
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((i, m));
        }
    }
    let (bin, mean) = best.ok_or_else(|| Error::Empty("all bins are empty".into()))?;
    let std = match mode {
        StdMode::AtMaxBin => curve.bins[bin].std.unwrap_or(0.0),
        StdMode::MaxOverBins => curve
            .non_empty()
            .filter_map(|(_, b)| b.std)
            .fold(0.0, f64::max),
    };
    Ok(MaxEr {
        bin,
        bin_lo: curve.bin_edges[bin],
        bin_hi: curve.bin_edges[bin + 1],
        mean,
        std,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Accuracy, Checkpoint};
    use crate::scaling::ScalingKind;

    fn identity() -> LinearFit {
        LinearFit::from_coefficients(ScalingKind::Logit, 1.0, 0.0)
    }

    fn run(id: &str, pts: &[(f64, f64)]) -> TrajectoryRun {
        let cps = pts
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Checkpoint {
                step: i as u64,
                acc_in: Accuracy::new(a).unwrap(),
                acc_out: Accuracy::new(b).unwrap(),
            })
            .collect();
        TrajectoryRun::new(id, cps).unwrap()
    }

    #[test]
    fn edge_semantics() {
        let edges = [0.0, 0.5, 1.0];
        assert_eq!(bin_index(&edges, 0.0), Some(0));
        assert_eq!(bin_index(&edges, 0.5), Some(1));
        assert_eq!(bin_index(&edges, 1.0), Some(1));
        assert_eq!(bin_index(&edges, 1.0001), None);
        assert_eq!(bin_index(&edges, -0.1), None);
    }

    #[test]
    fn single_bin_populated() {
        let r = run("a", &[(0.501, 0.55), (0.502, 0.56), (0.503, 0.53)]);
        let curve = bin_runs(&[r], &identity(), 100, Some((0.0, 1.0))).unwrap();
        let filled: Vec<_> = curve.non_empty().collect();
        assert_eq!(filled.len(), 1);
        assert_eq!(filled[0].0, 50);
        let expect = ((0.55 - 0.501) + (0.56 - 0.502) + (0.53 - 0.503)) / 3.0;
        assert!((filled[0].1.mean.unwrap() - expect).abs() < 1e-15);
        assert!(curve.bins.iter().filter(|b| b.count == 0).all(|b| b.mean.is_none()));
    }

    #[test]
    fn identical_runs_zero_std() {
        let pts = [(0.2, 0.25), (0.5, 0.58), (0.8, 0.81)];
        let curve = bin_runs(&[run("a", &pts), run("b", &pts)], &identity(), 100, None).unwrap();
        assert_eq!(curve.n_runs, 2);
        for (_, b) in curve.non_empty() {
            assert_eq!(b.count, 2);
            assert_eq!(b.std, Some(0.0));
        }
    }

    #[test]
    fn empty_range_errors() {
        let r = run("a", &[(0.5, 0.5)]);
        assert!(bin_runs(std::slice::from_ref(&r), &identity(), 100, Some((0.7, 0.9))).is_err());
        assert!(bin_runs(&[r], &identity(), 100, None).is_err());
        assert!(bin_runs(&[], &identity(), 100, None).is_err());
    }

    #[test]
    fn std_modes() {
        let mk = |mean: f64, std: f64, count: u64| Bin {
            lo: 0.0,
            hi: 0.0,
            count,
            mean: (count > 0).then_some(mean),
            std: (count > 0).then_some(std),
        };
        let curve = BinnedCurve {
            bin_edges: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            bins: vec![mk(0.01, 0.05, 3), mk(0.04, 0.01, 3), mk(0.0, 0.0, 0), mk(0.02, 0.05, 2)],
            n_runs: 5,
        };
        let hi = max_er(&curve, StdMode::MaxOverBins).unwrap();
        let at = max_er(&curve, StdMode::AtMaxBin).unwrap();
        assert_eq!((hi.bin, at.bin), (1, 1));
        assert_eq!(hi.std, 0.05);
        assert_eq!(at.std, 0.01);

        let single = BinnedCurve {
            bin_edges: vec![0.0, 0.5, 1.0],
            bins: vec![mk(0.0, 0.0, 0), mk(0.03, 0.002, 4)],
            n_runs: 1,
        };
        assert_eq!(max_er(&single, StdMode::AtMaxBin).unwrap().bin, 1);
        assert_eq!(max_er(&single, StdMode::MaxOverBins).unwrap().std, 0.002);

        let empty = BinnedCurve {
            bin_edges: vec![0.0, 1.0],
            bins: vec![mk(0.0, 0.0, 0)],
            n_runs: 0,
        };
        assert!(max_er(&empty, StdMode::AtMaxBin).is_err());
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 997.0 - 0.3).collect();
        let mut whole = BinStats::default();
        xs.iter().for_each(|&x| whole.push(x));
        for split in [1, 250, 999] {
            let (mut a, mut b) = (BinStats::default(), BinStats::default());
            xs[..split].iter().for_each(|&x| a.push(x));
            xs[split..].iter().for_each(|&x| b.push(x));
            let mut ab = a;
            ab.merge(&b);
            let mut ba = b;
            ba.merge(&a);
            for m in [ab, ba] {
                assert_eq!(m.count, whole.count);
                assert!((m.mean().unwrap() - whole.mean().unwrap()).abs() < 1e-12);
                assert!((m.std().unwrap() - whole.std().unwrap()).abs() < 1e-12);
            }
        }
    }
}
