//! Mixed classifiers: take the low model's prediction with probability α,
//! otherwise the high model's.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Accuracy, BitRow, PredictionMatrix};
use crate::error::{Error, Result};
use crate::fit::LinearFit;
use crate::rng::CounterRng;
use crate::robustness::effective_robustness;

/// ID/OOD accuracy pair of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccPair {
    pub acc_in: f64,
    pub acc_out: f64,
}

impl AccPair {
    pub fn new(acc_in: f64, acc_out: f64) -> Self {
        Self { acc_in, acc_out }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    pub low_model: String,
    pub high_model: String,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Argument(format!("alpha {alpha} not in [0, 1]")))
    }
}

/// Coordinatewise `α · low + (1 − α) · high`.
pub fn mix_expected(low: AccPair, high: AccPair, alpha: f64) -> Result<AccPair> {
    check_alpha(alpha)?;
    let mix = |l: f64, h: f64| {
        if alpha == 0.0 {
            h
        } else if alpha == 1.0 {
            l
        } else {
            alpha * l + (1.0 - alpha) * h
        }
    };
    Ok(AccPair {
        acc_in: mix(low.acc_in, high.acc_in),
        acc_out: mix(low.acc_out, high.acc_out),
    })
}

/// Realized correctness row: example `e` takes the low model's bit when
/// `uniform(e) < α`, drawn from the counter generator seeded with `seed`.
pub fn mix_sampled(m: &PredictionMatrix, spec: &MixSpec, seed: u64) -> Result<BitRow> {
    check_alpha(spec.alpha)?;
    let low = m.row_by_id(&spec.low_model)?;
    let high = m.row_by_id(&spec.high_model)?;
    let rng = CounterRng::new(seed);
    Ok(BitRow::from_fn(m.n_examples(), |e| {
        if rng.bernoulli(e as u64, spec.alpha) {
            low.get(e)
        } else {
            high.get(e)
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Convex,
    Concave,
    Linear,
    Mixed,
}

impl Convexity {
    pub fn as_str(self) -> &'static str {
        match self {
            Convexity::Convex => "convex",
            Convexity::Concave => "concave",
            Convexity::Linear => "linear",
            Convexity::Mixed => "mixed",
        }
    }
}

pub const CONVEXITY_GRID: usize = 1000;

/// Sign of the second differences of the raw-space baseline on an evenly
/// spaced grid over `[a, b]`.
pub fn convexity_verdict(fit: &LinearFit, a: f64, b: f64, points: usize) -> Result<Convexity> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo == hi || points < 3 {
        return Ok(Convexity::Linear);
    }
    let ys = (0..points)
        .map(|i| fit.predict_raw(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 64.0 * f64::EPSILON * scale;
    let (mut pos, mut neg) = (false, false);
    for w in ys.windows(3) {
        let d2 = w[2] - 2.0 * w[1] + w[0];
        pos |= d2 > tol;
        neg |= d2 < -tol;
    }
    Ok(match (pos, neg) {
        (true, false) => Convexity::Convex,
        (false, true) => Convexity::Concave,
        (false, false) => Convexity::Linear,
        (true, true) => Convexity::Mixed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixPoint {
    pub alpha: f64,
    pub acc_in: f64,
    pub acc_out: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixSweep {
    pub points: Vec<MixPoint>,
    pub convexity: Convexity,
}

/// Expected-value mixture at each α with its ER under `fit`, plus the
/// convexity verdict of β between the endpoints' ID accuracies.
pub fn mix_sweep_er(fit: &LinearFit, low: AccPair, high: AccPair, alphas: &[f64]) -> Result<MixSweep> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let points = alphas
        .par_iter()
        .map(|&alpha| {
            let p = mix_expected(low, high, alpha)?;
            let er = effective_robustness(fit, Accuracy::new(p.acc_in)?, Accuracy::new(p.acc_out)?)?;
            Ok(MixPoint {
                alpha,
                acc_in: p.acc_in,
                acc_out: p.acc_out,
                rho: er.rho,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let convexity = convexity_verdict(fit, low.acc_in, high.acc_in, CONVEXITY_GRID)?;
    Ok(MixSweep { points, convexity })
}

/// Parse `start:stop:step` into an inclusive grid.
pub fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Argument(format!("alpha grid `{spec}` is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| start + step * i as f64).collect();
    if let Some(last) = grid.last_mut() {
        if (stop - *last).abs() < 1e-9 * step {
            *last = stop;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingKind;

    #[test]
    fn expected_endpoints_and_mean() {
        let (low, high) = (AccPair::new(0.2, 0.15), AccPair::new(0.9, 0.8));
        assert_eq!(mix_expected(low, high, 0.0).unwrap(), high);
        assert_eq!(mix_expected(low, high, 1.0).unwrap(), low);
        let mid = mix_expected(low, high, 0.5).unwrap();
        assert!((mid.acc_in - 0.55).abs() < 1e-15 && (mid.acc_out - 0.475).abs() < 1e-15);
        assert!(mix_expected(low, high, 1.5).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_alpha_grid("0:1:0.01").unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert_eq!(parse_alpha_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_alpha_grid("0:1").is_err());
        assert!(parse_alpha_grid("1:0:0.1").is_err());
    }

    #[test]
    fn identical_endpoints_constant_rho() {
        let fit = LinearFit::from_coefficients(ScalingKind::Logit, 0.8318, -0.4736);
        let p = AccPair::new(0.6, 0.55);
        let sweep = mix_sweep_er(&fit, p, p, &[0.0, 0.3, 1.0]).unwrap();
        let r0 = sweep.points[0].rho;
        assert!(sweep.points.iter().all(|q| q.rho == r0));
        assert_eq!(sweep.convexity, Convexity::Linear);
    }

    #[test]
    fn identity_fit_is_linear() {
        let fit = LinearFit::from_coefficients(ScalingKind::Linear, 0.5, 0.1);
        assert_eq!(convexity_verdict(&fit, 0.1, 0.9, 1000).unwrap(), Convexity::Linear);
    }
}
