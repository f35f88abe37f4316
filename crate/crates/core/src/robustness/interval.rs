//! Exact (Clopper-Pearson) binomial confidence intervals.
//!
//! For `n <= EXACT_TAIL_MAX_N` the bounds are found by bisection on binomial
//! tail sums; above that by bisection on the regularized incomplete beta
//! function, using `P(X >= k | p) = I_p(k, n - k + 1)`.

use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::data::Accuracy;
use crate::error::{Error, Result};

pub const EXACT_TAIL_MAX_N: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub low: Accuracy,
    pub high: Accuracy,
    pub level: f64,
}

fn validate(k: u64, n: u64, level: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("clopper_pearson needs n >= 1".into()));
    }
    if k > n {
        return Err(Error::Argument(format!("k = {k} exceeds n = {n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("confidence level {level} not in (0, 1)")));
    }
    Ok(())
}

pub fn clopper_pearson(k: u64, n: u64, level: f64) -> Result<ConfidenceInterval> {
    if n <= EXACT_TAIL_MAX_N {
        clopper_pearson_tail_sums(k, n, level)
    } else {
        clopper_pearson_beta(k, n, level)
    }
}

/// Bisection for the root of a monotone function on [0, 1].
fn bisect(mut f: impl FnMut(f64) -> f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln C(n, i)` for every `i` in `0..=n`.
fn ln_binomials(n: u64) -> Vec<f64> {
    let ln_n = ln_gamma(n as f64 + 1.0);
    (0..=n)
        .map(|i| ln_n - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0))
        .collect()
}

/// Σ_{i in range} C(n, i) pⁱ (1 − p)ⁿ⁻ⁱ, summed in log space.
fn tail(ln_c: &[f64], range: std::ops::RangeInclusive<usize>, p: f64) -> f64 {
    let n = ln_c.len() - 1;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let terms: Vec<f64> = range
        .map(|i| ln_c[i] + i as f64 * lp + (n - i) as f64 * lq)
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    m.exp() * terms.iter().map(|t| (t - m).exp()).sum::<f64>()
}

pub fn clopper_pearson_tail_sums(k: u64, n: u64, level: f64) -> Result<ConfidenceInterval> {
    validate(k, n, level)?;
    let alpha = 1.0 - level;
    let ln_c = ln_binomials(n);
    let (k, n) = (k as usize, n as usize);
    let low = if k == 0 {
        0.0
    } else {
        // P(X >= k | p) grows with p.
        bisect(|p| tail(&ln_c, k..=n, p) - alpha / 2.0, true)
    };
    let high = if k == n {
        1.0
    } else {
        // P(X <= k | p) shrinks with p.
        bisect(|p| tail(&ln_c, 0..=k, p) - alpha / 2.0, false)
    };
    finish(low, high, level)
}

pub fn clopper_pearson_beta(k: u64, n: u64, level: f64) -> Result<ConfidenceInterval> {
    validate(k, n, level)?;
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let low = if k == 0 {
        0.0
    } else {
        bisect(|p| beta_reg(kf, nf - kf + 1.0, p) - alpha / 2.0, true)
    };
    let high = if k == n {
        1.0
    } else {
        bisect(|p| beta_reg(kf + 1.0, nf - kf, p) - (1.0 - alpha / 2.0), true)
    };
    finish(low, high, level)
}

fn finish(low: f64, high: f64, level: f64) -> Result<ConfidenceInterval> {
    Ok(ConfidenceInterval {
        low: Accuracy::new(low.clamp(0.0, 1.0))?,
        high: Accuracy::new(high.clamp(0.0, 1.0))?,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries() {
        let ci = clopper_pearson(0, 10, 0.95).unwrap();
        assert_eq!(ci.low.value(), 0.0);
        // 1 − 0.025^(1/10)
        assert!((ci.high.value() - 0.308_497_107_818_760_8).abs() < 1e-10);
        let ci = clopper_pearson(10, 10, 0.95).unwrap();
        assert_eq!(ci.high.value(), 1.0);
        assert!((ci.low.value() - 0.691_502_892_181_239_2).abs() < 1e-10);
    }

    #[test]
    fn fifty_of_hundred() {
        let ci = clopper_pearson(50, 100, 0.95).unwrap();
        assert!((ci.low.value() - 0.398_321_129_503_301_06).abs() < 1e-9);
        assert!((ci.high.value() - 0.601_678_870_496_698_9).abs() < 1e-9);
    }

    #[test]
    fn invalid_arguments() {
        assert!(clopper_pearson(1, 0, 0.95).is_err());
        assert!(clopper_pearson(5, 4, 0.95).is_err());
        assert!(clopper_pearson(1, 4, 1.0).is_err());
        assert!(clopper_pearson(1, 4, 0.0).is_err());
    }

    #[test]
    fn routes_agree_at_crossover() {
        let n = EXACT_TAIL_MAX_N;
        for k in [0, 1, 17, 2_500, 5_000, 9_000, 9_999, 10_000] {
            let a = clopper_pearson_tail_sums(k, n, 0.95).unwrap();
            let b = clopper_pearson_beta(k, n, 0.95).unwrap();
            assert!((a.low.value() - b.low.value()).abs() < 1e-8, "k={k} low");
            assert!((a.high.value() - b.high.value()).abs() < 1e-8, "k={k} high");
        }
    }

    #[test]
    fn large_n_uses_beta_route() {
        let ci = clopper_pearson(45_000, 50_000, 0.95).unwrap();
        assert!(ci.low.value() < 0.9 && ci.high.value() > 0.9);
        assert!(ci.high.value() - ci.low.value() < 0.01);
    }
}
