//! Effective robustness: the gap between a model's OOD accuracy and the
//! baseline β predicted from its ID accuracy.

mod binning;
mod interval;

pub use binning::{bin_index, bin_runs, max_er, Bin, BinAccumulator, BinStats, BinnedCurve, MaxEr, StdMode, DEFAULT_BINS};
pub use interval::{
    clopper_pearson, clopper_pearson_beta, clopper_pearson_tail_sums, ConfidenceInterval, EXACT_TAIL_MAX_N,
};

use serde::Serialize;

use crate::data::{Accuracy, TrajectoryRun};
use crate::error::{Error, Result};
use crate::fit::{predict_baseline, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ERValue {
    pub rho: f64,
    pub acc_in: Accuracy,
    pub acc_out: Accuracy,
    pub baseline: Accuracy,
}

/// ρ = acc_out − β(acc_in).
pub fn effective_robustness(fit: &LinearFit, acc_in: Accuracy, acc_out: Accuracy) -> Result<ERValue> {
    let baseline = predict_baseline(fit, acc_in)?;
    Ok(ERValue {
        rho: acc_out.value() - baseline.value(),
        acc_in,
        acc_out,
        baseline,
    })
}

pub fn er_trajectory(fit: &LinearFit, run: &TrajectoryRun) -> Result<Vec<(u64, ERValue)>> {
    run.checkpoints()
        .iter()
        .map(|cp| Ok((cp.step, effective_robustness(fit, cp.acc_in, cp.acc_out)?)))
        .collect()
}

/// ER of a model with no accuracy gap, i.e. one sitting on the y = x line.
pub fn identity_line_er(fit: &LinearFit, acc_in: Accuracy) -> Result<f64> {
    Ok(acc_in.value() - predict_baseline(fit, acc_in)?.value())
}

/// ρ as a fraction of the gap between y = x and β at `acc_in`.
pub fn gap_fraction(fit: &LinearFit, acc_in: Accuracy, acc_out: Accuracy) -> Result<f64> {
    let er = effective_robustness(fit, acc_in, acc_out)?;
    let gap = acc_in.value() - er.baseline.value();
    if gap == 0.0 {
        return Err(Error::Argument(format!(
            "zero accuracy gap at acc_in = {}: the baseline meets y = x there",
            acc_in.value()
        )));
    }
    Ok(er.rho / gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Checkpoint;
    use crate::scaling::ScalingKind;

    const CIFAR: (f64, f64) = (0.8318, -0.4736);
    const IMAGENET: (f64, f64) = (0.9225, -0.4896);

    fn fit(p: (f64, f64)) -> LinearFit {
        LinearFit::from_coefficients(ScalingKind::Logit, p.0, p.1)
    }

    fn acc(v: f64) -> Accuracy {
        Accuracy::new(v).unwrap()
    }

    #[test]
    fn on_fit_is_zero() {
        let f = fit(CIFAR);
        let b = f.predict(acc(0.73)).unwrap();
        assert!(effective_robustness(&f, acc(0.73), b).unwrap().rho.abs() < 1e-12);
    }

    #[test]
    fn imagenet_example() {
        // β(0.5) = 1 / (1 + e^0.4896) = 0.379987801960875758...
        let er = effective_robustness(&fit(IMAGENET), acc(0.5), acc(0.4799)).unwrap();
        assert!((er.baseline.value() - 0.379_987_801_960_875_8).abs() < 1e-12);
        assert!((er.rho - 0.1).abs() < 1e-3);
        assert_eq!(er.rho, er.acc_out.value() - er.baseline.value());
    }

    #[test]
    fn below_baseline_negative() {
        assert!(effective_robustness(&fit(CIFAR), acc(0.5), acc(0.3)).unwrap().rho < 0.0);
    }

    #[test]
    fn identity_line() {
        let id = fit((1.0, 0.0));
        for x in [0.1, 0.5, 0.93] {
            assert!(identity_line_er(&id, acc(x)).unwrap().abs() < 1e-15);
        }
        // 0.5 − 0.383764526596641876572 = 0.116235473403358123
        let v = identity_line_er(&fit(CIFAR), acc(0.5)).unwrap();
        assert!((v - 0.116_235_473_403_358_12).abs() < 1e-12);
        let near_one = identity_line_er(&fit(CIFAR), acc(1.0 - 1e-9)).unwrap();
        // 5.1418168702215e-8 at 1 − 1e-9; the gap closes as accuracy → 1.
        assert!((near_one - 5.141_816_870_221_5e-8).abs() < 1e-12);
    }

    #[test]
    fn gap_fractions() {
        let f = fit(CIFAR);
        assert!((gap_fraction(&f, acc(0.5), acc(0.5)).unwrap() - 1.0).abs() < 1e-12);
        let b = f.predict(acc(0.5)).unwrap();
        assert!(gap_fraction(&f, acc(0.5), b).unwrap().abs() < 1e-12);
        // (0.43788 − 0.3837645266) / 0.1162354734 = 0.465567625948...
        let g = gap_fraction(&f, acc(0.5), acc(0.43788)).unwrap();
        assert!((g - 0.465_567_625_948_127_2).abs() < 1e-10, "{g}");
        assert!(gap_fraction(&fit((1.0, 0.0)), acc(0.5), acc(0.5)).is_err());
    }

    #[test]
    fn trajectory_pointwise() {
        let f = fit(IMAGENET);
        let cps: Vec<_> = [0.4, 0.6, 0.8]
            .iter()
            .enumerate()
            .map(|(i, &x)| Checkpoint {
                step: i as u64 * 10,
                acc_in: acc(x),
                acc_out: f.predict(acc(x)).unwrap(),
            })
            .collect();
        let run = TrajectoryRun::new("r", cps).unwrap();
        let ers = er_trajectory(&f, &run).unwrap();
        assert_eq!(ers.iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 10, 20]);
        assert!(ers.iter().all(|(_, e)| e.rho.abs() < 1e-12));

        let single = TrajectoryRun::new("s", vec![run.checkpoints()[0]]).unwrap();
        assert_eq!(er_trajectory(&f, &single).unwrap().len(), 1);
    }
}
