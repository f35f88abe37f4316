//! Least-squares trend fits in scaled accuracy space and the baseline β.
//!
//! The fit regresses `scale(acc_out)` on `scale(acc_in)` by ordinary least
//! squares (vertical residuals only). Records are not weighted by their
//! example counts.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Accuracy, TestbedRecord};
use crate::error::{Error, Result};
use crate::scaling::{scale, unscale, ScalingKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub scaling: ScalingKind,
    #[serde(rename = "A")]
    pub slope: f64,
    #[serde(rename = "B")]
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LinearFit {
    /// A fit with given coefficients, e.g. published values. `r_squared` is
    /// set to 1 and `n_points` to 2 since no data backs it.
    pub fn from_coefficients(scaling: ScalingKind, slope: f64, intercept: f64) -> Self {
        Self {
            scaling,
            slope,
            intercept,
            r_squared: 1.0,
            n_points: 2,
        }
    }

    /// β(acc_in) = unscale(A · scale(acc_in) + B).
    pub fn predict(&self, acc_in: Accuracy) -> Result<Accuracy> {
        predict_baseline(self, acc_in)
    }

    /// β evaluated on a raw value, without constructing an [`Accuracy`].
    /// Panics if `x` is outside `[0, 1]`.
    pub(crate) fn predict_raw(&self, x: f64) -> Result<f64> {
        Ok(predict_baseline(self, Accuracy::new(x).expect("x in [0, 1]"))?.value())
    }
}

pub fn predict_baseline(fit: &LinearFit, acc_in: Accuracy) -> Result<Accuracy> {
    let x = scale(acc_in, fit.scaling)?;
    unscale(fit.slope * x + fit.intercept, fit.scaling)
}

/// OLS over `(x, y)` pairs already in scaled space.
///
/// Points are sorted before accumulation so the result is bit-identical under
/// any permutation of the input.
pub fn fit_points(points: &[(f64, f64)], scaling: ScalingKind) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateFit("non-finite scaled accuracy".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all acc_in values are identical; slope undefined".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        scaling,
        slope,
        intercept,
        r_squared,
        n_points: pts.len(),
    })
}

pub fn fit_trend(records: &[TestbedRecord], kind: ScalingKind) -> Result<LinearFit> {
    let points = records
        .iter()
        .map(|r| Ok((scale(r.acc_in, kind)?, scale(r.acc_out, kind)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_points(&points, kind)
}

/// Records that define the trend: those tagged `tag`, or all when `None`.
pub fn fit_pool(records: &[TestbedRecord], tag: Option<&str>) -> Vec<TestbedRecord> {
    records
        .iter()
        .filter(|r| tag.is_none_or(|t| r.has_tag(t)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingComparison {
    pub scaling: ScalingKind,
    /// `None` when the scaling cannot be applied to the data.
    pub r_squared: Option<f64>,
    pub fit: Option<LinearFit>,
    pub note: Option<String>,
}

/// Fit under every scaling and rank by r² (descending, ties by
/// linear < probit < logit). Inapplicable scalings sort last.
pub fn compare_scalings(records: &[TestbedRecord]) -> Result<Vec<ScalingComparison>> {
    let mut rows = Vec::with_capacity(ScalingKind::ALL.len());
    for kind in ScalingKind::ALL {
        match fit_trend(records, kind) {
            Ok(fit) => rows.push(ScalingComparison {
                scaling: kind,
                r_squared: Some(fit.r_squared),
                fit: Some(fit),
                note: None,
            }),
            Err(Error::Domain { value, .. }) => rows.push(ScalingComparison {
                scaling: kind,
                r_squared: None,
                fit: None,
                note: Some(format!("inapplicable: accuracy {value} on the boundary")),
            }),
            Err(e) => return Err(e),
        }
    }
    rows.sort_by(|a, b| match (a.r_squared, b.r_squared) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.scaling.cmp(&b.scaling)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.scaling.cmp(&b.scaling),
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn rec(id: &str, a: f64, b: f64) -> TestbedRecord {
        TestbedRecord {
            model_id: id.into(),
            acc_in: Accuracy::new(a).unwrap(),
            acc_out: Accuracy::new(b).unwrap(),
            n_in: 10_000,
            n_out: 10_000,
            tags: BTreeSet::from(["testbed".to_string()]),
        }
    }

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn exact_collinear_logit() {
        let recs: Vec<_> = [-1.0f64, 0.3, 1.5]
            .iter()
            .enumerate()
            .map(|(i, &x)| rec(&format!("m{i}"), sigmoid(x), sigmoid(2.0 * x - 1.0)))
            .collect();
        let fit = fit_trend(&recs, ScalingKind::Logit).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        assert!((fit.intercept + 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert_eq!(fit.n_points, 3);
    }

    #[test]
    fn two_points_perfect() {
        let fit = fit_trend(&[rec("a", 0.3, 0.2), rec("b", 0.9, 0.7)], ScalingKind::Logit).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_trend(&[rec("a", 0.5, 0.2), rec("b", 0.5, 0.7)], ScalingKind::Logit),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_trend(&[rec("a", 0.5, 0.2)], ScalingKind::Logit).is_err());
        assert!(matches!(
            fit_trend(&[rec("a", 0.0, 0.2), rec("b", 0.5, 0.7)], ScalingKind::Logit),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn identity_fit_predicts_identity() {
        let fit = LinearFit::from_coefficients(ScalingKind::Logit, 1.0, 0.0);
        let b = predict_baseline(&fit, Accuracy::new(0.7).unwrap()).unwrap();
        assert!((b.value() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn comparison_exact_linear_data() {
        let recs: Vec<_> = (1..10)
            .map(|i| {
                let a = i as f64 / 10.0;
                rec(&format!("m{i}"), a, 0.8 * a + 0.05)
            })
            .collect();
        let rows = compare_scalings(&recs).unwrap();
        assert_eq!(rows[0].scaling, ScalingKind::Linear);
        assert!((rows[0].r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_marks_boundary_inapplicable() {
        let recs = vec![rec("a", 0.2, 0.1), rec("b", 0.6, 0.5), rec("c", 1.0, 0.9)];
        let rows = compare_scalings(&recs).unwrap();
        assert_eq!(rows[0].scaling, ScalingKind::Linear);
        assert!(rows[0].r_squared.is_some());
        assert_eq!(rows[1].scaling, ScalingKind::Probit);
        assert!(rows[1].r_squared.is_none());
        assert!(rows[2].r_squared.is_none());
    }

    #[test]
    fn pool_filters_by_tag() {
        let mut other = rec("x", 0.5, 0.5);
        other.tags.clear();
        let recs = vec![rec("a", 0.2, 0.1), other];
        assert_eq!(fit_pool(&recs, Some("testbed")).len(), 1);
        assert_eq!(fit_pool(&recs, None).len(), 2);
    }
}
