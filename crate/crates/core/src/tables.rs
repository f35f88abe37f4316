//! CSV and JSON renderings shared by the command-line tool and the report.

use serde::Serialize;

use crate::data::{TestbedRecord, TrajectoryRun};
use crate::error::Result;
use crate::fit::{LinearFit, ScalingComparison};
use crate::prediction::{DominanceMatrix, HardSet, ScatterPoint};
use crate::robustness::{clopper_pearson, effective_robustness, er_trajectory, BinnedCurve};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Round to 10 significant digits for display.
pub fn sig10(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().unwrap_or(x)
}

#[derive(Serialize)]
struct FitJson {
    scaling: &'static str,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    r_squared: f64,
    n_points: usize,
}

pub fn fit_json(fit: &LinearFit) -> Result<String> {
    let body = FitJson {
        scaling: fit.scaling.as_str(),
        a: sig10(fit.slope),
        b: sig10(fit.intercept),
        r_squared: sig10(fit.r_squared),
        n_points: fit.n_points,
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub fn r2_table_csv(rows: &[ScalingComparison]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scaling", "r_squared", "A", "B", "n_points", "note"])?;
    for r in rows {
        w.write_record([
            r.scaling.as_str().to_string(),
            opt(r.r_squared.map(sig10)),
            opt(r.fit.as_ref().map(|f| sig10(f.slope))),
            opt(r.fit.as_ref().map(|f| sig10(f.intercept))),
            r.fit.as_ref().map(|f| f.n_points.to_string()).unwrap_or_default(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    finish(w)
}

/// Per-model ER with Clopper-Pearson intervals on both accuracies. ER is a
/// fraction; `er_pct` repeats it in percent.
pub fn er_table_csv(records: &[TestbedRecord], fit: &LinearFit, level: f64, fit_tag: Option<&str>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model_id", "in_fit", "acc_in", "acc_out", "baseline", "rho", "er_pct", "acc_in_low", "acc_in_high",
        "acc_out_low", "acc_out_high",
    ])?;
    for r in records {
        let er = effective_robustness(fit, r.acc_in, r.acc_out)?;
        let ci_in = clopper_pearson(r.correct_in(), r.n_in, level)?;
        let ci_out = clopper_pearson(r.correct_out(), r.n_out, level)?;
        let in_fit = fit_tag.is_none_or(|t| r.has_tag(t));
        w.write_record([
            r.model_id.clone(),
            in_fit.to_string(),
            r.acc_in.value().to_string(),
            r.acc_out.value().to_string(),
            er.baseline.value().to_string(),
            er.rho.to_string(),
            (100.0 * er.rho).to_string(),
            ci_in.low.value().to_string(),
            ci_in.high.value().to_string(),
            ci_out.low.value().to_string(),
            ci_out.high.value().to_string(),
        ])?;
    }
    finish(w)
}

pub fn trajectory_er_csv(runs: &[TrajectoryRun], fit: &LinearFit) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run_id", "step", "acc_in", "acc_out", "baseline", "rho"])?;
    for run in runs {
        for (step, er) in er_trajectory(fit, run)? {
            w.write_record([
                run.run_id.clone(),
                step.to_string(),
                er.acc_in.value().to_string(),
                er.acc_out.value().to_string(),
                er.baseline.value().to_string(),
                er.rho.to_string(),
            ])?;
        }
    }
    finish(w)
}

/// One row per bin; empty bins keep blank mean and std.
pub fn binned_csv(curve: &BinnedCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin", "lo", "hi", "count", "mean", "std"])?;
    for (i, b) in curve.bins.iter().enumerate() {
        w.write_record([
            i.to_string(),
            b.lo.to_string(),
            b.hi.to_string(),
            b.count.to_string(),
            opt(b.mean),
            opt(b.std),
        ])?;
    }
    finish(w)
}

pub fn dominance_matrix_csv(dm: &DominanceMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_string()];
    header.extend(dm.models.iter().cloned());
    w.write_record(&header)?;
    for r in 0..dm.n() {
        let mut row = vec![dm.models[r].clone()];
        row.extend((0..dm.n()).map(|c| dm.get(r, c).to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn scatter_csv(points: &[ScatterPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["low_model", "high_model", "accuracy_difference", "dominance_probability", "focus"])?;
    for p in points {
        w.write_record([
            p.low_model.clone(),
            p.high_model.clone(),
            p.accuracy_difference.to_string(),
            p.probability.to_string(),
            p.involves_focus.to_string(),
        ])?;
    }
    finish(w)
}

pub fn hardset_csv(h: &HardSet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "example_id"])?;
    for (i, id) in h.examples.iter().zip(&h.example_ids) {
        w.write_record([i.to_string(), id.clone()])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingKind;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(0.831_812_345_678_9), 0.831_812_345_7);
        assert_eq!(sig10(-0.473_6), -0.473_6);
        assert_eq!(sig10(0.0), 0.0);
        let fit = LinearFit::from_coefficients(ScalingKind::Logit, 0.8318, -0.4736);
        let json: serde_json::Value = serde_json::from_str(&fit_json(&fit).unwrap()).unwrap();
        assert_eq!(json["A"], 0.8318);
        assert_eq!(json["scaling"], "logit");
        assert_eq!(json["n_points"], 2);
    }
}
