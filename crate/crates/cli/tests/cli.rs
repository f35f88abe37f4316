use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn effrob(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effrob"))
        .current_dir(dir)
        .env_remove("EFFROB_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = effrob(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Testbed, shared-difficulty matrix with an outlier, and trajectories.
fn fixtures(dir: &Path) {
    ok(dir, &["--seed", "3", "synth", "testbed", "--n-models", "60", "--out", "testbed.csv"]);
    ok(dir, &["--seed", "3", "synth", "outlier", "--n-models", "8", "--n-examples", "4000", "--out", "zoo.csv"]);
    ok(dir, &["--seed", "3", "synth", "trajectory", "--runs", "3", "--checkpoints", "80", "--out", "runs.csv"]);
}

#[test]
fn fit_recovers_the_generating_trend() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let fit: serde_json::Value = serde_json::from_str(&ok(dir.path(), &["fit", "--in", "testbed.csv"])).unwrap();
    assert_eq!(fit["scaling"], "logit");
    assert!((fit["A"].as_f64().unwrap() - 0.9225).abs() < 0.03);
    assert!((fit["B"].as_f64().unwrap() + 0.4896).abs() < 0.05);

    let table = ok(dir.path(), &["--format", "json", "fit", "--in", "testbed.csv", "--compare-scalings"]);
    let rows: serde_json::Value = serde_json::from_str(&table).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn er_table_has_a_row_per_model() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    ok(dir.path(), &["fit", "--in", "testbed.csv", "--out", "fit.json"]);
    let csv = ok(dir.path(), &["er", "--in", "testbed.csv", "--fit", "fit.json"]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("model_id,"));
    assert_eq!(lines.count(), 60);
}

#[test]
fn maxer_finds_the_injected_peak_and_writes_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = ok(
        dir.path(),
        &[
            "--format", "json", "--svg", "curve.svg", "maxer", "--runs", "runs.csv", "--testbed", "testbed.csv",
            "--range", "0.7:0.98",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["std_mode"], "max-over-bins");
    assert!((v[0]["mean"].as_f64().unwrap() - 0.06).abs() < 0.01, "{v}");
    assert!(fs::read_to_string(dir.path().join("curve.svg")).unwrap().contains("</svg>"));
}

#[test]
fn dominance_pair_flags_the_outlier() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = ok(dir.path(), &["--format", "json", "dominance", "--in", "zoo.csv", "--pair", "outlier", "t004"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let p = v[0]["dominance_probability"].as_f64().unwrap();
    assert!(p > 0.1, "{v}");
    ok(dir.path(), &["--svg", "heat.svg", "dominance", "--in", "zoo.csv", "--matrix"]);
    assert!(dir.path().join("heat.svg").exists());
}

#[test]
fn select_and_phaseout_write_example_ids() {
    let dir = tempfile::tempdir().unwrap();
    let mut scores = String::from("example_id,score,class\n");
    for i in 0..40 {
        scores.push_str(&format!("e{i:02},{},{}\n", (i * 7 % 40) as f64 / 40.0, i % 2));
    }
    fs::write(dir.path().join("scores.csv"), scores).unwrap();
    let picked = ok(dir.path(), &["select", "--scores", "scores.csv", "--k", "4", "--mode", "hardest"]);
    assert_eq!(picked.lines().count(), 4);
    ok(
        dir.path(),
        &["phaseout", "--scores", "scores.csv", "--epochs", "3", "--final-n", "10", "--out-dir", "epochs"],
    );
    let last = fs::read_to_string(dir.path().join("epochs/epoch_003.txt")).unwrap();
    assert_eq!(last.lines().count(), 10);
}

#[test]
fn unknown_strategy_exits_2_and_lists_the_choices() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrob(dir.path(), &["fit", "--in", "x.csv", "--scaling", "cubic"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["logit", "probit", "linear"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = effrob(dir.path(), &["dominance", "--in", "zoo.csv", "--pair", "outlier", "nobody"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_data_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "model_id,acc_in,acc_out,n_in,n_out,tags\nm,1.7,0.2,10,10,testbed\n").unwrap();
    let out = effrob(dir.path(), &["fit", "--in", "bad.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv"));
    assert_eq!(code(&effrob(dir.path(), &["fit", "--in", "missing.csv"])), 1);
}

#[test]
fn zero_threads_and_missing_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&effrob(dir.path(), &["--threads", "0", "fit", "--in", "x.csv"])), 2);
    assert_eq!(code(&effrob(dir.path(), &["dominance", "--in", "x.csv"])), 2);
}

#[test]
fn report_manifest_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let run = |threads: &str, out: &str| {
        ok(
            dir.path(),
            &[
                "--threads", threads, "report", "--testbed", "testbed.csv", "--matrix", "zoo.csv", "--trajectories",
                "runs.csv", "--out-dir", out,
            ],
        );
        fs::read(dir.path().join(out).join("manifest.json")).unwrap()
    };
    let one = run("1", "r1");
    let eight = run("8", "r8");
    assert_eq!(one, eight);
    assert_eq!(run("8", "r8b"), eight);
}
