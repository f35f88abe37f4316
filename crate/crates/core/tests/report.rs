use std::fs;
use std::path::{Path, PathBuf};

use effrob::data::{save_prediction_matrix, save_testbed, save_trajectories, Format, MatrixFormat};
use effrob::fit::LinearFit;
use effrob::report::{run_report, PlotToggles, ReportConfig, MANIFEST_NAME};
use effrob::synth::{gen_matrix_shared_difficulty, gen_testbed, gen_trajectories, GeneratorSpec, ItemModel, TrajectorySpec};
use effrob::ScalingKind;

fn fit() -> LinearFit {
    LinearFit::from_coefficients(ScalingKind::Logit, 0.8318, -0.4736)
}

struct Inputs {
    testbed: PathBuf,
    matrix: PathBuf,
    runs: PathBuf,
}

fn write_inputs(dir: &Path) -> Inputs {
    let testbed = dir.join("testbed.json");
    save_testbed(&testbed, &gen_testbed(&GeneratorSpec::new(fit(), 30, (0.2, 0.95), 0.05, 1)).unwrap(), Format::Json)
        .unwrap();
    let mut item = ItemModel::new(800, Vec::new(), 0.1);
    item.skills = item.skills_for_accuracy_range(6, 0.4, 0.9);
    let matrix = dir.join("zoo.csv");
    save_prediction_matrix(&matrix, &gen_matrix_shared_difficulty(&item, 1).unwrap(), MatrixFormat::Csv).unwrap();
    let spec = TrajectorySpec {
        fit: fit(),
        acc_in_range: (0.5, 0.9),
        n_checkpoints: 40,
        peak_er: 0.05,
        peak_at_acc: 0.7,
        noise_sigma: 0.01,
    };
    let runs = dir.join("runs.csv");
    save_trajectories(&runs, &gen_trajectories(&spec, 2, 1).unwrap()).unwrap();
    Inputs { testbed, matrix, runs }
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

#[test]
fn full_report_lists_every_artifact_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write_inputs(dir.path());
    let out = dir.path().join("out");
    let cfg = ReportConfig {
        testbed: Some(inp.testbed),
        matrices: vec![inp.matrix],
        trajectories: vec![inp.runs],
        out_dir: out.clone(),
        ..ReportConfig::default()
    };
    run_report(&cfg).unwrap();
    let m = manifest(&out);
    let artifacts = m["artifacts"].as_array().unwrap();
    for a in artifacts {
        let bytes = fs::read(out.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"], effrob::report::sha256_hex(&bytes));
    }
    let names: Vec<_> = artifacts.iter().map(|a| a["path"].as_str().unwrap()).collect();
    for want in ["fit.json", "er_table.csv", "zoo_heatmap.svg", "er_curve.svg", "trajectory_maxer.json"] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
    assert!(m["omitted"].as_array().unwrap().is_empty());
    let inputs: Vec<_> = m["inputs"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(inputs, ["testbed.json", "zoo.csv", "runs.csv"]);
    assert!(!fs::read_to_string(out.join(MANIFEST_NAME)).unwrap().contains(dir.path().to_str().unwrap()));
}

#[test]
fn missing_inputs_and_disabled_plots_are_recorded_as_omissions() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write_inputs(dir.path());
    let out = dir.path().join("out");
    let cfg = ReportConfig {
        testbed: Some(inp.testbed),
        out_dir: out.clone(),
        plots: PlotToggles {
            er_curve: false,
            ..PlotToggles::default()
        },
        ..ReportConfig::default()
    };
    run_report(&cfg).unwrap();
    let stages: Vec<_> = manifest(&out)["omitted"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages, ["dominance", "trajectory"]);
    assert!(out.join("fit.json").exists());
    assert!(!out.join("er_curve.svg").exists());
}

#[test]
fn failing_stage_rolls_back_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write_inputs(dir.path());
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "run_id,step,acc_in,acc_out\nr,0,0.5\n").unwrap();
    let out = dir.path().join("out");
    let cfg = ReportConfig {
        testbed: Some(inp.testbed),
        trajectories: vec![bad],
        out_dir: out.clone(),
        ..ReportConfig::default()
    };
    let err = run_report(&cfg).unwrap_err();
    assert!(err.to_string().contains("trajectory"), "{err}");
    assert!(!out.exists(), "partial report left behind");
}

#[test]
fn rollback_keeps_a_preexisting_directory_and_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write_inputs(dir.path());
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "mine").unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "not,a,trajectory\n").unwrap();
    let cfg = ReportConfig {
        testbed: Some(inp.testbed),
        trajectories: vec![bad],
        out_dir: out.clone(),
        ..ReportConfig::default()
    };
    assert!(run_report(&cfg).is_err());
    assert_eq!(fs::read_to_string(out.join("keep.txt")).unwrap(), "mine");
    assert!(!out.join("fit.json").exists());
}

#[test]
fn config_file_paths_resolve_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let cfg_path = dir.path().join("report.toml");
    fs::write(&cfg_path, "testbed = \"testbed.json\"\nmatrices = [\"zoo.csv\"]\nout_dir = \"r\"\nbins = 20\n").unwrap();
    let cfg = ReportConfig::from_toml_file(&cfg_path).unwrap();
    assert_eq!(cfg.testbed.as_deref(), Some(dir.path().join("testbed.json").as_path()));
    run_report(&cfg).unwrap();
    assert!(dir.path().join("r").join("zoo_dominance.csv").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(ReportConfig::from_toml_str("testbed = \"a.csv\"\nbinz = 3\n").is_err());
}

#[test]
fn missing_testbed_is_an_error_before_anything_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = ReportConfig {
        testbed: Some(dir.path().join("nope.csv")),
        out_dir: out.clone(),
        ..ReportConfig::default()
    };
    assert!(run_report(&cfg).is_err());
    assert!(!out.exists());
}
