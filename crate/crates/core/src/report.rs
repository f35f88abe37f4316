//! End-to-end report: fit, per-model ER, dominance analyses and trajectory
//! curves, written as a CSV/SVG bundle with a hashed manifest.
//!
//! Stages run in order; a failing stage aborts the run, names the stage, and
//! removes whatever the run had already written.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_prediction_matrix, load_testbed, load_trajectories, Format, MatrixFormat, TestbedOptions};
use crate::error::{Error, Result};
use crate::fit::{compare_scalings, fit_pool, fit_trend};
use crate::plot::{plot_er_curve, plot_heatmap, plot_scatter, ErOverlays};
use crate::prediction::{dominance_matrix, hard_example_set, scatter_dominance_vs_gap};
use crate::robustness::{bin_runs, max_er, StdMode, DEFAULT_BINS};
use crate::scaling::ScalingKind;
use crate::tables;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotToggles {
    pub er_curve: bool,
    pub heatmap: bool,
    pub scatter: bool,
}

impl Default for PlotToggles {
    fn default() -> Self {
        Self {
            er_curve: true,
            heatmap: true,
            scatter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub testbed: Option<PathBuf>,
    pub matrices: Vec<PathBuf>,
    pub trajectories: Vec<PathBuf>,
    pub scaling: ScalingKind,
    pub out_dir: PathBuf,
    pub plots: PlotToggles,
    /// Recorded in the manifest; no current stage draws random numbers.
    pub seed: u64,
    /// Records carrying this tag form the fit pool; `None` fits on all.
    pub fit_tag: Option<String>,
    pub std_mode: StdMode,
    pub bins: usize,
    pub level: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            testbed: None,
            matrices: Vec::new(),
            trajectories: Vec::new(),
            scaling: ScalingKind::Logit,
            out_dir: PathBuf::from("report"),
            plots: PlotToggles::default(),
            seed: 0,
            fit_tag: Some("testbed".into()),
            std_mode: StdMode::MaxOverBins,
            bins: DEFAULT_BINS,
            level: 0.95,
        }
    }
}

impl ReportConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    /// Relative input paths are resolved against the config file's directory.
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| e.in_file(path))?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            cfg.testbed.iter_mut().for_each(fix);
            cfg.matrices.iter_mut().for_each(fix);
            cfg.trajectories.iter_mut().for_each(fix);
            fix(&mut cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let testbed = self
            .testbed
            .as_ref()
            .ok_or_else(|| Error::Argument("report needs a testbed".into()))?;
        for p in std::iter::once(testbed).chain(&self.matrices).chain(&self.trajectories) {
            if !p.is_file() {
                return Err(Error::Argument(format!("input {} does not exist", p.display())));
            }
        }
        let mut stems = BTreeSet::new();
        for p in &self.matrices {
            if !stems.insert(matrix_stem(p)) {
                return Err(Error::Argument(format!("two matrices share the file stem of {}", p.display())));
            }
        }
        if self.bins == 0 {
            return Err(Error::Argument("bins must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Argument(format!("level {} not in (0, 1)", self.level)));
        }
        Ok(())
    }
}

fn matrix_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "matrix".into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omission {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scaling: ScalingKind,
    pub seed: u64,
    pub fit_tag: Option<String>,
    pub std_mode: StdMode,
    pub bins: usize,
    pub level: f64,
    /// Input file names with content hashes.
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
    pub omitted: Vec<Omission>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content.as_bytes()).map_err(|e| Error::from(e).in_file(&path))?;
        self.written.push(path);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(content.as_bytes()),
            bytes: content.len() as u64,
        });
        Ok(())
    }

    fn roll_back(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn input_artifact(path: &Path) -> Result<Artifact> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    Ok(Artifact {
        path: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn run_report(config: &ReportConfig) -> Result<ReportBundle> {
    stage("config", || config.validate())?;
    let created_dir = !config.out_dir.exists();
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::Stage {
        stage: "config",
        source: Box::new(Error::from(e).in_file(&config.out_dir)),
    })?;
    let mut w = Writer {
        dir: config.out_dir.clone(),
        created_dir,
        written: Vec::new(),
        artifacts: Vec::new(),
    };
    match run_stages(config, &mut w) {
        Ok(bundle) => Ok(bundle),
        Err(e) => {
            w.roll_back();
            Err(e)
        }
    }
}

fn run_stages(config: &ReportConfig, w: &mut Writer) -> Result<ReportBundle> {
    let mut omitted = Vec::new();
    let mut omit = |stage: &str, reason: &str| {
        omitted.push(Omission {
            stage: stage.into(),
            reason: reason.into(),
        })
    };
    let testbed_path = config.testbed.as_ref().expect("validated");
    let inputs = stage("inputs", || {
        std::iter::once(testbed_path)
            .chain(&config.matrices)
            .chain(&config.trajectories)
            .map(|p| input_artifact(p))
            .collect::<Result<Vec<_>>>()
    })?;

    let (records, fit) = stage("fit", || {
        let records = load_testbed(testbed_path, Format::from_path(testbed_path), TestbedOptions::default())?;
        let pool = fit_pool(&records, config.fit_tag.as_deref());
        if pool.is_empty() {
            return Err(Error::Empty(format!(
                "no testbed records carry the fit tag `{}`",
                config.fit_tag.as_deref().unwrap_or_default()
            )));
        }
        let fit = fit_trend(&pool, config.scaling)?;
        w.put("fit.json", &tables::fit_json(&fit)?)?;
        w.put("r2_table.csv", &tables::r2_table_csv(&compare_scalings(&pool)?)?)?;
        Ok((records, fit))
    })?;

    stage("er", || {
        w.put(
            "er_table.csv",
            &tables::er_table_csv(&records, &fit, config.level, config.fit_tag.as_deref())?,
        )
    })?;

    if config.matrices.is_empty() {
        omit("dominance", "no prediction matrices given");
    }
    stage("dominance", || {
        for path in &config.matrices {
            let stem = matrix_stem(path);
            let m = load_prediction_matrix(path, MatrixFormat::from_path(path))?;
            let dm = dominance_matrix(&m, true)?;
            w.put(&format!("{stem}_dominance.csv"), &tables::dominance_matrix_csv(&dm)?)?;
            if config.plots.heatmap {
                w.put(&format!("{stem}_heatmap.svg"), &plot_heatmap(&dm))?;
            }
            let points = scatter_dominance_vs_gap(&m, &[])?;
            w.put(&format!("{stem}_scatter.csv"), &tables::scatter_csv(&points)?)?;
            if config.plots.scatter {
                w.put(&format!("{stem}_scatter.svg"), &plot_scatter(&points)?)?;
            }
            w.put(&format!("{stem}_hardset.csv"), &tables::hardset_csv(&hard_example_set(&m, &[])?)?)?;
        }
        Ok(())
    })?;
    if !config.matrices.is_empty() {
        if !config.plots.heatmap {
            omit("heatmap", "disabled");
        }
        if !config.plots.scatter {
            omit("scatter", "disabled");
        }
    }

    let runs = stage("trajectory", || {
        let mut runs = Vec::new();
        for p in &config.trajectories {
            runs.extend(load_trajectories(p)?);
        }
        Ok(runs)
    })?;
    if runs.is_empty() {
        omit("trajectory", "no trajectory runs given");
    } else {
        stage("trajectory", || {
            w.put("trajectory_er.csv", &tables::trajectory_er_csv(&runs, &fit)?)?;
            let curve = bin_runs(&runs, &fit, config.bins, None)?;
            w.put("trajectory_binned.csv", &tables::binned_csv(&curve)?)?;
            let best = max_er(&curve, config.std_mode)?;
            w.put("trajectory_maxer.json", &(serde_json::to_string_pretty(&best)? + "\n"))?;
            if config.plots.er_curve {
                let overlays = ErOverlays {
                    identity_fit: Some(fit),
                    zero_line: true,
                    title: None,
                };
                w.put("er_curve.svg", &plot_er_curve(&curve, &overlays)?)?;
            }
            Ok(())
        })?;
        if !config.plots.er_curve {
            omit("er_curve", "disabled");
        }
    }

    let manifest = Manifest {
        scaling: config.scaling,
        seed: config.seed,
        fit_tag: config.fit_tag.clone(),
        std_mode: config.std_mode,
        bins: config.bins,
        level: config.level,
        inputs,
        artifacts: w.artifacts.clone(),
        omitted,
    };
    let manifest_path = w.dir.join(MANIFEST_NAME);
    stage("manifest", || {
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&manifest_path, text).map_err(|e| Error::from(e).in_file(&manifest_path))?;
        w.written.push(manifest_path.clone());
        Ok(())
    })?;
    Ok(ReportBundle { manifest, manifest_path })
}
