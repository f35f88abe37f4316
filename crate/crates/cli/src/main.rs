use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use effrob::robustness::StdMode;
use effrob::scaling::ScalingKind;
use effrob::selection::{selection_strategies, SelectionStrategy};
use effrob::zeroshot::{combiners, Combiner};
use effrob::Error;

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "effrob", version, about = "Effective robustness analysis over model evaluation artifacts")]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "EFFROB_THREADS")]
    pub threads: Option<usize>,
    /// Seed for every randomized step [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    /// Also render an SVG plot to this path, where the command has one.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

fn parse_scaling(s: &str) -> Result<ScalingKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_std_mode(s: &str) -> Result<StdMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_combiner(s: &str) -> Result<Arc<dyn Combiner>, String> {
    combiners().get(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Arc<dyn SelectionStrategy>, String> {
    selection_strategies().get(s).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let bad = || format!("`{s}` is not lo:hi");
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(format!("range `{s}` needs lo < hi"));
    }
    Ok((lo, hi))
}

/// Where the baseline fit comes from: a saved fit, or a fit over a testbed.
#[derive(Args, Clone)]
pub struct FitArgs {
    /// Saved fit JSON (from `effrob fit`).
    #[arg(long, conflicts_with = "testbed")]
    pub fit: Option<PathBuf>,
    /// Testbed to fit the baseline on.
    #[arg(long)]
    pub testbed: Option<PathBuf>,
    #[arg(long, value_parser = parse_scaling, default_value = "logit")]
    pub scaling: ScalingKind,
    /// Only records with this tag enter the fit.
    #[arg(long, default_value = "testbed")]
    pub fit_tag: String,
    /// Fit on every record regardless of tags.
    #[arg(long)]
    pub fit_all: bool,
}

#[derive(Args, Clone)]
pub struct TestbedIn {
    /// Testbed file (CSV, or JSON by extension).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Treat a missing n_out as equal to n_in.
    #[arg(long)]
    pub allow_missing_n_out: bool,
}

#[derive(Args, Clone)]
pub struct BinArgs {
    #[arg(long, default_value_t = effrob::robustness::DEFAULT_BINS)]
    pub bins: usize,
    /// ID-accuracy range to bin over, `lo:hi`; defaults to the observed range.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(f64, f64)>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit the baseline trend of a testbed.
    Fit {
        #[command(flatten)]
        input: TestbedIn,
        #[arg(long, value_parser = parse_scaling, default_value = "logit")]
        scaling: ScalingKind,
        /// Fit under every scaling and print the r² table instead.
        #[arg(long)]
        compare_scalings: bool,
        #[arg(long, default_value = "testbed")]
        fit_tag: String,
        #[arg(long)]
        fit_all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective robustness of each testbed model with confidence intervals.
    Er {
        #[command(flatten)]
        input: TestbedIn,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-checkpoint ER of training runs and their binned curve.
    Trajectory {
        /// Trajectory CSV.
        #[arg(long)]
        runs: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the binned curve here.
        #[arg(long)]
        binned_out: Option<PathBuf>,
    },
    /// Bin with the largest mean ER across runs.
    Maxer {
        #[arg(long)]
        runs: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long, value_parser = parse_std_mode, default_value = "max")]
        std_mode: StdMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dominance probabilities from a correctness matrix.
    #[command(group(ArgGroup::new("what").required(true).args(["pair", "matrix", "scatter"])))]
    Dominance {
        /// Correctness matrix (CSV, or bitset by `.rlpm`/`.bin` extension).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Option<Vec<String>>,
        /// All pairs as a heatmap table in ascending accuracy order.
        #[arg(long)]
        matrix: bool,
        /// One row per pair: accuracy difference and dominance probability.
        #[arg(long)]
        scatter: bool,
        /// Export raw P(row right, column wrong) instead of the mirrored matrix.
        #[arg(long)]
        unmirrored: bool,
        /// Models to highlight in the scatter.
        #[arg(long, num_args = 1..)]
        focus: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Examples every pool model gets wrong.
    Hardset {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, num_args = 1..)]
        exclude: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Share of the hard set that a candidate model gets right.
    Coverage {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        candidate: String,
        /// Pool models; defaults to every model but the candidate.
        #[arg(long, num_args = 1..)]
        pool: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint right/wrong distribution of three models.
    Triplet {
        #[arg(long = "in")]
        input: PathBuf,
        models: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a mixture of a low- and a high-accuracy model.
    Mix {
        #[arg(long)]
        low: String,
        #[arg(long)]
        high: String,
        #[arg(long, default_value = "0:1:0.01")]
        alphas: String,
        /// Testbed holding both models' accuracies.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        fit: FitArgs,
        /// Realize each mixture from correctness matrices instead of expectations.
        #[arg(long, requires_all = ["matrix_in", "matrix_out"])]
        sample: bool,
        #[arg(long)]
        matrix_in: Option<PathBuf>,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-shot accuracy through a source-to-target class map.
    Zeroshot {
        #[arg(long)]
        probs: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_parser = parse_combiner, default_value = effrob::zeroshot::DEFAULT_COMBINER)]
        combine: Arc<dyn Combiner>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Write the correctness row as a one-model matrix.
        #[arg(long)]
        correctness_out: Option<PathBuf>,
        #[arg(long, default_value = "zeroshot")]
        model_id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class-balanced subset by difficulty score.
    Select {
        /// CSV with example_id,score,class.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_mode, default_value = "easiest")]
        mode: Arc<dyn SelectionStrategy>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-epoch training sets that drop the easiest examples first.
    Phaseout {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        epochs: usize,
        #[arg(long)]
        final_n: usize,
        /// Keep classes balanced while removing.
        #[arg(long)]
        balanced: bool,
        /// Shape of the size ramp; 1 is linear.
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
        /// Directory for epoch_NNN.txt files.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate synthetic artifacts.
    Synth {
        #[command(subcommand)]
        what: SynthCommand,
    },
    /// Run the full pipeline and write a hashed bundle.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
pub struct SynthFit {
    #[arg(long, value_parser = parse_scaling, default_value = "logit")]
    pub scaling: ScalingKind,
    #[arg(long, default_value_t = 0.9225, allow_negative_numbers = true)]
    pub slope: f64,
    #[arg(long, default_value_t = -0.4896, allow_negative_numbers = true)]
    pub intercept: f64,
}

#[derive(Args, Clone)]
pub struct SynthItems {
    #[arg(long, default_value_t = 20)]
    pub n_models: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_examples: usize,
    /// Expected accuracies of the generated models, spread evenly.
    #[arg(long, value_parser = parse_range, default_value = "0.3:0.9")]
    pub acc_range: (f64, f64),
    /// Per-cell noise on top of the shared difficulty.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Subcommand)]
pub enum SynthCommand {
    /// Testbed whose OOD accuracy follows a fit plus scaled-space noise.
    Testbed {
        #[command(flatten)]
        fit: SynthFit,
        #[arg(long, default_value_t = 100)]
        n_models: usize,
        #[arg(long, value_parser = parse_range, default_value = "0.05:0.98")]
        acc_range: (f64, f64),
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = effrob::synth::DEFAULT_COUNT)]
        n_in: u64,
        #[arg(long, default_value_t = effrob::synth::DEFAULT_COUNT)]
        n_out: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correctness matrix with a shared per-example difficulty.
    Matrix {
        #[command(flatten)]
        items: SynthItems,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shared-difficulty matrix plus one model right at random.
    Outlier {
        #[command(flatten)]
        items: SynthItems,
        #[arg(long, default_value_t = 0.7)]
        outlier_acc: f64,
        #[arg(long, default_value = "outlier")]
        outlier_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Training runs with an ER bump at a chosen ID accuracy.
    Trajectory {
        #[command(flatten)]
        fit: SynthFit,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 200)]
        checkpoints: usize,
        #[arg(long, value_parser = parse_range, default_value = "0.7:0.98")]
        acc_range: (f64, f64),
        #[arg(long, default_value_t = 0.06)]
        peak_er: f64,
        #[arg(long, default_value_t = 0.85)]
        peak_at: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
pub struct ReportArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub testbed: Option<PathBuf>,
    #[arg(long = "matrix")]
    pub matrices: Vec<PathBuf>,
    #[arg(long = "trajectories")]
    pub trajectories: Vec<PathBuf>,
    #[arg(long, value_parser = parse_scaling)]
    pub scaling: Option<ScalingKind>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub fit_tag: Option<String>,
    #[arg(long, conflicts_with = "fit_tag")]
    pub fit_all: bool,
    #[arg(long, value_parser = parse_std_mode)]
    pub std_mode: Option<StdMode>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub no_er_curve: bool,
    #[arg(long)]
    pub no_heatmap: bool,
    #[arg(long)]
    pub no_scatter: bool,
}

/// 2 for bad arguments, 1 for bad or inconsistent data.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::UnknownStrategy { .. } | Error::UnknownModel(_) => 2,
        Error::Stage { source, .. } | Error::File { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
