use std::collections::HashMap;
use std::fs;
use std::path::Path;

use effrob::data::classmap::{open, read_labels, read_map_pairs, read_scores};
use effrob::data::difficulty::load_difficulty;
use effrob::data::{
    load_prediction_matrix, load_testbed, load_trajectories, save_prediction_matrix, save_testbed, save_trajectories,
    ClassMap, Format, MatrixFormat, PredictionMatrix, TestbedOptions, TestbedRecord,
};
use effrob::fit::{compare_scalings, fit_pool, fit_trend, LinearFit};
use effrob::mixed::{convexity_verdict, mix_sampled, mix_sweep_er, parse_alpha_grid, AccPair, MixSpec, CONVEXITY_GRID};
use effrob::plot::{plot_er_curve, plot_heatmap, plot_scatter, ErOverlays};
use effrob::prediction::{
    dominance_matrix, dominance_probability, hard_example_set, scatter_dominance_vs_gap, triplet_distribution,
    unique_coverage,
};
use effrob::report::{run_report, ReportConfig};
use effrob::rng::CounterRng;
use effrob::robustness::{bin_runs, clopper_pearson, effective_robustness, max_er, BinnedCurve};
use effrob::selection::{phase_out, select_subset, PhaseOutSpec, SelectionSpec};
use effrob::synth::{gen_matrix_shared_difficulty, gen_robust_outlier, gen_testbed, gen_trajectories, GeneratorSpec, ItemModel, TrajectorySpec};
use effrob::tables;
use effrob::zeroshot::{zero_shot_accuracy, ProbVector};
use effrob::{Accuracy, Error, Result};

use crate::output::{emit, emit_table, table};
use crate::{BinArgs, Cli, Command, FitArgs, ReportArgs, SynthCommand, SynthFit, SynthItems};

fn testbed_options(allow_missing_n_out: bool) -> TestbedOptions {
    TestbedOptions {
        default_n_out_to_n_in: allow_missing_n_out,
    }
}

fn read_records(path: &Path, opts: TestbedOptions) -> Result<Vec<TestbedRecord>> {
    load_testbed(path, Format::from_path(path), opts)
}

fn fit_on(records: &[TestbedRecord], kind: effrob::ScalingKind, tag: Option<&str>) -> Result<LinearFit> {
    let pool = fit_pool(records, tag);
    if pool.is_empty() {
        return Err(Error::Empty(format!(
            "no records carry the fit tag `{}` (use --fit-all to fit on every record)",
            tag.unwrap_or_default()
        )));
    }
    fit_trend(&pool, kind)
}

fn load_fit(args: &FitArgs, fallback: Option<&Path>, opts: TestbedOptions) -> Result<LinearFit> {
    if let Some(p) = &args.fit {
        let text = fs::read_to_string(p).map_err(|e| Error::from(e).in_file(p))?;
        let fit: LinearFit = serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(p))?;
        if !(fit.slope.is_finite() && fit.intercept.is_finite()) {
            return Err(Error::Validation(format!("{}: fit coefficients must be finite", p.display())));
        }
        return Ok(fit);
    }
    let path = args
        .testbed
        .as_deref()
        .or(fallback)
        .ok_or_else(|| Error::Argument("give --fit <json> or --testbed <file>".into()))?;
    let records = read_records(path, opts)?;
    let tag = (!args.fit_all).then_some(args.fit_tag.as_str());
    fit_on(&records, args.scaling, tag)
}

fn load_matrix(path: &Path) -> Result<PredictionMatrix> {
    load_prediction_matrix(path, MatrixFormat::from_path(path))
}

fn curve_svg(cli: &Cli, curve: &BinnedCurve, fit: &LinearFit) -> Result<()> {
    if let Some(p) = &cli.svg {
        let overlays = ErOverlays {
            identity_fit: Some(*fit),
            zero_line: true,
            title: None,
        };
        emit(Some(p), &plot_er_curve(curve, &overlays)?)?;
    }
    Ok(())
}

fn no_svg(cli: &Cli, command: &str) {
    if cli.svg.is_some() {
        eprintln!("warning: `{command}` has no plot; --svg ignored");
    }
}

fn curve_for(runs_path: &Path, fit: &FitArgs, bins: &BinArgs) -> Result<(LinearFit, Vec<effrob::TrajectoryRun>, BinnedCurve)> {
    let runs = load_trajectories(runs_path)?;
    let fit = load_fit(fit, None, TestbedOptions::default())?;
    let curve = bin_runs(&runs, &fit, bins.bins, bins.range)?;
    Ok((fit, runs, curve))
}

pub fn run(cli: &Cli) -> Result<()> {
    let fmt = cli.format;
    match &cli.command {
        Command::Fit {
            input,
            scaling,
            compare_scalings: compare,
            fit_tag,
            fit_all,
            out,
        } => {
            no_svg(cli, "fit");
            let records = read_records(&input.input, testbed_options(input.allow_missing_n_out))?;
            let tag = (!*fit_all).then_some(fit_tag.as_str());
            if *compare {
                let pool = fit_pool(&records, tag);
                emit_table(out.as_deref(), fmt, &tables::r2_table_csv(&compare_scalings(&pool)?)?)
            } else {
                emit(out.as_deref(), &tables::fit_json(&fit_on(&records, *scaling, tag)?)?)
            }
        }
        Command::Er { input, fit, level, out } => {
            no_svg(cli, "er");
            let opts = testbed_options(input.allow_missing_n_out);
            let records = read_records(&input.input, opts)?;
            let f = load_fit(fit, Some(&input.input), opts)?;
            let tag = (!fit.fit_all).then_some(fit.fit_tag.as_str());
            emit_table(out.as_deref(), fmt, &tables::er_table_csv(&records, &f, *level, tag)?)
        }
        Command::Trajectory {
            runs,
            fit,
            bins,
            out,
            binned_out,
        } => {
            let (fit, runs, curve) = curve_for(runs, fit, bins)?;
            emit_table(out.as_deref(), fmt, &tables::trajectory_er_csv(&runs, &fit)?)?;
            if let Some(p) = binned_out {
                emit_table(Some(p), fmt, &tables::binned_csv(&curve)?)?;
            }
            curve_svg(cli, &curve, &fit)
        }
        Command::Maxer {
            runs,
            fit,
            bins,
            std_mode,
            out,
        } => {
            let (fit, _, curve) = curve_for(runs, fit, bins)?;
            let best = max_er(&curve, *std_mode)?;
            let mode = serde_json::to_value(best.mode)?;
            let text = table(
                &["bin", "bin_lo", "bin_hi", "mean", "std", "std_mode", "mean_pct", "std_pct"],
                [vec![
                    best.bin.to_string(),
                    best.bin_lo.to_string(),
                    best.bin_hi.to_string(),
                    best.mean.to_string(),
                    best.std.to_string(),
                    mode.as_str().unwrap_or_default().to_string(),
                    (100.0 * best.mean).to_string(),
                    (100.0 * best.std).to_string(),
                ]],
            )?;
            emit_table(out.as_deref(), fmt, &text)?;
            curve_svg(cli, &curve, &fit)
        }
        Command::Dominance {
            input,
            pair,
            matrix,
            scatter,
            unmirrored,
            focus,
            out,
        } => {
            let m = load_matrix(input)?;
            if let Some(p) = pair {
                no_svg(cli, "dominance --pair");
                let d = dominance_probability(&m, &p[0], &p[1])?;
                let text = table(
                    &[
                        "low_model",
                        "high_model",
                        "mu_low",
                        "mu_high",
                        "count",
                        "n_examples",
                        "dominance_probability",
                        "accuracy_difference",
                    ],
                    [vec![
                        d.low_model,
                        d.high_model,
                        d.mu_low.value().to_string(),
                        d.mu_high.value().to_string(),
                        d.count.to_string(),
                        d.n_examples.to_string(),
                        d.probability.to_string(),
                        d.accuracy_difference.to_string(),
                    ]],
                )?;
                emit_table(out.as_deref(), fmt, &text)
            } else if *matrix {
                let dm = dominance_matrix(&m, !*unmirrored)?;
                emit_table(out.as_deref(), fmt, &tables::dominance_matrix_csv(&dm)?)?;
                if let Some(p) = &cli.svg {
                    emit(Some(p), &plot_heatmap(&dm))?;
                }
                Ok(())
            } else {
                debug_assert!(*scatter);
                let points = scatter_dominance_vs_gap(&m, focus)?;
                emit_table(out.as_deref(), fmt, &tables::scatter_csv(&points)?)?;
                if let Some(p) = &cli.svg {
                    emit(Some(p), &plot_scatter(&points)?)?;
                }
                Ok(())
            }
        }
        Command::Hardset { input, exclude, out } => {
            no_svg(cli, "hardset");
            let hs = hard_example_set(&load_matrix(input)?, exclude)?;
            eprintln!(
                "hard set: {} examples ({:.4}% of the matrix), pool of {} models",
                hs.examples.len(),
                100.0 * hs.fraction,
                hs.pool.len()
            );
            emit_table(out.as_deref(), fmt, &tables::hardset_csv(&hs)?)
        }
        Command::Coverage {
            input,
            candidate,
            pool,
            out,
        } => {
            no_svg(cli, "coverage");
            let m = load_matrix(input)?;
            let pool: Vec<String> = if pool.is_empty() {
                m.model_ids().iter().filter(|id| *id != candidate).cloned().collect()
            } else {
                pool.clone()
            };
            let c = unique_coverage(&m, candidate, &pool)?;
            let per_class = c
                .per_class
                .iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect::<Vec<_>>()
                .join(";");
            let text = table(
                &["candidate", "hard_set_size", "count", "fraction", "max_per_class", "per_class"],
                [vec![
                    c.candidate,
                    c.hard_set_size.to_string(),
                    c.count.to_string(),
                    c.fraction.map(|f| f.to_string()).unwrap_or_default(),
                    c.max_per_class.map(|f| f.to_string()).unwrap_or_default(),
                    per_class,
                ]],
            )?;
            emit_table(out.as_deref(), fmt, &text)
        }
        Command::Triplet { input, models, out } => {
            no_svg(cli, "triplet");
            if models.len() != 3 {
                return Err(Error::Argument(format!("triplet needs 3 models, got {}", models.len())));
            }
            let m = load_matrix(input)?;
            let t = triplet_distribution(&m, &models[0], &models[1], &models[2])?;
            let rows = (0..8).map(|cell| {
                vec![
                    ((cell >> 2) & 1).to_string(),
                    ((cell >> 1) & 1).to_string(),
                    (cell & 1).to_string(),
                    t.counts[cell].to_string(),
                    t.cells[cell].to_string(),
                ]
            });
            let header = [models[0].as_str(), models[1].as_str(), models[2].as_str(), "count", "probability"];
            emit_table(out.as_deref(), fmt, &table(&header, rows)?)
        }
        Command::Mix {
            low,
            high,
            alphas,
            input,
            fit,
            sample,
            matrix_in,
            matrix_out,
            out,
        } => {
            no_svg(cli, "mix");
            run_mix(cli, low, high, alphas, input.as_deref(), fit, *sample, matrix_in.as_deref(), matrix_out.as_deref(), out.as_deref())
        }
        Command::Zeroshot {
            probs,
            map,
            labels,
            combine,
            level,
            correctness_out,
            model_id,
            out,
        } => {
            no_svg(cli, "zeroshot");
            let scores = read_scores(open(probs)?).map_err(|e| e.in_file(probs))?;
            let pairs = read_map_pairs(open(map)?).map_err(|e| e.in_file(map))?;
            let class_map = ClassMap::from_pairs(&scores.source_classes, &pairs)?;
            let label_of: HashMap<String, String> = read_labels(open(labels)?)
                .map_err(|e| e.in_file(labels))?
                .into_iter()
                .collect();
            let targets = scores
                .example_ids
                .iter()
                .map(|id| {
                    let label = label_of
                        .get(id)
                        .ok_or_else(|| Error::Validation(format!("no label for example `{id}`")))?;
                    class_map.target_index(label).ok_or_else(|| {
                        Error::Validation(format!("label `{label}` of example `{id}` is not a target class"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = scores
                .rows
                .iter()
                .map(|r| ProbVector::new(r.clone()))
                .collect::<Result<Vec<_>>>()?;
            let eval = zero_shot_accuracy(&rows, &targets, &class_map, combine.as_ref())?;
            let ci = clopper_pearson(eval.correct, eval.n, *level)?;
            let text = table(
                &["combiner", "correct", "n", "accuracy", "ci_low", "ci_high", "level"],
                [vec![
                    combine.name().to_string(),
                    eval.correct.to_string(),
                    eval.n.to_string(),
                    eval.accuracy.value().to_string(),
                    ci.low.value().to_string(),
                    ci.high.value().to_string(),
                    ci.level.to_string(),
                ]],
            )?;
            emit_table(out.as_deref(), fmt, &text)?;
            if let Some(p) = correctness_out {
                let m = PredictionMatrix::new(vec![model_id.clone()], scores.example_ids.clone(), vec![eval.correctness], None)?;
                save_prediction_matrix(p, &m, MatrixFormat::from_path(p))?;
            }
            Ok(())
        }
        Command::Select { scores, k, mode, out } => {
            no_svg(cli, "select");
            let t = load_difficulty(scores)?;
            let spec = SelectionSpec {
                k: *k,
                mode: mode.clone(),
                seed: cli.seed(),
            };
            let chosen = select_subset(&t, &spec)?;
            emit(out.as_deref(), &id_lines(t.example_ids(), &chosen))
        }
        Command::Phaseout {
            scores,
            epochs,
            final_n,
            balanced,
            exponent,
            out_dir,
        } => {
            no_svg(cli, "phaseout");
            let t = load_difficulty(scores)?;
            let spec = PhaseOutSpec {
                epochs: *epochs,
                final_n: *final_n,
                class_balanced: *balanced,
                exponent: *exponent,
            };
            let schedule = phase_out(&t, &spec)?;
            fs::create_dir_all(out_dir).map_err(|e| Error::from(e).in_file(out_dir))?;
            for (e, set) in schedule.sets.iter().enumerate() {
                emit(Some(&out_dir.join(format!("epoch_{:03}.txt", e + 1))), &id_lines(t.example_ids(), set))?;
            }
            Ok(())
        }
        Command::Synth { what } => {
            no_svg(cli, "synth");
            run_synth(what, cli.seed())
        }
        Command::Report(args) => {
            no_svg(cli, "report");
            let bundle = run_report(&report_config(args, cli.seed)?)?;
            eprintln!(
                "wrote {} artifacts and {}",
                bundle.manifest.artifacts.len(),
                bundle.manifest_path.display()
            );
            Ok(())
        }
    }
}

fn id_lines(ids: &[String], indices: &[usize]) -> String {
    let mut s = String::new();
    for &i in indices {
        s.push_str(&ids[i]);
        s.push('\n');
    }
    s
}

fn pair_of(records: &[TestbedRecord], id: &str) -> Result<AccPair> {
    records
        .iter()
        .find(|r| r.model_id == id)
        .map(|r| AccPair::new(r.acc_in.value(), r.acc_out.value()))
        .ok_or_else(|| Error::UnknownModel(id.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn run_mix(
    cli: &Cli,
    low: &str,
    high: &str,
    alphas: &str,
    input: Option<&Path>,
    fit: &FitArgs,
    sample: bool,
    matrix_in: Option<&Path>,
    matrix_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let grid = parse_alpha_grid(alphas)?;
    let f = load_fit(fit, input, TestbedOptions::default())?;
    let header = ["alpha", "acc_in", "acc_out", "rho", "convexity_verdict"];
    let text = if !sample {
        let path = input.ok_or_else(|| Error::Argument("give --in <testbed> with the two models".into()))?;
        let records = read_records(path, TestbedOptions::default())?;
        let sweep = mix_sweep_er(&f, pair_of(&records, low)?, pair_of(&records, high)?, &grid)?;
        let verdict = sweep.convexity.as_str();
        table(
            &header,
            sweep.points.iter().map(|p| {
                vec![
                    p.alpha.to_string(),
                    p.acc_in.to_string(),
                    p.acc_out.to_string(),
                    p.rho.to_string(),
                    verdict.to_string(),
                ]
            }),
        )?
    } else {
        let (mi, mo) = (
            load_matrix(matrix_in.expect("required by clap"))?,
            load_matrix(matrix_out.expect("required by clap"))?,
        );
        let acc = |m: &PredictionMatrix, id: &str| -> Result<f64> { Ok(m.accuracy(m.index_of(id)?).value()) };
        let verdict = convexity_verdict(&f, acc(&mi, low)?, acc(&mi, high)?, CONVEXITY_GRID)?;
        let seeds = CounterRng::new(cli.seed());
        let mut rows = Vec::with_capacity(grid.len());
        for (i, &alpha) in grid.iter().enumerate() {
            let spec = MixSpec {
                low_model: low.to_string(),
                high_model: high.to_string(),
                alpha,
            };
            let row_in = mix_sampled(&mi, &spec, seeds.u64_at(2 * i as u64))?;
            let row_out = mix_sampled(&mo, &spec, seeds.u64_at(2 * i as u64 + 1))?;
            let a_in = Accuracy::from_counts(row_in.count_ones(), row_in.len() as u64)?;
            let a_out = Accuracy::from_counts(row_out.count_ones(), row_out.len() as u64)?;
            let er = effective_robustness(&f, a_in, a_out)?;
            rows.push(vec![
                alpha.to_string(),
                a_in.value().to_string(),
                a_out.value().to_string(),
                er.rho.to_string(),
                verdict.as_str().to_string(),
            ]);
        }
        table(&header, rows)?
    };
    emit_table(out, cli.format, &text)
}

fn synth_fit(f: &SynthFit) -> LinearFit {
    LinearFit::from_coefficients(f.scaling, f.slope, f.intercept)
}

fn item_model(items: &SynthItems) -> ItemModel {
    let mut item = ItemModel::new(items.n_examples, Vec::new(), items.noise);
    item.skills = item.skills_for_accuracy_range(items.n_models, items.acc_range.0, items.acc_range.1);
    item
}

fn run_synth(what: &SynthCommand, seed: u64) -> Result<()> {
    match what {
        SynthCommand::Testbed {
            fit,
            n_models,
            acc_range,
            sigma,
            n_in,
            n_out,
            out,
        } => {
            let spec = GeneratorSpec {
                n_in: *n_in,
                n_out: *n_out,
                ..GeneratorSpec::new(synth_fit(fit), *n_models, *acc_range, *sigma, seed)
            };
            save_testbed(out, &gen_testbed(&spec)?, Format::from_path(out))
        }
        SynthCommand::Matrix { items, out } => {
            let m = gen_matrix_shared_difficulty(&item_model(items), seed)?;
            save_prediction_matrix(out, &m, MatrixFormat::from_path(out))
        }
        SynthCommand::Outlier {
            items,
            outlier_acc,
            outlier_id,
            out,
        } => {
            let item = item_model(items);
            let m = gen_matrix_shared_difficulty(&item, seed)?;
            let m = m.with_row(outlier_id.clone(), gen_robust_outlier(&item, *outlier_acc, seed)?)?;
            save_prediction_matrix(out, &m, MatrixFormat::from_path(out))
        }
        SynthCommand::Trajectory {
            fit,
            runs,
            checkpoints,
            acc_range,
            peak_er,
            peak_at,
            noise,
            out,
        } => {
            let spec = TrajectorySpec {
                fit: synth_fit(fit),
                acc_in_range: *acc_range,
                n_checkpoints: *checkpoints,
                peak_er: *peak_er,
                peak_at_acc: *peak_at,
                noise_sigma: *noise,
            };
            save_trajectories(out, &gen_trajectories(&spec, *runs, seed)?)
        }
    }
}

fn report_config(args: &ReportArgs, seed: Option<u64>) -> Result<ReportConfig> {
    let mut cfg = match &args.config {
        Some(p) => ReportConfig::from_toml_file(p)?,
        None => ReportConfig::default(),
    };
    if let Some(t) = &args.testbed {
        cfg.testbed = Some(t.clone());
    }
    if !args.matrices.is_empty() {
        cfg.matrices = args.matrices.clone();
    }
    if !args.trajectories.is_empty() {
        cfg.trajectories = args.trajectories.clone();
    }
    if let Some(s) = args.scaling {
        cfg.scaling = s;
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = &args.fit_tag {
        cfg.fit_tag = Some(t.clone());
    }
    if args.fit_all {
        cfg.fit_tag = None;
    }
    if let Some(m) = args.std_mode {
        cfg.std_mode = m;
    }
    if let Some(b) = args.bins {
        cfg.bins = b;
    }
    cfg.plots.er_curve &= !args.no_er_curve;
    cfg.plots.heatmap &= !args.no_heatmap;
    cfg.plots.scatter &= !args.no_scatter;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}
