//! generate / train / eval / reproduce implementations.

use std::path::{Path, PathBuf};

use serde_json::json;

use super::presets::{parse_generator, parse_model, parse_task, PathVariant};
use super::report::{history_csv, metrics_csv, trace_csv, write_text};
use super::{CmdError, EvalArgs, GenerateArgs, ReproduceArgs, TrainArgs, EXIT_OK};
use crate::tasks::{
    generate_dataset, read_dataset, scale_sample, split_seed, spot_check_targets, write_dataset,
    DatasetSpec, Split, TaskKind, TaskSample,
};
use crate::train::{
    evaluate, spearman, train, Checkpoint, ControllerKind, EvalOptions, EvalReport, Model,
    ModelSpec, TrainConfig,
};

/// Bump when the dataset record layout changes.
const DATASET_FORMAT_VERSION: u32 = 1;

fn dataset_spec_from(args: &GenerateArgs, count: usize, seed: u64) -> Result<DatasetSpec, CmdError> {
    let spec = DatasetSpec {
        task: parse_task(&args.task)?,
        generator: parse_generator(&args.generator)?,
        n_min: args.n_min,
        n_max: args.n_max,
        weighted: args.weighted,
        weight_min: args.weight_min,
        weight_max: args.weight_max,
        count,
        master_seed: seed,
    };
    spec.validate().map_err(|e| CmdError::usage(e.to_string()))?;
    Ok(spec)
}

pub fn generate(args: &GenerateArgs) -> Result<i32, CmdError> {
    let val_count = args.val_count.unwrap_or((args.count / 4).max(1));
    let test_count = args.test_count.unwrap_or((args.count / 4).max(1));
    std::fs::create_dir_all(&args.out)?;

    let mut manifest_splits = serde_json::Map::new();
    for (split, count) in [
        (Split::Train, args.count),
        (Split::Val, val_count),
        (Split::Test, test_count),
    ] {
        let seed = split_seed(args.seed, split);
        let spec = dataset_spec_from(args, count, seed)?;
        let samples = generate_dataset(&spec)?;
        let path = args.out.join(format!("{}.jsonl", split.name()));
        write_dataset(&samples, &path)?;
        println!("wrote {} samples to {}", samples.len(), path.display());
        manifest_splits.insert(
            split.name().to_string(),
            json!({"count": count, "seed": seed, "file": format!("{}.jsonl", split.name())}),
        );
    }

    let spec_for_manifest = dataset_spec_from(args, args.count, args.seed)?;
    let manifest = json!({
        "format_version": DATASET_FORMAT_VERSION,
        "tool": format!("scalegnn {}", env!("CARGO_PKG_VERSION")),
        "dataset": spec_for_manifest,
        "master_seed": args.seed,
        "splits": manifest_splits,
        "oracles": {
            "shortest_path": "dijkstra (binary heap)",
            "components": "union-find",
            "tsp": "held-karp <= 16 points, 2-opt beyond",
            "physics": "elastic equal-mass transfer",
            "navigation": "bfs over passable cells",
        },
    });
    write_text(
        &args.out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(EXIT_OK)
}

fn model_display_name(spec: &ModelSpec) -> String {
    let controller = match spec.controller {
        ControllerKind::Iter => "iter",
        ControllerKind::IterNodewise => "iter-nodewise",
        ControllerKind::Act => "act",
        ControllerKind::Stacked { .. } => "stacked",
        ControllerKind::Shared { .. } => "shared",
    };
    let homo = if spec.homogeneous || spec.core_only_homogeneous {
        "homo-"
    } else {
        ""
    };
    format!("{controller}-{homo}{}", spec.core.name())
}

pub fn train_cmd(args: &TrainArgs) -> Result<i32, CmdError> {
    if let Some(config_path) = &args.config {
        let cfg = super::config::ExperimentConfig::load(config_path)?;
        return run_experiment(&cfg);
    }
    let data = args
        .data
        .as_ref()
        .ok_or_else(|| CmdError::usage("either --config or --data is required"))?;
    let train_set = load_split(data, "train")?;
    let val_set = load_split(data, "val")?;
    let task = train_set
        .first()
        .map(|s| s.task)
        .ok_or_else(|| CmdError::data("empty training dataset"))?;

    let variant = PathVariant::parse(&args.path_variant)?;
    let spec = parse_model(&args.model, task, variant, args.hidden)?;
    let model = Model::new(spec);
    let cfg = TrainConfig::desk(task, args.epochs, args.seed);
    run_training(&model, &train_set, &val_set, &cfg, &args.out, &args.model)
}

fn run_training(
    model: &Model,
    train_set: &[TaskSample],
    val_set: &[TaskSample],
    cfg: &TrainConfig,
    out: &Path,
    model_name: &str,
) -> Result<i32, CmdError> {
    std::fs::create_dir_all(out)?;
    let init = model.spec.init_params(cfg.seed);
    let result = train(model, init, train_set, val_set, cfg)?;
    write_text(&out.join("history.csv"), &history_csv(&result.history))?;
    write_text(&out.join("checkpoint.json"), &result.checkpoint.to_json())?;
    write_text(
        &out.join("chosen.json"),
        &serde_json::to_string_pretty(&json!({
            "model": model_name,
            "best_epoch": result.checkpoint.best_epoch,
            "val_metric": result.checkpoint.val_metric,
        }))
        .expect("json"),
    )?;
    println!(
        "trained {model_name}: best epoch {} (val {:.4}); artifacts in {}",
        result.checkpoint.best_epoch,
        result.checkpoint.val_metric,
        out.display()
    );
    Ok(EXIT_OK)
}

fn load_split(dir: &Path, name: &str) -> Result<Vec<TaskSample>, CmdError> {
    let path = dir.join(format!("{name}.jsonl"));
    let samples = read_dataset(&path)?;
    // spot check a tenth of the stored targets against their oracles
    spot_check_targets(&samples, 0.1)?;
    Ok(samples)
}

pub fn eval_cmd(args: &EvalArgs) -> Result<i32, CmdError> {
    let text = std::fs::read_to_string(&args.checkpoint)
        .map_err(|e| CmdError::data(format!("read {}: {e}", args.checkpoint.display())))?;
    let ck = Checkpoint::from_json(&text)?;
    let model = Model::new(ck.model.clone());
    let model_name = model_display_name(&ck.model);
    std::fs::create_dir_all(&args.out)?;

    let mut all_rows = Vec::new();
    for file in &args.data {
        let samples = read_dataset(file)?;
        if let Some(first) = samples.first() {
            if first.task != ck.model.task {
                return Err(CmdError::data(format!(
                    "dataset task {:?} does not match checkpoint task {:?}",
                    first.task, ck.model.task
                )));
            }
        }
        spot_check_targets(&samples, 0.1)?;
        let scale = file
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "data".into());
        let opts = EvalOptions {
            success_rate: args.success_rate,
            success_samples: args.success_samples,
        };
        let report = evaluate(&model, &ck.params, &samples, &scale, &opts)?;
        for r in &report.rows {
            println!("{scale} {} = {:.6} ({} samples)", r.metric, r.value, r.count);
        }
        write_text(
            &args.out.join(format!("trace_{scale}.csv")),
            &trace_csv(&report.traces),
        )?;
        all_rows.extend(report.rows);
    }
    write_text(
        &args.out.join("metrics.csv"),
        &metrics_csv(ck.model.task.name(), &model_name, args.seed, &all_rows),
    )?;
    Ok(EXIT_OK)
}

// ---- reproduce ----------------------------------------------------------

fn lobster_dataset(
    count: usize,
    n_min: usize,
    n_max: usize,
    weighted: bool,
    seed: u64,
) -> DatasetSpec {
    DatasetSpec {
        task: TaskKind::ShortestPath,
        generator: crate::graph::GeneratorKind::default_lobster(),
        n_min,
        n_max,
        weighted,
        weight_min: 0.5,
        weight_max: 1.5,
        count,
        master_seed: seed,
    }
}

struct DeskRun {
    model: Model,
    checkpoint: Checkpoint,
}

/// Desk-scale training run on lobster shortest paths.
fn desk_train(
    preset: &str,
    weighted: bool,
    seed: u64,
    epochs: usize,
) -> Result<DeskRun, CmdError> {
    let train_spec = lobster_dataset(2000, 4, 34, weighted, split_seed(seed, Split::Train));
    let val_spec = lobster_dataset(300, 4, 34, weighted, split_seed(seed, Split::Val));
    let train_set = generate_dataset(&train_spec)?;
    let val_set = generate_dataset(&val_spec)?;
    let spec = parse_model(preset, TaskKind::ShortestPath, PathVariant::MpnnMax, 64)?;
    let model = Model::new(spec);
    let cfg = TrainConfig::desk(TaskKind::ShortestPath, epochs, seed);
    let init = model.spec.init_params(cfg.seed);
    let result = train(&model, init, &train_set, &val_set, &cfg)?;
    println!(
        "[reproduce] trained {preset} (seed {seed}): best epoch {}, val {:.4}",
        result.checkpoint.best_epoch, result.checkpoint.val_metric
    );
    Ok(DeskRun {
        model,
        checkpoint: result.checkpoint,
    })
}

fn eval_sizes(
    run: &DeskRun,
    sizes: &[(usize, usize, usize)], // (size, sample count, success cap)
    weighted: bool,
    seed: u64,
    success: bool,
) -> Result<Vec<(usize, EvalReport)>, CmdError> {
    let mut out = Vec::new();
    for &(size, count, success_cap) in sizes {
        let spec = lobster_dataset(
            count,
            size,
            size + 1,
            weighted,
            split_seed(seed.wrapping_add(size as u64), Split::Test),
        );
        let samples = generate_dataset(&spec)?;
        let opts = EvalOptions {
            success_rate: success,
            success_samples: Some(success_cap),
        };
        let report = evaluate(&run.model, &run.checkpoint.params, &samples, &size.to_string(), &opts)?;
        out.push((size, report));
    }
    Ok(out)
}

pub fn reproduce(args: &ReproduceArgs) -> Result<i32, CmdError> {
    if args.scale != "desk" {
        return Err(CmdError::usage("only --scale desk is built in"));
    }
    if !args.acknowledge_budget {
        return Err(CmdError::usage(
            "reproduction trains models for several minutes; pass --acknowledge-budget",
        ));
    }
    std::fs::create_dir_all(&args.out)?;
    match args.table.as_str() {
        "lobster-generalization" => lobster_generalization(args),
        "weight-scaling" => weight_scaling(args),
        "ablation" => ablation(args),
        "figure4" => figure4(args),
        other => Err(CmdError::usage(format!("unknown table `{other}`"))),
    }
}

fn lobster_generalization(args: &ReproduceArgs) -> Result<i32, CmdError> {
    let run = desk_train("iter-homo-path", false, args.seed, 30)?;
    let reports = eval_sizes(
        &run,
        &[(20, 100, 100), (100, 100, 50), (500, 30, 10)],
        false,
        args.seed,
        true,
    )?;
    let mut csv = String::from("size,success_rate,relative_loss,reference_success_rate\n");
    let reference = [(20, 100.0), (100, 100.0), (500, 100.0)];
    println!("\nunweighted lobster shortest path, trained on sizes [4,34):");
    println!("{:>6} {:>14} {:>14} {:>10}", "size", "success_rate", "rel_loss", "reference");
    for ((size, report), (_, reference_rate)) in reports.iter().zip(reference) {
        let sr = report.metric("success_rate").unwrap_or(f64::NAN);
        let rl = report.metric("relative_loss").unwrap_or(f64::NAN);
        println!("{size:>6} {:>14.3} {rl:>14.4} {reference_rate:>10.1}", 100.0 * sr);
        csv.push_str(&format!("{size},{sr},{rl},{reference_rate}\n"));
    }
    write_text(&args.out.join("lobster_generalization.csv"), &csv)?;
    write_text(
        &args.out.join("checkpoint_iter_homo_path.json"),
        &run.checkpoint.to_json(),
    )?;
    Ok(EXIT_OK)
}

fn weight_scaling(args: &ReproduceArgs) -> Result<i32, CmdError> {
    let mut csv =
        String::from("model,weight_range,relative_loss,reference\n");
    println!("\nweighted lobster shortest path; eval sets are exact scaled copies:");
    for preset in ["homo-path", "iter-homo-path"] {
        let run = desk_train(preset, true, args.seed, 30)?;
        let base_spec = lobster_dataset(300, 4, 34, true, split_seed(args.seed + 17, Split::Test));
        let base = generate_dataset(&base_spec)?;
        let reference = match preset {
            "homo-path" => [0.03, 0.03, 0.03, 0.03],
            _ => [0.01, 0.04, 0.06, 0.08],
        };
        for (i, lambda) in [1.0, 2.0, 4.0, 16.0].into_iter().enumerate() {
            let samples: Vec<TaskSample> = base.iter().map(|s| scale_sample(s, lambda)).collect();
            let label = format!("[{},{})", 0.5 * lambda, 1.5 * lambda);
            let report = evaluate(
                &run.model,
                &run.checkpoint.params,
                &samples,
                &label,
                &EvalOptions::default(),
            )?;
            let rl = report.metric("relative_loss").unwrap_or(f64::NAN);
            println!("{preset:>16} {label:>12}: rel loss {rl:.6} (paper {:.2})", reference[i]);
            csv.push_str(&format!("{preset},{label},{rl},{}\n", reference[i]));
        }
    }
    write_text(&args.out.join("weight_scaling.csv"), &csv)?;
    Ok(EXIT_OK)
}

fn ablation(args: &ReproduceArgs) -> Result<i32, CmdError> {
    // paper reference success rates at size 1000; desk runs eval at 100
    let presets: [(&str, f64); 4] = [
        ("iter-homo-path", 100.0),
        ("homo-path", 53.7),
        ("act-homo-path", 52.7),
        ("shared-homo-path", 91.7),
    ];
    let mut csv = String::from("model,size,success_rate,reference_at_1000\n");
    println!("\nablation on unweighted lobster shortest path (desk scale, size 100):");
    for (preset, reference) in presets {
        let run = desk_train(preset, false, args.seed, 30)?;
        let reports = eval_sizes(&run, &[(100, 60, 40)], false, args.seed, true)?;
        let sr = reports[0].1.metric("success_rate").unwrap_or(f64::NAN);
        println!("{preset:>18}: success {:.1}% (paper at 1000: {reference})", sr * 100.0);
        csv.push_str(&format!("{preset},100,{sr},{reference}\n"));
    }
    write_text(&args.out.join("ablation.csv"), &csv)?;
    Ok(EXIT_OK)
}

fn figure4(args: &ReproduceArgs) -> Result<i32, CmdError> {
    let run = desk_train("iter-homo-path", false, args.seed, 30)?;
    let reports = eval_sizes(&run, &[(100, 100, 100)], false, args.seed, true)?;
    let report = &reports[0].1;
    let xs: Vec<f64> = report.traces.iter().map(|t| t.distance).collect();
    let ys: Vec<f64> = report.traces.iter().map(|t| t.steps as f64).collect();
    let rho = spearman(&xs, &ys);
    let mut csv = String::from("distance,steps,min_steps\n");
    for t in &report.traces {
        csv.push_str(&format!("{},{},{}\n", t.distance, t.steps, t.min_steps));
    }
    write_text(&args.out.join("figure4.csv"), &csv)?;
    write_text(&args.out.join("trace.csv"), &trace_csv(&report.traces))?;
    println!(
        "\nhalting steps vs distance on size-100 lobster: spearman {:.3} over {} runs",
        rho,
        report.traces.len()
    );
    println!("plot-ready rows in {}", args.out.join("figure4.csv").display());
    Ok(EXIT_OK)
}

fn run_experiment(cfg: &super::config::ExperimentConfig) -> Result<i32, CmdError> {
    let out: PathBuf = cfg.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    let train_spec = DatasetSpec {
        master_seed: split_seed(cfg.dataset.master_seed, Split::Train),
        ..cfg.dataset
    };
    let val_spec = DatasetSpec {
        master_seed: split_seed(cfg.dataset.master_seed, Split::Val),
        count: cfg.val_count,
        ..cfg.dataset
    };
    let train_set = generate_dataset(&train_spec)?;
    let val_set = generate_dataset(&val_spec)?;
    let model = Model::new(cfg.model.clone());
    run_training(
        &model,
        &train_set,
        &val_set,
        &cfg.train,
        &out,
        &model_display_name(&cfg.model),
    )?;

    let ck_text = std::fs::read_to_string(out.join("checkpoint.json"))?;
    let ck = Checkpoint::from_json(&ck_text)?;
    let mut rows = Vec::new();
    for &size in &cfg.eval_sizes {
        let spec = DatasetSpec {
            master_seed: split_seed(cfg.dataset.master_seed.wrapping_add(size as u64), Split::Test),
            count: cfg.test_count,
            n_min: size,
            n_max: size + 1,
            ..cfg.dataset
        };
        let samples = generate_dataset(&spec)?;
        let report = evaluate(
            &model,
            &ck.params,
            &samples,
            &size.to_string(),
            &EvalOptions::default(),
        )?;
        rows.extend(report.rows);
    }
    write_text(
        &out.join("metrics.csv"),
        &metrics_csv(
            cfg.model.task.name(),
            &model_display_name(&cfg.model),
            cfg.train.seed,
            &rows,
        ),
    )?;
    Ok(EXIT_OK)
}
