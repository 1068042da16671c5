use std::fs;
use std::path::{Path, PathBuf};

use gramtraj::data::{
    load_dataset_dir, load_sequence, synth_dataset, synth_skeleton_dataset, ClassifierKind,
    DatasetSpec, KGrid, MotionClass, PartSchema, ProtocolKind, ResampleMode, RunConfig,
    SequenceFile, SequenceFormat, SynthOptions,
};
use gramtraj::eval::{build_dataset, evaluate, train_on, train_pipeline};
use gramtraj::geometry::ClosenessParams;
use gramtraj::model_io::ModelBundle;
use gramtraj::par::Execution;
use gramtraj::trajectory::{
    adaptive_resample, cost_matrix, dtw_distance, dtw_on_costs, resample_to_length,
    trajectory_from_frames, ResampleParams, Trajectory, TrajectoryMeta,
};
use nalgebra::DMatrix;
use serde_json::json;

use crate::failure::{CliResult, Failure, WithPath};
use crate::{
    ClassifierArg, Cli, Command, EvalArgs, InputArgs, PairArgs, PipelineArgs, PredictArgs,
    ProtocolArg, ResampleArgs, SynthArgs, SynthKind, TrainArgs,
};

pub const MODEL_FILE: &str = "model.gtm";

pub fn run(cli: Cli) -> CliResult<()> {
    let json = cli.json;
    match cli.command {
        Command::Distance(a) => distance(&a, json),
        Command::Align(a) => align(&a, json),
        Command::Resample(a) => resample(&a, json),
        Command::Synth(a) => synth(&a, json),
        Command::Train(a) => train(&a, json),
        Command::Predict(a) => predict(&a, json),
        Command::Eval(a) => eval(&a, json),
    }
}

fn read_sequence(path: &Path, input: &InputArgs) -> CliResult<SequenceFile> {
    let format = SequenceFormat::detect(path, input.dim).at(path)?;
    load_sequence(path, format).at(path)
}

fn to_trajectory(seq: &SequenceFile, path: &Path) -> CliResult<Trajectory> {
    trajectory_from_frames(&seq.frames, TrajectoryMeta::default()).at(path)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value")
    );
}

/// Loads both sequences and checks they describe the same landmark layout.
fn load_pair(a: &PairArgs) -> CliResult<(Trajectory, Trajectory)> {
    let sa = read_sequence(&a.first, &a.input)?;
    let sb = read_sequence(&a.second, &a.input)?;
    if sa.shape() != sb.shape() {
        let show = |s: &SequenceFile| match s.shape() {
            Some((n, d)) => format!("{n} landmarks in {d}D"),
            None => "no frames".to_string(),
        };
        return Err(Failure::shape(format!(
            "{} has {}, {} has {}",
            a.first.display(),
            show(&sa),
            a.second.display(),
            show(&sb)
        )));
    }
    Ok((
        to_trajectory(&sa, &a.first)?,
        to_trajectory(&sb, &a.second)?,
    ))
}

/// Costs as CSV, one row per frame of the first sequence. Values use the
/// shortest representation that parses back to the same number.
fn costs_csv(costs: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in costs.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn pair_costs(a: &PairArgs) -> CliResult<(Trajectory, Trajectory, ClosenessParams, DMatrix<f64>)> {
    let (ta, tb) = load_pair(a)?;
    let params = ClosenessParams::new(a.k)?;
    let costs = cost_matrix(&ta, &tb, params)?;
    if let Some(dump) = &a.dump_costs {
        write_file(dump, costs_csv(&costs))?;
    }
    Ok((ta, tb, params, costs))
}

fn distance(a: &PairArgs, json: bool) -> CliResult<()> {
    let (ta, tb, params, _) = pair_costs(a)?;
    let d = dtw_distance(&ta, &tb, params)?;
    if json {
        print_json(&json!({
            "first": a.first,
            "second": a.second,
            "k": a.k,
            "distance": d,
        }));
    } else {
        println!("{d:.12}");
    }
    Ok(())
}

fn align(a: &PairArgs, json: bool) -> CliResult<()> {
    let (_, _, _, costs) = pair_costs(a)?;
    let path = dtw_on_costs(&costs);
    if json {
        print_json(&json!({
            "first": a.first,
            "second": a.second,
            "k": a.k,
            "cost": path.cost,
            "length": path.len(),
            "distance": path.normalized_cost(),
            "pairs": path.pairs,
        }));
    } else {
        println!("distance {:.12}", path.normalized_cost());
        println!("cost {:.12} over {} pairs", path.cost, path.len());
        for (i, j) in &path.pairs {
            println!("{i}\t{j}");
        }
    }
    Ok(())
}

fn resample(a: &ResampleArgs, json: bool) -> CliResult<()> {
    let seq = read_sequence(&a.input, &a.io)?;
    let traj = to_trajectory(&seq, &a.input)?;
    let cp = ClosenessParams::new(a.k)?;
    let out = match (a.target_len, a.zeta2) {
        (Some(len), _) => resample_to_length(&traj, len, cp)?,
        (None, Some(zeta2)) => {
            let params = ResampleParams::new(a.zeta1.unwrap_or(0.0), zeta2)?;
            adaptive_resample(&traj, &params, cp)?
        }
        (None, None) => unreachable!("clap requires --target-len or --zeta2"),
    };
    let result = SequenceFile::new(seq.meta.clone(), out.to_landmarks());
    result.save(&a.output).at(&a.output)?;
    if json {
        print_json(
            &json!({ "input_len": seq.len(), "output_len": result.len(), "output": a.output }),
        );
    } else {
        println!(
            "{} -> {} frames, written to {}",
            seq.len(),
            result.len(),
            a.output.display()
        );
    }
    Ok(())
}

fn synth(a: &SynthArgs, json: bool) -> CliResult<()> {
    if a.per_class == 0 || a.subjects == 0 {
        return Err(Failure::input(
            "--per-class and --subjects must be at least 1",
        ));
    }
    if a.min_len < 2 || a.max_len < a.min_len {
        return Err(Failure::input("need 2 <= --min-len <= --max-len"));
    }
    let spec = DatasetSpec {
        per_class: a.per_class,
        lengths: (a.min_len, a.max_len),
        noise: a.noise,
        subjects: a.subjects,
        seed: a.seed,
    };
    let seqs = match a.kind {
        SynthKind::Motions => {
            let classes = a
                .classes
                .iter()
                .map(|c| {
                    c.parse::<MotionClass>()
                        .map_err(|e| Failure::input(format!("--classes: {e}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            synth_dataset(&classes, &spec, &SynthOptions::default())
        }
        SynthKind::Skeleton => synth_skeleton_dataset(&spec),
    };
    fs::create_dir_all(&a.output)
        .map_err(|e| Failure::input(format!("{}: {e}", a.output.display())))?;
    let mut written = Vec::with_capacity(seqs.len());
    for (i, seq) in seqs.iter().enumerate() {
        let path = a.output.join(format!("{}_{i:03}.json", seq.meta.label));
        seq.save(&path).at(&path)?;
        written.push(path);
    }
    if json {
        print_json(&json!({ "files": written }));
    } else {
        println!(
            "wrote {} sequences to {}",
            written.len(),
            a.output.display()
        );
    }
    Ok(())
}

fn resolve_schema(spec: &str) -> CliResult<PartSchema> {
    match PartSchema::builtin(spec) {
        Some(s) => Ok(s),
        None => {
            let path = Path::new(spec);
            if !path.exists() {
                let names: Vec<&str> = PartSchema::builtin_names().collect();
                return Err(Failure::input(format!(
                    "part schema {spec:?} is neither a file nor one of {}",
                    names.join(", ")
                )));
            }
            PartSchema::load(path).at(path)
        }
    }
}

/// Config file (or defaults) with the command-line flags applied on top.
fn layered_config(p: &PipelineArgs) -> CliResult<RunConfig> {
    let mut cfg = match &p.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = p.seed {
        cfg.seed = seed;
    }
    if let Some(k) = p.k {
        cfg.closeness.k_grid = KGrid::List(vec![k]);
    }
    if let Some(grid) = &p.k_grid {
        cfg.closeness.k_grid = KGrid::List(grid.clone());
    }
    if let Some(kind) = p.classifier {
        cfg.classifier.kind = match kind {
            ClassifierArg::Ppfsvm => ClassifierKind::Ppfsvm,
            ClassifierArg::Knn => ClassifierKind::Knn,
        };
    }
    if let Some(c) = p.c {
        cfg.classifier.c = c;
    }
    if let Some(n) = p.neighbors {
        cfg.classifier.neighbors = n;
    }
    if let (Some(z1), Some(z2)) = (p.zeta1, p.zeta2) {
        cfg.resample.mode = ResampleMode::Adaptive;
        cfg.resample.zeta1 = Some(z1);
        cfg.resample.zeta2 = Some(z2);
    }
    if let Some(len) = p.target_len {
        cfg.resample.mode = ResampleMode::FixedLength;
        cfg.resample.target_len = Some(len);
    }
    if let Some(k) = p.resample_k {
        cfg.resample.k = k;
    }
    if let Some(parts) = &p.parts {
        cfg.parts = Some(gramtraj::data::PartsConfig {
            schema: parts.clone(),
        });
    }
    Ok(cfg)
}

fn check_config(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate().map_err(Failure::from)?;
    if cfg.resample.mode == ResampleMode::Adaptive {
        let (z1, z2) = (
            cfg.resample.zeta1.unwrap_or(f64::NAN),
            cfg.resample.zeta2.unwrap_or(f64::NAN),
        );
        ResampleParams::new(z1, z2)?;
    }
    Ok(())
}

/// Sequences of a dataset directory, identified by file stem.
fn load_dataset(dir: &Path) -> CliResult<Vec<(String, SequenceFile)>> {
    if !dir.is_dir() {
        return Err(Failure::input(format!(
            "{}: not a directory",
            dir.display()
        )));
    }
    let files = load_dataset_dir(dir)?;
    if files.is_empty() {
        return Err(Failure::input(format!(
            "{}: no .json sequences found",
            dir.display()
        )));
    }
    files
        .into_iter()
        .map(|(path, seq)| {
            if seq.meta.label.is_empty() {
                return Err(Failure::input(format!(
                    "{}: sequence has no label",
                    path.display()
                )));
            }
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, seq))
        })
        .collect()
}

fn schema_of(cfg: &RunConfig) -> CliResult<Option<PartSchema>> {
    cfg.parts
        .as_ref()
        .map(|p| resolve_schema(&p.schema))
        .transpose()
}

fn train(a: &TrainArgs, json: bool) -> CliResult<()> {
    let cfg = layered_config(&a.pipeline)?;
    check_config(&cfg)?;
    let schema = schema_of(&cfg)?;
    let seqs = load_dataset(&a.dataset)?;
    let ds = build_dataset(&seqs, schema.as_ref(), &cfg.resample, Execution::Auto)?;
    let bundle = train_pipeline(&ds, &cfg, Execution::Auto)?;
    bundle.save(&a.output).at(&a.output)?;
    let chosen: serde_json::Map<String, serde_json::Value> = bundle
        .parts
        .iter()
        .map(|p| (p.name.clone(), json!(p.k)))
        .collect();
    if json {
        print_json(&json!({
            "model": a.output,
            "samples": ds.len(),
            "classes": bundle.classes,
            "chosen_k": chosen,
        }));
    } else {
        println!(
            "trained on {} sequences, {} classes; model written to {}",
            ds.len(),
            bundle.classes.len(),
            a.output.display()
        );
        for p in &bundle.parts {
            println!("  {:<8} k = {}", p.name, p.k);
        }
    }
    Ok(())
}

fn predict(a: &PredictArgs, json: bool) -> CliResult<()> {
    let bundle = ModelBundle::load(&a.model).at(&a.model)?;
    let mut rows = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let seq = read_sequence(path, &a.io)?;
        let p = bundle.predict(&seq).at(path)?;
        rows.push((path.clone(), p));
    }
    if json {
        let out: Vec<_> = rows
            .iter()
            .map(|(path, p)| {
                let probs: serde_json::Map<String, serde_json::Value> = bundle
                    .classes
                    .iter()
                    .zip(&p.probabilities)
                    .map(|(c, v)| (c.clone(), json!(v)))
                    .collect();
                json!({ "input": path, "label": p.label, "probabilities": probs })
            })
            .collect();
        print_json(&json!(out));
    } else {
        for (path, p) in &rows {
            println!("{}\t{}", path.display(), p.label);
        }
    }
    Ok(())
}

fn eval(a: &EvalArgs, json: bool) -> CliResult<()> {
    let mut cfg = layered_config(&a.pipeline)?;
    if let Some(kind) = a.protocol {
        cfg.protocol.kind = match kind {
            ProtocolArg::Loocv => ProtocolKind::Loocv,
            ProtocolArg::Loso => ProtocolKind::Loso,
            ProtocolArg::Kfold => ProtocolKind::Kfold,
            ProtocolArg::HalfHalf => ProtocolKind::HalfHalf,
        };
    }
    if let Some(f) = a.folds {
        cfg.protocol.folds = f;
    }
    if let Some(f) = a.inner_folds {
        cfg.protocol.inner_folds = f;
    }
    if let Some(s) = &a.split_file {
        cfg.protocol.split_file = Some(s.clone());
    }
    check_config(&cfg)?;
    let schema = schema_of(&cfg)?;
    let seqs = load_dataset(&a.dataset)?;
    let ev = evaluate(&seqs, schema.as_ref(), &cfg, Execution::Auto)?;
    fs::create_dir_all(&a.output)
        .map_err(|e| Failure::input(format!("{}: {e}", a.output.display())))?;
    let out = |name: &str| -> PathBuf { a.output.join(name) };
    write_file(&out("report.json"), ev.report.to_json())?;
    write_file(&out("report.txt"), ev.report.to_text())?;
    write_file(&out("confusion.csv"), ev.report.confusion_csv())?;
    write_file(&out("timings.json"), ev.report.timings_json())?;
    if !a.no_model {
        let bundle = train_on(&ev.dataset, &ev.tensors, &cfg, Execution::Auto)?;
        let path = out(MODEL_FILE);
        bundle.save(&path).at(&path)?;
    }
    if json {
        print!("{}", ev.report.to_json());
    } else {
        print!("{}", ev.report.to_text());
    }
    Ok(())
}
