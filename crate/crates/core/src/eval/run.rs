//! Protocol runs and full-data training.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::dataset::{build_dataset, Dataset};
use super::grid::{features, grid_search_k, GridTensor};
use super::protocol::{Fold, Protocol};
use super::report::{EvalReport, PredictionRecord, Timings};
use crate::classify::{
    argmax_lowest, first_max, fuse_probabilities, knn_from_distances, proximity_grid, train_svm,
    FusionEnsemble, PartModel, SvmParams,
};
use crate::data::{ClassifierKind, PartSchema, RunConfig, SequenceFile};
use crate::error::{Error, Result};
use crate::geometry::ClosenessParams;
use crate::model_io::{BundlePart, ModelBundle};
use crate::par::{map_indices, Execution};

/// Seed of fold `f`, derived from the run seed.
fn fold_seed(seed: u64, f: usize) -> u64 {
    seed ^ (f as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Full pairwise distance tensors, one per part, over the configured grid.
pub fn compute_tensors(
    dataset: &Dataset,
    grid: &[f64],
    exec: Execution,
) -> Result<Vec<GridTensor>> {
    let params: Vec<ClosenessParams> = grid
        .iter()
        .map(|&k| ClosenessParams::new(k))
        .collect::<Result<_>>()?;
    (0..dataset.part_names.len())
        .map(|p| {
            Ok(GridTensor::new(proximity_grid(
                &dataset.part(p),
                &params,
                exec,
            )?))
        })
        .collect()
}

/// Reads a half-half split file: a JSON list of training subjects.
pub fn load_split(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn protocol_from_config(cfg: &RunConfig) -> Result<Protocol> {
    Ok(Protocol {
        kind: cfg.protocol.kind,
        folds: cfg.protocol.folds,
        seed: cfg.seed,
        train_subjects: cfg
            .protocol
            .split_file
            .as_deref()
            .map(load_split)
            .transpose()?,
    })
}

struct FoldOutcome {
    predicted: Vec<usize>,
    part_predicted: Vec<Vec<usize>>,
    chosen_k: BTreeMap<String, f64>,
}

/// Trains one part classifier on `train` at grid layer `g` and returns, for
/// every test sample, class probabilities over `dataset.classes`.
fn part_probabilities(
    dataset: &Dataset,
    tensor: &GridTensor,
    g: usize,
    train: &[usize],
    test: &[usize],
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let labels: Vec<String> = train
        .iter()
        .map(|&i| dataset.samples[i].label.clone())
        .collect();
    let k_classes = dataset.classes.len();
    let phi = features(tensor, g, test, train);
    match cfg.classifier.kind {
        ClassifierKind::Ppfsvm => {
            let params = SvmParams {
                c: cfg.classifier.c,
                seed,
                ..SvmParams::default()
            };
            let model = train_svm(&features(tensor, g, train, train), &labels, &params)?;
            phi.row_iter()
                .map(|r| {
                    let local =
                        model.probabilities(&r.iter().copied().collect::<Vec<_>>().into())?;
                    let mut global = vec![0.0; k_classes];
                    for (c, p) in model.classes.iter().zip(local) {
                        global[dataset.class_index(c).expect("known class")] = p;
                    }
                    Ok(global)
                })
                .collect()
        }
        ClassifierKind::Knn => {
            let idx: Vec<usize> = labels
                .iter()
                .map(|l| dataset.class_index(l).expect("known class"))
                .collect();
            let k = cfg.classifier.neighbors.min(train.len());
            phi.row_iter()
                .map(|r| {
                    let d: Vec<f64> = r.iter().copied().collect();
                    let c = knn_from_distances(&d, &idx, k)?;
                    let mut one_hot = vec![0.0; k_classes];
                    one_hot[c] = 1.0;
                    Ok(one_hot)
                })
                .collect()
        }
    }
}

fn run_fold(
    dataset: &Dataset,
    tensors: &[GridTensor],
    grid: &[f64],
    fold: &Fold,
    cfg: &RunConfig,
    seed: u64,
    exec: Execution,
) -> Result<FoldOutcome> {
    let labels = dataset.labels();
    let mut per_part = Vec::with_capacity(tensors.len());
    let mut chosen_k = BTreeMap::new();
    for (p, tensor) in tensors.iter().enumerate() {
        let gs = grid_search_k(
            tensor,
            grid,
            &fold.train,
            &labels,
            cfg.protocol.inner_folds,
            &cfg.classifier,
            seed,
            exec,
        )?;
        chosen_k.insert(dataset.part_names[p].clone(), gs.k);
        per_part.push(part_probabilities(
            dataset,
            tensor,
            gs.index,
            &fold.train,
            &fold.test,
            cfg,
            seed,
        )?);
    }
    let part_predicted: Vec<Vec<usize>> = per_part
        .iter()
        .map(|probs| probs.iter().map(|p| argmax_lowest(p)).collect())
        .collect();
    let predicted = match cfg.classifier.kind {
        ClassifierKind::Ppfsvm if per_part.len() > 1 => (0..fold.test.len())
            .map(|t| {
                let fused = fuse_probabilities(
                    &per_part.iter().map(|pp| pp[t].clone()).collect::<Vec<_>>(),
                );
                first_max(&fused)
            })
            .collect(),
        _ => part_predicted[0].clone(),
    };
    Ok(FoldOutcome {
        predicted,
        part_predicted,
        chosen_k,
    })
}

/// Runs the configured protocol on a built dataset, with precomputed
/// tensors over `cfg`'s k grid.
pub fn run_protocol_on(
    dataset: &Dataset,
    tensors: &[GridTensor],
    cfg: &RunConfig,
    exec: Execution,
) -> Result<EvalReport> {
    if dataset.classes.len() < 2 {
        return Err(Error::ProtocolInfeasible(format!(
            "need at least 2 classes, found {}",
            dataset.classes.len()
        )));
    }
    let grid = cfg.closeness.k_grid.values()?;
    let labels = dataset.labels();
    let protocol = protocol_from_config(cfg)?;
    let folds = protocol.folds(&labels, &dataset.subjects())?;
    for (f, fold) in folds.iter().enumerate() {
        let first = &labels[fold.train[0]];
        if fold.train.iter().all(|&i| &labels[i] == first) {
            return Err(Error::ProtocolInfeasible(format!(
                "fold {f} trains on the single class {first:?}"
            )));
        }
    }
    let started = Instant::now();
    let outcomes = map_indices(folds.len(), exec, |f| {
        run_fold(
            dataset,
            tensors,
            &grid,
            &folds[f],
            cfg,
            fold_seed(cfg.seed, f),
            exec,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let classification_s = started.elapsed().as_secs_f64();

    let k = dataset.classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let mut part_correct = vec![0usize; dataset.part_names.len()];
    let mut predictions = Vec::new();
    let (mut correct, mut total) = (0, 0);
    for (f, (fold, out)) in folds.iter().zip(&outcomes).enumerate() {
        let mut fold_correct = 0;
        for (t, &i) in fold.test.iter().enumerate() {
            let truth = dataset.class_index(&labels[i]).expect("known class");
            let pred = out.predicted[t];
            confusion[truth][pred] += 1;
            fold_correct += usize::from(truth == pred);
            for (p, pp) in out.part_predicted.iter().enumerate() {
                part_correct[p] += usize::from(pp[t] == truth);
            }
            predictions.push(PredictionRecord {
                id: dataset.samples[i].id.clone(),
                truth: labels[i].clone(),
                predicted: dataset.classes[pred].clone(),
                fold: f,
            });
        }
        correct += fold_correct;
        total += fold.test.len();
        fold_accuracies.push(fold_correct as f64 / fold.test.len() as f64);
    }
    let n = fold_accuracies.len() as f64;
    let mean = fold_accuracies.iter().sum::<f64>() / n;
    let std = (fold_accuracies
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EvalReport {
        protocol: protocol.name(),
        classifier: match cfg.classifier.kind {
            ClassifierKind::Ppfsvm => "ppfsvm".into(),
            ClassifierKind::Knn => format!("knn-{}", cfg.classifier.neighbors),
        },
        seed: cfg.seed,
        n_samples: dataset.len(),
        classes: dataset.classes.clone(),
        parts: dataset.part_names.clone(),
        k_grid: grid,
        accuracy: correct as f64 / total as f64,
        mean_accuracy: mean,
        std_accuracy: std,
        fold_accuracies,
        part_accuracy: dataset
            .part_names
            .iter()
            .zip(&part_correct)
            .map(|(name, &c)| (name.clone(), c as f64 / total as f64))
            .collect(),
        confusion,
        chosen_k: outcomes.into_iter().map(|o| o.chosen_k).collect(),
        predictions,
        timings: Timings {
            classification_s,
            ..Timings::default()
        },
    })
}

/// Computes the tensors and runs the protocol.
pub fn run_protocol(dataset: &Dataset, cfg: &RunConfig) -> Result<EvalReport> {
    run_protocol_with(dataset, cfg, Execution::Auto)
}

pub fn run_protocol_with(
    dataset: &Dataset,
    cfg: &RunConfig,
    exec: Execution,
) -> Result<EvalReport> {
    let started = Instant::now();
    let tensors = compute_tensors(dataset, &cfg.closeness.k_grid.values()?, exec)?;
    let comparison_s = started.elapsed().as_secs_f64();
    let mut report = run_protocol_on(dataset, &tensors, cfg, exec)?;
    report.timings.comparison_s = comparison_s;
    Ok(report)
}

/// Built dataset and its evaluation, with stage timings filled in.
#[derive(Debug)]
pub struct Evaluation {
    pub dataset: Dataset,
    pub tensors: Vec<GridTensor>,
    pub report: EvalReport,
}

/// Builds trajectories from raw sequences and runs the protocol.
pub fn evaluate(
    seqs: &[(String, SequenceFile)],
    schema: Option<&PartSchema>,
    cfg: &RunConfig,
    exec: Execution,
) -> Result<Evaluation> {
    let started = Instant::now();
    let dataset = build_dataset(seqs, schema, &cfg.resample, exec)?;
    let construction_s = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let tensors = compute_tensors(&dataset, &cfg.closeness.k_grid.values()?, exec)?;
    let comparison_s = started.elapsed().as_secs_f64();
    let mut report = run_protocol_on(&dataset, &tensors, cfg, exec)?;
    report.timings.construction_s = construction_s;
    report.timings.comparison_s = comparison_s;
    Ok(Evaluation {
        dataset,
        tensors,
        report,
    })
}

/// Selects `k` per part by cross-validation on all samples and trains the
/// final classifiers.
pub fn train_on(
    dataset: &Dataset,
    tensors: &[GridTensor],
    cfg: &RunConfig,
    exec: Execution,
) -> Result<ModelBundle> {
    let grid = cfg.closeness.k_grid.values()?;
    let labels = dataset.labels();
    if dataset.classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let mut parts = Vec::with_capacity(tensors.len());
    for (p, tensor) in tensors.iter().enumerate() {
        let gs = grid_search_k(
            tensor,
            &grid,
            &all,
            &labels,
            cfg.protocol.inner_folds,
            &cfg.classifier,
            cfg.seed,
            exec,
        )?;
        let model = match cfg.classifier.kind {
            ClassifierKind::Ppfsvm => {
                let params = SvmParams {
                    c: cfg.classifier.c,
                    seed: cfg.seed,
                    ..SvmParams::default()
                };
                Some(train_svm(
                    &features(tensor, gs.index, &all, &all),
                    &labels,
                    &params,
                )?)
            }
            ClassifierKind::Knn => None,
        };
        parts.push(BundlePart {
            name: dataset.part_names[p].clone(),
            k: gs.k,
            model,
            trajectories: dataset.part(p),
        });
    }
    if cfg.classifier.kind == ClassifierKind::Ppfsvm {
        // same samples and classes for every part
        FusionEnsemble::new(
            parts
                .iter()
                .map(|bp| PartModel {
                    part: bp.name.clone(),
                    closeness: ClosenessParams::new(bp.k).expect("grid value"),
                    model: bp.model.clone().expect("svm part"),
                })
                .collect(),
        )?;
    }
    Ok(ModelBundle {
        classes: dataset.classes.clone(),
        classifier: cfg.classifier.clone(),
        resampling: dataset.resampling,
        schema: dataset.schema.clone(),
        train_ids: dataset.samples.iter().map(|s| s.id.clone()).collect(),
        train_labels: labels,
        train_subjects: dataset.subjects(),
        parts,
    })
}

pub fn train_pipeline(dataset: &Dataset, cfg: &RunConfig, exec: Execution) -> Result<ModelBundle> {
    let tensors = compute_tensors(dataset, &cfg.closeness.k_grid.values()?, exec)?;
    train_on(dataset, &tensors, cfg, exec)
}
