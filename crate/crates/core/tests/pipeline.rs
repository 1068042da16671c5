//! Dataset to report and dataset to model bundle, end to end.

use std::collections::BTreeSet;

use gramtraj::classify::proximity_vector;
use gramtraj::data::{
    synth_dataset, ClassifierConfig, ClassifierKind, DatasetSpec, KGrid, MotionClass, PartSchema,
    ProtocolKind, ResampleConfig, ResampleMode, RunConfig, SequenceFile, SynthOptions,
};
use gramtraj::eval::{
    build_dataset, evaluate, grid_search_k, protocol_from_config, sequence_parts, train_pipeline,
    AuditedSource,
};
use gramtraj::geometry::ClosenessParams;
use gramtraj::model_io::ModelBundle;
use gramtraj::par::Execution;
use gramtraj::Error;

fn labelled(seqs: Vec<SequenceFile>) -> Vec<(String, SequenceFile)> {
    seqs.into_iter()
        .enumerate()
        .map(|(i, s)| (format!("seq{i:03}"), s))
        .collect()
}

fn two_class(per_class: usize, subjects: usize) -> Vec<(String, SequenceFile)> {
    let spec = DatasetSpec {
        per_class,
        lengths: (12, 18),
        noise: 0.01,
        subjects,
        seed: 5,
    };
    labelled(synth_dataset(
        &[MotionClass::Rotation, MotionClass::Oscillation],
        &spec,
        &SynthOptions::default(),
    ))
}

fn small_config(kind: ProtocolKind) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.protocol.kind = kind;
    cfg.closeness.k_grid = KGrid::List(vec![0.0, 1.0]);
    cfg
}

#[test]
fn separable_pair_loocv_is_perfect() {
    let seqs = two_class(6, 3);
    let report = evaluate(
        &seqs,
        None,
        &small_config(ProtocolKind::Loocv),
        Execution::Auto,
    )
    .unwrap()
    .report;
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.fold_accuracies.len(), 12);
    let trace: usize = (0..report.classes.len())
        .map(|i| report.confusion[i][i])
        .sum();
    let total: usize = report.confusion.iter().flatten().sum();
    assert_eq!(trace as f64 / total as f64, report.accuracy);
    for row in &report.confusion {
        assert_eq!(row.iter().sum::<usize>(), 6);
    }
}

#[test]
fn single_subject_loso_is_infeasible() {
    let seqs = two_class(3, 1);
    let err = evaluate(
        &seqs,
        None,
        &small_config(ProtocolKind::Loso),
        Execution::Auto,
    )
    .unwrap_err();
    assert!(matches!(err, Error::ProtocolInfeasible(_)), "{err}");
}

#[test]
fn single_class_is_infeasible() {
    let spec = DatasetSpec {
        per_class: 4,
        lengths: (8, 10),
        ..DatasetSpec::default()
    };
    let seqs = labelled(synth_dataset(
        &[MotionClass::Rotation],
        &spec,
        &SynthOptions::default(),
    ));
    let err = evaluate(
        &seqs,
        None,
        &small_config(ProtocolKind::Loocv),
        Execution::Auto,
    )
    .unwrap_err();
    assert!(matches!(err, Error::ProtocolInfeasible(_)));
}

#[test]
fn inner_search_reads_only_outer_training_rows() {
    let seqs = two_class(5, 5);
    let cfg = small_config(ProtocolKind::Loso);
    let ev = evaluate(&seqs, None, &cfg, Execution::Auto).unwrap();
    let labels = ev.dataset.labels();
    let folds = protocol_from_config(&cfg)
        .unwrap()
        .folds(&labels, &ev.dataset.subjects())
        .unwrap();
    for fold in folds {
        let audited = AuditedSource::new(&ev.tensors[0]);
        grid_search_k(
            &audited,
            &[0.0, 1.0],
            &fold.train,
            &labels,
            5,
            &cfg.classifier,
            0,
            Execution::Auto,
        )
        .unwrap();
        let train: BTreeSet<usize> = fold.train.iter().copied().collect();
        let touched = audited.touched();
        assert!(touched.is_subset(&train));
        assert!(fold.test.iter().all(|i| !touched.contains(i)));
    }
}

#[test]
fn knn_protocol_runs() {
    let seqs = two_class(6, 3);
    let mut cfg = small_config(ProtocolKind::Kfold);
    cfg.classifier = ClassifierConfig {
        kind: ClassifierKind::Knn,
        neighbors: 3,
        ..ClassifierConfig::default()
    };
    let report = evaluate(&seqs, None, &cfg, Execution::Auto).unwrap().report;
    assert_eq!(report.classifier, "knn-3");
    assert!(report.accuracy >= 0.75, "{}", report.accuracy);
}

#[test]
fn bundle_round_trip_and_predict() {
    let seqs = two_class(5, 5);
    let cfg = small_config(ProtocolKind::Loocv);
    let ds = build_dataset(&seqs, None, &cfg.resample, Execution::Auto).unwrap();
    let bundle = train_pipeline(&ds, &cfg, Execution::Auto).unwrap();
    let bytes = bundle.to_bytes();
    let back = ModelBundle::from_bytes(&bytes).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(back.to_bytes(), bytes);
    for (_, seq) in seqs.iter().step_by(3) {
        assert_eq!(back.predict(seq).unwrap().label, seq.meta.label);
    }
    let mut bad = bytes.clone();
    bad[0] ^= 1;
    assert!(matches!(
        ModelBundle::from_bytes(&bad),
        Err(Error::Model(_))
    ));
    assert!(ModelBundle::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn four_part_bundle() {
    let spec = DatasetSpec {
        per_class: 3,
        lengths: (10, 12),
        ..DatasetSpec::default()
    };
    let seqs = labelled(gramtraj::data::synth_skeleton_dataset(&spec));
    let schema = PartSchema::builtin("kinect20").unwrap();
    let cfg = small_config(ProtocolKind::Kfold);
    let ds = build_dataset(&seqs, Some(&schema), &cfg.resample, Execution::Auto).unwrap();
    let bundle = train_pipeline(&ds, &cfg, Execution::Auto).unwrap();
    assert_eq!(bundle.part_names(), ["whole", "arms", "legs", "torso"]);
    assert!(bundle.parts.iter().all(|p| p.model.is_some()));
    let back = ModelBundle::from_bytes(&bundle.to_bytes()).unwrap();
    assert_eq!(back, bundle);
}

#[test]
fn warped_copies_get_identical_proximities() {
    let seqs = two_class(4, 2);
    let resample = ResampleConfig {
        mode: ResampleMode::Adaptive,
        zeta1: Some(1e-6),
        zeta2: Some(10.0),
        ..ResampleConfig::default()
    };
    let ds = build_dataset(&seqs[1..], None, &resample, Execution::Auto).unwrap();
    let train = ds.part(0);
    let probe = &seqs[0].1;
    let mut warped = probe.clone();
    warped.frames = probe
        .frames
        .iter()
        .enumerate()
        .flat_map(|(i, f)| std::iter::repeat_n(f.clone(), 1 + i % 3))
        .collect();
    let p = ClosenessParams::default();
    let phi = |s: &SequenceFile| {
        let t = sequence_parts(s, "probe", None, &ds.resampling)
            .unwrap()
            .remove(0);
        proximity_vector(&t, &train, p).unwrap().values
    };
    let (a, b) = (phi(probe), phi(&warped));
    assert!(
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9),
        "{a:?} vs {b:?}"
    );
}
