use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gramtraj::classify::{proximity_grid, proximity_matrix_with};
use gramtraj::data::{synth_dataset, DatasetSpec, MotionClass, SynthOptions};
use gramtraj::geometry::ClosenessParams;
use gramtraj::par::Execution;
use gramtraj::trajectory::{trajectory_from_frames, Trajectory, TrajectoryMeta};

fn corpus(per_class: usize) -> Vec<Trajectory> {
    let spec = DatasetSpec {
        per_class,
        lengths: (20, 40),
        seed: 7,
        ..DatasetSpec::default()
    };
    synth_dataset(&MotionClass::BENCHMARK, &spec, &SynthOptions::default())
        .iter()
        .map(|s| trajectory_from_frames(&s.frames, TrajectoryMeta::default()).unwrap())
        .collect()
}

fn bench_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("proximity_matrix");
    group.sample_size(10);
    for per_class in [4, 8] {
        let trajs = corpus(per_class);
        for (name, exec) in [
            ("parallel", Execution::Auto),
            ("sequential", Execution::Sequential),
        ] {
            group.bench_with_input(BenchmarkId::new(name, trajs.len()), &trajs, |b, t| {
                b.iter(|| proximity_matrix_with(t, ClosenessParams::default(), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("proximity_grid");
    group.sample_size(10);
    let trajs = corpus(4);
    let grid: Vec<ClosenessParams> = (0..=30)
        .map(|i| ClosenessParams::new(i as f64 / 10.0).unwrap())
        .collect();
    for (name, exec) in [
        ("parallel", Execution::Auto),
        ("sequential", Execution::Sequential),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| proximity_grid(&trajs, &grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matrix, bench_grid);
criterion_main!(benches);
