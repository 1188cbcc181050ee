use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use radio_topo::harness::batch::{run_experiment_with, Config, Exec};

fn sweep(c: &mut Criterion) {
    let config: Config = "delta=4,8,16\ndiameter=6,10\nseeds=0..4".parse().expect("valid config");
    let mut group = c.benchmark_group("batch_sweep");
    group.sample_size(10);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_experiment_with(&config, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
