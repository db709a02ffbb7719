use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use qot_core::config::RunConfig;
use qot_core::neuralnet::{train, Mlp, TrainConfig};
use qot_core::phy::estimate_ber;
use qot_core::pipelines;
use qot_core::{load_topology, seed, ModulationFormat, PhyConfig, SpectrumState};

fn routing(c: &mut Criterion) {
    let topology = load_topology(qot_core::topology::DEFAULT_TOPOLOGY).unwrap();
    let n = topology.node_count();
    c.bench_function("shortest_path all pairs", |b| {
        b.iter(|| {
            for s in 0..n {
                for t in (0..n).filter(|&t| t != s) {
                    black_box(topology.shortest_path(s, t).unwrap());
                }
            }
        })
    });
}

fn spectrum(c: &mut Criterion) {
    let mut state = SpectrumState::new(4, 160);
    let mut id = 1;
    while let Some(range) = state.first_fit(&[0, 1, 2, 3], 3) {
        if range.start > 120 {
            break;
        }
        state.allocate(&[(id as usize) % 4], range, id).unwrap();
        id += 1;
    }
    c.bench_function("first_fit 4 links x 160 slots", |b| {
        b.iter(|| black_box(state.first_fit(black_box(&[0, 1, 2, 3]), 4)))
    });
}

fn ber(c: &mut Criterion) {
    let phy = PhyConfig::default();
    let lengths = [120.0, 95.0, 210.0, 64.0, 150.0];
    c.bench_function("estimate_ber 5 links", |b| {
        b.iter(|| {
            for format in ModulationFormat::ALL {
                black_box(estimate_ber(black_box(&lengths), format, &phy));
            }
        })
    });
}

fn training(c: &mut Criterion) {
    let mut config = RunConfig::default();
    config.set("requests", "3000").unwrap();
    let data = pipelines::generate_dataset(&config).unwrap();
    let inputs = qot_core::Normalizer::fit(&data.features()).unwrap().apply_all(&data.features());
    let targets = data.multiclass_targets();
    let one_epoch = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    c.bench_function("train one epoch, 7 classes", |b| {
        b.iter(|| black_box(train(&inputs, &targets, 7, &one_epoch, 1, 0).unwrap()))
    });
    let mut rng = seed::rng_for(1, "bench", 0);
    let model = Mlp::glorot(7, 6, 7, &mut rng);
    let batch: Vec<Vec<f64>> = inputs.iter().take(50).cloned().collect();
    c.bench_function("backward batch of 50", |b| {
        b.iter_batched(
            || model.clone(),
            |m| black_box(m.backward(&batch, &targets[..50]).unwrap()),
            BatchSize::SmallInput,
        )
    });
}

fn generation(c: &mut Criterion) {
    let mut config = RunConfig::default();
    config.set("requests", "2000").unwrap();
    let mut group = c.benchmark_group("generation");
    group.sample_size(10);
    group.bench_function("generate 2000 requests", |b| {
        b.iter(|| black_box(pipelines::generate_dataset(&config).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, routing, spectrum, ber, training, generation);
criterion_main!(benches);
