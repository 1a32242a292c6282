use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use memlab::analysis::{signalling_measure, ExactTable, MapDecoder};
use memlab::devices::{
    compile_trivial_memory, enumerate_process2, fixed_inputs, random_trivial_memory, retain_remeasure, Device,
    Process1Spec, DEFAULT_BRANCH_BUDGET,
};
use memlab::protocol::{run_example_protocol, ExampleConfig};
use memlab::rng::trial_rng;
use memlab::{Basis, RoundInput};

fn enumeration(c: &mut Criterion) {
    let inputs = vec![RoundInput::both(Basis::Z); 8];
    c.bench_function("enumerate retain_remeasure n=8", |b| {
        b.iter(|| enumerate_process2(&retain_remeasure(), black_box(&inputs), DEFAULT_BRANCH_BUDGET).unwrap())
    });
    let spec = Process1Spec::bell_product(8).unwrap();
    let mixed: Vec<RoundInput> = (0..8).map(|j| RoundInput::new(Basis::ALL[j % 2], Basis::Z)).collect();
    c.bench_function("exact bell_product n=8", |b| b.iter(|| spec.exact_distribution(black_box(&mixed)).unwrap()));
    let echo = Device::sequential(memlab::devices::echo_signalling());
    c.bench_function("exact signalling echo n=4", |b| {
        b.iter(|| signalling_measure(&ExactTable::build(&echo, 4).unwrap()).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let behaviour = random_trivial_memory(7);
    let sequential = Device::sequential(random_trivial_memory(7));
    let compiled = Device::joint(compile_trivial_memory(&behaviour, 20).unwrap());
    let inputs = vec![RoundInput::new(Basis::X, Basis::Z); 20];
    let mut trial = 0;
    for (name, device) in [("sample process 2 n=20", &sequential), ("sample compiled n=20", &compiled)] {
        c.bench_function(name, |b| {
            b.iter(|| {
                trial += 1;
                let mut src = fixed_inputs(&inputs);
                device.run(20, &mut src, &mut trial_rng(1, trial)).unwrap()
            })
        });
    }
    let copier = Device::sequential(memlab::devices::even_round_copier());
    let config = ExampleConfig::new(50);
    c.bench_function("example protocol even_copier 50 pairs", |b| {
        b.iter(|| {
            trial += 1;
            run_example_protocol(&config, &copier, &mut trial_rng(2, trial)).unwrap()
        })
    });
}

fn decoders(c: &mut Criterion) {
    let honest = Device::joint(Process1Spec::bell_product(6).unwrap());
    c.bench_function("map decoder build 3 pairs", |b| b.iter(|| MapDecoder::build(&honest, 3).unwrap()));
}

criterion_group!(benches, enumeration, sampling, decoders);
criterion_main!(benches);
