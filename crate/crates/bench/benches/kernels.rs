use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcausal_core::codec::{list_decode_prefix, list_radius};
use qcausal_core::qmath::{hamming_ball_volume, q_entropy};
use qcausal_core::{
    bob_decode, capacity, run_trial, AdversarySpec, ChannelModel, ChannelParams, Codebook, MessagePolicy,
    ReceivedWord, Reference, TrialConfig,
};

fn toy() -> ChannelParams {
    ChannelParams::with_messages(2, 0.08, 0.08, 0.3, 512, 8, 16, 4)
}

fn bench_qmath(c: &mut Criterion) {
    c.bench_function("q_entropy", |b| b.iter(|| q_entropy(black_box(0.2), black_box(4)).unwrap()));
    let mut g = c.benchmark_group("hamming_ball_volume");
    for n in [64u64, 512, 4096] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| hamming_ball_volume(n, n / 4, 3).unwrap())
        });
    }
    g.finish();
}

fn bench_capacity(c: &mut Criterion) {
    let mut g = c.benchmark_group("capacity");
    for q in [2u32, 4, 16] {
        let model = ChannelModel::new(q, 0.1, 0.1);
        g.bench_with_input(BenchmarkId::from_parameter(q), &model, |b, m| b.iter(|| capacity(black_box(m))));
    }
    g.finish();
}

fn bench_decode(c: &mut Criterion) {
    let params = toy();
    let cb = Codebook::generate(&params, 11).unwrap();
    let secrets = vec![0; cb.chunk_count()];
    let x = cb.encode(1, &secrets).unwrap();
    let y = ReceivedWord::clean(params.q, &x);
    let reference = Reference::new(&params);
    let t = params.n / 2;
    let radius = list_radius(&reference, t, 0).unwrap();
    c.bench_function("list_decode_prefix", |b| b.iter(|| list_decode_prefix(&cb, black_box(&y), t, radius)));
    c.bench_function("bob_decode_clean", |b| b.iter(|| bob_decode(&cb, black_box(&y))));
}

fn bench_trial(c: &mut Criterion) {
    let params = toy();
    let cb = Codebook::generate(&params, 7).unwrap();
    let config = TrialConfig {
        params,
        adversary: AdversarySpec::UniformRandom { seed_stream: None },
        message: MessagePolicy::Uniform,
        trials: 1,
        master_seed: 7,
        lookahead: 0,
        adversary_knows_message: false,
    };
    let mut i = 0;
    c.bench_function("trial_uniform_random", |b| {
        b.iter(|| {
            i += 1;
            run_trial(&cb, &config, i).unwrap()
        })
    });
}

criterion_group!(benches, bench_qmath, bench_capacity, bench_decode, bench_trial);
criterion_main!(benches);
