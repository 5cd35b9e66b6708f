use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::Rng;
use robust_mean::harness::{scenarios, Prepared};
use robust_mean::network::distributed_run;
use robust_mean::rng::stream_rng;
use robust_mean::{AdaptiveTrimEstimator, Graph, OrderStatMultiset, PerronMatrix};

fn samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

fn multiset(c: &mut Criterion) {
    let mut group = c.benchmark_group("multiset");
    for n in [1_000usize, 100_000] {
        let xs = samples(n, 1);
        group.bench_with_input(BenchmarkId::new("insert", n), &xs, |b, xs| {
            b.iter(|| {
                let mut s = OrderStatMultiset::new();
                for &x in xs {
                    s.insert(x).unwrap();
                }
                s
            })
        });
        let mut filled = OrderStatMultiset::new();
        for &x in &xs {
            filled.insert(x).unwrap();
        }
        group.bench_with_input(BenchmarkId::new("select", n), &filled, |b, s| {
            let mut k = 1;
            b.iter(|| {
                k = k * 7919 % n + 1;
                s.select(black_box(k)).unwrap()
            })
        });
    }
    group.finish();
}

fn adaptive(c: &mut Criterion) {
    let params = scenarios::params();
    let xs = samples(20_000, 2);
    c.bench_function("adaptive_step_after_10k", |b| {
        b.iter_batched(
            || {
                let mut est = AdaptiveTrimEstimator::new(params);
                for pair in xs[..10_000].chunks(2) {
                    est.step(pair[0], pair[1]).unwrap();
                }
                est
            },
            |mut est| {
                for pair in xs[10_000..10_200].chunks(2) {
                    est.step(pair[0], pair[1]).unwrap();
                }
                est
            },
            BatchSize::LargeInput,
        )
    });
}

fn consensus(c: &mut Criterion) {
    let mut group = c.benchmark_group("consensus_round");
    for m in [5usize, 50, 200] {
        let p = PerronMatrix::new(&Graph::cycle(m).unwrap()).unwrap();
        let x = samples(m, 3);
        let mut out = vec![0.0; m];
        group.bench_with_input(BenchmarkId::from_parameter(m), &x, |b, x| {
            b.iter(|| p.consensus_round_into(black_box(x), &mut out).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("distributed_run");
    group.sample_size(10);
    for k in [0usize, 3] {
        let prepared = Prepared::new(&scenarios::reference_network(k)).unwrap();
        let config = prepared.run_config(0);
        group.bench_with_input(BenchmarkId::new("cycle5_t1000", k), &config, |b, config| {
            b.iter(|| distributed_run(config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, multiset, adaptive, consensus, network);
criterion_main!(benches);
