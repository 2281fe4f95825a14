use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gaussgrid::{generate_grid, Mode};
use gaussgrid_bench::harness::spec_policy;
use gaussgrid_bench::{synthetic, DEFAULT_BOX_EDGE};

fn dense_vs_sparse(c: &mut Criterion) {
    let corpus = synthetic(16, 0).unwrap();
    let mut group = c.benchmark_group("gridgen");
    group.throughput(Throughput::Elements(corpus.len() as u64));
    group.sample_size(10);
    for size in [32usize, 64] {
        for sigma in [0.1, 0.5] {
            let policy = spec_policy(size, sigma, corpus.channels(), Some(DEFAULT_BOX_EDGE)).unwrap();
            let specs: Vec<_> = corpus.molecules.iter().map(|m| policy.spec_for(m).unwrap()).collect();
            for mode in [Mode::Dense, Mode::Sparse] {
                let id = BenchmarkId::new(format!("{mode}/sigma={sigma}"), size);
                group.bench_with_input(id, &mode, |b, &mode| {
                    b.iter(|| {
                        for (m, spec) in corpus.molecules.iter().zip(&specs) {
                            criterion::black_box(generate_grid(m, spec, mode).unwrap());
                        }
                    })
                });
            }
        }
    }
    group.finish();
}

criterion_group!(benches, dense_vs_sparse);
criterion_main!(benches);
