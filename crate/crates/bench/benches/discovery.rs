use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pagexplain::ci::chi_square_test;
use pagexplain::graph::d_separated;
use pagexplain::sim::truth_dag;
use pagexplain::{fci_run, fci_run_dataset, BackgroundKnowledge, CiOracle, CiTest, FciConfig};
use pagexplain_bench::shapes_dataset;

fn separation(c: &mut Criterion) {
    let g = truth_dag();
    let (h, y, c_node, v) = (g.node("H").unwrap(), g.node("Y").unwrap(), g.node("C").unwrap(), g.node("V").unwrap());
    c.bench_function("d_separated/truth", |b| b.iter(|| d_separated(&g, black_box(h), black_box(y), &[c_node, v])));
}

fn chi_square(c: &mut Criterion) {
    let mut group = c.benchmark_group("chi_square");
    for n in [1_000usize, 10_000] {
        let d = shapes_dataset(n, 1);
        group.bench_with_input(BenchmarkId::new("given_two", n), &d, |b, d| {
            b.iter(|| chi_square_test(d, 2, 3, &[0, 1], 0.05).unwrap())
        });
    }
    group.finish();
}

fn discovery(c: &mut Criterion) {
    let oracle = CiOracle::new(truth_dag(), &["H", "V", "R", "Y"]).unwrap();
    let mut k = BackgroundKnowledge::new();
    k.add_non_ancestor_of_all(3, oracle.variables().len()).unwrap();
    c.bench_function("fci/oracle", |b| b.iter(|| fci_run(&oracle, &k, &FciConfig::default()).unwrap()));

    let d = shapes_dataset(5_000, 1);
    c.bench_function("fci/chi_square_5000", |b| b.iter(|| fci_run_dataset(&d, &k, &FciConfig::default()).unwrap()));
}

criterion_group!(benches, separation, chi_square, discovery);
criterion_main!(benches);
