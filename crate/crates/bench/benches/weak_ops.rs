use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sfwg::weak_ops::{weak_divergence_matrix, weak_gradient_matrix};
use sfwg::MeshFamily;
use sfwg_bench::Fixture;

fn local_operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("weak_gradient");
    for (family, k, r) in [(MeshFamily::Triangle, 1, 2), (MeshFamily::Triangle, 3, 4), (MeshFamily::LPair, 1, 4), (MeshFamily::LPair, 2, 5)] {
        let fx = Fixture::new(family, 2, k);
        group.bench_with_input(BenchmarkId::new(family.to_string(), format!("k{k}r{r}")), &r, |b, &r| {
            b.iter(|| weak_gradient_matrix(&fx.mesh, 0, k, r).unwrap())
        });
    }
    group.finish();

    let fx = Fixture::new(MeshFamily::LPair, 2, 2);
    c.bench_function("weak_divergence/l-pair/k2", |b| b.iter(|| weak_divergence_matrix(&fx.mesh, 0, 2).unwrap()));
    c.bench_function("cell_operators/l-pair/k2r5", |b| b.iter(|| fx.disc.cell_operators(&fx.mesh, 0).unwrap()));
}

criterion_group!(benches, local_operators);
criterion_main!(benches);
