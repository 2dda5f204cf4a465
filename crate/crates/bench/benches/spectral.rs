use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use saddle_core::dynamics::{build_g_nag, eigenvalues, gs_iteration_matrix, QuadraticGame};
use saddle_core::problem::generate_matrix;

fn bench_spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigenvalues");
    for dim in [2usize, 6, 16, 32] {
        let game = QuadraticGame::new(1.0, generate_matrix("gaussian", dim, dim, 3).expect("matrix")).expect("game");
        let alpha = 0.5 * game.max_stable_alpha();
        let gs = gs_iteration_matrix(&game, alpha).expect("gs matrix");
        let nag = build_g_nag(&game);
        group.bench_with_input(BenchmarkId::new("gauss_seidel", 4 * dim), &gs, |b, m| {
            b.iter(|| eigenvalues(m, 1e-8).expect("spectrum"))
        });
        group.bench_with_input(BenchmarkId::new("g_nag", 4 * dim), &nag, |b, m| {
            b.iter(|| eigenvalues(m, 1e-8).expect("spectrum"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_spectral);
criterion_main!(benches);
