use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairgsa_core::cvm::unconditional_t;
use fairgsa_core::dataset::nearest_neighbors;
use fairgsa_core::sobol::sobol_indices;
use fairgsa_core::{GaussianModel, LinearModel};
use ndarray::{array, Array2};

fn experiment_model() -> GaussianModel {
    GaussianModel::centered(array![[1.0, 0.5], [0.5, 1.0]]).unwrap()
}

fn pick_freeze(c: &mut Criterion) {
    let model = experiment_model();
    let mut group = c.benchmark_group("pick_freeze_quartet");
    for n in [1_000usize, 10_000, 100_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let mut f = LinearModel::new(vec![0.7, 0.3]);
                sobol_indices(&mut f, &model, &[1], n, 7, 0.95).unwrap()
            })
        });
    }
    group.finish();
}

fn neighbours(c: &mut Criterion) {
    let mut group = c.benchmark_group("nearest_neighbours");
    for n in [1_000usize, 10_000] {
        let points = experiment_points(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, pts| {
            b.iter(|| nearest_neighbors(pts.view(), 1).unwrap())
        });
    }
    group.finish();
}

fn rank_statistic(c: &mut Criterion) {
    let data = experiment_model().sample(10_000, 3).unwrap();
    let y: Vec<f64> = data.column(0).iter().map(|v| 2.0 * v).collect();
    let z = data.slice(ndarray::s![.., 1..]).to_owned();
    c.bench_function("unconditional_t_10k", |b| {
        b.iter(|| unconditional_t(&y, z.view(), 0).unwrap())
    });
}

fn experiment_points(n: usize) -> Array2<f64> {
    GaussianModel::centered(Array2::eye(3))
        .unwrap()
        .sample(n, 11)
        .unwrap()
}

criterion_group!(benches, pick_freeze, neighbours, rank_statistic);
criterion_main!(benches);
