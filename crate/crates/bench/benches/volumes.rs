use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use orbitcount_core::ergodic::{ergodic_average, CosetPoint, TestFunction};
use orbitcount_core::haar::{rho_ball_volume, Chirality, HaarBallSampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("rho_ball_volume");
    for (n, t) in [(2, 1e3), (3, 1e3), (4, 10.0)] {
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), t), &t, |b, &t| {
            b.iter(|| rho_ball_volume(n, t, f64::NEG_INFINITY).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar_sampler");
    for n in [2, 3, 4] {
        for chirality in [Chirality::Right, Chirality::Left] {
            let sampler = HaarBallSampler::new(n, 100.0, chirality).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            group.bench_function(format!("n{n}/{chirality:?}"), |b| {
                b.iter(|| sampler.sample(&mut rng).unwrap())
            });
        }
    }
    group.finish();

    let y = CosetPoint::identity();
    let f = TestFunction::standard_box();
    c.bench_function("ergodic_average/1e5", |b| {
        b.iter(|| ergodic_average(&y, &f, 1e3, 100_000, 0).unwrap())
    });
}

criterion_group!(benches, quadrature, sampling);
criterion_main!(benches);
