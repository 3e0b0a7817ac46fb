use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use lychaos_bench::{backward_pair, coefficients};
use lychaos_core::densities::{lower_banach_density, lower_mn_density, IndexSet, Scan, WeightSpec};
use lychaos_core::space::{frechet_metric, NormExponent, SeminormFamily, SeminormRule, SpaceSpec};
use lychaos_core::synthesizer::{synthesize, verify_certificate};

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesis");
    g.sample_size(10);
    let cfg = backward_pair(10_000);
    g.bench_function("synthesize (2B, 3B), H = 10^4", |b| b.iter(|| synthesize(&cfg).unwrap()));
    let cert = synthesize(&cfg).unwrap();
    g.bench_function("verify (2B, 3B), H = 10^4", |b| b.iter(|| verify_certificate(&cert).unwrap()));
    g.finish();
}

fn densities(c: &mut Criterion) {
    let h = 10_000;
    let m = WeightSpec::identity().fit(h).unwrap();
    let squares = IndexSet::squares(h);
    let periodic = IndexSet::periodic(3, vec![0], h);
    c.bench_function("lower mn density, squares, H = 10^4", |b| b.iter(|| lower_mn_density(&squares, &m, 1).unwrap()));
    c.bench_function("lower mn density, 3N, H = 10^4", |b| b.iter(|| lower_mn_density(&periodic, &m, 1).unwrap()));
    c.bench_function("lower Banach density, squares, s <= 20", |b| {
        b.iter(|| lower_banach_density(&squares, &m, Scan::new(1, 20), Scan::new(1, h - 20)).unwrap())
    });
}

fn metric(c: &mut Criterion) {
    let one = NormExponent::Finite(1.0);
    let spaces = [
        SpaceSpec::frechet("prefix", SeminormFamily::new(SeminormRule::Prefix { norm: one })).unwrap(),
        SpaceSpec::frechet("poly", SeminormFamily::new(SeminormRule::PolynomialWeights { norm: NormExponent::Sup })).unwrap(),
    ];
    for s in &spaces {
        c.bench_function(&format!("frechet metric, {}, len 1000, 64 terms", s.id), |b| {
            b.iter_batched(
                || (s.vector(coefficients(1000, 1)).unwrap(), s.vector(coefficients(1000, 2)).unwrap()),
                |(x, y)| frechet_metric(s, &x, &y, 64).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group!(benches, synthesis, densities, metric);
criterion_main!(benches);
