use cfqkd_core::nocloning::{schmidt_decompose, BipartiteState};
use cfqkd_core::protocol::run_session;
use cfqkd_core::qcore::{enumerate_round, sample_branch};
use cfqkd_core::{EveStrategy, InterferometerConfig, Polarization, SessionConfig};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn enumerate(c: &mut Criterion) {
    let cfg = InterferometerConfig::new(0.5).unwrap();
    let mut g = c.benchmark_group("enumerate_round");
    for s in EveStrategy::ALL {
        let eve = s.requires_eve_pol().then_some(Polarization::H);
        g.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| {
            b.iter(|| enumerate_round(&cfg, Polarization::H, black_box(Polarization::H), s, eve).unwrap())
        });
    }
    g.finish();
}

fn sample(c: &mut Criterion) {
    let cfg = InterferometerConfig::new(0.5).unwrap();
    let tree = enumerate_round(
        &cfg,
        Polarization::H,
        Polarization::V,
        EveStrategy::ModifiedIr,
        Some(Polarization::H),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("sample_branch", |b| {
        b.iter(|| sample_branch(black_box(&tree), &mut rng).unwrap())
    });
}

fn session(c: &mut Criterion) {
    let rounds = 10_000;
    let mut g = c.benchmark_group("run_session");
    g.throughput(Throughput::Elements(rounds));
    for s in EveStrategy::ALL {
        let cfg = SessionConfig::new(InterferometerConfig::new(0.5).unwrap(), s, rounds, 7);
        g.bench_with_input(BenchmarkId::from_parameter(s), &cfg, |b, cfg| {
            b.iter(|| run_session(cfg).unwrap())
        });
    }
    g.finish();
}

fn schmidt(c: &mut Criterion) {
    let psi = BipartiteState::protocol_state(Polarization::H, 0.3).unwrap();
    c.bench_function("schmidt_decompose/protocol_3x3", |b| {
        b.iter(|| schmidt_decompose(black_box(&psi)).unwrap())
    });
}

criterion_group!(benches, enumerate, sample, session, schmidt);
criterion_main!(benches);
