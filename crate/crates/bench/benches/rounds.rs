use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcb_core::instances;
use tcb_core::samplers::{BaiRun, SamplerConfig, SamplerKind};

// Cost of 1000 rounds after a 10k-round burn-in, with stopping disabled.
fn rounds(c: &mut Criterion) {
    let inst = instances::nu6();
    for kind in [SamplerKind::Tcb, SamplerKind::Itcb, SamplerKind::TtSprt, SamplerKind::T3c] {
        let beta = kind.is_top_two().then_some(0.5);
        let cfg = SamplerConfig::new(kind, beta, 0.01, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut warm = BaiRun::new(&inst, cfg).without_stopping();
        for _ in 0..10_000 {
            warm.step(&mut rng).unwrap();
        }
        c.bench_function(&format!("rounds/{kind}/nu6"), |b| {
            b.iter_batched(
                || (warm.clone(), rng.clone()),
                |(mut run, mut rng)| {
                    for _ in 0..1000 {
                        run.step(&mut rng).unwrap();
                    }
                    run
                },
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group!(benches, rounds);
criterion_main!(benches);
