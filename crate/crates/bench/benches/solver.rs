use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tcb_core::complexity::{optimal_allocation, DEFAULT_TOL};
use tcb_core::instances;

fn solver(c: &mut Criterion) {
    for (id, inst) in instances::allocation_suite() {
        c.bench_function(&format!("optimal_allocation/{id}"), |b| {
            b.iter(|| optimal_allocation(black_box(&inst), DEFAULT_TOL).unwrap())
        });
    }
}

criterion_group!(benches, solver);
criterion_main!(benches);
